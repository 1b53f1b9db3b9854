#include "wickmps/correlators.hpp"

#include <cmath>
#include <functional>
#include <thread>

#include <unsupported/Eigen/MatrixFunctions>

namespace wickmps {

MultiArray contract_axis(const MultiArray& in, std::size_t axis, const Matrix& m) {
  const auto& shape = in.shape();
  if (axis >= shape.size() || static_cast<std::size_t>(m.cols()) != shape[axis]) {
    throw Error(ErrorKind::ShapeMismatch, "contract_axis: matrix does not fit axis");
  }
  std::size_t outer = 1;
  std::size_t inner = 1;
  for (std::size_t a = 0; a < axis; ++a) outer *= shape[a];
  for (std::size_t a = axis + 1; a < shape.size(); ++a) inner *= shape[a];
  const std::size_t n_in = shape[axis];
  const std::size_t n_out = static_cast<std::size_t>(m.rows());

  auto out_shape = shape;
  out_shape[axis] = n_out;
  MultiArray out(out_shape);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t k = 0; k < n_out; ++k) {
      for (std::size_t n = 0; n < n_in; ++n) {
        const Complex w = m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n));
        const Complex* src = &in[(o * n_in + n) * inner];
        Complex* dst = &out[(o * n_out + k) * inner];
        for (std::size_t i = 0; i < inner; ++i) dst[i] += w * src[i];
      }
    }
  }
  return out;
}

LeadingProjector leading_projector(const Matrix& generator, SystemKind kind,
                                   double degeneracy_tol) {
  const auto s = eig(generator, ordering_for(kind), {.degeneracy_tol = degeneracy_tol});
  if (!genericity_check(s, degeneracy_tol).leading_unique) {
    throw Error(ErrorKind::DegenerateSpectrum, "leading eigenvalue is not unique");
  }
  return {s.left.row(0), s.right.col(0), s.eigenvalues(0)};
}

Matrix matrix_power(const Matrix& m, long n) {
  if (n < 0) throw Error(ErrorKind::DimensionMismatch, "negative matrix power");
  Matrix result = Matrix::Identity(m.rows(), m.cols());
  Matrix base = m;
  while (n > 0) {
    if (n & 1) result = result * base;
    n >>= 1;
    if (n > 0) base = base * base;
  }
  return result;
}

Matrix matrix_exp(const Matrix& m, double t) {
  const Matrix scaled = m * Complex(t, 0.0);
  return scaled.exp();
}

namespace {

void check_ops(const Matrix& generator, std::span<const Matrix> ops, std::size_t gaps) {
  if (ops.size() < 1 || gaps + 1 != ops.size()) {
    throw Error(ErrorKind::DimensionMismatch, "an N-point correlator needs N operators and N-1 gaps");
  }
  for (const auto& m : ops) {
    if (m.rows() != generator.rows() || m.cols() != generator.cols()) {
      throw Error(ErrorKind::DimensionMismatch, "operator matrix size differs from generator");
    }
  }
}

template <typename Propagate>
Complex contract(const LeadingProjector& p, std::span<const Matrix> ops, Propagate&& propagate) {
  Vector v = ops[0] * p.right;
  for (std::size_t i = 1; i < ops.size(); ++i) v = ops[i] * propagate(i - 1, v);
  return (p.left * v)(0);
}

}  // namespace

Complex npoint_mps(const Matrix& transfer, std::span<const Matrix> ops,
                   std::span<const long> gaps) {
  check_ops(transfer, ops, gaps.size());
  const auto p = leading_projector(transfer, SystemKind::discrete);
  return contract(p, ops, [&](std::size_t i, const Vector& v) -> Vector {
    return matrix_power(transfer, gaps[i]) * v;
  });
}

Complex npoint_cmps(const Matrix& liouvillian, std::span<const Matrix> ops,
                    std::span<const double> taus) {
  check_ops(liouvillian, ops, taus.size());
  for (double t : taus) {
    if (!(t >= 0.0)) throw Error(ErrorKind::DimensionMismatch, "cMPS gaps must be non-negative");
  }
  const auto p = leading_projector(liouvillian, SystemKind::continuous);
  return contract(p, ops, [&](std::size_t i, const Vector& v) -> Vector {
    return matrix_exp(liouvillian, taus[i]) * v;
  });
}

namespace {

std::vector<Matrix> gather_ops(const TransferSystem& system, std::span<const int> labels) {
  std::vector<Matrix> ops;
  ops.reserve(labels.size());
  for (int l : labels) ops.push_back(system.op(l));
  return ops;
}

}  // namespace

Complex npoint(const TransferSystem& system, std::span<const int> labels,
               std::span<const double> gaps) {
  const auto ops = gather_ops(system, labels);
  if (system.kind == SystemKind::continuous) return npoint_cmps(system.generator, ops, gaps);
  std::vector<long> n(gaps.size());
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    if (gaps[i] < 0.0 || std::floor(gaps[i]) != gaps[i]) {
      throw Error(ErrorKind::DimensionMismatch, "discrete gaps must be non-negative integers");
    }
    n[i] = static_cast<long>(gaps[i]);
  }
  return npoint_mps(system.generator, ops, n);
}

CorrelationTable correlation_table(const TransferSystem& system, std::span<const int> labels,
                                   const CorrelationWindow& window, unsigned threads) {
  if (labels.size() < 2) throw Error(ErrorKind::DimensionMismatch, "tables need order N >= 2");
  if (window.points == 0) throw Error(ErrorKind::WindowTooShort, "empty correlation window");
  if (system.kind == SystemKind::continuous && !(window.step > 0.0)) {
    throw Error(ErrorKind::DimensionMismatch, "continuous window needs a positive step");
  }
  const auto ops = gather_ops(system, labels);
  const auto proj = leading_projector(system.generator, system.kind);

  const std::size_t points = window.points;
  std::vector<Matrix> prop(points);
  prop[0] = Matrix::Identity(system.generator.rows(), system.generator.cols());
  for (std::size_t n = 1; n < points; ++n) {
    prop[n] = system.kind == SystemKind::discrete
                  ? Matrix(system.generator * prop[n - 1])
                  : matrix_exp(system.generator, window.step * static_cast<double>(n));
  }

  CorrelationTable table;
  table.kind = system.kind;
  table.labels.assign(labels.begin(), labels.end());
  table.window = window;
  const std::size_t axes = labels.size() - 1;
  table.values = MultiArray(std::vector<std::size_t>(axes, points));

  const Vector base = ops[0] * proj.right;
  // Depth-first over axes so partial products are shared by all cells below.
  std::function<void(std::size_t, const Vector&, std::size_t)> descend;
  descend = [&](std::size_t axis, const Vector& v, std::size_t flat) {
    for (std::size_t n = 0; n < points; ++n) {
      const Vector w = ops[axis + 1] * (prop[n] * v);
      const std::size_t f = flat * points + n;
      if (axis + 1 == axes) {
        table.values[f] = (proj.left * w)(0);
      } else {
        descend(axis + 1, w, f);
      }
    }
  };
  auto run_first_axis = [&](std::size_t n) {
    const Vector w = ops[1] * (prop[n] * base);
    if (axes == 1) {
      table.values[n] = (proj.left * w)(0);
    } else {
      descend(1, w, n);
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(points)));
  if (workers == 1) {
    for (std::size_t n = 0; n < points; ++n) run_first_axis(n);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t n = w; n < points; n += workers) run_first_axis(n);
      });
    }
  }
  return table;
}

EigenFrame eigen_frame(const TransferSystem& system, double degeneracy_tol) {
  EigenFrame frame{eig(system.generator, ordering_for(system.kind), {.degeneracy_tol = degeneracy_tol}),
                   {}};
  if (!genericity_check(frame.spectrum, degeneracy_tol).leading_unique) {
    throw Error(ErrorKind::DegenerateSpectrum, "leading eigenvalue is not unique");
  }
  for (const auto& [label, m] : system.operators) {
    frame.operators.emplace(label, frame.spectrum.left * m * frame.spectrum.right);
  }
  return frame;
}

ResidueTensor residue_tensor(const EigenFrame& frame, SystemKind kind,
                             std::span<const int> labels) {
  if (labels.size() < 2) throw Error(ErrorKind::DimensionMismatch, "residues need order N >= 2");
  std::vector<const Matrix*> ops;
  for (int l : labels) {
    auto it = frame.operators.find(l);
    if (it == frame.operators.end()) {
      throw Error(ErrorKind::MalformedInput, "no operator with label " + std::to_string(l));
    }
    ops.push_back(&it->second);
  }
  const auto modes = static_cast<std::size_t>(frame.spectrum.size());
  const std::size_t axes = labels.size() - 1;

  ResidueTensor rt;
  rt.kind = kind;
  rt.labels.assign(labels.begin(), labels.end());
  rt.spectrum = frame.spectrum.eigenvalues;
  rt.coefficients = MultiArray(std::vector<std::size_t>(axes, modes));

  // c(k_1..k_{N-1}) = M_N[0, k_{N-1}] M_{N-1}[k_{N-1}, k_{N-2}] ... M_1[k_1, 0]
  for (std::size_t flat = 0; flat < rt.coefficients.size(); ++flat) {
    const auto k = rt.coefficients.unravel(flat);
    auto at = [](const Matrix* m, std::size_t r, std::size_t c) {
      return (*m)(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    };
    Complex c = at(ops[0], k[0], 0);
    for (std::size_t i = 1; i < axes; ++i) c *= at(ops[i], k[i], k[i - 1]);
    c *= at(ops[axes], 0, k[axes - 1]);
    rt.coefficients[flat] = c;
  }
  return rt;
}

ResidueTensor residue_tensor(const TransferSystem& system, std::span<const int> labels,
                             double degeneracy_tol) {
  return residue_tensor(eigen_frame(system, degeneracy_tol), system.kind, labels);
}

namespace {

// sum_flat c[flat] prod_axis weights[axis][k_axis]
Complex weighted_sum(const ResidueTensor& rt, const std::vector<Vector>& weights) {
  MultiArray acc = rt.coefficients;
  // Contract from the last axis so each step removes one trailing dimension.
  for (std::size_t a = weights.size(); a-- > 0;) {
    acc = contract_axis(acc, a, weights[a].transpose());
  }
  return acc.data().front();
}

void check_arity(const ResidueTensor& rt, std::size_t n) {
  if (rt.order() < 2 || n + 1 != rt.order()) {
    throw Error(ErrorKind::DimensionMismatch, "argument count must equal order - 1");
  }
}

}  // namespace

Complex evaluate_expansion(const ResidueTensor& rt, std::span<const double> gaps) {
  check_arity(rt, gaps.size());
  std::vector<Vector> w(gaps.size(), Vector(rt.modes()));
  for (std::size_t a = 0; a < gaps.size(); ++a) {
    for (Eigen::Index k = 0; k < rt.modes(); ++k) {
      const Complex pole = rt.spectrum(k);
      if (rt.kind == SystemKind::discrete) {
        const long n = std::lround(gaps[a]);
        Complex p{1.0, 0.0};
        Complex b = pole;
        for (long e = n; e > 0; e >>= 1) {
          if (e & 1) p *= b;
          b *= b;
        }
        w[a](k) = p;
      } else {
        w[a](k) = std::exp(pole * gaps[a]);
      }
    }
  }
  return weighted_sum(rt, w);
}

Complex z_transform_analytic(const ResidueTensor& rt, std::span<const Complex> s) {
  check_arity(rt, s.size());
  std::vector<Vector> w(s.size(), Vector(rt.modes()));
  for (std::size_t a = 0; a < s.size(); ++a) {
    for (Eigen::Index k = 0; k < rt.modes(); ++k) {
      const Complex den = 1.0 - rt.spectrum(k) * s[a];
      if (std::abs(den) <= 1e-12) {
        throw Error(ErrorKind::PoleProximity, "argument lies on a pole of the Z-transform");
      }
      w[a](k) = 1.0 / den;
    }
  }
  return weighted_sum(rt, w);
}

Complex laplace_analytic(const ResidueTensor& rt, std::span<const Complex> s) {
  check_arity(rt, s.size());
  std::vector<Vector> w(s.size(), Vector(rt.modes()));
  for (std::size_t a = 0; a < s.size(); ++a) {
    for (Eigen::Index k = 0; k < rt.modes(); ++k) {
      const Complex lambda = rt.spectrum(k);
      const Complex den = s[a] - lambda;
      if (std::abs(den) <= 1e-12 * std::max(1.0, std::abs(lambda))) {
        throw Error(ErrorKind::PoleProximity, "argument lies on a pole of the Laplace transform");
      }
      w[a](k) = 1.0 / den;
    }
  }
  return weighted_sum(rt, w);
}

}  // namespace wickmps
