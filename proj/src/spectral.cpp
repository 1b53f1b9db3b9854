#include "wickmps/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

namespace wickmps {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::DegenerateSpectrum: return "DegenerateSpectrum";
    case ErrorKind::NumericalFailure: return "NumericalFailure";
    case ErrorKind::SingularGauge: return "SingularGauge";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::UnknownKind: return "UnknownKind";
    case ErrorKind::ZeroState: return "ZeroState";
    case ErrorKind::NonNormalizable: return "NonNormalizable";
    case ErrorKind::GenericityFailure: return "GenericityFailure";
    case ErrorKind::PoleProximity: return "PoleProximity";
    case ErrorKind::WindowTooShort: return "WindowTooShort";
    case ErrorKind::Inconsistent: return "Inconsistent";
    case ErrorKind::AliasingRisk: return "AliasingRisk";
    case ErrorKind::IllConditioned: return "IllConditioned";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::ZeroCoefficient: return "ZeroCoefficient";
    case ErrorKind::InconsistentShapes: return "InconsistentShapes";
    case ErrorKind::ZeroWitness: return "ZeroWitness";
    case ErrorKind::MissingWitness: return "MissingWitness";
    case ErrorKind::NonHermitianH: return "NonHermitianH";
    case ErrorKind::MultipleJumpOps: return "MultipleJumpOps";
    case ErrorKind::DegenerateZero: return "DegenerateZero";
    case ErrorKind::NonPositive: return "NonPositive";
    case ErrorKind::MalformedInput: return "MalformedInput";
  }
  return "Unknown";
}

namespace {

double primary_key(const Complex& z, Ordering mode) {
  return mode == Ordering::by_modulus_desc ? std::abs(z) : z.real();
}

double secondary_key(const Complex& z, Ordering mode) {
  if (mode == Ordering::by_real_part_desc) return z.imag();
  // std::arg returns values in [-pi, pi]; fold -pi onto pi so the range is (-pi, pi].
  const double a = std::arg(z);
  return a <= -M_PI ? M_PI : a;
}

double min_pairwise_distance(const Vector& v) {
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    for (Eigen::Index j = i + 1; j < v.size(); ++j) {
      gap = std::min(gap, std::abs(v(i) - v(j)));
    }
  }
  return gap;
}

}  // namespace

std::vector<Eigen::Index> spectral_order(const Vector& values, Ordering mode) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(values.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  if (values.size() == 0) return idx;

  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  const double tie = 1e-10 * scale;

  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    return primary_key(values(a), mode) > primary_key(values(b), mode);
  });
  // Group runs whose primary key is within `tie` of the run head, then order
  // each run by the secondary key. Grouping against the head keeps this
  // deterministic where a pairwise comparator would not be transitive.
  std::size_t head = 0;
  while (head < idx.size()) {
    std::size_t end = head + 1;
    const double head_key = primary_key(values(idx[head]), mode);
    while (end < idx.size() && head_key - primary_key(values(idx[end]), mode) <= tie) ++end;
    std::stable_sort(idx.begin() + static_cast<std::ptrdiff_t>(head),
                     idx.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](Eigen::Index a, Eigen::Index b) {
                       return secondary_key(values(a), mode) < secondary_key(values(b), mode);
                     });
    head = end;
  }
  return idx;
}

double condition_number(const Matrix& x) {
  Eigen::JacobiSVD<Matrix> svd(x);
  const auto& s = svd.singularValues();
  if (s.size() == 0) return 1.0;
  const double smin = s(s.size() - 1);
  if (!(smin > 0.0)) return std::numeric_limits<double>::infinity();
  return s(0) / smin;
}

SpectralDecomposition eig(const Matrix& m, Ordering mode, const EigOptions& options) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "eig requires a square matrix");
  }
  if (!m.allFinite()) {
    throw Error(ErrorKind::NumericalFailure, "eig input contains non-finite entries");
  }
  Eigen::ComplexEigenSolver<Matrix> solver(m, true);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::NumericalFailure, "complex eigensolver did not converge");
  }

  const auto order = spectral_order(solver.eigenvalues(), mode);
  const Eigen::Index n = m.rows();
  SpectralDecomposition out;
  out.ordering = mode;
  out.eigenvalues.resize(n);
  out.right.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto src = order[static_cast<std::size_t>(k)];
    out.eigenvalues(k) = solver.eigenvalues()(src);
    out.right.col(k) = solver.eigenvectors().col(src).normalized();
  }
  out.min_gap = min_pairwise_distance(out.eigenvalues);

  const double radius = n > 0 ? out.eigenvalues.cwiseAbs().maxCoeff() : 0.0;
  if (!options.allow_degenerate && n > 1 && out.min_gap < options.degeneracy_tol * radius) {
    throw Error(ErrorKind::DegenerateSpectrum,
                "eigenvalue separation " + std::to_string(out.min_gap) +
                    " below tolerance relative to spectral radius " + std::to_string(radius));
  }
  if (!options.allow_degenerate && n > 1 && radius == 0.0) {
    throw Error(ErrorKind::DegenerateSpectrum, "zero matrix has a fully degenerate spectrum");
  }

  out.condition_estimate = condition_number(out.right);
  Eigen::FullPivLU<Matrix> lu(out.right);
  if (!lu.isInvertible() || !std::isfinite(out.condition_estimate)) {
    if (!options.allow_degenerate) {
      throw Error(ErrorKind::DegenerateSpectrum, "eigenvector matrix is singular (defective input)");
    }
    out.left = Matrix::Zero(n, n);
  } else {
    out.left = lu.inverse();
  }
  return out;
}

GenericityReport genericity_check(const SpectralDecomposition& s, double tol) {
  GenericityReport r;
  const Eigen::Index n = s.size();
  r.min_gap = min_pairwise_distance(s.eigenvalues);
  const double radius = n > 0 ? s.eigenvalues.cwiseAbs().maxCoeff() : 0.0;
  const double threshold = tol * radius;
  r.diagonal_nondegenerate = n <= 1 || (radius > 0.0 && r.min_gap >= threshold);
  if (n <= 1) {
    r.leading_unique = true;
  } else {
    r.leading_margin =
        primary_key(s.eigenvalues(0), s.ordering) - primary_key(s.eigenvalues(1), s.ordering);
    r.leading_unique = radius > 0.0 && r.leading_margin > threshold;
  }
  r.pass = r.diagonal_nondegenerate && r.leading_unique;
  return r;
}

Matrix similarity(const Matrix& m, const Matrix& x, double max_condition) {
  if (x.rows() != x.cols() || x.cols() != m.rows() || m.rows() != m.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "similarity requires square matrices of equal size");
  }
  const double cond = condition_number(x);
  if (!(cond <= max_condition)) {
    throw Error(ErrorKind::SingularGauge,
                "gauge matrix condition number " + std::to_string(cond) + " exceeds bound");
  }
  Eigen::PartialPivLU<Matrix> lu(x);
  // x m x^{-1} = (x^{-T} (x m)^T)^T; solve instead of forming the inverse.
  const Matrix xm = x * m;
  const Matrix xmt = xm.transpose();
  const Matrix sol = lu.transpose().solve(xmt);
  return sol.transpose();
}

}  // namespace wickmps
