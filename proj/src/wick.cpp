#include "wickmps/wick.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace wickmps {

ResidueLibrary make_library(std::span<const ResidueTensor> tensors) {
  ResidueLibrary lib;
  for (const auto& t : tensors) lib.insert_or_assign(t.labels, t);
  return lib;
}

TransferSystem Representative::system() const {
  TransferSystem s;
  s.kind = kind;
  s.generator = spectrum.asDiagonal();
  s.operators = operators;
  return s;
}

namespace {

std::size_t as_index(Eigen::Index k) { return static_cast<std::size_t>(k); }

Complex c2_at(const ResidueTensor& t, std::size_t k) {
  const std::size_t idx[1] = {k};
  return t.at(idx);
}

Complex c3_at(const ResidueTensor& t, std::size_t k1, std::size_t k2) {
  const std::size_t idx[2] = {k1, k2};
  return t.at(idx);
}

void check_tensor(const ResidueTensor& t, std::size_t order, Eigen::Index modes, SystemKind kind) {
  if (t.order() != order || t.modes() != modes || t.kind != kind ||
      t.coefficients.rank() + 1 != order) {
    throw Error(ErrorKind::InconsistentShapes,
                "residue tensor of order " + std::to_string(t.order()) +
                    " does not match the pole set");
  }
  for (auto s : t.coefficients.shape()) {
    if (static_cast<Eigen::Index>(s) != modes) {
      throw Error(ErrorKind::InconsistentShapes, "residue tensor axis length differs from pole count");
    }
  }
}

struct Gauge {
  Vector first_row;  // M[0, a]
  Vector first_col;  // M[b, 0]
};

/// Reference-label gauge: M[0, a] = 1 (a > 0), M[b, 0] = c2(b) (b > 0), M[0, 0] = c3(0,0)/c2(0).
Gauge fix_gauge(const ResidueTensor& c2, const ResidueTensor& c3, double structural_zero,
                double* min_ratio) {
  const Eigen::Index modes = c2.modes();
  double cmax = 0.0;
  for (Eigen::Index k = 0; k < modes; ++k) cmax = std::max(cmax, std::abs(c2_at(c2, as_index(k))));
  double cmin = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < modes; ++k) {
    const double mag = std::abs(c2_at(c2, as_index(k)));
    cmin = std::min(cmin, mag);
    if (!(mag > structural_zero * cmax)) {
      throw Error(ErrorKind::ZeroCoefficient,
                  "two-point residue of pole " + std::to_string(k) +
                      " vanishes; this pole needs higher-order witnesses");
    }
  }
  if (min_ratio) *min_ratio = cmin / cmax;

  const Complex stationary = c3_at(c3, 0, 0) / c2_at(c2, 0);
  Gauge g{Vector::Ones(modes), Vector(modes)};
  g.first_row(0) = stationary;
  g.first_col(0) = stationary;
  for (Eigen::Index b = 1; b < modes; ++b) g.first_col(b) = c2_at(c2, as_index(b));
  return g;
}

/// M[a, b] = c3_(r,j,r)(b, a) / (M_r[0, a] M_r[b, 0]).
Matrix operator_from_c3(const ResidueTensor& c3, const Gauge& g) {
  const Eigen::Index modes = g.first_row.size();
  Matrix m(modes, modes);
  for (Eigen::Index a = 0; a < modes; ++a) {
    for (Eigen::Index b = 0; b < modes; ++b) {
      m(a, b) = c3_at(c3, as_index(b), as_index(a)) / (g.first_row(a) * g.first_col(b));
    }
  }
  return m;
}

void check_poles(const PoleSet& poles) {
  if (poles.size() == 0) throw Error(ErrorKind::InconsistentShapes, "empty pole set");
  if (!poles.leading || *poles.leading != 0) {
    throw Error(ErrorKind::InconsistentShapes, "the stationary pole must come first");
  }
}

}  // namespace

Representative reconstruct_representative(const PoleSet& poles, const ResidueTensor& c2,
                                          const ResidueTensor& c3,
                                          const ReconstructOptions& options) {
  check_poles(poles);
  const Eigen::Index modes = poles.poles.size();
  check_tensor(c2, 2, modes, poles.kind);
  check_tensor(c3, 3, modes, poles.kind);
  if (c2.labels[0] != c2.labels[1] || c3.labels != std::vector<int>(3, c2.labels[0])) {
    throw Error(ErrorKind::InconsistentShapes, "single-label reconstruction needs (j,j) and (j,j,j)");
  }

  Representative rep;
  rep.kind = poles.kind;
  rep.bond_dim = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(modes))));
  rep.reference_label = c2.labels[0];
  rep.spectrum = poles.poles;

  const Gauge g = fix_gauge(c2, c3, options.structural_zero, &rep.min_c2_ratio);
  Matrix m = operator_from_c3(c3, g);
  // The gauge conditions hold exactly, not just to rounding.
  m.row(0) = g.first_row.transpose();
  m.col(0) = g.first_col;
  rep.operators.emplace(rep.reference_label, std::move(m));

  const ResidueTensor tensors[] = {c2, c3};
  rep.certificate = p_number(tensors, rep.bond_dim, options.structural_zero);
  return rep;
}

Representative reconstruct_representative(const PoleSet& poles, const ResidueLibrary& library,
                                          int reference, std::span<const int> labels,
                                          const ReconstructOptions& options) {
  auto find = [&](std::vector<int> key) -> const ResidueTensor& {
    auto it = library.find(key);
    if (it == library.end()) {
      std::string s;
      for (int l : key) s += std::to_string(l) + " ";
      throw Error(ErrorKind::InconsistentShapes, "missing residue tensor for labels ( " + s + ")");
    }
    return it->second;
  };
  const auto& c2 = find({reference, reference});
  const auto& c3 = find({reference, reference, reference});
  Representative rep = reconstruct_representative(poles, c2, c3, options);

  const Gauge g = fix_gauge(c2, c3, options.structural_zero, nullptr);
  std::vector<ResidueTensor> used = {c2, c3};
  for (int j : labels) {
    if (j == reference) continue;
    const auto& mixed = find({reference, j, reference});
    check_tensor(mixed, 3, poles.poles.size(), poles.kind);
    rep.operators.insert_or_assign(j, operator_from_c3(mixed, g));
    used.push_back(mixed);
  }
  rep.certificate = p_number(used, rep.bond_dim, options.structural_zero);
  return rep;
}

namespace {

/// Half of a witness string split at its index k: `labels` are in
/// coefficient order (rightmost factor first), `inner` are the indices
/// strictly between them.
struct HalfString {
  std::vector<int> labels;
  std::vector<std::size_t> inner;
};

struct SplitWitness {
  HalfString lower;  // from k down to the right end (index 1)
  HalfString upper;  // from the left end (index 1) to k
  Complex value;
};

class OrderGuard {
 public:
  OrderGuard(const ResidueLibrary& lib, std::size_t max_points, std::vector<std::size_t>* consulted)
      : lib_(lib), max_points_(max_points), consulted_(consulted) {}

  Complex lookup(const std::vector<int>& labels, const std::vector<std::size_t>& k) const {
    if (labels.size() > max_points_) {
      throw std::logic_error("identity insertion produced a string above the order bound");
    }
    auto it = lib_.find(labels);
    if (it == lib_.end()) {
      std::string s;
      for (int l : labels) s += std::to_string(l) + " ";
      throw Error(ErrorKind::MissingWitness, "no residue tensor for labels ( " + s + ")");
    }
    if (consulted_) consulted_->push_back(labels.size());
    return it->second.at(k);
  }

 private:
  const ResidueLibrary& lib_;
  std::size_t max_points_;
  std::vector<std::size_t>* consulted_;
};

SplitWitness split(const Witness& w, const OrderGuard& guard) {
  if (w.by_normalization) {
    throw Error(ErrorKind::MissingWitness,
                "pole " + std::to_string(w.pole) + " is witnessed only by normalization");
  }
  SplitWitness s;
  s.value = guard.lookup(w.labels, w.indices);
  if (std::abs(s.value) <= std::numeric_limits<double>::min()) {
    throw Error(ErrorKind::ZeroWitness, "witness coefficient for pole " + std::to_string(w.pole) +
                                            " is zero");
  }
  const std::size_t a = w.axis;
  s.lower.labels.assign(w.labels.begin(), w.labels.begin() + static_cast<std::ptrdiff_t>(a + 1));
  s.lower.inner.assign(w.indices.begin(), w.indices.begin() + static_cast<std::ptrdiff_t>(a));
  s.upper.labels.assign(w.labels.begin() + static_cast<std::ptrdiff_t>(a + 1), w.labels.end());
  s.upper.inner.assign(w.indices.begin() + static_cast<std::ptrdiff_t>(a + 1), w.indices.end());
  return s;
}

template <typename T>
void append(std::vector<T>& dst, const std::vector<T>& src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

}  // namespace

Complex predict_coefficient(const ResidueLibrary& low, const PNumberCertificate& witnesses,
                            std::span<const int> labels, std::span<const std::size_t> k,
                            std::vector<std::size_t>* consulted) {
  const std::size_t n = labels.size();
  if (n < 2 || k.size() + 1 != n) {
    throw Error(ErrorKind::InconsistentShapes, "need N labels and N-1 pole indices");
  }
  if (!witnesses.p) {
    throw Error(ErrorKind::MissingWitness, "certificate has infinite p-number");
  }
  const std::vector<int> key(labels.begin(), labels.end());
  const std::size_t max_points = 2 * (*witnesses.p + 1) - 1;
  const OrderGuard guard(low, max_points, consulted);
  if (key.size() <= max_points && low.count(key)) {
    return guard.lookup(key, std::vector<std::size_t>(k.begin(), k.end()));
  }

  std::vector<SplitWitness> parts;
  parts.reserve(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) {
    const Witness* w = witnesses.witness_for(k[i]);
    if (!w) throw Error(ErrorKind::MissingWitness, "no witness for pole " + std::to_string(k[i]));
    parts.push_back(split(*w, guard));
  }

  // c(k_0..k_{N-2}) = M^{j_{N-1}}_{1,k_{N-2}} 1(k_{N-2}) ... 1(k_0) M^{j_0}_{k_0,1}, with
  // 1(k) = [lower(k)] [upper(k)] / c_w(k) regrouped into strings that start
  // and end at the stationary index.
  Complex numerator{1.0, 0.0};
  Complex denominator{1.0, 0.0};
  {
    std::vector<int> l{labels[0]};
    append(l, parts[0].upper.labels);
    std::vector<std::size_t> idx{k[0]};
    append(idx, parts[0].upper.inner);
    numerator *= guard.lookup(l, idx);
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    std::vector<int> l = parts[i - 1].lower.labels;
    l.push_back(labels[i]);
    append(l, parts[i].upper.labels);
    std::vector<std::size_t> idx = parts[i - 1].lower.inner;
    idx.push_back(k[i - 1]);
    idx.push_back(k[i]);
    append(idx, parts[i].upper.inner);
    numerator *= guard.lookup(l, idx);
  }
  {
    std::vector<int> l = parts[n - 2].lower.labels;
    l.push_back(labels[n - 1]);
    std::vector<std::size_t> idx = parts[n - 2].lower.inner;
    idx.push_back(k[n - 2]);
    numerator *= guard.lookup(l, idx);
  }
  for (const auto& p : parts) denominator *= p.value;
  return numerator / denominator;
}

Complex predict_coefficient_closed_form(const ResidueTensor& c2, const ResidueTensor& c3,
                                        std::span<const std::size_t> k) {
  if (k.empty()) throw Error(ErrorKind::InconsistentShapes, "need at least one pole index");
  if (k.size() == 1) return c2_at(c2, k[0]);
  Complex value{1.0, 0.0};
  for (std::size_t i = 0; i + 1 < k.size(); ++i) value *= c3_at(c3, k[i], k[i + 1]);
  for (std::size_t i = 1; i + 1 < k.size(); ++i) value /= c2_at(c2, k[i]);
  return value;
}

ResidueTensor predict_residue_tensor(const ResidueLibrary& low,
                                     const PNumberCertificate& witnesses,
                                     std::span<const int> labels) {
  if (low.empty()) throw Error(ErrorKind::MissingWitness, "empty residue library");
  const auto& any = low.begin()->second;
  ResidueTensor rt;
  rt.kind = any.kind;
  rt.labels.assign(labels.begin(), labels.end());
  rt.spectrum = any.spectrum;
  const auto modes = static_cast<std::size_t>(any.modes());
  rt.coefficients = MultiArray(std::vector<std::size_t>(labels.size() - 1, modes));
  for (std::size_t flat = 0; flat < rt.coefficients.size(); ++flat) {
    const auto k = rt.coefficients.unravel(flat);
    rt.coefficients[flat] = predict_coefficient(low, witnesses, labels, k);
  }
  return rt;
}

Complex predict_correlator(const Representative& rep, std::span<const int> labels,
                           std::span<const double> gaps) {
  if (labels.size() < 1 || gaps.size() + 1 != labels.size()) {
    throw Error(ErrorKind::InconsistentShapes, "need N labels and N-1 gaps");
  }
  const TransferSystem sys = rep.system();
  const Eigen::Index modes = rep.spectrum.size();
  Vector v = Vector::Unit(modes, 0);
  v = sys.op(labels[0]) * v;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    for (Eigen::Index k = 0; k < modes; ++k) {
      const Complex pole = rep.spectrum(k);
      if (rep.kind == SystemKind::discrete) {
        if (gaps[i] < 0.0 || std::floor(gaps[i]) != gaps[i]) {
          throw Error(ErrorKind::InconsistentShapes, "discrete gaps must be non-negative integers");
        }
        Complex p{1.0, 0.0};
        Complex b = pole;
        for (long e = static_cast<long>(gaps[i]); e > 0; e >>= 1) {
          if (e & 1) p *= b;
          b *= b;
        }
        v(k) *= p;
      } else {
        v(k) *= std::exp(pole * gaps[i]);
      }
    }
    v = sys.op(labels[i + 1]) * v;
  }
  return v(0);
}

Complex predict_correlator(const ResidueLibrary& low, const PNumberCertificate& witnesses,
                           std::span<const int> labels, std::span<const double> gaps) {
  const ResidueTensor rt = predict_residue_tensor(low, witnesses, labels);
  return evaluate_expansion(rt, gaps);
}

CorrelationTable predict_table(const Representative& rep, std::span<const int> labels,
                               const CorrelationWindow& window) {
  return correlation_table(rep.system(), labels, window);
}

VerificationReport verify(const Representative& rep, std::span<const CorrelationTable> reference,
                          double tolerance) {
  VerificationReport report;
  report.tolerance = tolerance;
  report.pass = true;
  for (const auto& ref : reference) {
    TableDeviation dev;
    dev.labels = ref.labels;
    if (ref.kind != rep.kind) {
      throw Error(ErrorKind::InconsistentShapes, "reference table kind differs from representative");
    }
    const CorrelationTable pred = predict_table(rep, ref.labels, ref.window);
    for (std::size_t i = 0; i < ref.values.size(); ++i) {
      dev.max_abs = std::max(dev.max_abs, std::abs(pred.values[i] - ref.values[i]));
    }
    const double scale = ref.values.max_abs();
    dev.max_rel = scale > 0.0 ? dev.max_abs / scale : dev.max_abs;
    dev.pass = dev.max_rel <= tolerance;
    report.pass = report.pass && dev.pass;
    report.tables.push_back(std::move(dev));
  }
  return report;
}

}  // namespace wickmps
