#include "wickmps/states.hpp"

#include <cmath>

namespace wickmps {

std::string_view to_string(OperatorKind kind) noexcept {
  switch (kind) {
    case OperatorKind::discrete_local_op: return "discrete_local_op";
    case OperatorKind::cmps_psi_dagger: return "cmps_psi_dagger";
    case OperatorKind::cmps_psi: return "cmps_psi";
    case OperatorKind::cmps_density: return "cmps_density";
    case OperatorKind::cmps_custom: return "cmps_custom";
  }
  return "unknown";
}

OperatorKind operator_kind_from_string(std::string_view name) {
  for (auto k : {OperatorKind::discrete_local_op, OperatorKind::cmps_psi_dagger,
                 OperatorKind::cmps_psi, OperatorKind::cmps_density, OperatorKind::cmps_custom}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorKind::UnknownKind, "unknown operator kind '" + std::string(name) + "'");
}

std::string_view to_string(SystemKind kind) noexcept {
  return kind == SystemKind::discrete ? "discrete" : "continuous";
}

SystemKind system_kind_from_string(std::string_view name) {
  if (name == "discrete") return SystemKind::discrete;
  if (name == "continuous") return SystemKind::continuous;
  throw Error(ErrorKind::UnknownKind, "unknown system kind '" + std::string(name) + "'");
}

const Matrix& TransferSystem::op(int label) const {
  auto it = operators.find(label);
  if (it == operators.end()) {
    throw Error(ErrorKind::MalformedInput, "no operator with label " + std::to_string(label));
  }
  return it->second;
}

Matrix transfer_matrix(const MpsState& state) {
  const Eigen::Index d = state.bond_dim();
  Matrix e = Matrix::Zero(d * d, d * d);
  for (const auto& a : state.tensors) e += kron(a.conjugate(), a);
  return e;
}

Matrix liouvillian(const CmpsState& state) {
  const Eigen::Index d = state.bond_dim();
  const Matrix id = Matrix::Identity(d, d);
  return kron(state.Q.conjugate(), id) + kron(id, state.Q) + kron(state.R.conjugate(), state.R);
}

OperatorMatrix operator_matrix(const MpsState& state, const Matrix& op, int label) {
  const Eigen::Index q = state.phys_dim();
  if (op.rows() != q || op.cols() != q) {
    throw Error(ErrorKind::DimensionMismatch, "local operator must be q x q");
  }
  const Eigen::Index d = state.bond_dim();
  OperatorMatrix out{label, Matrix::Zero(d * d, d * d), OperatorKind::discrete_local_op};
  for (Eigen::Index m = 0; m < q; ++m) {
    const Matrix ac = state.tensors[static_cast<std::size_t>(m)].conjugate();
    for (Eigen::Index n = 0; n < q; ++n) {
      if (op(m, n) == Complex{}) continue;
      out.matrix += op(m, n) * kron(ac, state.tensors[static_cast<std::size_t>(n)]);
    }
  }
  return out;
}

OperatorMatrix cmps_operator_matrix(const CmpsState& state, OperatorKind kind, int label) {
  const Eigen::Index d = state.bond_dim();
  const Matrix id = Matrix::Identity(d, d);
  switch (kind) {
    case OperatorKind::cmps_psi_dagger:
      return {label, kron(state.R.conjugate(), id), kind};
    case OperatorKind::cmps_psi:
      return {label, kron(id, state.R), kind};
    case OperatorKind::cmps_density:
      return {label, kron(state.R.conjugate(), state.R), kind};
    default:
      throw Error(ErrorKind::UnknownKind,
                  "cmps_operator_matrix has no construction for kind " +
                      std::string(to_string(kind)));
  }
}

MpsState normalize_mps(const MpsState& state) {
  const Matrix e = transfer_matrix(state);
  const auto s = eig(e, Ordering::by_modulus_desc, {.allow_degenerate = true});
  const Complex leading = s.eigenvalues(0);
  if (std::abs(leading) < 1e-300) {
    throw Error(ErrorKind::ZeroState, "transfer matrix has vanishing spectral radius");
  }
  // E scales by 1/|mu_1|; for a transfer matrix mu_1 is the (positive) spectral radius.
  const Complex scale = 1.0 / std::sqrt(leading);
  MpsState out = state;
  for (auto& a : out.tensors) a *= scale;
  return out;
}

CmpsState normalize_cmps(const CmpsState& state, double degeneracy_tol) {
  const auto s = eig(liouvillian(state), Ordering::by_real_part_desc,
                     {.degeneracy_tol = degeneracy_tol});
  const auto report = genericity_check(s, degeneracy_tol);
  if (!report.leading_unique) {
    throw Error(ErrorKind::DegenerateSpectrum, "largest real part of the Liouvillian is not unique");
  }
  const Complex leading = s.eigenvalues(0);
  if (std::abs(leading.imag()) > 1e-10) {
    throw Error(ErrorKind::NonNormalizable,
                "leading Liouvillian eigenvalue has imaginary part " +
                    std::to_string(leading.imag()) + "; a shift of Q cannot remove it");
  }
  // Q -> Q + alpha 1 shifts T by (alpha* + alpha) = 2 Re(alpha).
  CmpsState out = state;
  out.Q.diagonal().array() -= Complex(leading.real() / 2.0, 0.0);
  return out;
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

Matrix random_ginibre(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  // Unit-variance complex Gaussian entries, E|z|^2 = 1.
  std::normal_distribution<double> normal(0.0, M_SQRT1_2);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      m(i, j) = Complex(re, im);
    }
  }
  return m;
}

Matrix random_hermitian(std::mt19937_64& rng, Eigen::Index n) {
  const Matrix g = random_ginibre(rng, n, n);
  return (g + g.adjoint()) / 2.0;
}

MpsState random_generic_mps(std::uint64_t seed, Eigen::Index d, Eigen::Index q) {
  if (d < 1 || q < 2) {
    throw Error(ErrorKind::DimensionMismatch, "random_generic_mps requires d >= 1 and q >= 2");
  }
  for (int attempt = 0; attempt < kMaxGenerationRetries; ++attempt) {
    auto rng = make_rng(seed, static_cast<std::uint64_t>(attempt));
    MpsState raw;
    for (Eigen::Index s = 0; s < q; ++s) raw.tensors.push_back(random_ginibre(rng, d, d));
    const MpsState state = normalize_mps(raw);
    const auto spec = eig(transfer_matrix(state), Ordering::by_modulus_desc,
                          {.allow_degenerate = true});
    if (genericity_check(spec).pass) return state;
  }
  throw Error(ErrorKind::GenericityFailure, "no generic MPS after bounded retries");
}

CmpsState random_generic_cmps(std::uint64_t seed, Eigen::Index d) {
  if (d < 1) throw Error(ErrorKind::DimensionMismatch, "random_generic_cmps requires d >= 1");
  for (int attempt = 0; attempt < kMaxGenerationRetries; ++attempt) {
    auto rng = make_rng(seed, static_cast<std::uint64_t>(attempt));
    const Matrix h = random_hermitian(rng, d);
    const Matrix r = random_ginibre(rng, d, d);
    CmpsState state{Complex(0.0, 1.0) * h - 0.5 * r.adjoint() * r, r};
    const auto spec = eig(liouvillian(state), Ordering::by_real_part_desc,
                          {.allow_degenerate = true});
    if (!genericity_check(spec).pass) continue;
    if (std::abs(spec.eigenvalues(0)) > 1e-10) continue;
    return state;
  }
  throw Error(ErrorKind::GenericityFailure, "no generic cMPS after bounded retries");
}

TransferSystem gauge_transform(const TransferSystem& system, const Matrix& x,
                               double max_condition) {
  TransferSystem out;
  out.kind = system.kind;
  out.generator = similarity(system.generator, x, max_condition);
  for (const auto& [label, m] : system.operators) {
    out.operators.emplace(label, similarity(m, x, max_condition));
  }
  return out;
}

namespace {

TransferSystem assemble(SystemKind kind, Matrix generator, const std::vector<OperatorMatrix>& ops) {
  TransferSystem out{kind, std::move(generator), {}};
  for (const auto& o : ops) {
    if (o.matrix.rows() != out.generator.rows() || o.matrix.cols() != out.generator.cols()) {
      throw Error(ErrorKind::DimensionMismatch, "operator matrix does not match d^2");
    }
    out.operators.insert_or_assign(o.label, o.matrix);
  }
  return out;
}

}  // namespace

TransferSystem make_system(const MpsState& state, const std::vector<OperatorMatrix>& ops) {
  return assemble(SystemKind::discrete, transfer_matrix(state), ops);
}

TransferSystem make_system(const CmpsState& state, const std::vector<OperatorMatrix>& ops) {
  return assemble(SystemKind::continuous, liouvillian(state), ops);
}

}  // namespace wickmps
