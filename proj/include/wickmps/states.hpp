#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string_view>
#include <vector>

#include "wickmps/spectral.hpp"

namespace wickmps {

/// Translation-invariant MPS in the thermodynamic limit: one d x d matrix per
/// physical level.
struct MpsState {
  std::vector<Matrix> tensors;

  Eigen::Index bond_dim() const { return tensors.empty() ? 0 : tensors.front().rows(); }
  Eigen::Index phys_dim() const { return static_cast<Eigen::Index>(tensors.size()); }
};

/// Translation-invariant cMPS generated by constant (Q, R).
struct CmpsState {
  Matrix Q;
  Matrix R;

  Eigen::Index bond_dim() const { return Q.rows(); }
};

enum class OperatorKind { discrete_local_op, cmps_psi_dagger, cmps_psi, cmps_density, cmps_custom };

std::string_view to_string(OperatorKind kind) noexcept;
OperatorKind operator_kind_from_string(std::string_view name);

struct OperatorMatrix {
  int label = 0;
  Matrix matrix;
  OperatorKind kind = OperatorKind::discrete_local_op;
};

enum class SystemKind { discrete, continuous };

std::string_view to_string(SystemKind kind) noexcept;
SystemKind system_kind_from_string(std::string_view name);

inline Ordering ordering_for(SystemKind kind) {
  return kind == SystemKind::discrete ? Ordering::by_modulus_desc : Ordering::by_real_part_desc;
}

/// The auxiliary-space functional that all correlators are computed from:
/// the generator (transfer matrix E or Liouvillian T) plus the operator
/// matrices M^[j] keyed by label.
struct TransferSystem {
  SystemKind kind = SystemKind::discrete;
  Matrix generator;
  std::map<int, Matrix> operators;

  const Matrix& op(int label) const;
};

Matrix transfer_matrix(const MpsState& state);
Matrix liouvillian(const CmpsState& state);

/// M = sum_{m,n} conj(A[m]) (x) A[n] <m|O|n>.
OperatorMatrix operator_matrix(const MpsState& state, const Matrix& op, int label);
OperatorMatrix cmps_operator_matrix(const CmpsState& state, OperatorKind kind, int label);

MpsState normalize_mps(const MpsState& state);
CmpsState normalize_cmps(const CmpsState& state, double degeneracy_tol = kDefaultDegeneracyTol);

/// Deterministic generator keyed by (seed, stream); used for every seeded draw.
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0);
Matrix random_ginibre(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols);
Matrix random_hermitian(std::mt19937_64& rng, Eigen::Index n);

inline constexpr int kMaxGenerationRetries = 100;

MpsState random_generic_mps(std::uint64_t seed, Eigen::Index d, Eigen::Index q);
CmpsState random_generic_cmps(std::uint64_t seed, Eigen::Index d);

/// Simultaneous similarity x (.) x^{-1} of the generator and every operator.
TransferSystem gauge_transform(const TransferSystem& system, const Matrix& x,
                               double max_condition = kDefaultMaxGaugeCondition);

TransferSystem make_system(const MpsState& state, const std::vector<OperatorMatrix>& ops);
TransferSystem make_system(const CmpsState& state, const std::vector<OperatorMatrix>& ops);

}  // namespace wickmps
