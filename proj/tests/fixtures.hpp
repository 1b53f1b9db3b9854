#pragma once

#include <cstdint>
#include <vector>

#include "wickmps/channel.hpp"
#include "wickmps/correlators.hpp"
#include "wickmps/states.hpp"

namespace fixture {

using namespace wickmps;

inline Matrix pauli_x() {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

inline Matrix pauli_z() {
  Matrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

/// Labels 0 (identity), 1 (sigma_x), 2 (sigma_z) and 3 (random hermitian).
inline TransferSystem mps_system(std::uint64_t seed, Eigen::Index d, Eigen::Index q = 2) {
  const MpsState s = random_generic_mps(seed, d, q);
  auto rng = make_rng(seed, 777);
  Matrix x = Matrix::Zero(q, q);
  Matrix z = Matrix::Zero(q, q);
  for (Eigen::Index i = 0; i + 1 < q; ++i) x(i, i + 1) = x(i + 1, i) = 1.0;
  for (Eigen::Index i = 0; i < q; ++i) z(i, i) = (i % 2 == 0) ? 1.0 : -1.0;
  return make_system(s, {operator_matrix(s, Matrix::Identity(q, q), 0), operator_matrix(s, x, 1),
                         operator_matrix(s, z, 2), operator_matrix(s, random_hermitian(rng, q), 3)});
}

/// Labels 0 (identity), 1 (psi^dag), 2 (psi) and 3 (density).
inline TransferSystem cmps_system(std::uint64_t seed, Eigen::Index d) {
  const CmpsState s = random_generic_cmps(seed, d);
  return make_system(s, {{0, Matrix::Identity(d * d, d * d), OperatorKind::cmps_custom},
                         cmps_operator_matrix(s, OperatorKind::cmps_psi_dagger, 1),
                         cmps_operator_matrix(s, OperatorKind::cmps_psi, 2),
                         cmps_operator_matrix(s, OperatorKind::cmps_density, 3)});
}

inline std::vector<Matrix> ops_for(const TransferSystem& sys, const std::vector<int>& labels) {
  std::vector<Matrix> out;
  for (int l : labels) out.push_back(sys.op(l));
  return out;
}

/// max |a - b| / max |b| over two equally shaped arrays.
inline double rel_dev(const MultiArray& a, const MultiArray& b) {
  double num = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) num = std::max(num, std::abs(a[i] - b[i]));
  const double den = b.max_abs();
  return den > 0.0 ? num / den : num;
}

}  // namespace fixture
