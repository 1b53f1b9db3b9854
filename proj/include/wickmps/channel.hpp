#pragma once

#include <vector>

#include "wickmps/states.hpp"

namespace wickmps {

/// Markovian generator data: hermitian H and jump operators R_j.
struct LindbladSpec {
  Matrix H;
  std::vector<Matrix> jump_ops;
};

/// L = -i H* (x) 1 + i 1 (x) H - 1/2 sum_j (R_j^T R_j* (x) 1 + 1 (x) R_j^dag R_j - 2 R_j* (x) R_j).
Matrix lindblad_generator(const LindbladSpec& spec);

/// (Q, R) = (i H - 1/2 R^dag R, R); needs exactly one jump operator.
CmpsState q_from_hamiltonian(const LindbladSpec& spec);

struct StationaryState {
  Matrix rho;
  /// -max Re lambda over the nonzero eigenvalues.
  double gap = 0.0;
};

/// Null vector of L, devectorized column-major, hermitized and trace-normalized.
StationaryState stationary_state(const Matrix& L, double degeneracy_tol = kDefaultDegeneracyTol);

/// || vec(1)^dag L ||; zero for trace-preserving generators.
double check_trace_preservation(const Matrix& L);

/// Random hermitian H and Ginibre jump operators drawn from stream 0 of
/// `seed`; with one jump operator this is the draw behind random_generic_cmps.
LindbladSpec random_lindblad_spec(std::uint64_t seed, Eigen::Index d, std::size_t jumps = 1);

/// Column-major vectorization used by the generator above.
Vector vectorize(const Matrix& rho);
Matrix devectorize(const Vector& v);

}  // namespace wickmps
