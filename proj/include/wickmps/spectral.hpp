#pragma once

#include <complex>
#include <cstddef>
#include <limits>
#include <type_traits>
#include <vector>

#include <Eigen/Core>

#include "wickmps/error.hpp"

namespace wickmps {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// Relative eigenvalue separation below which two eigenvalues count as equal.
inline constexpr double kDefaultDegeneracyTol = 1e-8;
/// Largest 2-norm condition number accepted for a gauge matrix.
inline constexpr double kDefaultMaxGaugeCondition = 1e12;

enum class Ordering { by_modulus_desc, by_real_part_desc };

/// Kronecker product with the block-of-b layout:
/// kron(a, b)(i * b.rows() + p, j * b.cols() + q) == a(i, j) * b(p, q).
template <typename DerivedA, typename DerivedB>
Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic> kron(
    const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  static_assert(std::is_same_v<typename DerivedA::Scalar, typename DerivedB::Scalar>,
                "kron requires matching scalar types");
  const Eigen::Index br = b.rows();
  const Eigen::Index bc = b.cols();
  Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic> out(a.rows() * br,
                                                                                a.cols() * bc);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * br, j * bc, br, bc) = a(i, j) * b;
    }
  }
  return out;
}

/// Eigendecomposition of a diagonalizable matrix, m = sum_k eigenvalues[k] |k><k|.
///
/// Columns of `right` are unit-norm right eigenvectors; rows of `left` are the
/// biorthogonal left eigenvectors (left * right == identity).
struct SpectralDecomposition {
  Vector eigenvalues;
  Matrix right;
  Matrix left;
  Ordering ordering = Ordering::by_modulus_desc;
  double min_gap = std::numeric_limits<double>::infinity();
  double condition_estimate = 1.0;

  Eigen::Index size() const { return eigenvalues.size(); }
  /// Rank-one spectral projector |k><k|.
  Matrix projector(Eigen::Index k) const { return right.col(k) * left.row(k); }
  Matrix reassemble() const { return right * eigenvalues.asDiagonal() * left; }
};

struct EigOptions {
  double degeneracy_tol = kDefaultDegeneracyTol;
  /// When false, a spectrum with min_gap < degeneracy_tol * spectral radius
  /// raises ErrorKind::DegenerateSpectrum.
  bool allow_degenerate = false;
};

/// Sort eigenvalues per `mode`. Near-ties in the primary key (within 1e-10
/// relative) are broken by ascending argument (modulus mode) or ascending
/// imaginary part (real-part mode). Returns the permutation.
std::vector<Eigen::Index> spectral_order(const Vector& values, Ordering mode);

SpectralDecomposition eig(const Matrix& m, Ordering mode, const EigOptions& options = {});

struct GenericityReport {
  bool diagonal_nondegenerate = false;
  bool leading_unique = false;
  double min_gap = std::numeric_limits<double>::infinity();
  /// Separation between the first and second eigenvalue in the ordering key.
  double leading_margin = std::numeric_limits<double>::infinity();
  bool pass = false;
};

GenericityReport genericity_check(const SpectralDecomposition& s,
                                  double tol = kDefaultDegeneracyTol);

double condition_number(const Matrix& x);

/// x * m * x^{-1}.
Matrix similarity(const Matrix& m, const Matrix& x,
                  double max_condition = kDefaultMaxGaugeCondition);

}  // namespace wickmps
