#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "wickmps/multi_array.hpp"
#include "wickmps/states.hpp"

namespace wickmps {

// Conventions shared by every routine in this header:
//  * operator lists are ordered j_1, ..., j_N with j_1 at the origin, i.e. the
//    rightmost factor of the trace;
//  * gaps[i] separates operator i from operator i + 1. For discrete systems a
//    gap is the site distance minus one (adjacent sites have gap 0); for
//    continuous systems it is the length tau_i = x_{i+1} - x_i;
//  * multi-dimensional arrays index axis i by gap i (or pole index k_{i+1}).

/// |1><1|, the limit of E^n (or e^{T x}) for a normalized generic system.
struct LeadingProjector {
  Eigen::RowVectorXcd left;
  Vector right;
  Complex eigenvalue;
};

LeadingProjector leading_projector(const Matrix& generator, SystemKind kind,
                                   double degeneracy_tol = kDefaultDegeneracyTol);

/// E^n by binary powering.
Matrix matrix_power(const Matrix& m, long n);
/// e^{m t} (scaling and squaring Pade).
Matrix matrix_exp(const Matrix& m, double t);

Complex npoint_mps(const Matrix& transfer, std::span<const Matrix> ops,
                   std::span<const long> gaps);
Complex npoint_cmps(const Matrix& liouvillian, std::span<const Matrix> ops,
                    std::span<const double> taus);
/// Dispatches on system.kind; discrete gaps must be non-negative integers.
Complex npoint(const TransferSystem& system, std::span<const int> labels,
               std::span<const double> gaps);

struct CorrelationWindow {
  /// Discrete: gaps 0..n_max per axis.
  std::size_t n_max = 0;
  /// Continuous: tau = step * i for i in 0..points-1 per axis.
  double step = 0.0;
  std::size_t points = 0;

  static CorrelationWindow discrete(std::size_t n_max) { return {n_max, 1.0, n_max + 1}; }
  static CorrelationWindow continuous(double step, std::size_t points) {
    return {points == 0 ? 0 : points - 1, step, points};
  }
};

struct CorrelationTable {
  SystemKind kind = SystemKind::discrete;
  std::vector<int> labels;
  CorrelationWindow window;
  MultiArray values;

  std::size_t order() const { return labels.size(); }
  std::size_t samples_per_axis() const { return window.points; }
  double gap_value(std::size_t i) const {
    return kind == SystemKind::discrete ? static_cast<double>(i) : window.step * static_cast<double>(i);
  }
};

/// Every cell on the window grid. Cells are independent; with threads > 1 the
/// first axis is split across workers and each cell is written exactly once.
CorrelationTable correlation_table(const TransferSystem& system, std::span<const int> labels,
                                   const CorrelationWindow& window, unsigned threads = 1);

struct ResidueFitDiagnostics {
  double max_residual = 0.0;
  double relative_residual = 0.0;
  double condition = 1.0;
  std::vector<bool> structural_zero;
};

/// Coefficients c(k_1, ..., k_{N-1}) of the multi-geometric (or
/// multi-exponential) expansion of an N-point correlator.
struct ResidueTensor {
  SystemKind kind = SystemKind::discrete;
  std::vector<int> labels;
  Vector spectrum;
  MultiArray coefficients;
  std::optional<ResidueFitDiagnostics> fit;

  std::size_t order() const { return labels.size(); }
  Eigen::Index modes() const { return spectrum.size(); }
  Complex at(std::span<const std::size_t> k) const { return coefficients(k); }
};

/// Operators gauged into the eigenbasis of the generator, X M X^{-1} with X the
/// left eigenvector matrix.
struct EigenFrame {
  SpectralDecomposition spectrum;
  std::map<int, Matrix> operators;
};

EigenFrame eigen_frame(const TransferSystem& system,
                       double degeneracy_tol = kDefaultDegeneracyTol);

ResidueTensor residue_tensor(const EigenFrame& frame, SystemKind kind,
                             std::span<const int> labels);
ResidueTensor residue_tensor(const TransferSystem& system, std::span<const int> labels,
                             double degeneracy_tol = kDefaultDegeneracyTol);

/// sum_k c(k) prod_i mu_{k_i}^{gap_i} (or e^{lambda_{k_i} tau_i}).
Complex evaluate_expansion(const ResidueTensor& rt, std::span<const double> gaps);

/// sum_k c(k) / prod_i (1 - mu_{k_i} s_i).
Complex z_transform_analytic(const ResidueTensor& rt, std::span<const Complex> s);
/// sum_k c(k) / prod_i (s_i - lambda_{k_i}), the transform of the correlator
/// with kernel e^{-s . tau}.
Complex laplace_analytic(const ResidueTensor& rt, std::span<const Complex> s);

}  // namespace wickmps
