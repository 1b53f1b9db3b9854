#pragma once

#include <map>
#include <span>
#include <vector>

#include "wickmps/correlators.hpp"
#include "wickmps/polefit.hpp"

namespace wickmps {

/// Residue tensors keyed by their label tuple (j_1, ..., j_N).
using ResidueLibrary = std::map<std::vector<int>, ResidueTensor>;

ResidueLibrary make_library(std::span<const ResidueTensor> tensors);

/// Gauge-fixed functional reconstructed from low-order data: a diagonal
/// generator (the poles) and operator matrices with M[0, k] = 1 for k > 0 in
/// the reference label. The stationary index 0 carries no gauge freedom, so
/// M[0, 0] is the one-point value <O>.
struct Representative {
  SystemKind kind = SystemKind::discrete;
  Eigen::Index bond_dim = 0;
  int reference_label = 0;
  Vector spectrum;
  std::map<int, Matrix> operators;
  PNumberCertificate certificate;
  /// min_k |c2(k)| / max_k |c2(k)| of the reference label.
  double min_c2_ratio = 0.0;

  TransferSystem system() const;
};

struct ReconstructOptions {
  double structural_zero = 1e-10;
};

/// Single-label reconstruction from c2 = c_(j,j) and c3 = c_(j,j,j).
Representative reconstruct_representative(const PoleSet& poles, const ResidueTensor& c2,
                                          const ResidueTensor& c3,
                                          const ReconstructOptions& options = {});

/// Multi-label reconstruction: `reference` fixes the gauge through
/// c_(r,r) and c_(r,r,r); every other label j is read off c_(r,j,r).
Representative reconstruct_representative(const PoleSet& poles, const ResidueLibrary& library,
                                          int reference, std::span<const int> labels,
                                          const ReconstructOptions& options = {});

/// Higher-order coefficient from lower-order ones by inserting, at every
/// interior index k, the scalar identity built from the witness of k (split
/// at k and cyclically reordered). Only tensors with at most 2 (p + 1) - 1
/// operator insertions are consulted; `consulted` (if given) receives the
/// order of every tensor read.
Complex predict_coefficient(const ResidueLibrary& low, const PNumberCertificate& witnesses,
                            std::span<const int> labels, std::span<const std::size_t> k,
                            std::vector<std::size_t>* consulted = nullptr);

/// Single-label p = 1 closed form:
/// prod_{i=1}^{N-2} c3(k_i, k_{i+1}) / prod_{i=2}^{N-2} c2(k_i).
Complex predict_coefficient_closed_form(const ResidueTensor& c2, const ResidueTensor& c3,
                                        std::span<const std::size_t> k);

ResidueTensor predict_residue_tensor(const ResidueLibrary& low,
                                     const PNumberCertificate& witnesses,
                                     std::span<const int> labels);

Complex predict_correlator(const Representative& rep, std::span<const int> labels,
                           std::span<const double> gaps);
/// sum over k-tuples of predicted coefficients times pole powers.
Complex predict_correlator(const ResidueLibrary& low, const PNumberCertificate& witnesses,
                           std::span<const int> labels, std::span<const double> gaps);

CorrelationTable predict_table(const Representative& rep, std::span<const int> labels,
                               const CorrelationWindow& window);

struct TableDeviation {
  std::vector<int> labels;
  double max_abs = 0.0;
  /// max_abs divided by the largest reference magnitude in the table.
  double max_rel = 0.0;
  bool pass = false;
};

struct VerificationReport {
  double tolerance = 0.0;
  std::vector<TableDeviation> tables;
  bool pass = false;
};

VerificationReport verify(const Representative& rep, std::span<const CorrelationTable> reference,
                          double tolerance);

}  // namespace wickmps
