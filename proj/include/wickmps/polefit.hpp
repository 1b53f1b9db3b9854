#pragma once

#include <optional>
#include <span>
#include <vector>

#include "wickmps/correlators.hpp"

namespace wickmps {

struct PencilOptions {
  /// sigma_k / sigma_1 above this counts as a mode.
  double rank_threshold = 1e-10;
  /// Confidence is 1 / (safety * first-order rms drift per unit sample noise);
  /// the drift of the worst of several poles stays within about 3 rms.
  double confidence_safety = 3.0;
  /// Singular values below this fraction of the undeflated Hankel norm are round-off.
  double roundoff_floor = 1e-13;
  /// Recovered |mu| (or |e^{lambda dt}|) may exceed 1 by at most this much.
  double consistency_tol = 1e-6;
  /// A pole within this distance of 1 (resp. 0) is the stationary one.
  double leading_tol = 1e-6;
  /// Required samples per axis: n_max >= window_factor * d^2.
  std::size_t window_factor = 4;
  /// Continuous poles with |arg e^{lambda dt}| >= pi - aliasing_margin are rejected.
  double aliasing_margin = 0.1;
};

/// Poles recovered from sampled data. Discrete: mu values. Continuous: lambda
/// values (the sampled ratios are e^{lambda step}).
struct PoleSet {
  SystemKind kind = SystemKind::discrete;
  Vector poles;
  /// Per pole: inverse first-order rms drift per unit of uniform sample noise,
  /// scaled by the inverse singular values of the pencil subspace. The
  /// stationary pole, whose value is exact, takes the largest value of the set.
  std::vector<double> confidence;
  std::optional<std::size_t> leading;
  std::size_t requested = 0;
  bool rank_deficient = false;
  double step = 1.0;
  std::size_t samples = 0;

  std::size_t size() const { return static_cast<std::size_t>(poles.size()); }
  double min_confidence() const;
};

/// Matrix pencil on the Hankel matrix of one sequence C(0..n_max).
PoleSet extract_poles_discrete(std::span<const Complex> samples, Eigen::Index bond_dim,
                               const PencilOptions& options = {});
PoleSet extract_poles_continuous(std::span<const Complex> samples, double step,
                                 Eigen::Index bond_dim, const PencilOptions& options = {});
/// Multi-channel pencil along one axis of a table: every 1-d slice along
/// `axis` contributes a Hankel block, so a pole is seen if any slice has it.
PoleSet extract_poles(const CorrelationTable& table, std::size_t axis, Eigen::Index bond_dim,
                      const PencilOptions& options = {});

/// A grid step for continuous sampling derived from a pilot pole estimate:
/// keeps |lambda| step <= 1.5 and |Im lambda| step <= pi / 2.
double suggest_grid_step(const PoleSet& pilot);

struct ResidueOptions {
  double max_condition = 1e10;
  double structural_zero = 1e-10;
  double min_pole_distance = 1e-6;
};

/// Least-squares solve of the separable Vandermonde system, one axis at a time.
ResidueTensor extract_residues(const CorrelationTable& table, const PoleSet& poles,
                               const ResidueOptions& options = {});

struct Witness {
  std::size_t pole = 0;
  /// Number of operator insertions of the witnessing correlator.
  std::size_t points = 0;
  std::vector<int> labels;
  std::size_t axis = 0;
  std::vector<std::size_t> indices;
  double magnitude = 0.0;
  /// The stationary pole is present in every normalized state.
  bool by_normalization = false;
};

/// p counts correlator arguments: a two-point function has p = 1. An empty p
/// means not every pole was witnessed by the supplied data.
struct PNumberCertificate {
  Eigen::Index bond_dim = 0;
  SystemKind kind = SystemKind::discrete;
  std::optional<std::size_t> p;
  std::size_t missing_poles = 0;
  Vector poles;
  /// One witness per witnessed pole: lowest order first, then largest |c|.
  std::vector<Witness> witnesses;

  const Witness* witness_for(std::size_t pole) const;
};

struct CertifyOptions {
  double structural_zero = 1e-10;
  /// Poles closer than this (relative to max(1, |z|)) are merged.
  double cluster_tol = 1e-6;
  PencilOptions pencil;
  ResidueOptions residues;
};

/// Certificate from residue tensors that share one spectrum.
PNumberCertificate p_number(std::span<const ResidueTensor> tensors, Eigen::Index bond_dim,
                            double structural_zero = 1e-10);
/// Certificate from raw tables: poles by pencil on every axis, residues against
/// the merged pole set, then witnesses as above.
PNumberCertificate p_number(std::span<const CorrelationTable> tables, Eigen::Index bond_dim,
                            const CertifyOptions& options = {});

/// Merged pole set used by the table-based certificate.
PoleSet merged_poles(std::span<const CorrelationTable> tables, Eigen::Index bond_dim,
                     const CertifyOptions& options = {});

}  // namespace wickmps
