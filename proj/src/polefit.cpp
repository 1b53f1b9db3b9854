#include "wickmps/polefit.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

namespace wickmps {

double PoleSet::min_confidence() const {
  if (confidence.empty()) return 0.0;
  return *std::min_element(confidence.begin(), confidence.end());
}

const Witness* PNumberCertificate::witness_for(std::size_t pole) const {
  for (const auto& w : witnesses) {
    if (w.pole == pole) return &w;
  }
  return nullptr;
}

namespace {

struct PencilResult {
  std::vector<Complex> ratios;
  std::vector<double> confidence;
  bool rank_deficient = false;
};

/// Signal-subspace pencil on the sequences `channel(c, i)`, i < samples.
/// Singular values at or below `floor` never count as modes. `noise_std` is
/// the per-sample noise deviation for unit uniform noise in the original data.
template <typename Channel>
PencilResult subspace_pencil(std::size_t samples, std::size_t channels, std::size_t requested,
                             double floor, double noise_std, const PencilOptions& options,
                             Channel&& channel) {
  // Hankel H_c(i, j) = y_c(i + j) with `rows` rows and `cols` columns per channel;
  // the column space of [H_1 H_2 ...] is spanned by the vectors (z_k^i)_i.
  const std::size_t cols = samples / 2 + 1;
  const std::size_t rows = samples - cols + 1;
  const auto r = static_cast<Eigen::Index>(rows);
  PencilResult out;
  if (rows < 2 || requested == 0) return out;

  // Left singular vectors of H equal those of the triangular factor of H^H,
  // accumulated chunk by chunk so wide multi-channel matrices stay small.
  Matrix tri(0, r);
  constexpr std::size_t kChunkChannels = 16;
  for (std::size_t c0 = 0; c0 < channels; c0 += kChunkChannels) {
    const std::size_t c1 = std::min(channels, c0 + kChunkChannels);
    Matrix stacked(tri.rows() + static_cast<Eigen::Index>((c1 - c0) * cols), r);
    stacked.topRows(tri.rows()) = tri;
    Eigen::Index row = tri.rows();
    for (std::size_t c = c0; c < c1; ++c) {
      for (std::size_t j = 0; j < cols; ++j, ++row) {
        for (std::size_t i = 0; i < rows; ++i) {
          stacked(row, static_cast<Eigen::Index>(i)) = std::conj(channel(c, i + j));
        }
      }
    }
    Eigen::HouseholderQR<Matrix> qr(stacked);
    const Eigen::Index keep = std::min(stacked.rows(), r);
    tri = qr.matrixQR().topRows(keep).triangularView<Eigen::Upper>();
  }

  Eigen::JacobiSVD<Matrix> svd(tri.adjoint(), Eigen::ComputeThinU);
  const auto& sigma = svd.singularValues();
  if (sigma.size() == 0 || !(sigma(0) > floor)) return out;
  std::size_t rank = 0;
  while (rank < static_cast<std::size_t>(sigma.size()) &&
         sigma(static_cast<Eigen::Index>(rank)) / sigma(0) > options.rank_threshold &&
         sigma(static_cast<Eigen::Index>(rank)) > floor) {
    ++rank;
  }
  const std::size_t modes = std::min({rank, requested, rows - 1});
  if (modes == 0) return out;

  const auto m = static_cast<Eigen::Index>(modes);
  const Matrix u = svd.matrixU().leftCols(m);
  const Matrix u1 = u.topRows(r - 1);
  const Matrix u2 = u.bottomRows(r - 1);
  const Eigen::ColPivHouseholderQR<Matrix> u1qr(u1);
  const Matrix shift = u1qr.solve(u2);

  Eigen::ComplexEigenSolver<Matrix> es(shift, true);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorKind::NumericalFailure, "pencil eigenproblem did not converge");
  }
  const Matrix& v = es.eigenvectors();
  const Matrix w = v.fullPivLu().inverse();

  // First order: noise G in the samples turns U by P_perp G V Sigma^-1 and
  // moves z_k by a_k^H dU v_k with a_k^H = w_k^T U1^+ (D2 - z_k D1). With
  // independent noise of standard deviation `noise_std` per sample the rms
  // drift is noise_std |P_perp a_k| |Sigma^-1 v_k|.
  const Matrix u1pinv = u1qr.solve(Matrix::Identity(r - 1, r - 1));
  for (Eigen::Index k = 0; k < m; ++k) {
    const Complex z = es.eigenvalues()(k);
    const Eigen::RowVectorXcd t = w.row(k) * u1pinv;
    Eigen::RowVectorXcd ak = Eigen::RowVectorXcd::Zero(r);
    ak.tail(r - 1) += t;
    ak.head(r - 1) -= z * t;
    const Eigen::RowVectorXcd perp = ak - (ak * u) * u.adjoint();
    const Vector scaled = v.col(k).cwiseQuotient(sigma.head(m).cast<Complex>());
    const double rms = noise_std * perp.norm() * scaled.norm();
    out.ratios.push_back(z);
    out.confidence.push_back(rms > 0.0 ? 1.0 / (options.confidence_safety * rms)
                                       : std::numeric_limits<double>::max());
  }
  return out;
}

/// Pencil with the stationary ratio 1 deflated: the rank test runs on the
/// differences y(i + 1) - y(i), so a large constant term does not bury weak
/// modes under the threshold. Ratio 1 is kept if a least-squares fit gives it
/// a constant above the threshold; it is then one of the `requested`
/// eigenvalues and at most requested - 1 others are returned.
template <typename Channel>
PencilResult run_pencil(std::size_t samples, std::size_t channels, std::size_t requested,
                        const PencilOptions& options, Channel&& channel) {
  PencilResult out;
  if (samples < 2) {
    out.rank_deficient = requested > 0;
    return out;
  }
  const auto n = static_cast<Eigen::Index>(samples);
  Matrix y(n, static_cast<Eigen::Index>(channels));
  double scale = 0.0;
  for (std::size_t c = 0; c < channels; ++c) {
    for (Eigen::Index i = 0; i < n; ++i) {
      y(i, static_cast<Eigen::Index>(c)) = channel(c, static_cast<std::size_t>(i));
      scale = std::max(scale, std::abs(y(i, static_cast<Eigen::Index>(c))));
    }
  }
  // Round-off floor relative to the undeflated Hankel norm.
  const std::size_t cols = (samples - 1) / 2 + 1;
  const std::size_t rows = samples - 1 - cols + 1;
  double hankel = 0.0;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) {
        hankel += std::norm(y(static_cast<Eigen::Index>(i + j), static_cast<Eigen::Index>(c)));
      }
    }
  }
  const double floor = options.roundoff_floor * std::sqrt(hankel);
  auto deflated = [&](std::size_t modes) {
    // Uniform noise in [-1, 1] on both parts has variance 2/3; differences double it.
    return subspace_pencil(samples - 1, channels, modes, floor, std::sqrt(4.0 / 3.0), options,
                           [&](std::size_t c, std::size_t i) {
                             return y(static_cast<Eigen::Index>(i + 1), static_cast<Eigen::Index>(c)) -
                                    y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
                           });
  };
  auto has_constant = [&](const PencilResult& pr) {
    const auto k = static_cast<Eigen::Index>(pr.ratios.size());
    Matrix vander(n, k + 1);
    for (Eigen::Index j = 0; j <= k; ++j) {
      const Complex z = j == 0 ? Complex{1.0, 0.0} : pr.ratios[static_cast<std::size_t>(j - 1)];
      Complex p{1.0, 0.0};
      for (Eigen::Index i = 0; i < n; ++i, p *= z) vander(i, j) = p;
    }
    const Matrix amp = vander.colPivHouseholderQr().solve(y);
    const double constant = channels == 0 ? 0.0 : amp.row(0).cwiseAbs().maxCoeff();
    return scale > 0.0 && constant > options.rank_threshold * scale;
  };

  out = deflated(requested);
  if (has_constant(out)) {
    if (out.ratios.size() + 1 > requested) out = deflated(requested - 1);
    double best = 1.0;
    if (!out.confidence.empty()) best = *std::max_element(out.confidence.begin(), out.confidence.end());
    out.ratios.insert(out.ratios.begin(), Complex{1.0, 0.0});
    out.confidence.insert(out.confidence.begin(), best);
  }
  out.rank_deficient = out.ratios.size() < requested;
  return out;
}

PoleSet finalize(const PencilResult& pr, SystemKind kind, double step, std::size_t samples,
                 std::size_t requested, const PencilOptions& options) {
  PoleSet ps;
  ps.kind = kind;
  ps.step = step;
  ps.samples = samples;
  ps.requested = requested;
  ps.rank_deficient = pr.rank_deficient;

  const std::size_t n = pr.ratios.size();
  std::vector<double> conf = pr.confidence;
  Vector values(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) {
    const Complex z = pr.ratios[k];
    if (std::abs(z) > 1.0 + options.consistency_tol) {
      throw Error(ErrorKind::Inconsistent,
                  "recovered pole ratio of modulus " + std::to_string(std::abs(z)) +
                      " exceeds 1; data look unnormalized");
    }
    if (kind == SystemKind::continuous) {
      const Complex lz = std::log(z);
      if (std::abs(lz.imag()) >= M_PI - options.aliasing_margin) {
        throw Error(ErrorKind::AliasingRisk,
                    "pole phase " + std::to_string(lz.imag()) +
                        " per step is too close to the branch cut; reduce the grid step");
      }
      values(static_cast<Eigen::Index>(k)) = lz / step;
      // d lambda = dz / (z step).
      conf[k] *= std::abs(z) * step;
    } else {
      values(static_cast<Eigen::Index>(k)) = z;
    }
  }

  const auto order = spectral_order(values, ordering_for(kind));
  ps.poles.resize(static_cast<Eigen::Index>(n));
  double best = options.leading_tol;
  for (std::size_t i = 0; i < n; ++i) {
    const auto src = static_cast<std::size_t>(order[i]);
    ps.poles(static_cast<Eigen::Index>(i)) = values(static_cast<Eigen::Index>(src));
    ps.confidence.push_back(conf[src]);
    const double dist = std::abs(pr.ratios[src] - 1.0);
    if (dist < best) {
      best = dist;
      ps.leading = i;
    }
  }
  return ps;
}

void check_window(std::size_t samples, Eigen::Index bond_dim, const PencilOptions& options) {
  const auto modes = static_cast<std::size_t>(bond_dim * bond_dim);
  if (samples == 0 || samples - 1 < options.window_factor * modes) {
    throw Error(ErrorKind::WindowTooShort,
                "need n_max >= " + std::to_string(options.window_factor * modes) + ", have " +
                    std::to_string(samples == 0 ? 0 : samples - 1));
  }
}

}  // namespace

PoleSet extract_poles_discrete(std::span<const Complex> samples, Eigen::Index bond_dim,
                               const PencilOptions& options) {
  check_window(samples.size(), bond_dim, options);
  const auto requested = static_cast<std::size_t>(bond_dim * bond_dim);
  const auto pr = run_pencil(samples.size(), 1, requested, options,
                             [&](std::size_t, std::size_t i) { return samples[i]; });
  return finalize(pr, SystemKind::discrete, 1.0, samples.size(), requested, options);
}

PoleSet extract_poles_continuous(std::span<const Complex> samples, double step,
                                 Eigen::Index bond_dim, const PencilOptions& options) {
  if (!(step > 0.0)) throw Error(ErrorKind::DimensionMismatch, "grid step must be positive");
  check_window(samples.size(), bond_dim, options);
  const auto requested = static_cast<std::size_t>(bond_dim * bond_dim);
  const auto pr = run_pencil(samples.size(), 1, requested, options,
                             [&](std::size_t, std::size_t i) { return samples[i]; });
  return finalize(pr, SystemKind::continuous, step, samples.size(), requested, options);
}

PoleSet extract_poles(const CorrelationTable& table, std::size_t axis, Eigen::Index bond_dim,
                      const PencilOptions& options) {
  const auto& shape = table.values.shape();
  if (axis >= shape.size()) throw Error(ErrorKind::ShapeMismatch, "axis out of range");
  const std::size_t samples = shape[axis];
  check_window(samples, bond_dim, options);

  std::size_t outer = 1;
  std::size_t inner = 1;
  for (std::size_t a = 0; a < axis; ++a) outer *= shape[a];
  for (std::size_t a = axis + 1; a < shape.size(); ++a) inner *= shape[a];
  const auto& data = table.values.data();
  const auto requested = static_cast<std::size_t>(bond_dim * bond_dim);
  const auto pr = run_pencil(samples, outer * inner, requested, options,
                             [&](std::size_t c, std::size_t i) {
                               const std::size_t o = c / inner;
                               const std::size_t in = c % inner;
                               return data[(o * samples + i) * inner + in];
                             });
  const double step = table.kind == SystemKind::discrete ? 1.0 : table.window.step;
  return finalize(pr, table.kind, step, samples, requested, options);
}

double suggest_grid_step(const PoleSet& pilot) {
  double max_abs = 0.0;
  double max_imag = 0.0;
  for (Eigen::Index k = 0; k < pilot.poles.size(); ++k) {
    if (pilot.leading && static_cast<std::size_t>(k) == *pilot.leading) continue;
    max_abs = std::max(max_abs, std::abs(pilot.poles(k)));
    max_imag = std::max(max_imag, std::abs(pilot.poles(k).imag()));
  }
  double step = 1.0;
  if (max_abs > 0.0) step = std::min(step, 1.5 / max_abs);
  if (max_imag > 0.0) step = std::min(step, 0.5 * M_PI / max_imag);
  return step;
}

ResidueTensor extract_residues(const CorrelationTable& table, const PoleSet& poles,
                               const ResidueOptions& options) {
  if (table.kind != poles.kind) {
    throw Error(ErrorKind::ShapeMismatch, "table and pole set are of different kinds");
  }
  if (table.order() < 2 || table.values.rank() + 1 != table.order()) {
    throw Error(ErrorKind::ShapeMismatch, "table rank does not match its order");
  }
  const Eigen::Index modes = poles.poles.size();
  if (modes == 0) throw Error(ErrorKind::ShapeMismatch, "empty pole set");
  for (Eigen::Index a = 0; a < modes; ++a) {
    for (Eigen::Index b = a + 1; b < modes; ++b) {
      if (std::abs(poles.poles(a) - poles.poles(b)) <= options.min_pole_distance) {
        throw Error(ErrorKind::IllConditioned, "poles are not distinct");
      }
    }
  }
  const std::size_t samples = table.values.shape().front();
  for (auto s : table.values.shape()) {
    if (s != samples) throw Error(ErrorKind::ShapeMismatch, "table axes differ in length");
  }
  if (static_cast<Eigen::Index>(samples) < modes) {
    throw Error(ErrorKind::ShapeMismatch, "fewer samples per axis than poles");
  }

  Matrix vander(static_cast<Eigen::Index>(samples), modes);
  for (std::size_t n = 0; n < samples; ++n) {
    for (Eigen::Index k = 0; k < modes; ++k) {
      const Complex pole = poles.poles(k);
      vander(static_cast<Eigen::Index>(n), k) =
          table.kind == SystemKind::discrete
              ? std::pow(pole, static_cast<double>(n))
              : std::exp(pole * (table.window.step * static_cast<double>(n)));
    }
  }
  if (table.kind == SystemKind::discrete) {
    // Exact integer powers; std::pow on complex goes through exp/log.
    for (Eigen::Index k = 0; k < modes; ++k) {
      Complex p{1.0, 0.0};
      for (std::size_t n = 0; n < samples; ++n) {
        vander(static_cast<Eigen::Index>(n), k) = p;
        p *= poles.poles(k);
      }
    }
  }

  Eigen::JacobiSVD<Matrix> svd(vander, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cond = sv(modes - 1) > 0.0 ? sv(0) / sv(modes - 1)
                                          : std::numeric_limits<double>::infinity();
  if (!(cond <= options.max_condition)) {
    throw Error(ErrorKind::IllConditioned,
                "Vandermonde condition estimate " + std::to_string(cond) + " exceeds bound");
  }
  const Matrix pinv = svd.matrixV() * sv.cwiseInverse().asDiagonal() * svd.matrixU().adjoint();

  ResidueTensor rt;
  rt.kind = table.kind;
  rt.labels = table.labels;
  rt.spectrum = poles.poles;
  MultiArray c = table.values;
  for (std::size_t a = 0; a < c.rank(); ++a) c = contract_axis(c, a, pinv);
  rt.coefficients = c;

  MultiArray back = c;
  for (std::size_t a = 0; a < back.rank(); ++a) back = contract_axis(back, a, vander);
  ResidueFitDiagnostics diag;
  diag.condition = cond;
  for (std::size_t i = 0; i < back.size(); ++i) {
    diag.max_residual = std::max(diag.max_residual, std::abs(back[i] - table.values[i]));
  }
  const double scale = table.values.max_abs();
  diag.relative_residual = scale > 0.0 ? diag.max_residual / scale : diag.max_residual;
  const double cmax = c.max_abs();
  diag.structural_zero.resize(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    diag.structural_zero[i] = std::abs(c[i]) <= options.structural_zero * cmax;
  }
  rt.fit = std::move(diag);
  return rt;
}

PNumberCertificate p_number(std::span<const ResidueTensor> tensors, Eigen::Index bond_dim,
                            double structural_zero) {
  PNumberCertificate cert;
  cert.bond_dim = bond_dim;
  const auto needed = static_cast<std::size_t>(bond_dim * bond_dim);
  if (tensors.empty()) {
    cert.missing_poles = needed;
    return cert;
  }
  cert.kind = tensors.front().kind;
  cert.poles = tensors.front().spectrum;
  const auto modes = static_cast<std::size_t>(cert.poles.size());
  for (const auto& t : tensors) {
    if (t.modes() != cert.poles.size() || t.kind != cert.kind) {
      throw Error(ErrorKind::InconsistentShapes, "residue tensors do not share one spectrum");
    }
  }

  std::vector<std::optional<Witness>> best(modes);
  auto better = [](const Witness& a, const Witness& b) {
    if (a.points != b.points) return a.points < b.points;
    return a.magnitude > b.magnitude;
  };
  for (const auto& t : tensors) {
    const double scale = t.coefficients.max_abs();
    if (!(scale > 0.0)) continue;
    for (std::size_t flat = 0; flat < t.coefficients.size(); ++flat) {
      const double mag = std::abs(t.coefficients[flat]);
      if (mag <= structural_zero * scale) continue;
      const auto k = t.coefficients.unravel(flat);
      for (std::size_t a = 0; a < k.size(); ++a) {
        Witness w{k[a], t.order(), t.labels, a, k, mag, false};
        auto& slot = best[k[a]];
        if (!slot || better(w, *slot)) slot = std::move(w);
      }
    }
  }
  if (modes > 0 && !best[0]) {
    Witness w;
    w.pole = 0;
    w.points = 2;
    w.by_normalization = true;
    w.magnitude = 1.0;
    best[0] = w;
  }

  std::size_t witnessed = 0;
  std::size_t p = 0;
  for (auto& w : best) {
    if (!w) continue;
    ++witnessed;
    p = std::max(p, w->points - 1);
    cert.witnesses.push_back(std::move(*w));
  }
  if (witnessed >= needed && modes == needed) {
    cert.p = std::max<std::size_t>(p, 1);
  } else {
    cert.missing_poles = needed > witnessed ? needed - witnessed : 0;
  }
  return cert;
}

PoleSet merged_poles(std::span<const CorrelationTable> tables, Eigen::Index bond_dim,
                     const CertifyOptions& options) {
  if (tables.empty()) throw Error(ErrorKind::MalformedInput, "no tables supplied");
  const SystemKind kind = tables.front().kind;
  PoleSet merged;
  merged.kind = kind;
  merged.requested = static_cast<std::size_t>(bond_dim * bond_dim);
  merged.step = kind == SystemKind::discrete ? 1.0 : tables.front().window.step;

  std::vector<Complex> poles;
  std::vector<double> confidence;
  auto absorb = [&](Complex z, double conf) {
    for (std::size_t i = 0; i < poles.size(); ++i) {
      if (std::abs(poles[i] - z) <= options.cluster_tol * std::max(1.0, std::abs(z))) {
        if (conf > confidence[i]) {
          poles[i] = z;
          confidence[i] = conf;
        }
        return;
      }
    }
    poles.push_back(z);
    confidence.push_back(conf);
  };
  for (const auto& t : tables) {
    if (t.kind != kind) throw Error(ErrorKind::MalformedInput, "tables mix discrete and continuous");
    for (std::size_t a = 0; a < t.values.rank(); ++a) {
      const auto ps = extract_poles(t, a, bond_dim, options.pencil);
      merged.samples = std::max(merged.samples, ps.samples);
      for (std::size_t k = 0; k < ps.size(); ++k) {
        absorb(ps.poles(static_cast<Eigen::Index>(k)), ps.confidence[k]);
      }
    }
  }
  // The stationary pole belongs to every normalized state even if no table
  // shows it, and normalization pins its value exactly.
  const Complex stationary = kind == SystemKind::discrete ? Complex{1.0, 0.0} : Complex{0.0, 0.0};
  absorb(stationary, 0.0);
  for (auto& z : poles) {
    if (std::abs(z - stationary) <= options.cluster_tol) z = stationary;
  }
  if (poles.size() > merged.requested) {
    throw Error(ErrorKind::Inconsistent,
                std::to_string(poles.size()) + " distinct poles exceed d^2 = " +
                    std::to_string(merged.requested));
  }
  merged.rank_deficient = poles.size() < merged.requested;

  Vector values(static_cast<Eigen::Index>(poles.size()));
  for (std::size_t i = 0; i < poles.size(); ++i) values(static_cast<Eigen::Index>(i)) = poles[i];
  const auto order = spectral_order(values, ordering_for(kind));
  merged.poles.resize(values.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto src = static_cast<std::size_t>(order[i]);
    merged.poles(static_cast<Eigen::Index>(i)) = poles[src];
    merged.confidence.push_back(confidence[src]);
  }
  merged.leading = 0;
  return merged;
}

PNumberCertificate p_number(std::span<const CorrelationTable> tables, Eigen::Index bond_dim,
                            const CertifyOptions& options) {
  const PoleSet poles = merged_poles(tables, bond_dim, options);
  std::vector<ResidueTensor> tensors;
  tensors.reserve(tables.size());
  for (const auto& t : tables) tensors.push_back(extract_residues(t, poles, options.residues));
  return p_number(tensors, bond_dim, options.structural_zero);
}

}  // namespace wickmps
