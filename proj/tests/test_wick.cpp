#include "doctest.h"

#include <algorithm>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "wickmps/wick.hpp"

using namespace wickmps;

namespace {

struct Exact {
  TransferSystem sys;
  PoleSet poles;
  ResidueLibrary lib;
  PNumberCertificate cert;
};

PoleSet poles_of(const ResidueTensor& rt) {
  PoleSet ps;
  ps.kind = rt.kind;
  ps.poles = rt.spectrum;
  ps.leading = 0;
  return ps;
}

/// Exact residue tensors of orders 2..max_order for one repeated label.
Exact exact_data(TransferSystem sys, int label, std::size_t max_order) {
  Exact e{std::move(sys), {}, {}, {}};
  const auto frame = eigen_frame(e.sys);
  std::vector<ResidueTensor> low;
  for (std::size_t n = 2; n <= max_order; ++n) {
    const std::vector<int> l(n, label);
    low.push_back(residue_tensor(frame, e.sys.kind, l));
  }
  e.poles = poles_of(low.front());
  e.lib = make_library(low);
  const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(double(e.poles.size()))));
  e.cert = p_number(std::span(low.data(), 2), d);
  return e;
}

double rel(Complex a, Complex b) { return std::abs(a - b) / std::max(1e-300, std::abs(b)); }

}  // namespace

TEST_CASE("d = 1 reconstruction is the scalar itself") {
  const MpsState s = random_generic_mps(3, 1, 2);
  const auto sys = make_system(s, {operator_matrix(s, fixture::pauli_x(), 1)});
  const auto e = exact_data(sys, 1, 3);
  const auto rep = reconstruct_representative(e.poles, e.lib.at({1, 1}), e.lib.at({1, 1, 1}));
  CHECK(std::abs(rep.operators.at(1)(0, 0) - sys.op(1)(0, 0)) < 1e-14);
  REQUIRE(rep.certificate.p);
  CHECK(*rep.certificate.p == 1);
}

TEST_CASE("known-state round trip") {
  const auto sys = fixture::mps_system(42, 2);
  const auto e = exact_data(sys, 1, 4);
  const auto rep = reconstruct_representative(e.poles, e.lib.at({1, 1}), e.lib.at({1, 1, 1}));
  const Matrix& m = rep.operators.at(1);
  for (Eigen::Index k = 1; k < 4; ++k) CHECK(m(0, k) == Complex(1.0, 0.0));

  const auto w = CorrelationWindow::discrete(12);
  for (std::vector<int> l : {std::vector<int>{1, 1}, std::vector<int>{1, 1, 1}}) {
    const auto ref = correlation_table(sys, l, w);
    CHECK(fixture::rel_dev(predict_table(rep, l, w).values, ref.values) < 1e-9);
  }
  const int l4[] = {1, 1, 1, 1};
  const auto c4 = residue_tensor(rep.system(), l4);
  CHECK(fixture::rel_dev(c4.coefficients, e.lib.at({1, 1, 1, 1}).coefficients) < 1e-8);

  // Idempotence: data computed from the representative give it back.
  const auto again = exact_data(rep.system(), 1, 3);
  const auto rep2 = reconstruct_representative(again.poles, again.lib.at({1, 1}), again.lib.at({1, 1, 1}));
  CHECK((rep2.operators.at(1) - m).norm() <= 1e-12 * m.norm());
  CHECK((rep2.spectrum - rep.spectrum).norm() <= 1e-12);
}

TEST_CASE("reconstruction errors") {
  const auto sys = fixture::mps_system(42, 2);
  auto e = exact_data(sys, 1, 3);
  auto c2 = e.lib.at({1, 1});
  const std::size_t k[] = {2};
  c2.coefficients(k) = 0.0;
  try {
    reconstruct_representative(e.poles, c2, e.lib.at({1, 1, 1}));
    FAIL("expected ZeroCoefficient");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::ZeroCoefficient);
  }
  PoleSet short_poles = e.poles;
  short_poles.poles.conservativeResize(3);
  try {
    reconstruct_representative(short_poles, e.lib.at({1, 1}), e.lib.at({1, 1, 1}));
    FAIL("expected InconsistentShapes");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::InconsistentShapes);
  }
}

TEST_CASE("general prediction, closed form and projector oracle agree") {
  for (std::uint64_t seed : {42u, 43u}) {
    const auto sys = fixture::mps_system(seed, 2);
    const auto e = exact_data(sys, 3, 5);
    const auto& c2 = e.lib.at({3, 3});
    const auto& c3 = e.lib.at({3, 3, 3});
    ResidueLibrary low;
    low.emplace(std::vector<int>{3, 3}, c2);
    low.emplace(std::vector<int>{3, 3, 3}, c3);
    const auto proj = oracle::matched_projectors(sys.generator, c2.spectrum);
    const auto ops = fixture::ops_for(sys, {3, 3, 3, 3, 3});
    const std::vector<int> labels(5, 3);
    const auto& c5 = e.lib.at(labels);
    for (std::size_t flat = 0; flat < c5.coefficients.size(); ++flat) {
      const auto k = c5.coefficients.unravel(flat);
      std::vector<std::size_t> consulted;
      const Complex general = predict_coefficient(low, e.cert, labels, k, &consulted);
      const Complex closed = predict_coefficient_closed_form(c2, c3, k);
      const Complex brute = oracle::projector_residue(proj, ops, k);
      CHECK(rel(general, brute) < 1e-8);
      CHECK(rel(closed, brute) < 1e-8);
      CHECK(*std::max_element(consulted.begin(), consulted.end()) <= 3);
    }
  }
}

TEST_CASE("base cases of the predictor") {
  const auto sys = fixture::mps_system(42, 2);
  const auto e = exact_data(sys, 1, 3);
  const auto& c3 = e.lib.at({1, 1, 1});
  const int labels[] = {1, 1, 1};
  for (std::size_t flat = 0; flat < c3.coefficients.size(); ++flat) {
    const auto k = c3.coefficients.unravel(flat);
    CHECK(std::abs(predict_coefficient(e.lib, e.cert, labels, k) - c3.coefficients[flat]) <=
          1e-14 * std::abs(c3.coefficients[flat]));
  }

  const MpsState s = random_generic_mps(4, 1, 2);
  const auto sys1 = make_system(s, {operator_matrix(s, fixture::pauli_x(), 1)});
  const auto e1 = exact_data(sys1, 1, 3);
  const std::size_t k[] = {0, 0, 0};
  const int l4[] = {1, 1, 1, 1};
  const Complex m = sys1.op(1)(0, 0);
  CHECK(std::abs(predict_coefficient(e1.lib, e1.cert, l4, k) - m * m * m * m) < 1e-14);
}

TEST_CASE("p = 2 prediction of six-point residues from orders up to five") {
  const auto sys = fixture::mps_system(42, 2);
  const auto frame = eigen_frame(sys);
  Matrix m = frame.operators.at(1);
  m(2, 0) = 0.0;
  TransferSystem diag;
  diag.generator = frame.spectrum.eigenvalues.asDiagonal();
  diag.operators = {{1, m}};
  auto rng = make_rng(99);
  const auto moved = gauge_transform(diag, Matrix::Identity(4, 4) + 0.3 * random_ginibre(rng, 4, 4));

  std::vector<ResidueTensor> low;
  for (std::size_t n = 2; n <= 5; ++n) low.push_back(residue_tensor(moved, std::vector<int>(n, 1)));
  // Zero out rounding dust so structural zeros are exact.
  for (auto& t : low) {
    const double scale = t.coefficients.max_abs();
    for (auto& z : t.coefficients.data())
      if (std::abs(z) < 1e-12 * scale) z = 0.0;
  }
  const auto cert = p_number(std::span(low.data(), 2), 2);
  REQUIRE(cert.p);
  CHECK(*cert.p == 2);
  const auto lib = make_library(low);

  const std::vector<int> six(6, 1);
  const auto exact6 = residue_tensor(moved, six);
  const auto proj = oracle::matched_projectors(moved.generator, exact6.spectrum);
  const auto ops = fixture::ops_for(moved, six);
  double worst = 0.0;
  const double scale = exact6.coefficients.max_abs();
  for (std::size_t flat = 0; flat < exact6.coefficients.size(); ++flat) {
    const auto k = exact6.coefficients.unravel(flat);
    std::vector<std::size_t> consulted;
    const Complex got = predict_coefficient(lib, cert, six, k, &consulted);
    worst = std::max(worst, std::abs(got - oracle::projector_residue(proj, ops, k)) / scale);
    CHECK(*std::max_element(consulted.begin(), consulted.end()) <= 5);
  }
  CHECK(worst < 1e-8);

  // Index 2 has no two-point residue; it goes through its three-point witness.
  const std::size_t k[] = {2, 2, 2, 2, 2};
  CHECK(std::abs(predict_coefficient(lib, cert, six, k) - exact6.at(k)) < 1e-8 * scale);

  // With orders only up to three the p = 2 certificate cannot be used.
  ResidueLibrary partial;
  partial.emplace(std::vector<int>{1, 1}, low[0]);
  partial.emplace(std::vector<int>{1, 1, 1}, low[1]);
  try {
    predict_coefficient(partial, cert, six, k);
    FAIL("expected MissingWitness");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::MissingWitness);
  }
}

TEST_CASE("predict_correlator") {
  const auto sys = fixture::mps_system(42, 2);
  const auto e = exact_data(sys, 1, 3);
  const auto rep = reconstruct_representative(e.poles, e.lib.at({1, 1}), e.lib.at({1, 1, 1}));

  const int l2[] = {1, 1};
  for (double g : {0.0, 3.0}) {
    const double gg[] = {g};
    CHECK(std::abs(predict_correlator(rep, l2, gg) - npoint(sys, l2, gg)) < 1e-12);
  }

  const int l4[] = {1, 1, 1, 1};
  const double gaps[] = {1, 0, 3};
  const Complex ref = oracle::npoint_discrete(sys.generator, fixture::ops_for(sys, {1, 1, 1, 1}), {1, 0, 3});
  CHECK(rel(predict_correlator(rep, l4, gaps), ref) < 1e-8);
  CHECK(rel(predict_correlator(e.lib, e.cert, l4, gaps), ref) < 1e-8);

  Matrix a(1, 1);
  a(0, 0) = 1.0 / std::sqrt(2.0);
  const MpsState prod{{a, a}};
  const auto psys = make_system(prod, {operator_matrix(prod, fixture::pauli_x(), 1)});
  const auto pe = exact_data(psys, 1, 3);
  const auto prep = reconstruct_representative(pe.poles, pe.lib.at({1, 1}), pe.lib.at({1, 1, 1}));
  const int l5[] = {1, 1, 1, 1, 1};
  const double g5[] = {0, 2, 1, 5};
  CHECK(std::abs(predict_correlator(prep, l5, g5) - 1.0) < 1e-14);
}

TEST_CASE("multi-label reconstruction") {
  const auto sys = fixture::mps_system(42, 2);
  const auto frame = eigen_frame(sys);
  std::vector<ResidueTensor> data;
  for (std::vector<int> l : {std::vector<int>{3, 3}, std::vector<int>{3, 3, 3}, std::vector<int>{3, 1, 3},
                             std::vector<int>{3, 2, 3}})
    data.push_back(residue_tensor(frame, sys.kind, l));
  const auto lib = make_library(data);
  const int labels[] = {1, 2};
  const auto rep = reconstruct_representative(poles_of(data.front()), lib, 3, labels);
  const int mixed[] = {2, 1, 3, 1, 2};
  const double gaps[] = {0, 2, 1, 3};
  const Complex ref = npoint(sys, mixed, gaps);
  CHECK(rel(predict_correlator(rep, mixed, gaps), ref) < 1e-8);
}

TEST_CASE("residual diagonal gauge leaves two- and three-point residues unchanged") {
  const auto sys = fixture::mps_system(42, 2);
  const auto frame = eigen_frame(sys);
  Vector a(4);
  a << 1.0, Complex(2.0, 1.0), Complex(0.3, -0.4), -1.7;
  EigenFrame regauged = frame;
  for (auto& [label, m] : regauged.operators) m = a.asDiagonal() * m * a.cwiseInverse().asDiagonal();
  for (std::vector<int> l : {std::vector<int>{1, 1}, std::vector<int>{1, 3, 2}}) {
    const auto x = residue_tensor(frame, sys.kind, l);
    const auto y = residue_tensor(regauged, sys.kind, l);
    CHECK(fixture::rel_dev(y.coefficients, x.coefficients) < 1e-12);
  }
}

TEST_CASE("verification") {
  const auto sys = fixture::mps_system(42, 2);
  const auto e = exact_data(sys, 1, 3);
  const auto rep = reconstruct_representative(e.poles, e.lib.at({1, 1}), e.lib.at({1, 1, 1}));
  const auto w = CorrelationWindow::discrete(16);
  const CorrelationTable own[] = {correlation_table(sys, std::vector<int>{1, 1}, w),
                                  correlation_table(sys, std::vector<int>{1, 1, 1}, w)};
  const auto closure = verify(rep, own, 1e-9);
  CHECK(closure.pass);
  for (const auto& t : closure.tables) CHECK(t.max_rel <= 1e-9);

  const CorrelationTable four[] = {correlation_table(sys, std::vector<int>{1, 1, 1, 1}, CorrelationWindow::discrete(6))};
  CHECK(verify(rep, four, 1e-7).pass);

  const auto other = fixture::mps_system(1234, 2);
  const CorrelationTable foreign[] = {correlation_table(other, std::vector<int>{1, 1, 1, 1}, CorrelationWindow::discrete(6))};
  const auto bad = verify(rep, foreign, 1e-7);
  CHECK_FALSE(bad.pass);
  CHECK(bad.tables.front().max_rel > 1e-3);
}
