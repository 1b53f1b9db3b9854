#include "doctest.h"

#include <algorithm>

#include "oracles.hpp"
#include "wickmps/spectral.hpp"
#include "wickmps/states.hpp"

using namespace wickmps;

namespace {

Matrix diag(std::initializer_list<Complex> v) {
  Vector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (auto z : v) x(i++) = z;
  return x.asDiagonal();
}

}  // namespace

TEST_CASE("kron of identities and diagonals") {
  CHECK(kron(Matrix::Identity(2, 2), Matrix::Identity(2, 2)).isApprox(Matrix::Identity(4, 4)));
  CHECK((kron(diag({1.0, 2.0}), Matrix::Identity(2, 2)) - diag({1.0, 1.0, 2.0, 2.0})).norm() == 0.0);
}

TEST_CASE("kron matches the index-loop definition") {
  auto rng = make_rng(3);
  const Matrix a = random_ginibre(rng, 2, 2);
  const Matrix b = random_ginibre(rng, 2, 2);
  CHECK((kron(a, b) - oracle::kron_loop(a, b)).norm() == 0.0);
  const Matrix c = random_ginibre(rng, 3, 2);
  const Matrix e = random_ginibre(rng, 2, 3);
  CHECK((kron(c, e) - oracle::kron_loop(c, e)).norm() == 0.0);
}

TEST_CASE("kron mixed-product property") {
  auto rng = make_rng(5);
  for (Eigen::Index n : {2, 3}) {
    const Matrix a = random_ginibre(rng, n, n), b = random_ginibre(rng, n, n);
    const Matrix c = random_ginibre(rng, n, n), d = random_ginibre(rng, n, n);
    const Matrix lhs = kron(a, b) * kron(c, d);
    CHECK((lhs - kron(a * c, b * d)).norm() <= 1e-10 * lhs.norm());
  }
}

TEST_CASE("eig of a diagonal matrix by modulus") {
  const auto s = eig(diag({0.25, 1.0, 0.1, 0.5}), Ordering::by_modulus_desc);
  const Complex expect[] = {1.0, 0.5, 0.25, 0.1};
  for (int k = 0; k < 4; ++k) CHECK(std::abs(s.eigenvalues(k) - expect[k]) < 1e-14);
  // Eigenvectors are standard basis vectors up to phase.
  for (int k = 0; k < 4; ++k) CHECK(s.right.col(k).cwiseAbs().maxCoeff() == doctest::Approx(1.0));
  CHECK((s.left * s.right - Matrix::Identity(4, 4)).norm() < 1e-12);
}

TEST_CASE("eig by real part breaks conjugate ties by imaginary part") {
  const auto s = eig(diag({0.0, {-1, 2}, {-1, -2}, -3.0}), Ordering::by_real_part_desc);
  const Complex expect[] = {0.0, {-1, -2}, {-1, 2}, -3.0};
  for (int k = 0; k < 4; ++k) CHECK(std::abs(s.eigenvalues(k) - expect[k]) < 1e-14);
}

TEST_CASE("modulus ties are broken by ascending argument") {
  const auto s = eig(diag({{0, 0.5}, -0.5, 0.5, {0, -0.5}, 1.0}), Ordering::by_modulus_desc);
  const Complex expect[] = {1.0, {0, -0.5}, 0.5, {0, 0.5}, -0.5};
  for (int k = 0; k < 5; ++k) CHECK(std::abs(s.eigenvalues(k) - expect[k]) < 1e-14);
}

TEST_CASE("eig reassembly and biorthogonality on a random matrix") {
  auto rng = make_rng(11);
  const Matrix m = random_ginibre(rng, 4, 4);
  const auto s = eig(m, Ordering::by_modulus_desc);
  CHECK((s.reassemble() - m).norm() <= 1e-10 * m.norm());
  CHECK((s.left * s.right - Matrix::Identity(4, 4)).norm() <= 1e-10);
  for (int k = 0; k < 4; ++k) CHECK(s.right.col(k).norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.condition_estimate >= 1.0);
  CHECK(s.min_gap > 0.0);
  Matrix sum = Matrix::Zero(4, 4);
  for (int k = 0; k < 4; ++k) sum += s.eigenvalues(k) * s.projector(k);
  CHECK((sum - m).norm() <= 1e-10 * m.norm());
}

TEST_CASE("eig rejects degenerate and zero spectra") {
  CHECK_THROWS_AS(eig(diag({1.0, 0.5, 0.5, 0.1}), Ordering::by_modulus_desc), Error);
  try {
    eig(diag({1.0, 0.5, 0.5, 0.1}), Ordering::by_modulus_desc);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateSpectrum);
  }
  Matrix jordan(2, 2);
  jordan << 1, 1, 0, 1;
  CHECK_THROWS_AS(eig(jordan, Ordering::by_modulus_desc), Error);
  const auto s = eig(diag({1.0, 0.5, 0.5, 0.1}), Ordering::by_modulus_desc, {.allow_degenerate = true});
  CHECK(s.min_gap < 1e-12);
}

TEST_CASE("genericity check") {
  auto check = [](std::initializer_list<Complex> v) {
    return genericity_check(eig(diag(v), Ordering::by_modulus_desc, {.allow_degenerate = true}));
  };
  CHECK(check({1.0, 0.5, 0.25, 0.1}).pass);
  const auto deg = check({1.0, 0.5, 0.5, 0.1});
  CHECK_FALSE(deg.pass);
  CHECK_FALSE(deg.diagonal_nondegenerate);
  const auto lead = check({1.0, -1.0, 0.3, 0.1});
  CHECK_FALSE(lead.pass);
  CHECK_FALSE(lead.leading_unique);
  CHECK(lead.diagonal_nondegenerate);
}

TEST_CASE("similarity") {
  auto rng = make_rng(17);
  const Matrix m = random_ginibre(rng, 3, 3);
  CHECK((similarity(m, Matrix::Identity(3, 3)) - m).norm() < 1e-14);
  Matrix perm(2, 2);
  perm << 0, 1, 1, 0;
  CHECK((similarity(diag({1.0, 2.0}), perm) - diag({2.0, 1.0})).norm() < 1e-14);
  const Matrix x = random_ginibre(rng, 3, 3);
  CHECK(std::abs(similarity(m, x).trace() - m.trace()) <= 1e-10 * m.norm());
  CHECK((similarity(m, x) - x * m * x.inverse()).norm() <= 1e-10 * m.norm() * condition_number(x));
  Matrix singular = Matrix::Zero(3, 3);
  singular(0, 0) = 1.0;
  try {
    similarity(m, singular);
    FAIL("expected SingularGauge");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SingularGauge);
  }
}

TEST_CASE("spectra are similarity invariant") {
  auto rng = make_rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix m = random_ginibre(rng, 4, 4);
    const Matrix x = Matrix::Identity(4, 4) + 0.3 * random_ginibre(rng, 4, 4);
    const auto a = eig(m, Ordering::by_modulus_desc).eigenvalues;
    const auto b = eig(similarity(m, x), Ordering::by_modulus_desc).eigenvalues;
    for (Eigen::Index k = 0; k < 4; ++k) {
      double best = 1e300;
      for (Eigen::Index j = 0; j < 4; ++j) best = std::min(best, std::abs(a(k) - b(j)));
      CHECK(best < 1e-8);
    }
  }
}
