#include "doctest.h"

#include <set>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace wickmps;

namespace {

MpsState product_state() {
  Matrix a(1, 1);
  a(0, 0) = 1.0 / std::sqrt(2.0);
  return {{a, a}};
}

Matrix scalar(Complex z) {
  Matrix m(1, 1);
  m(0, 0) = z;
  return m;
}

}  // namespace

TEST_CASE("transfer matrix of small states") {
  CHECK(std::abs(transfer_matrix(product_state())(0, 0) - 1.0) < 1e-15);

  const Complex b{0.3, 0.4};
  Matrix a0 = Matrix::Zero(2, 2), a1 = Matrix::Zero(2, 2);
  a0(0, 0) = 1.0;
  a1(1, 1) = b;
  const Matrix e = transfer_matrix(MpsState{{a0, a1}});
  Vector expect(4);
  expect << 1.0, 0.0, 0.0, std::norm(b);
  CHECK((e - Matrix(expect.asDiagonal())).norm() < 1e-15);
}

TEST_CASE("transfer and operator matrices match index loops") {
  const MpsState s = random_generic_mps(42, 2, 2);
  CHECK((transfer_matrix(s) - oracle::transfer_loop(s.tensors)).norm() < 1e-13);
  auto rng = make_rng(9);
  const Matrix o = random_hermitian(rng, 2);
  CHECK((operator_matrix(s, o, 1).matrix - oracle::operator_loop(s.tensors, o)).norm() < 1e-13);
  CHECK((operator_matrix(s, Matrix::Identity(2, 2), 0).matrix - transfer_matrix(s)).norm() <= 1e-15);
  CHECK_THROWS_AS(operator_matrix(s, Matrix::Identity(3, 3), 0), Error);
}

TEST_CASE("operator matrices of the product state") {
  const auto s = product_state();
  CHECK(std::abs(operator_matrix(s, fixture::pauli_x(), 1).matrix(0, 0) - 1.0) < 1e-15);
  CHECK(std::abs(operator_matrix(s, fixture::pauli_z(), 2).matrix(0, 0)) < 1e-15);
}

TEST_CASE("liouvillian examples") {
  const CmpsState scalar_state{scalar(-0.5), scalar(1.0)};
  CHECK(std::abs(liouvillian(scalar_state)(0, 0)) < 1e-15);

  auto rng = make_rng(4);
  const Matrix q = random_ginibre(rng, 2, 2);
  const Matrix t = liouvillian(CmpsState{q, Matrix::Zero(2, 2)});
  CHECK((t - oracle::kron_loop(q.conjugate(), Matrix::Identity(2, 2)) -
         oracle::kron_loop(Matrix::Identity(2, 2), q))
            .norm() < 1e-14);

  const LindbladSpec spec = random_lindblad_spec(13, 2);
  CHECK((liouvillian(q_from_hamiltonian(spec)) - lindblad_generator(spec)).norm() <= 1e-12);
}

TEST_CASE("cMPS operator matrices") {
  const Complex r{0.6, -0.8};
  const CmpsState s{scalar(-0.5), scalar(r)};
  CHECK(std::abs(cmps_operator_matrix(s, OperatorKind::cmps_psi_dagger, 1).matrix(0, 0) - std::conj(r)) < 1e-15);
  CHECK(std::abs(cmps_operator_matrix(s, OperatorKind::cmps_density, 3).matrix(0, 0) - std::norm(r)) < 1e-15);
  const auto dag = cmps_operator_matrix(s, OperatorKind::cmps_psi_dagger, 1).matrix;
  const auto psi = cmps_operator_matrix(s, OperatorKind::cmps_psi, 2).matrix;
  CHECK(std::abs((dag * psi)(0, 0) - std::norm(r)) < 1e-15);

  const CmpsState big = random_generic_cmps(5, 2);
  CHECK((cmps_operator_matrix(big, OperatorKind::cmps_density, 3).matrix -
         oracle::kron_loop(big.R.conjugate(), big.R))
            .norm() < 1e-14);
  CHECK((cmps_operator_matrix(big, OperatorKind::cmps_psi, 2).matrix -
         oracle::kron_loop(Matrix::Identity(2, 2), big.R))
            .norm() < 1e-14);
  try {
    cmps_operator_matrix(big, OperatorKind::discrete_local_op, 0);
    FAIL("expected UnknownKind");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::UnknownKind);
  }
}

TEST_CASE("normalize_mps") {
  const MpsState s = random_generic_mps(42, 2, 2);
  const MpsState again = normalize_mps(s);
  for (std::size_t i = 0; i < s.tensors.size(); ++i) CHECK((again.tensors[i] - s.tensors[i]).norm() < 1e-12);

  MpsState scaled = s;
  for (auto& a : scaled.tensors) a *= 2.0;
  const auto back = eig(transfer_matrix(normalize_mps(scaled)), Ordering::by_modulus_desc).eigenvalues;
  const auto orig = eig(transfer_matrix(s), Ordering::by_modulus_desc).eigenvalues;
  CHECK((back - orig).norm() < 1e-12);

  auto rng = make_rng(77);
  MpsState raw{{random_ginibre(rng, 2, 2), random_ginibre(rng, 2, 2)}};
  const auto ev = eig(transfer_matrix(normalize_mps(raw)), Ordering::by_modulus_desc).eigenvalues;
  CHECK(std::abs(ev(0) - 1.0) < 1e-10);
  for (Eigen::Index k = 0; k < ev.size(); ++k) CHECK(std::abs(ev(k)) <= 1.0 + 1e-10);

  MpsState zero{{Matrix::Zero(2, 2), Matrix::Zero(2, 2)}};
  try {
    normalize_mps(zero);
    FAIL("expected ZeroState");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ZeroState);
  }
}

TEST_CASE("normalize_cmps") {
  const CmpsState s = random_generic_cmps(3, 2);
  const CmpsState same = normalize_cmps(s);
  CHECK((same.Q - s.Q).norm() < 1e-12);

  CmpsState shifted = s;
  shifted.Q += 0.7 * Matrix::Identity(2, 2);
  const auto a = eig(liouvillian(normalize_cmps(shifted)), Ordering::by_real_part_desc).eigenvalues;
  const auto b = eig(liouvillian(s), Ordering::by_real_part_desc).eigenvalues;
  CHECK((a - b).norm() < 1e-10);

  const CmpsState scalar_state = normalize_cmps(CmpsState{scalar(-0.3), scalar(1.0)});
  CHECK(std::abs(scalar_state.Q(0, 0) + 0.5) < 1e-15);
  CHECK(std::abs(liouvillian(scalar_state)(0, 0)) < 1e-15);
}

TEST_CASE("random generic states") {
  const MpsState trivial = random_generic_mps(1, 1, 2);
  CHECK(genericity_check(eig(transfer_matrix(trivial), Ordering::by_modulus_desc)).pass);

  const MpsState s = random_generic_mps(42, 2, 2);
  const auto spec = eig(transfer_matrix(s), Ordering::by_modulus_desc);
  CHECK(genericity_check(spec).pass);
  CHECK(std::abs(spec.eigenvalues(0) - 1.0) < 1e-10);
  auto rng = make_rng(42, 777);
  const Matrix o = random_hermitian(rng, 2);
  const Matrix gauged = spec.left * operator_matrix(s, o, 3).matrix * spec.right;
  CHECK(gauged.cwiseAbs().minCoeff() > 1e-12);

  const auto other = eig(transfer_matrix(random_generic_mps(43, 2, 2)), Ordering::by_modulus_desc);
  CHECK((other.eigenvalues - spec.eigenvalues).norm() > 1e-3);
  const MpsState repeat = random_generic_mps(42, 2, 2);
  for (std::size_t i = 0; i < s.tensors.size(); ++i) CHECK((repeat.tensors[i] - s.tensors[i]).norm() == 0.0);

  const CmpsState c = random_generic_cmps(7, 2);
  const auto ct = eig(liouvillian(c), Ordering::by_real_part_desc);
  CHECK(genericity_check(ct).pass);
  CHECK(std::abs(ct.eigenvalues(0)) < 1e-10);
  for (Eigen::Index k = 0; k < ct.size(); ++k) CHECK(ct.eigenvalues(k).real() <= 1e-10);
}

TEST_CASE("gauge transforms") {
  const TransferSystem sys = fixture::mps_system(42, 2);
  const TransferSystem same = gauge_transform(sys, Matrix::Identity(4, 4));
  CHECK((same.generator - sys.generator).norm() < 1e-15);

  const auto spec = eig(sys.generator, Ordering::by_modulus_desc);
  const TransferSystem diag = gauge_transform(sys, spec.left);
  Matrix off = diag.generator;
  off.diagonal().setZero();
  CHECK(off.norm() < 1e-10);

  auto rng = make_rng(31);
  const Matrix x = Matrix::Identity(4, 4) + 0.3 * random_ginibre(rng, 4, 4);
  const TransferSystem moved = gauge_transform(sys, x);
  const int labels[] = {1, 3, 2, 1};
  const double gaps[] = {0, 2, 1};
  const Complex a = npoint(sys, labels, gaps);
  const Complex b = npoint(moved, labels, gaps);
  CHECK(std::abs(a - b) <= 1e-10 * std::max(1.0, std::abs(a)));
}
