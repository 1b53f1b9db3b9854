#include "wickmps/channel.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace wickmps {

namespace {

void check_hermitian(const Matrix& h) {
  const double scale = h.norm();
  if ((h - h.adjoint()).norm() > 1e-12 * scale) {
    throw Error(ErrorKind::NonHermitianH, "H is not hermitian");
  }
}

}  // namespace

Matrix lindblad_generator(const LindbladSpec& spec) {
  check_hermitian(spec.H);
  const Eigen::Index d = spec.H.rows();
  const Matrix id = Matrix::Identity(d, d);
  const Complex i{0.0, 1.0};
  Matrix L = -i * kron(spec.H.conjugate(), id) + i * kron(id, spec.H);
  for (const auto& r : spec.jump_ops) {
    if (r.rows() != d || r.cols() != d) {
      throw Error(ErrorKind::DimensionMismatch, "jump operator size differs from H");
    }
    const Matrix rdr = r.adjoint() * r;
    L -= 0.5 * (kron(rdr.conjugate(), id) + kron(id, rdr) - 2.0 * kron(r.conjugate(), r));
  }
  return L;
}

CmpsState q_from_hamiltonian(const LindbladSpec& spec) {
  if (spec.jump_ops.size() != 1) {
    throw Error(ErrorKind::MultipleJumpOps, "the cMPS correspondence needs exactly one jump operator");
  }
  check_hermitian(spec.H);
  const Matrix& r = spec.jump_ops.front();
  return {Complex{0.0, 1.0} * spec.H - 0.5 * r.adjoint() * r, r};
}

LindbladSpec random_lindblad_spec(std::uint64_t seed, Eigen::Index d, std::size_t jumps) {
  auto rng = make_rng(seed, 0);
  LindbladSpec spec{random_hermitian(rng, d), {}};
  for (std::size_t j = 0; j < jumps; ++j) spec.jump_ops.push_back(random_ginibre(rng, d, d));
  return spec;
}

Vector vectorize(const Matrix& rho) {
  return Eigen::Map<const Vector>(rho.data(), rho.size());
}

Matrix devectorize(const Vector& v) {
  const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
  if (d * d != v.size()) throw Error(ErrorKind::DimensionMismatch, "vector length is not a square");
  return Eigen::Map<const Matrix>(v.data(), d, d);
}

StationaryState stationary_state(const Matrix& L, double degeneracy_tol) {
  const Eigen::ComplexEigenSolver<Matrix> es(L, false);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::NumericalFailure, "eigensolver failed");
  const Vector& ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());

  // Degenerate nonzero pairs are legal here; only the kernel must be simple.
  Eigen::Index zeros = 0;
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < ev.size(); ++k) {
    if (std::abs(ev(k)) <= degeneracy_tol * scale) {
      ++zeros;
    } else {
      gap = std::min(gap, -ev(k).real());
    }
  }
  if (zeros != 1) {
    throw Error(ErrorKind::DegenerateZero,
                "generator has " + std::to_string(zeros) + " stationary directions");
  }

  const Eigen::JacobiSVD<Matrix> svd(L, Eigen::ComputeFullV);
  const Vector null = svd.matrixV().col(L.cols() - 1);
  Matrix rho = devectorize(null);
  rho = 0.5 * (rho + rho.adjoint()).eval();
  const Complex tr = rho.trace();
  if (std::abs(tr) < 1e-300) throw Error(ErrorKind::NonPositive, "stationary vector is traceless");
  rho /= tr;
  rho = 0.5 * (rho + rho.adjoint()).eval();

  const Eigen::SelfAdjointEigenSolver<Matrix> sa(rho, Eigen::EigenvaluesOnly);
  if (sa.eigenvalues().minCoeff() < -1e-10) {
    throw Error(ErrorKind::NonPositive, "stationary state is not positive semidefinite");
  }
  if (ev.size() == 1) gap = std::numeric_limits<double>::infinity();
  if (!(gap > 0.0)) throw Error(ErrorKind::NonPositive, "generator has a non-decaying mode");
  return {rho, gap};
}

double check_trace_preservation(const Matrix& L) {
  const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(L.rows()))));
  const Vector one = vectorize(Matrix::Identity(d, d));
  return (one.adjoint() * L).norm();
}

}  // namespace wickmps
