#include "macrolab/algebra.hpp"

#include <doctest.h>

#include <cmath>

using namespace macrolab;

TEST_CASE("Pauli matrices: anticommutation and commutator norms") {
  const auto x = pauli_x(), y = pauli_y(), z = pauli_z();
  const MatrixXc id = MatrixXc::Identity(2, 2);
  CHECK((x.matrix() * x.matrix() - id).norm() < 1e-15);
  CHECK((x.matrix() * y.matrix() - Complex(0, 1) * z.matrix()).norm() < 1e-15);
  CHECK(commutator_norm(x, y) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(commutator_norm(z, z) == doctest::Approx(0.0));
}

TEST_CASE("HermitianOperator rejects non-Hermitian input") {
  MatrixXc a(2, 2);
  a << 0, 1, 0, 0;
  CHECK_THROWS_AS(HermitianOperator{a}, InvalidInput);
  MatrixXc b(2, 3);
  b.setZero();
  CHECK_THROWS_AS(HermitianOperator{b}, InvalidInput);
}

TEST_CASE("hermitian_eig reconstructs and orders the spectrum") {
  MatrixXc a(3, 3);
  a << 2, Complex(0, 1), 0, Complex(0, -1), 2, 1, 0, 1, -1;
  const HermitianOperator h(a);
  const auto dec = hermitian_eig(h);
  CHECK((dec.reconstruct() - a).norm() < 1e-12);
  for (Index k = 1; k < dec.dim(); ++k) CHECK(dec.eigenvalues(k - 1) <= dec.eigenvalues(k));
  CHECK((dec.eigenvectors.adjoint() * dec.eigenvectors - MatrixXc::Identity(3, 3)).norm() <
        1e-12);
  CHECK(operator_norm(h) == doctest::Approx(dec.eigenvalues.cwiseAbs().maxCoeff()));
}

TEST_CASE("diagonal operators take the exact path") {
  VectorXd v(3);
  v << 3.0, -1.0, 2.0;
  const auto dec = hermitian_eig(HermitianOperator::diagonal(v));
  CHECK(dec.eigenvalues(0) == -1.0);
  CHECK(dec.eigenvalues(2) == 3.0);
  CHECK((dec.reconstruct() - v.cast<Complex>().asDiagonal().toDenseMatrix()).norm() == 0.0);
}

TEST_CASE("embedding matches explicit Kronecker products") {
  const auto z = pauli_z();
  const MatrixXc id = MatrixXc::Identity(2, 2);
  // Window [-1, 1], site 0 is the middle factor.
  const MatrixXc expected = kron(kron(id, z.matrix()), id);
  CHECK((embed_at_site(z, 0, 1).matrix() - expected).norm() == 0.0);
  const MatrixXc left = kron(kron(z.matrix(), id), id);
  CHECK((embed_at_site(z, -1, 1).matrix() - left).norm() == 0.0);
  CHECK_THROWS_AS(embed_at_site(z, 2, 1), InvalidInput);
}

TEST_CASE("dimension guard") {
  CHECK(checked_dimension(2, 11) == 2048);
  CHECK_THROWS_AS(checked_dimension(2, 15, 16384), DimensionOverflow);
  CHECK_THROWS_AS(checked_dimension(2, 80, 1u << 30), DimensionOverflow);
  CHECK_THROWS_AS(checked_dimension(0, 3), InvalidInput);
}

TEST_CASE("apply_function agrees with the matrix exponential of a Pauli") {
  // exp(t σ_x) = cosh t I + sinh t σ_x.
  const double t = 0.7;
  const auto f = apply_function([t](double v) { return std::exp(t * v); },
                                hermitian_eig(pauli_x()));
  MatrixXc expected = std::cosh(t) * MatrixXc::Identity(2, 2) + std::sinh(t) * pauli_x().matrix();
  CHECK((f.matrix() - expected).norm() < 1e-14);
}

TEST_CASE("anti-Hermitian norm equals the largest |eigenvalue|") {
  MatrixXc k(2, 2);
  k << Complex(0, 1), 2, -2, Complex(0, -3);
  const MatrixXc h = Complex(0, -1) * k;  // Hermitian
  CHECK(anti_hermitian_norm(k) == doctest::Approx(operator_norm(HermitianOperator(h))));
}
