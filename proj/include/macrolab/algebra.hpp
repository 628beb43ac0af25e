#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>

namespace macrolab {

using Complex = std::complex<double>;
using MatrixXc = Eigen::MatrixXcd;
using VectorXc = Eigen::VectorXcd;
using MatrixXd = Eigen::MatrixXd;
using VectorXd = Eigen::VectorXd;
using Index = Eigen::Index;

/// Largest dense Hilbert-space dimension any builder accepts by default.
inline constexpr std::size_t kDefaultMaxDim = 16384;

/// Absolute max-norm tolerance for accepting a matrix as Hermitian.
inline constexpr double kHermitianTol = 1e-12;

/// Rejected input: malformed data, violated preconditions.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Requested Hilbert space exceeds the dense-storage cap.
class DimensionOverflow : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// A solver ran out of iterations without reaching a verdict.
class Inconclusive : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense complex Hermitian matrix.
///
/// Construction validates that the input is Hermitian within `tol` in max-norm
/// and that every entry is finite, then stores the exact symmetrization
/// (H + H*)/2. Inputs further from Hermitian are rejected, never repaired.
class HermitianOperator {
 public:
  HermitianOperator() = default;
  explicit HermitianOperator(MatrixXc entries, double tol = kHermitianTol);

  static HermitianOperator identity(Index dim);
  static HermitianOperator zero(Index dim);
  static HermitianOperator diagonal(const VectorXd& values);

  Index dim() const { return m_.rows(); }
  const MatrixXc& matrix() const { return m_; }
  double trace() const { return m_.trace().real(); }

  HermitianOperator operator+(const HermitianOperator& other) const;
  HermitianOperator operator-(const HermitianOperator& other) const;
  HermitianOperator operator*(double scale) const;
  HermitianOperator& operator+=(const HermitianOperator& other);

 private:
  struct Trusted {};
  HermitianOperator(MatrixXc entries, Trusted) : m_(std::move(entries)) {}

  MatrixXc m_;
};

/// Eigenvalues ascending, eigenvectors as the columns of a unitary matrix.
struct SpectralDecomposition {
  VectorXd eigenvalues;
  MatrixXc eigenvectors;

  Index dim() const { return eigenvalues.size(); }
  MatrixXc reconstruct() const;
};

/// Full eigendecomposition (Householder tridiagonalization + implicit QR).
SpectralDecomposition hermitian_eig(const HermitianOperator& h);

/// Eigenvalues only, ascending. Cheaper than the full decomposition.
VectorXd hermitian_eigenvalues(const HermitianOperator& h);

/// max |eigenvalue|.
double operator_norm(const HermitianOperator& h);

/// Norm of an anti-Hermitian matrix such as a commutator, via i·X.
double anti_hermitian_norm(const MatrixXc& x);

/// ‖[a, b]‖ for Hermitian a, b of equal dimension.
double commutator_norm(const HermitianOperator& a, const HermitianOperator& b);

/// Number of sites in the window [-n, n].
inline int window_sites(int n) { return 2 * n + 1; }

/// d^sites, or throws DimensionOverflow (with the dense memory needed) when it
/// exceeds `max_dim`.
Index checked_dimension(int d, int sites, std::size_t max_dim = kDefaultMaxDim);

/// γ_site(A) on the window [-n, n]: I ⊗ … ⊗ A ⊗ … ⊗ I with A at position
/// site + n, sites ordered -n..n with site -n the most significant factor.
HermitianOperator embed_at_site(const HermitianOperator& a, int site, int n,
                                std::size_t max_dim = kDefaultMaxDim);

/// Places an operator acting on `len` consecutive sites starting at `first`
/// (A has dimension d^len) into the window [-n, n].
HermitianOperator embed_interval(const HermitianOperator& a, int d, int first,
                                 int n, std::size_t max_dim = kDefaultMaxDim);

/// f(H) = U diag(f(λ)) U*. Throws InvalidInput if f returns a non-finite value.
HermitianOperator apply_function(const std::function<double(double)>& f,
                                 const SpectralDecomposition& dec);

namespace detail {
/// target += scale · (operator `a` on `len` sites starting at `first`),
/// in the window [-n, n]. No validation; callers check supports.
void add_embedded(MatrixXc& target, const MatrixXc& a, int d, int len,
                  int first, int n, Complex scale);
}  // namespace detail

/// Kronecker product of two dense matrices.
MatrixXc kron(const MatrixXc& a, const MatrixXc& b);

/// Pauli matrices, handy for fixtures and presets.
HermitianOperator pauli_x();
HermitianOperator pauli_y();
HermitianOperator pauli_z();

}  // namespace macrolab
