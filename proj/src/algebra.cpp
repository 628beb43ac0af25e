#include "macrolab/algebra.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace macrolab {

namespace {

bool all_finite(const MatrixXc& m) {
  for (Index c = 0; c < m.cols(); ++c)
    for (Index r = 0; r < m.rows(); ++r)
      if (!std::isfinite(m(r, c).real()) || !std::isfinite(m(r, c).imag()))
        return false;
  return true;
}

bool is_diagonal(const MatrixXc& m) {
  for (Index c = 0; c < m.cols(); ++c)
    for (Index r = 0; r < m.rows(); ++r)
      if (r != c && m(r, c) != Complex(0.0, 0.0)) return false;
  return true;
}

// Sorted diagonal with the matching permutation of unit vectors.
SpectralDecomposition diagonal_decomposition(const MatrixXc& m) {
  const Index n = m.rows();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return m(a, a).real() < m(b, b).real();
  });
  SpectralDecomposition dec;
  dec.eigenvalues.resize(n);
  dec.eigenvectors = MatrixXc::Zero(n, n);
  for (Index k = 0; k < n; ++k) {
    dec.eigenvalues(k) = m(order[k], order[k]).real();
    dec.eigenvectors(order[k], k) = 1.0;
  }
  return dec;
}

}  // namespace

HermitianOperator::HermitianOperator(MatrixXc entries, double tol) {
  if (entries.rows() != entries.cols())
    throw InvalidInput("hermitian operator: matrix is not square");
  if (!all_finite(entries))
    throw InvalidInput("hermitian operator: non-finite entry");
  const double asym = entries.rows() == 0
                          ? 0.0
                          : (entries - entries.adjoint()).cwiseAbs().maxCoeff();
  if (asym > tol) {
    std::ostringstream msg;
    msg << "hermitian operator: symmetry violation " << asym
        << " exceeds tolerance " << tol;
    throw InvalidInput(msg.str());
  }
  m_ = 0.5 * (entries + entries.adjoint());
}

HermitianOperator HermitianOperator::identity(Index dim) {
  return HermitianOperator(MatrixXc::Identity(dim, dim), Trusted{});
}

HermitianOperator HermitianOperator::zero(Index dim) {
  return HermitianOperator(MatrixXc::Zero(dim, dim), Trusted{});
}

HermitianOperator HermitianOperator::diagonal(const VectorXd& values) {
  if (!values.allFinite())
    throw InvalidInput("hermitian operator: non-finite diagonal entry");
  return HermitianOperator(values.cast<Complex>().asDiagonal().toDenseMatrix(),
                           Trusted{});
}

HermitianOperator HermitianOperator::operator+(
    const HermitianOperator& other) const {
  if (dim() != other.dim())
    throw InvalidInput("hermitian operator: dimension mismatch in sum");
  return HermitianOperator(m_ + other.m_, Trusted{});
}

HermitianOperator HermitianOperator::operator-(
    const HermitianOperator& other) const {
  if (dim() != other.dim())
    throw InvalidInput("hermitian operator: dimension mismatch in difference");
  return HermitianOperator(m_ - other.m_, Trusted{});
}

HermitianOperator HermitianOperator::operator*(double scale) const {
  return HermitianOperator(m_ * scale, Trusted{});
}

HermitianOperator& HermitianOperator::operator+=(const HermitianOperator& other) {
  if (dim() != other.dim())
    throw InvalidInput("hermitian operator: dimension mismatch in sum");
  m_ += other.m_;
  return *this;
}

MatrixXc SpectralDecomposition::reconstruct() const {
  return eigenvectors * eigenvalues.cast<Complex>().asDiagonal() *
         eigenvectors.adjoint();
}

SpectralDecomposition hermitian_eig(const HermitianOperator& h) {
  if (is_diagonal(h.matrix())) return diagonal_decomposition(h.matrix());
  Eigen::SelfAdjointEigenSolver<MatrixXc> solver(h.matrix());
  if (solver.info() != Eigen::Success)
    throw Inconclusive("hermitian_eig: QR iteration did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

VectorXd hermitian_eigenvalues(const HermitianOperator& h) {
  if (is_diagonal(h.matrix())) {
    VectorXd d = h.matrix().diagonal().real();
    std::sort(d.data(), d.data() + d.size());
    return d;
  }
  Eigen::SelfAdjointEigenSolver<MatrixXc> solver(h.matrix(),
                                                 Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw Inconclusive("hermitian_eigenvalues: QR iteration did not converge");
  return solver.eigenvalues();
}

double operator_norm(const HermitianOperator& h) {
  if (h.dim() == 0) return 0.0;
  const VectorXd ev = hermitian_eigenvalues(h);
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

double anti_hermitian_norm(const MatrixXc& x) {
  // i·X is Hermitian up to rounding; symmetrize explicitly since the
  // rounding of a dense product can exceed the input tolerance.
  const MatrixXc ix = Complex(0.0, 1.0) * x;
  return operator_norm(HermitianOperator(0.5 * (ix + ix.adjoint())));
}

double commutator_norm(const HermitianOperator& a, const HermitianOperator& b) {
  if (a.dim() != b.dim())
    throw InvalidInput("commutator_norm: dimension mismatch");
  const MatrixXc ab = a.matrix() * b.matrix();
  return anti_hermitian_norm(ab - ab.adjoint());
}

Index checked_dimension(int d, int sites, std::size_t max_dim) {
  if (d < 2) throw InvalidInput("one-site dimension must be at least 2");
  if (sites < 1) throw InvalidInput("site count must be positive");
  double dim = 1.0;
  for (int k = 0; k < sites; ++k) dim *= d;
  if (dim > static_cast<double>(max_dim)) {
    std::ostringstream msg;
    msg << "dimension " << d << "^" << sites << " = " << dim
        << " exceeds cap " << max_dim << "; one dense complex matrix needs "
        << dim * dim * 16.0 / (1024.0 * 1024.0 * 1024.0) << " GiB";
    throw DimensionOverflow(msg.str());
  }
  return static_cast<Index>(dim);
}

namespace detail {

void add_embedded(MatrixXc& target, const MatrixXc& a, int d, int len,
                  int first, int n, Complex scale) {
  const int sites = window_sites(n);
  const int left_sites = first + n;
  const int right_sites = sites - left_sites - len;
  Index left = 1, right = 1;
  for (int k = 0; k < left_sites; ++k) left *= d;
  for (int k = 0; k < right_sites; ++k) right *= d;
  const Index ad = a.rows();
  for (Index l = 0; l < left; ++l) {
    const Index base = l * ad * right;
    for (Index col = 0; col < ad; ++col)
      for (Index row = 0; row < ad; ++row) {
        const Complex v = scale * a(row, col);
        if (v == Complex(0.0, 0.0)) continue;
        for (Index r = 0; r < right; ++r)
          target(base + row * right + r, base + col * right + r) += v;
      }
  }
}

}  // namespace detail

HermitianOperator embed_interval(const HermitianOperator& a, int d, int first,
                                 int n, std::size_t max_dim) {
  if (n < 0) throw InvalidInput("embed: window half-width must be >= 0");
  const int sites = window_sites(n);
  const Index total = checked_dimension(d, sites, max_dim);
  // Number of sites covered by `a`.
  int len = 0;
  for (Index dim = 1; dim < a.dim(); dim *= d) ++len;
  if (len == 0 || checked_dimension(d, len, max_dim) != a.dim())
    throw InvalidInput("embed: operator dimension is not a power of d");
  if (first < -n || first + len - 1 > n) {
    std::ostringstream msg;
    msg << "embed: support [" << first << ", " << first + len - 1
        << "] leaves window [" << -n << ", " << n << "]";
    throw InvalidInput(msg.str());
  }
  MatrixXc out = MatrixXc::Zero(total, total);
  detail::add_embedded(out, a.matrix(), d, len, first, n, Complex(1.0, 0.0));
  return HermitianOperator(std::move(out));
}

HermitianOperator embed_at_site(const HermitianOperator& a, int site, int n,
                                std::size_t max_dim) {
  if (a.dim() < 2) throw InvalidInput("embed_at_site: need d >= 2");
  if (n < 0 || site < -n || site > n) {
    std::ostringstream msg;
    msg << "embed_at_site: site " << site << " outside window [" << -n << ", "
        << n << "]";
    throw InvalidInput(msg.str());
  }
  return embed_interval(a, static_cast<int>(a.dim()), site, n, max_dim);
}

HermitianOperator apply_function(const std::function<double(double)>& f,
                                 const SpectralDecomposition& dec) {
  VectorXd fv(dec.dim());
  for (Index k = 0; k < dec.dim(); ++k) {
    fv(k) = f(dec.eigenvalues(k));
    if (!std::isfinite(fv(k)))
      throw InvalidInput("apply_function: f returned a non-finite value");
  }
  const MatrixXc m =
      dec.eigenvectors * fv.cast<Complex>().asDiagonal() * dec.eigenvectors.adjoint();
  return HermitianOperator(0.5 * (m + m.adjoint()));
}

MatrixXc kron(const MatrixXc& a, const MatrixXc& b) {
  MatrixXc out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

HermitianOperator pauli_x() {
  MatrixXc m(2, 2);
  m << 0, 1, 1, 0;
  return HermitianOperator(m);
}

HermitianOperator pauli_y() {
  MatrixXc m(2, 2);
  m << 0, Complex(0, -1), Complex(0, 1), 0;
  return HermitianOperator(m);
}

HermitianOperator pauli_z() {
  MatrixXc m(2, 2);
  m << 1, 0, 0, -1;
  return HermitianOperator(m);
}

}  // namespace macrolab
