#include "invariant_blocks.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>

#include <cmath>

namespace macrolab::detail {

namespace {

// Applies an operator through a sparse copy when that is cheaper.
class Applier {
 public:
  explicit Applier(const MatrixXc& dense) : dense_(dense) {
    Index nnz = 0;
    for (Index c = 0; c < dense.cols(); ++c)
      for (Index r = 0; r < dense.rows(); ++r)
        if (dense(r, c) != Complex(0.0, 0.0)) ++nnz;
    use_sparse_ = nnz * 4 < dense.size();
    if (use_sparse_) sparse_ = dense.sparseView(Complex(0.0, 0.0), 0.0);
  }

  VectorXc operator()(const VectorXc& v) const {
    return use_sparse_ ? VectorXc(sparse_ * v) : VectorXc(dense_ * v);
  }
  MatrixXc operator()(const MatrixXc& v) const {
    return use_sparse_ ? MatrixXc(sparse_ * v) : MatrixXc(dense_ * v);
  }

 private:
  const MatrixXc& dense_;
  Eigen::SparseMatrix<Complex> sparse_;
  bool use_sparse_ = false;
};

// Cyclic subspace generated by w under all operators, as orthonormal columns.
MatrixXc cyclic_subspace(const std::vector<Applier>& ops, const VectorXc& w,
                         double threshold) {
  const Index dim = w.size();
  MatrixXc basis(dim, std::min<Index>(dim, 16));
  basis.col(0) = w;
  Index count = 1;
  for (Index k = 0; k < count; ++k) {
    for (const auto& op : ops) {
      VectorXc v = op(VectorXc(basis.col(k)));
      for (int pass = 0; pass < 2; ++pass)
        v -= basis.leftCols(count) * (basis.leftCols(count).adjoint() * v);
      const double norm = v.norm();
      if (norm <= threshold) continue;
      if (count == basis.cols())
        basis.conservativeResize(Eigen::NoChange, std::min<Index>(dim, 2 * count));
      basis.col(count++) = v / norm;
      if (count == dim) return basis;
    }
  }
  return basis.leftCols(count);
}

}  // namespace

BlockDecomposition invariant_blocks(const std::vector<HermitianOperator>& ops) {
  const Index dim = ops.front().dim();
  const BlockDecomposition fallback{{MatrixXc::Identity(dim, dim)}, false};

  double scale = 0.0;
  std::vector<Applier> appliers;
  for (const auto& op : ops) {
    scale = std::max(scale, op.matrix().norm() / std::sqrt(static_cast<double>(dim)));
    appliers.emplace_back(op.matrix());
  }
  if (scale == 0.0) scale = 1.0;
  const double krylov_threshold = 1e-7 * scale;

  const SpectralDecomposition dec = hermitian_eig(ops.front());
  const VectorXd& ev = dec.eigenvalues;
  const double level_tol = 1e-9 * std::max(1.0, ev.cwiseAbs().maxCoeff());

  MatrixXc found(dim, dim);
  Index filled = 0;
  BlockDecomposition out;
  auto project_out = [&](MatrixXc x) {
    if (filled == 0) return x;
    for (int pass = 0; pass < 2; ++pass)
      x -= found.leftCols(filled) * (found.leftCols(filled).adjoint() * x);
    return x;
  };

  // Levels of the first operator, from the top of the spectrum down.
  Index end = dim;
  while (end > 0 && filled < dim) {
    Index start = end - 1;
    while (start > 0 && ev(end - 1) - ev(start - 1) < level_tol) --start;
    const MatrixXc x = project_out(dec.eigenvectors.middleCols(start, end - start));
    end = start;

    // Orthonormal directions of the level not yet covered.
    Eigen::SelfAdjointEigenSolver<MatrixXc> gram(x.adjoint() * x);
    for (Index c = gram.eigenvalues().size() - 1; c >= 0; --c) {
      const double s2 = gram.eigenvalues()(c);
      if (s2 <= 0.25) break;
      VectorXc w = project_out(MatrixXc(x * gram.eigenvectors().col(c) / std::sqrt(s2)));
      const double norm = w.norm();
      if (norm < 0.5) continue;
      const MatrixXc block = cyclic_subspace(appliers, w / norm, krylov_threshold);
      if (filled + block.cols() > dim) return fallback;
      found.middleCols(filled, block.cols()) = block;
      filled += block.cols();
      out.blocks.push_back(block);
    }
  }
  if (filled != dim) return fallback;

  const MatrixXc gram = found.adjoint() * found;
  if ((gram - MatrixXc::Identity(dim, dim)).cwiseAbs().maxCoeff() > 1e-8) return fallback;
  for (const auto& block : out.blocks)
    for (const auto& op : appliers) {
      const MatrixXc image = op(block);
      const MatrixXc leak = image - block * (block.adjoint() * image);
      if (leak.cwiseAbs().maxCoeff() > 1e-8 * scale) return fallback;
    }
  return out;
}

}  // namespace macrolab::detail
