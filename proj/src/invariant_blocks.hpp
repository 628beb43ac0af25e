#pragma once

#include "macrolab/algebra.hpp"

#include <vector>

namespace macrolab::detail {

/// Orthogonal split of the space into subspaces invariant under every
/// operator, each generated as a cyclic subspace from an eigenvector of the
/// first operator. `structured` is false when verification failed and the
/// single block spanning everything is returned instead.
struct BlockDecomposition {
  std::vector<MatrixXc> blocks;
  bool structured = true;
};

BlockDecomposition invariant_blocks(const std::vector<HermitianOperator>& ops);

}  // namespace macrolab::detail
