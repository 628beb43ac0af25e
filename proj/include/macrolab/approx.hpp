#pragma once

#include "macrolab/macro_obs.hpp"
#include "macrolab/thermo.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace macrolab {

/// One cell of a commuting model: value point ζ_j and the block of basis
/// columns [first_column, first_column + rank) spanning the range of Q_j.
struct ModelCell {
  VectorXd value;
  Index first_column = 0;
  Index rank = 0;
};

/// Exactly commuting family Y_i = Σ_j ζ_j^(i) Q_j stored through a unitary
/// basis whose columns are grouped by cell. Projections are materialized on
/// demand only.
struct CommutingModel {
  MatrixXc basis;
  std::vector<ModelCell> cells;
  double R = 0.0;
  std::size_t m = 0;

  Index dim() const { return basis.rows(); }
  /// ζ^(i) for every basis column.
  VectorXd column_values(std::size_t i) const;
  HermitianOperator observable(std::size_t i) const;
  HermitianOperator projection(std::size_t cell) const;
};

struct ClusterParams {
  /// Cluster width scale; unset selects the default schedule.
  std::optional<double> tau;
  bool snap = false;
  std::optional<MeshPointSet> mesh;
  /// Joint-basis descent on each block group after clustering.
  bool refine = true;
  Index refine_max_dim = 256;
  int refine_iterations = 300;
  int refine_random_starts = 2;
  std::uint64_t seed = 0;
};

/// τ(n) = (2n+1)^{-1/2} · max_i ‖A_i‖, with ‖A_i‖ taken from the set's norm bounds.
double default_tau(const MeanObservableSet& set);

struct BuildReport {
  double tau = 0.0;
  /// Per observable i: largest cluster width at stage i.
  std::vector<double> stage_width;
  /// residual[i][k], k < i: norm of the part of H_i cut off the block
  /// diagonal by the stage-k split.
  std::vector<std::vector<double>> residual;
  /// width_i + 2 Σ_{k<i} residual[i][k].
  std::vector<double> clustered_bound;
  /// ‖H_i - Y_i‖ of the model before refinement and snapping.
  std::vector<double> clustered_error;
  std::size_t invariant_blocks = 0;
  std::size_t block_groups = 0;
  std::size_t refined_groups = 0;
  /// False when the invariant-block split failed verification and the
  /// whole space was treated as one block.
  bool structured = true;
};

struct ModelBuild {
  CommutingModel model;
  BuildReport report;
};

/// Cluster-compress-recurse over H_1..H_m inside each joint invariant block
/// group, optionally refined by joint-basis descent and snapped to a mesh.
ModelBuild sequential_joint_cluster(const MeanObservableSet& set,
                                    const ClusterParams& params = {});

struct ApproximationError {
  std::vector<double> per_observable;
  double max_error = 0.0;
  double max_commutator = 0.0;
};

ApproximationError approximation_error(const CommutingModel& model,
                                       const MeanObservableSet& set);

struct ConvergenceRow {
  int n = 0;
  double tau = 0.0;
  std::vector<double> errors;
  double max_error = 0.0;
  double max_commutator = 0.0;
  std::size_t cells = 0;
  std::vector<double> clustered_bound;
  std::vector<double> clustered_error;
};

std::vector<ConvergenceRow> convergence_experiment(
    const ObservableFamily& family, std::span<const int> n_values,
    const ClusterParams& params = {}, std::size_t max_dim = kDefaultMaxDim);

/// Replaces every ζ_j by its nearest mesh point (Euclidean); Q_j unchanged.
CommutingModel snap_to_mesh(const CommutingModel& model, const MeshPointSet& mesh);

}  // namespace macrolab
