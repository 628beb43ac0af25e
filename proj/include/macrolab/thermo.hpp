#pragma once

#include "macrolab/macro_obs.hpp"

#include <limits>
#include <vector>

namespace macrolab {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// p(α) = log Tr e^{Σ α_i A_i}, evaluated with a max-eigenvalue shift.
double free_energy(const ObservableFamily& family, const VectorXd& alpha);

/// ρ_α = e^{Σ α_i A_i} / Tr e^{Σ α_i A_i}.
HermitianOperator gibbs_state(const ObservableFamily& family, const VectorXd& alpha);

/// von Neumann entropy -Σ λ log λ of a density matrix (0 log 0 = 0).
double von_neumann_entropy(const HermitianOperator& rho);

/// p, ∇p and the Hessian of p on the one-site algebra.
///
/// The Hessian is the Kubo-Mori covariance obtained from the Daleckii-Krein
/// formula in the eigenbasis of Σ α_i A_i. It reduces to the symmetrized
/// Gibbs covariance when the generators commute.
class FreeEnergySurface {
 public:
  struct Evaluation {
    double value = 0.0;
    VectorXd gradient;
    MatrixXd hessian;
  };

  explicit FreeEnergySurface(ObservableFamily family);

  Evaluation evaluate(const VectorXd& alpha) const;
  double value(const VectorXd& alpha) const { return free_energy(family_, alpha); }
  VectorXd gradient(const VectorXd& alpha) const;

  const ObservableFamily& family() const { return family_; }
  std::size_t size() const { return family_.size(); }

 private:
  ObservableFamily family_;
};

/// ½⟨{A_i - ⟨A_i⟩, A_j - ⟨A_j⟩}⟩ in the Gibbs state ρ_α.
MatrixXd gibbs_covariance(const ObservableFamily& family, const VectorXd& alpha);

enum class Membership { Interior, Boundary, Outside };

const char* to_string(Membership m);

struct DualSolverSettings {
  double gradient_tol = 1e-12;
  int max_iterations = 500;
  /// ‖α‖ beyond which a still-decreasing objective means x ∉ dom μ.
  double divergence_threshold = 1e4;
  /// Per-step decrease separating "still decreasing" from a plateau.
  double decrease_floor = 1e-10;
  /// Smallest reduced Hessian eigenvalue still counted as interior curvature.
  double boundary_curvature = 1e-8;
  /// Tolerance on the affine constraints Σ c_i x_i = Σ c_i x0_i.
  double affine_tol = 1e-9;
};

struct EntropyResult {
  double value = kNegInf;
  Membership membership = Membership::Outside;
  VectorXd alpha;
  int iterations = 0;

  bool finite() const { return membership != Membership::Outside; }
};

/// μ(x) = inf_α [p(α) - (α, x)] by damped Newton, with dom μ detection.
class EntropyProfile {
 public:
  explicit EntropyProfile(ObservableFamily family, DualSolverSettings settings = {});

  /// Throws Inconclusive when the iteration budget runs out without a verdict.
  EntropyResult solve(const VectorXd& x) const;
  double mu(const VectorXd& x) const { return solve(x).value; }
  Membership membership(const VectorXd& x) const { return solve(x).membership; }

  const FreeEnergySurface& surface() const { return surface_; }
  const ObservableFamily& family() const { return surface_.family(); }
  const DualSolverSettings& settings() const { return settings_; }
  std::size_t size() const { return surface_.size(); }
  double log_d() const { return log_d_; }
  /// x_0 = ∇p(0) = (Tr A_i / d)_i, the unique maximizer of μ.
  const VectorXd& x0() const { return x0_; }
  /// dom μ ⊆ Π [λ_min(A_i), λ_max(A_i)].
  const VectorXd& box_lower() const { return box_lower_; }
  const VectorXd& box_upper() const { return box_upper_; }
  double box_diameter() const { return (box_upper_ - box_lower_).norm(); }

 private:
  FreeEnergySurface surface_;
  DualSolverSettings settings_;
  double log_d_ = 0.0;
  VectorXd x0_;
  VectorXd box_lower_, box_upper_;
  MatrixXd range_basis_;  // m x r, orthonormal basis of range(Cov at α = 0)
  MatrixXd null_basis_;   // m x (m - r)
};

double entropy_mu(const EntropyProfile& profile, const VectorXd& x);

Membership dom_membership(const EntropyProfile& profile, const VectorXd& x);

/// Independent maximum-entropy oracle: solves ∇p(α) = x by Levenberg-Marquardt
/// on a finite-difference Jacobian and returns S(ρ_α). Returns -∞ when the
/// constraint residual stalls away from zero.
double entropy_mu_oracle(const ObservableFamily& family, const VectorXd& x);

/// μ evaluated on the grid x0 + h·k (k integer) clipped to the bounding box.
struct SampleCloud {
  double step = 0.0;
  std::vector<VectorXd> points;
  std::vector<double> mu;

  std::size_t size() const { return points.size(); }
};

SampleCloud sample_grid(const EntropyProfile& profile, double step);

struct ContourLadder {
  double epsilon = 0.0;
  double C = 0.0;
  std::vector<double> levels;  // s_0 > s_1 > ... > s_n, s_n < 0
  VectorXd x0;
  double grid_step = 0.0;

  std::size_t size() const { return levels.size(); }
};

struct LadderSettings {
  double grid_step = 0.05;
  int bisection_steps = 30;
  double search_fraction = 0.2;  // Δ = fraction·(s_0 - min sampled μ)
  double c_slack = 1.1;          // C = c_slack·max{diam, ε}
  std::size_t max_levels = 100000;
};

/// s_k = s_0 - (C/(C-ε))^{k-1} (s_0 - s_1) for k >= 1.
double ladder_level(double s0, double s1, double C, double epsilon, std::size_t k);

ContourLadder contour_ladder(const EntropyProfile& profile, double epsilon,
                             const LadderSettings& settings = {});

/// Same construction on a precomputed cloud (its step becomes grid_step).
ContourLadder contour_ladder(const EntropyProfile& profile, double epsilon,
                             const SampleCloud& cloud,
                             const LadderSettings& settings = {});

/// Largest excess over ε of dist(y, sampled X_{s_{k-1}}) among sampled
/// y ∈ X_{s_k}, one entry per k = 1..n. Non-positive entries mean the
/// sampled inclusion holds.
std::vector<double> ladder_inclusion_excess(const ContourLadder& ladder,
                                            const SampleCloud& cloud);

struct MeshPointSet {
  double eta = 0.0;
  double resolution = 0.0;
  /// layers[i] = points λ_{ij} with μ ≥ s_i and, for i >= 1, μ < s_{i-1}.
  std::vector<std::vector<VectorXd>> layers;
  std::vector<std::vector<double>> mu;

  std::size_t point_count() const;
  std::vector<VectorXd> all_points() const;
};

/// Layered η-nets of the level sets. `resolution` <= 0 selects η/(2√m).
/// Throws InvalidInput if resolution > η/√m and Inconclusive if the
/// 2η-density audit fails on the sampled level sets.
MeshPointSet mesh_points(const EntropyProfile& profile, const ContourLadder& ladder,
                         double eta, double resolution = 0.0);

/// For k = 0..n-2: max over sampled y ∈ X_{s_{k+1}} of the distance to the
/// nearest point in layers 0..k.
std::vector<double> mesh_density_radii(const MeshPointSet& mesh,
                                       const ContourLadder& ladder,
                                       const SampleCloud& cloud);

}  // namespace macrolab
