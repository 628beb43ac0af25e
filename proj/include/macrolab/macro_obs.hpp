#pragma once

#include "macrolab/algebra.hpp"

#include <map>
#include <span>
#include <vector>

namespace macrolab {

/// One-site generators A_1..A_m acting on C^d.
struct ObservableFamily {
  int d = 0;
  std::vector<HermitianOperator> generators;

  /// Validates m >= 1, d >= 2 and that every generator is d x d.
  static ObservableFamily make(std::vector<HermitianOperator> generators);

  std::size_t size() const { return generators.size(); }
};

/// Window means H_{i,n} on the 2n+1 sites [-n, n].
struct MeanObservableSet {
  int n = 0;
  int d = 0;
  std::vector<HermitianOperator> operators;
  /// Upper bounds on ‖operators[i]‖ known from construction: ‖A_i‖ for
  /// one-site means, the interaction norm for interaction means.
  std::vector<double> norm_bounds;

  int sites() const { return window_sites(n); }
  std::size_t size() const { return operators.size(); }
  Index dim() const { return operators.empty() ? 0 : operators.front().dim(); }
};

/// Translation-invariant interaction supported on intervals. terms[ℓ] is the
/// representative Φ([0, ℓ-1]) acting on C^(d^ℓ); Φ([a, a+ℓ-1]) is its translate.
struct Interaction {
  int d = 0;
  int range = 0;
  std::map<int, HermitianOperator> terms;

  /// Validates 1 <= ℓ <= range for every key and matching term dimensions.
  static Interaction make(int d, int range, std::map<int, HermitianOperator> terms);

  /// Single-site interaction Φ({j}) = γ_j(a).
  static Interaction on_site(const HermitianOperator& a);
};

/// Block-averaged K^M_{i,n}.
struct CoarseGrained {
  int M = 0;
  int n = 0;
  std::vector<HermitianOperator> operators;
  /// Translation offsets (in sites) of the blocks that fit in the window.
  std::vector<int> block_offsets;
};

MeanObservableSet build_mean_observables(const ObservableFamily& family, int n,
                                         std::size_t max_dim = kDefaultMaxDim);

struct CommutatorRow {
  int n;
  std::size_t i;
  std::size_t j;
  double norm;
};

/// ‖[H_{i,n}, H_{j,n}]‖ for every pair i < j and every n.
std::vector<CommutatorRow> commutator_decay_profile(
    const ObservableFamily& family, std::span<const int> n_values,
    std::size_t max_dim = kDefaultMaxDim);

/// Σ_{X∋0} |X|^{-1} ‖Φ(X)‖, which for interval terms collapses to Σ_ℓ ‖terms[ℓ]‖.
double interaction_norm(const Interaction& phi);

/// (1/(2n+1)) Σ_{I ⊆ [-n,n]} Φ_i(I) for each interaction.
MeanObservableSet build_interaction_means(std::span<const Interaction> phis, int n,
                                          std::size_t max_dim = kDefaultMaxDim);

/// Average of the disjoint block translates γ_{(2M+1)j}(H_{i,M}),
/// j ∈ [-⌊n/M⌋, ⌊n/M⌋], keeping only blocks whose support fits in [-n, n].
CoarseGrained coarse_grain(std::span<const Interaction> phis, int M, int n,
                           std::size_t max_dim = kDefaultMaxDim);

/// The two tail sums controlling ‖K^M - H‖ asymptotically: terms X ∋ 0 with
/// diam X > √M, and terms X ∋ 0 not contained in [-M, M]. For interval
/// interactions the two sets overlap, so both are reported with their max.
struct TailSums {
  double long_range = 0.0;
  double outside_block = 0.0;
  double max() const { return long_range > outside_block ? long_range : outside_block; }
};

TailSums coarse_grain_tail(const Interaction& phi, int M);

/// Triangle-inequality bound Σ_X |c_K(X) - c_H(X)| ‖Φ(X)‖ over all intervals
/// X in the window, where c_K and c_H are the coefficients with which the
/// translate Φ(X) enters K^M_n and H_n. Computed by enumeration only.
double coarse_grain_boundary_bound(const Interaction& phi, int M, int n);

}  // namespace macrolab
