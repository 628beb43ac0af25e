#pragma once

#include "macrolab/approx.hpp"
#include "macrolab/thermo.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace macrolab {

/// Closed boxes keep eigenvalues on the boundary, open boxes drop them
/// (boundary tolerance 1e-12 either way).
enum class BoxKind { Closed, Open };

struct BoxProjection {
  HermitianOperator projector;
  Index rank = 0;

  bool empty() const { return rank == 0; }
};

/// Spectral projection of H_1 onto [x-ε, x+ε] for m = 1; for m >= 2 the sum
/// of model cells whose value lies in the box Π[x_i-ε, x_i+ε].
BoxProjection box_projection(const MeanObservableSet& set, const VectorXd& x, double eps,
                             BoxKind kind = BoxKind::Closed,
                             const CommutingModel* model = nullptr);

/// Rank of box_projection without forming the projector.
Index box_rank(const MeanObservableSet& set, const VectorXd& x, double eps,
               BoxKind kind = BoxKind::Closed, const CommutingModel* model = nullptr);

struct RankRateRecord {
  int n = 0;
  Index rank = 0;
  /// log(rank)/(2n+1); -∞ for an empty box.
  double rate = kNegInf;
  double target_sup_mu = kNegInf;
  VectorXd x;
  double eps = 0.0;
};

/// sup of μ over the closed box Π[x_i-ε, x_i+ε] by grid maximization.
double sup_mu_over_box(const EntropyProfile& profile, const VectorXd& x, double eps);

using ModelSupplier = std::function<CommutingModel(const MeanObservableSet&)>;

std::vector<RankRateRecord> rank_rate(const EntropyProfile& profile, const VectorXd& x,
                                      double eps, std::span<const int> n_values,
                                      BoxKind kind = BoxKind::Closed,
                                      const ModelSupplier& model_supplier = {},
                                      std::size_t max_dim = kDefaultMaxDim);

/// One-site density matrix ρ of the product state ⊗ρ.
struct ProductState {
  HermitianOperator rho;

  /// Validates PSD and unit trace within 1e-12.
  static ProductState make(const MatrixXc& rho);
  int d() const { return static_cast<int>(rho.dim()); }
};

struct BetaResult {
  double beta = 0.0;
  std::uint64_t rank = 0;
};

/// min log Tr q over projections q on 2n+1 sites with ω(q) >= 1-ε, from
/// the multiset of product eigenvalues of ρ^{⊗(2n+1)}.
BetaResult beta_min_rank(const ProductState& state, double eps, int n);

/// S(ρ), the mean entropy of ⊗ρ.
double mean_entropy_product(const ProductState& state);

}  // namespace macrolab
