#include "macrolab/macro_obs.hpp"

#include <cmath>
#include <sstream>

namespace macrolab {

namespace {

void check_same_d(std::span<const Interaction> phis) {
  if (phis.empty()) throw InvalidInput("need at least one interaction");
  for (const auto& phi : phis)
    if (phi.d != phis.front().d)
      throw InvalidInput("interactions disagree on the one-site dimension");
}

// Σ_{I ⊆ [lo, hi]} Φ(I), accumulated into target (window [-n, n]) with `scale`.
void add_interval_terms(MatrixXc& target, const Interaction& phi, int lo, int hi,
                        int n, double scale) {
  for (const auto& [len, term] : phi.terms)
    for (int a = lo; a + len - 1 <= hi; ++a)
      detail::add_embedded(target, term.matrix(), phi.d, len, a, n,
                           Complex(scale, 0.0));
}

// Offsets (2M+1)j of the block translates that fit in [-n, n].
std::vector<int> fitting_block_offsets(int M, int n) {
  std::vector<int> offsets;
  const int jmax = n / M;
  for (int j = -jmax; j <= jmax; ++j) {
    const int offset = (2 * M + 1) * j;
    if (offset - M >= -n && offset + M <= n) offsets.push_back(offset);
  }
  return offsets;
}

}  // namespace

ObservableFamily ObservableFamily::make(std::vector<HermitianOperator> generators) {
  if (generators.empty()) throw InvalidInput("observable family needs m >= 1");
  const Index d = generators.front().dim();
  if (d < 2) throw InvalidInput("observable family needs d >= 2");
  for (const auto& g : generators)
    if (g.dim() != d)
      throw InvalidInput("observable family: generators differ in dimension");
  return ObservableFamily{static_cast<int>(d), std::move(generators)};
}

Interaction Interaction::make(int d, int range,
                              std::map<int, HermitianOperator> terms) {
  if (d < 2) throw InvalidInput("interaction needs d >= 2");
  if (range < 1) throw InvalidInput("interaction range must be positive");
  for (const auto& [len, term] : terms) {
    if (len < 1 || len > range) {
      std::ostringstream msg;
      msg << "interaction term length " << len << " outside [1, " << range << "]";
      throw InvalidInput(msg.str());
    }
    if (term.dim() != checked_dimension(d, len))
      throw InvalidInput("interaction term dimension is not d^length");
  }
  return Interaction{d, range, std::move(terms)};
}

Interaction Interaction::on_site(const HermitianOperator& a) {
  return make(static_cast<int>(a.dim()), 1, {{1, a}});
}

MeanObservableSet build_mean_observables(const ObservableFamily& family, int n,
                                         std::size_t max_dim) {
  if (n < 0) throw InvalidInput("window half-width must be >= 0");
  const Index dim = checked_dimension(family.d, window_sites(n), max_dim);
  MeanObservableSet out;
  out.n = n;
  out.d = family.d;
  const double scale = 1.0 / window_sites(n);
  for (const auto& a : family.generators) {
    MatrixXc h = MatrixXc::Zero(dim, dim);
    for (int j = -n; j <= n; ++j)
      detail::add_embedded(h, a.matrix(), family.d, 1, j, n, Complex(scale, 0.0));
    out.operators.emplace_back(std::move(h));
    out.norm_bounds.push_back(operator_norm(a));
  }
  return out;
}

std::vector<CommutatorRow> commutator_decay_profile(const ObservableFamily& family,
                                                    std::span<const int> n_values,
                                                    std::size_t max_dim) {
  for (int n : n_values) checked_dimension(family.d, window_sites(n), max_dim);
  std::vector<CommutatorRow> rows;
  for (int n : n_values) {
    const auto set = build_mean_observables(family, n, max_dim);
    for (std::size_t i = 0; i < set.size(); ++i)
      for (std::size_t j = i + 1; j < set.size(); ++j)
        rows.push_back({n, i, j, commutator_norm(set.operators[i], set.operators[j])});
  }
  return rows;
}

double interaction_norm(const Interaction& phi) {
  // ℓ intervals of length ℓ contain the origin, each weighted by 1/ℓ.
  double total = 0.0;
  for (const auto& [len, term] : phi.terms) total += operator_norm(term);
  return total;
}

MeanObservableSet build_interaction_means(std::span<const Interaction> phis, int n,
                                          std::size_t max_dim) {
  check_same_d(phis);
  if (n < 0) throw InvalidInput("window half-width must be >= 0");
  const int d = phis.front().d;
  const Index dim = checked_dimension(d, window_sites(n), max_dim);
  MeanObservableSet out;
  out.n = n;
  out.d = d;
  for (const auto& phi : phis) {
    if (phi.range > window_sites(n)) {
      std::ostringstream msg;
      msg << "interaction range " << phi.range << " exceeds window of "
          << window_sites(n) << " sites";
      throw InvalidInput(msg.str());
    }
    MatrixXc h = MatrixXc::Zero(dim, dim);
    add_interval_terms(h, phi, -n, n, n, 1.0 / window_sites(n));
    out.operators.emplace_back(std::move(h));
    out.norm_bounds.push_back(interaction_norm(phi));
  }
  return out;
}

CoarseGrained coarse_grain(std::span<const Interaction> phis, int M, int n,
                           std::size_t max_dim) {
  check_same_d(phis);
  if (M < 1) throw InvalidInput("coarse_grain: block size M must be positive");
  if (M > n) throw InvalidInput("coarse_grain: block size M exceeds n");
  const int d = phis.front().d;
  const Index dim = checked_dimension(d, window_sites(n), max_dim);
  CoarseGrained out;
  out.M = M;
  out.n = n;
  out.block_offsets = fitting_block_offsets(M, n);
  const double weight =
      1.0 / (static_cast<double>(out.block_offsets.size()) * window_sites(M));
  for (const auto& phi : phis) {
    if (phi.range > window_sites(M))
      throw InvalidInput("coarse_grain: interaction range exceeds block width");
    MatrixXc k = MatrixXc::Zero(dim, dim);
    for (int offset : out.block_offsets)
      add_interval_terms(k, phi, offset - M, offset + M, n, weight);
    out.operators.emplace_back(std::move(k));
  }
  return out;
}

TailSums coarse_grain_tail(const Interaction& phi, int M) {
  TailSums tails;
  const double root_m = std::sqrt(static_cast<double>(M));
  for (const auto& [len, term] : phi.terms) {
    const double norm = operator_norm(term);
    // Intervals [a, a+len-1] with a in [-(len-1), 0] contain the origin.
    if (len - 1 > root_m) tails.long_range += norm;
    const int lo = std::max(-(len - 1), -M);
    const int hi = std::min(0, M - len + 1);
    const int inside = hi >= lo ? hi - lo + 1 : 0;
    tails.outside_block += static_cast<double>(len - inside) * norm / len;
  }
  return tails;
}

double coarse_grain_boundary_bound(const Interaction& phi, int M, int n) {
  const auto offsets = fitting_block_offsets(M, n);
  if (offsets.empty()) throw InvalidInput("coarse_grain: no block fits the window");
  const double c_h = 1.0 / window_sites(n);
  const double c_block =
      1.0 / (static_cast<double>(offsets.size()) * window_sites(M));
  double bound = 0.0;
  for (const auto& [len, term] : phi.terms) {
    const double norm = operator_norm(term);
    for (int a = -n; a + len - 1 <= n; ++a) {
      int containing = 0;
      for (int offset : offsets)
        if (a >= offset - M && a + len - 1 <= offset + M) ++containing;
      bound += std::abs(containing * c_block - c_h) * norm;
    }
  }
  return bound;
}

}  // namespace macrolab
