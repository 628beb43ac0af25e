#include "macrolab/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace macrolab {

namespace {

constexpr double kBoxTol = 1e-12;

bool in_interval(double v, double center, double eps, BoxKind kind) {
  const double dist = std::abs(v - center);
  return kind == BoxKind::Closed ? dist <= eps + kBoxTol : dist < eps - kBoxTol;
}

bool in_box(const VectorXd& v, const VectorXd& x, double eps, BoxKind kind) {
  for (Index i = 0; i < x.size(); ++i)
    if (!in_interval(v(i), x(i), eps, kind)) return false;
  return true;
}

void check_box(const MeanObservableSet& set, const VectorXd& x, double eps,
               const CommutingModel* model) {
  if (set.operators.empty()) throw InvalidInput("box_projection: empty observable set");
  if (static_cast<std::size_t>(x.size()) != set.size())
    throw InvalidInput("box_projection: box center has the wrong dimension");
  if (!x.allFinite() || !(eps > 0.0))
    throw InvalidInput("box_projection: need a finite center and ε > 0");
  if (set.size() >= 2) {
    if (model == nullptr)
      throw InvalidInput(
          "box_projection: m >= 2 needs a commuting model; joint spectral "
          "projections of non-commuting operators are not defined");
    if (model->dim() != set.dim() || model->m != set.size())
      throw InvalidInput("box_projection: model shape differs from the observables");
  }
}

}  // namespace

Index box_rank(const MeanObservableSet& set, const VectorXd& x, double eps, BoxKind kind,
               const CommutingModel* model) {
  check_box(set, x, eps, model);
  Index rank = 0;
  if (set.size() == 1) {
    const VectorXd ev = hermitian_eigenvalues(set.operators.front());
    for (Index k = 0; k < ev.size(); ++k)
      if (in_interval(ev(k), x(0), eps, kind)) ++rank;
    return rank;
  }
  for (const auto& cell : model->cells)
    if (in_box(cell.value, x, eps, kind)) rank += cell.rank;
  return rank;
}

BoxProjection box_projection(const MeanObservableSet& set, const VectorXd& x, double eps,
                             BoxKind kind, const CommutingModel* model) {
  check_box(set, x, eps, model);
  const Index dim = set.dim();
  std::vector<Index> columns;
  MatrixXc vectors;
  if (set.size() == 1) {
    const SpectralDecomposition dec = hermitian_eig(set.operators.front());
    for (Index k = 0; k < dec.dim(); ++k)
      if (in_interval(dec.eigenvalues(k), x(0), eps, kind)) columns.push_back(k);
    vectors = dec.eigenvectors;
  } else {
    for (const auto& cell : model->cells)
      if (in_box(cell.value, x, eps, kind))
        for (Index c = 0; c < cell.rank; ++c) columns.push_back(cell.first_column + c);
    vectors = model->basis;
  }
  BoxProjection out;
  out.rank = static_cast<Index>(columns.size());
  if (columns.empty()) {
    out.projector = HermitianOperator::zero(dim);
    return out;
  }
  MatrixXc selected(dim, out.rank);
  for (Index k = 0; k < out.rank; ++k) selected.col(k) = vectors.col(columns[k]);
  const MatrixXc p = selected * selected.adjoint();
  out.projector = HermitianOperator(0.5 * (p + p.adjoint()), 1e-9);
  return out;
}

double sup_mu_over_box(const EntropyProfile& profile, const VectorXd& x, double eps) {
  const Index m = static_cast<Index>(profile.size());
  if (x.size() != m) throw InvalidInput("sup_mu_over_box: center has the wrong dimension");
  if (!(eps > 0.0)) throw InvalidInput("sup_mu_over_box: ε must be positive");
  // μ is maximal at x_0, so a box containing it needs no search.
  if (((profile.x0() - x).cwiseAbs().array() <= eps).all()) return profile.log_d();
  const int per_axis = m == 1 ? 401 : m == 2 ? 101 : m == 3 ? 31 : 9;
  double best = kNegInf;
  std::vector<int> k(static_cast<std::size_t>(m), 0);
  while (true) {
    VectorXd p(m);
    for (Index i = 0; i < m; ++i)
      p(i) = x(i) - eps + 2.0 * eps * k[static_cast<std::size_t>(i)] / (per_axis - 1);
    best = std::max(best, profile.mu(p));
    std::size_t axis = 0;
    while (axis < k.size() && ++k[axis] == per_axis) k[axis++] = 0;
    if (axis == k.size()) break;
  }
  return best;
}

std::vector<RankRateRecord> rank_rate(const EntropyProfile& profile, const VectorXd& x,
                                      double eps, std::span<const int> n_values,
                                      BoxKind kind, const ModelSupplier& model_supplier,
                                      std::size_t max_dim) {
  const auto& family = profile.family();
  if (family.size() >= 2 && !model_supplier)
    throw InvalidInput("rank_rate: m >= 2 needs a model supplier");
  for (int n : n_values) checked_dimension(family.d, window_sites(n), max_dim);
  const double target = sup_mu_over_box(profile, x, eps);
  std::vector<RankRateRecord> records;
  for (int n : n_values) {
    const auto set = build_mean_observables(family, n, max_dim);
    RankRateRecord rec;
    rec.n = n;
    rec.x = x;
    rec.eps = eps;
    rec.target_sup_mu = target;
    if (family.size() >= 2) {
      const CommutingModel model = model_supplier(set);
      rec.rank = box_rank(set, x, eps, kind, &model);
    } else {
      rec.rank = box_rank(set, x, eps, kind);
    }
    rec.rate = rec.rank > 0 ? std::log(static_cast<double>(rec.rank)) / window_sites(n)
                            : kNegInf;
    records.push_back(std::move(rec));
  }
  return records;
}

ProductState ProductState::make(const MatrixXc& rho) {
  HermitianOperator h(rho);
  if (std::abs(h.trace() - 1.0) > 1e-12)
    throw InvalidInput("product state: density matrix trace differs from 1");
  if (hermitian_eigenvalues(h)(0) < -1e-12)
    throw InvalidInput("product state: density matrix is not positive semidefinite");
  return ProductState{std::move(h)};
}

double mean_entropy_product(const ProductState& state) {
  return von_neumann_entropy(state.rho);
}

BetaResult beta_min_rank(const ProductState& state, double eps, int n) {
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidInput("beta_min_rank: ε must lie in (0, 1)");
  if (n < 0) throw InvalidInput("beta_min_rank: n must be >= 0");
  const int d = state.d();
  const int sites = window_sites(n);
  if (sites * std::log2(static_cast<double>(d)) >= 63.0) {
    std::ostringstream msg;
    msg << "beta_min_rank: " << d << "^" << sites << " exceeds 64-bit rank arithmetic";
    throw DimensionOverflow(msg.str());
  }
  VectorXd p = hermitian_eigenvalues(state.rho);
  for (Index k = 0; k < p.size(); ++k) p(k) = std::max(p(k), 0.0);

  // Every product eigenvalue is Π p_i^{k_i} for an occupation vector k with
  // Σ k_i = sites, repeated multinomial(sites; k) times.
  struct Level {
    double log_value;
    std::uint64_t multiplicity;
  };
  std::vector<Level> levels;
  std::vector<int> k(static_cast<std::size_t>(d), 0);
  auto visit = [&](auto&& self, int slot, int remaining) -> void {
    if (slot == d - 1) {
      k[static_cast<std::size_t>(slot)] = remaining;
      double log_value = 0.0;
      std::uint64_t mult = 1;
      int placed = 0;
      for (int i = 0; i < d; ++i) {
        const int ki = k[static_cast<std::size_t>(i)];
        if (ki > 0) {
          if (p(i) == 0.0) return;
          log_value += ki * std::log(p(i));
        }
        // mult *= C(placed + ki, ki), accumulated one factor at a time.
        for (int j = 1; j <= ki; ++j)
          mult = static_cast<std::uint64_t>(static_cast<unsigned __int128>(mult) *
                                            static_cast<unsigned>(placed + j) / j);
        placed += ki;
      }
      levels.push_back({log_value, mult});
      return;
    }
    for (int c = 0; c <= remaining; ++c) {
      k[static_cast<std::size_t>(slot)] = c;
      self(self, slot + 1, remaining - c);
    }
  };
  visit(visit, 0, sites);
  std::stable_sort(levels.begin(), levels.end(),
                   [](const Level& a, const Level& b) { return a.log_value > b.log_value; });

  const double target = 1.0 - eps;
  double mass = 0.0;
  std::uint64_t rank = 0;
  for (const auto& level : levels) {
    const double value = std::exp(level.log_value);
    const double level_mass = value * static_cast<double>(level.multiplicity);
    if (mass + level_mass >= target - 1e-12) {
      const double need = (target - mass) / value;
      const double take = std::clamp(std::ceil(need - 1e-9), 1.0,
                                     static_cast<double>(level.multiplicity));
      rank += static_cast<std::uint64_t>(take);
      mass = target;
      break;
    }
    mass += level_mass;
    rank += level.multiplicity;
  }
  return {std::log(static_cast<double>(rank)), rank};
}

}  // namespace macrolab
