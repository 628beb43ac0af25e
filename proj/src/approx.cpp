#include "macrolab/approx.hpp"

#include "invariant_blocks.hpp"
#include "macrolab/random.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace macrolab {

namespace {

MatrixXc symmetrized(const MatrixXc& x) { return 0.5 * (x + x.adjoint()); }

double hermitian_norm(const MatrixXc& x) {
  if (x.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(symmetrized(x), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

MatrixXc off_diagonal(const MatrixXc& x) {
  MatrixXc o = x;
  o.diagonal().setZero();
  return o;
}

// Consecutive runs of sorted values whose spread from the run start stays <= τ.
std::vector<std::pair<Index, Index>> width_clusters(const VectorXd& w, double tau) {
  std::vector<std::pair<Index, Index>> out;
  Index start = 0;
  for (Index k = 1; k <= w.size(); ++k)
    if (k == w.size() || w(k) - w(start) > tau) {
      out.emplace_back(start, k - start);
      start = k;
    }
  return out;
}

// Model of one block group in its own (compressed) coordinates.
struct GroupModel {
  MatrixXc basis;                          // g x g unitary
  std::vector<std::pair<Index, Index>> cells;  // (first column, rank)
  std::vector<VectorXd> values;
  std::vector<double> width;
  std::vector<std::vector<double>> residual;
  std::vector<double> clustered_error;
  bool refined = false;
};

std::vector<double> pinching_errors(const std::vector<MatrixXc>& as, const MatrixXc& basis,
                                    const std::vector<std::pair<Index, Index>>& cells,
                                    const std::vector<VectorXd>& values) {
  std::vector<double> errors;
  for (std::size_t i = 0; i < as.size(); ++i) {
    VectorXd diag(basis.cols());
    for (std::size_t c = 0; c < cells.size(); ++c)
      diag.segment(cells[c].first, cells[c].second)
          .setConstant(values[c](static_cast<Index>(i)));
    const MatrixXc y = basis * diag.cast<Complex>().asDiagonal() * basis.adjoint();
    errors.push_back(hermitian_norm(as[i] - y));
  }
  return errors;
}

class GroupClusterer {
 public:
  GroupClusterer(const std::vector<MatrixXc>& as, double tau) : as_(as), tau_(tau) {
    const std::size_t m = as.size();
    model_.width.assign(m, 0.0);
    model_.residual.assign(m, std::vector<double>(m, 0.0));
  }

  GroupModel run() {
    const Index g = as_.front().rows();
    model_.basis.resize(g, g);
    recurse(MatrixXc::Identity(g, g), 0);
    model_.clustered_error = pinching_errors(as_, model_.basis, model_.cells, model_.values);
    return std::move(model_);
  }

 private:
  void recurse(const MatrixXc& v, std::size_t stage) {
    const std::size_t m = as_.size();
    if (stage == m) {
      VectorXd zeta(static_cast<Index>(m));
      for (std::size_t i = 0; i < m; ++i)
        zeta(static_cast<Index>(i)) =
            (v.adjoint() * as_[i] * v).trace().real() / static_cast<double>(v.cols());
      model_.basis.middleCols(filled_, v.cols()) = v;
      model_.cells.emplace_back(filled_, v.cols());
      model_.values.push_back(zeta);
      filled_ += v.cols();
      return;
    }
    Eigen::SelfAdjointEigenSolver<MatrixXc> es(symmetrized(v.adjoint() * as_[stage] * v));
    const VectorXd& w = es.eigenvalues();
    const auto clusters = width_clusters(w, tau_);
    const MatrixXc rotated = v * es.eigenvectors();
    if (clusters.size() > 1)
      for (std::size_t j = stage + 1; j < m; ++j) {
        MatrixXc off = rotated.adjoint() * as_[j] * rotated;
        for (const auto& [start, len] : clusters) off.block(start, start, len, len).setZero();
        model_.residual[j][stage] = std::max(model_.residual[j][stage], hermitian_norm(off));
      }
    for (const auto& [start, len] : clusters) {
      model_.width[stage] = std::max(model_.width[stage], w(start + len - 1) - w(start));
      recurse(rotated.middleCols(start, len), stage + 1);
    }
  }

  const std::vector<MatrixXc>& as_;
  double tau_;
  GroupModel model_;
  Index filled_ = 0;
};

// exp(K) for anti-Hermitian K through the eigendecomposition of iK.
MatrixXc expm_anti_hermitian(const MatrixXc& k) {
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(symmetrized(Complex(0.0, 1.0) * k));
  VectorXc phase(es.eigenvalues().size());
  for (Index j = 0; j < phase.size(); ++j)
    phase(j) = std::polar(1.0, -es.eigenvalues()(j));
  return es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
}

// Minimizes (Σ_i Tr |off(U* A_i U)|^p)^{1/p} over unitaries U by Riemannian
// gradient descent with Armijo backtracking.
class JointBasisDescent {
 public:
  explicit JointBasisDescent(const std::vector<MatrixXc>& as) : as_(as) {}

  MatrixXc run(MatrixXc u, int p, int iterations) const {
    State s = evaluate(u, p);
    double t = 1.0;
    for (int it = 0; it < iterations; ++it) {
      if (s.total == 0.0) break;
      MatrixXc grad = MatrixXc::Zero(u.rows(), u.cols());
      for (std::size_t i = 0; i < as_.size(); ++i) {
        Eigen::SelfAdjointEigenSolver<MatrixXc> es(s.off[i]);
        VectorXd pw(es.eigenvalues().size());
        for (Index k = 0; k < pw.size(); ++k) pw(k) = std::pow(es.eigenvalues()(k), p - 1);
        const MatrixXc w = off_diagonal(es.eigenvectors() * pw.cast<Complex>().asDiagonal() *
                                        es.eigenvectors().adjoint());
        grad += s.rotated[i] * w - w * s.rotated[i];
      }
      grad *= std::pow(s.total, 1.0 / p - 1.0);
      const double gnorm2 = grad.squaredNorm();
      if (gnorm2 < 1e-20) break;
      bool accepted = false;
      while (t >= 1e-12) {
        MatrixXc candidate = u * expm_anti_hermitian(-t * grad);
        State next = evaluate(candidate, p);
        if (next.value <= s.value - 1e-4 * t * gnorm2) {
          u = std::move(candidate);
          s = std::move(next);
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      if (!accepted) break;
      t *= 2.0;
    }
    return u;
  }

 private:
  struct State {
    std::vector<MatrixXc> rotated, off;
    double total = 0.0, value = 0.0;
  };

  State evaluate(const MatrixXc& u, int p) const {
    State s;
    for (const auto& a : as_) {
      MatrixXc b = symmetrized(u.adjoint() * a * u);
      MatrixXc o = off_diagonal(b);
      Eigen::SelfAdjointEigenSolver<MatrixXc> es(o, Eigen::EigenvaluesOnly);
      s.total += es.eigenvalues().array().abs().pow(p).sum();
      s.rotated.push_back(std::move(b));
      s.off.push_back(std::move(o));
    }
    s.value = std::pow(s.total, 1.0 / p);
    return s;
  }

  const std::vector<MatrixXc>& as_;
};

double max_off_norm(const std::vector<MatrixXc>& as, const MatrixXc& u) {
  double worst = 0.0;
  for (const auto& a : as) worst = std::max(worst, hermitian_norm(off_diagonal(u.adjoint() * a * u)));
  return worst;
}

MatrixXc random_unitary(Index g, Rng& rng) {
  MatrixXc x(g, g);
  for (Index c = 0; c < g; ++c)
    for (Index r = 0; r < g; ++r) {
      const double re = rng.normal();
      x(r, c) = Complex(re, rng.normal());
    }
  return Eigen::HouseholderQR<MatrixXc>(x).householderQ();
}

MatrixXc random_anti_hermitian(Index g, Rng& rng) {
  MatrixXc x(g, g);
  for (Index c = 0; c < g; ++c)
    for (Index r = 0; r < g; ++r) {
      const double re = rng.normal();
      x(r, c) = Complex(re, rng.normal());
    }
  return 0.5 * (x - x.adjoint());
}

// Rank-one cells from the columns of u, valued by the diagonal of U* A_i U.
void set_rank_one_cells(GroupModel& model, const std::vector<MatrixXc>& as,
                        const MatrixXc& u) {
  model.basis = u;
  model.cells.clear();
  model.values.clear();
  std::vector<VectorXd> diagonals;
  for (const auto& a : as) diagonals.push_back((u.adjoint() * a * u).diagonal().real());
  for (Index c = 0; c < u.cols(); ++c) {
    VectorXd zeta(static_cast<Index>(as.size()));
    for (std::size_t i = 0; i < as.size(); ++i) zeta(static_cast<Index>(i)) = diagonals[i](c);
    model.cells.emplace_back(c, 1);
    model.values.push_back(zeta);
  }
  model.refined = true;
}

void refine_group(GroupModel& model, const std::vector<MatrixXc>& as, bool all_rank_one,
                  const ClusterParams& params, Rng& rng) {
  const Index g = model.basis.rows();
  const double clustered = *std::max_element(model.clustered_error.begin(),
                                             model.clustered_error.end());
  if (all_rank_one) {
    // Every block is one-dimensional, so the group is already diagonal.
    if (clustered > 0.0) set_rank_one_cells(model, as, MatrixXc::Identity(g, g));
    return;
  }
  if (g > params.refine_max_dim || clustered == 0.0) return;

  std::vector<MatrixXc> starts{model.basis};
  starts.push_back(model.basis * expm_anti_hermitian(0.3 * random_anti_hermitian(g, rng)));
  for (int k = 0; k < params.refine_random_starts; ++k) starts.push_back(random_unitary(g, rng));

  const JointBasisDescent descent(as);
  double best = clustered;
  std::optional<MatrixXc> best_u;
  for (MatrixXc u : starts) {
    for (int p : {4, 8, 16, 32}) u = descent.run(std::move(u), p, params.refine_iterations);
    const double err = max_off_norm(as, u);
    if (err < best) {
      best = err;
      best_u = std::move(u);
    }
  }
  if (best_u) set_rank_one_cells(model, as, *best_u);
}

bool value_less(const VectorXd& a, const VectorXd& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(),
                                      b.data() + b.size());
}

// Reorders cells (and their basis columns) lexicographically by value.
void sort_cells(CommutingModel& model) {
  std::vector<std::size_t> order(model.cells.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return value_less(model.cells[a].value, model.cells[b].value);
  });
  MatrixXc basis(model.basis.rows(), model.basis.cols());
  std::vector<ModelCell> cells;
  Index filled = 0;
  for (std::size_t k : order) {
    const ModelCell& cell = model.cells[k];
    basis.middleCols(filled, cell.rank) = model.basis.middleCols(cell.first_column, cell.rank);
    cells.push_back({cell.value, filled, cell.rank});
    filled += cell.rank;
  }
  model.basis = std::move(basis);
  model.cells = std::move(cells);
}

bool nearly_equal(const std::vector<MatrixXc>& a, const std::vector<MatrixXc>& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].rows() != b[i].rows() || (a[i] - b[i]).cwiseAbs().maxCoeff() > 1e-8) return false;
  return true;
}

}  // namespace

VectorXd CommutingModel::column_values(std::size_t i) const {
  if (i >= m) throw InvalidInput("commuting model: observable index out of range");
  VectorXd diag(dim());
  for (const auto& cell : cells)
    diag.segment(cell.first_column, cell.rank).setConstant(cell.value(static_cast<Index>(i)));
  return diag;
}

HermitianOperator CommutingModel::observable(std::size_t i) const {
  const MatrixXc y =
      basis * column_values(i).cast<Complex>().asDiagonal() * basis.adjoint();
  return HermitianOperator(symmetrized(y), 1e-9);
}

HermitianOperator CommutingModel::projection(std::size_t cell) const {
  if (cell >= cells.size()) throw InvalidInput("commuting model: cell index out of range");
  const auto block = basis.middleCols(cells[cell].first_column, cells[cell].rank);
  return HermitianOperator(symmetrized(block * block.adjoint()), 1e-9);
}

double default_tau(const MeanObservableSet& set) {
  const double top = set.norm_bounds.empty()
                         ? 0.0
                         : *std::max_element(set.norm_bounds.begin(), set.norm_bounds.end());
  return top / std::sqrt(static_cast<double>(set.sites()));
}

ModelBuild sequential_joint_cluster(const MeanObservableSet& set, const ClusterParams& params) {
  if (set.operators.empty()) throw InvalidInput("sequential_joint_cluster: empty observable set");
  const std::size_t m = set.size();
  const Index dim = set.dim();
  const double tau = params.tau ? *params.tau : default_tau(set);
  if (!(tau > 0.0)) throw InvalidInput("sequential_joint_cluster: τ must be positive");
  if (params.snap && !params.mesh)
    throw InvalidInput("sequential_joint_cluster: snapping requested without a mesh");

  ModelBuild build;
  BuildReport& report = build.report;
  report.tau = tau;
  report.stage_width.assign(m, 0.0);
  report.residual.assign(m, std::vector<double>(m, 0.0));
  report.clustered_error.assign(m, 0.0);

  const auto decomposition = detail::invariant_blocks(set.operators);
  report.structured = decomposition.structured;
  report.invariant_blocks = decomposition.blocks.size();

  // Compressed operators per block, then blocks grouped into types.
  struct BlockType {
    std::vector<MatrixXc> compressed;
    std::vector<std::size_t> members;
    double radius = 0.0;
  };
  std::vector<BlockType> types;
  for (std::size_t b = 0; b < decomposition.blocks.size(); ++b) {
    const MatrixXc& block = decomposition.blocks[b];
    std::vector<MatrixXc> compressed;
    for (const auto& h : set.operators)
      compressed.push_back(symmetrized(block.adjoint() * (h.matrix() * block)));
    auto it = std::find_if(types.begin(), types.end(), [&](const BlockType& t) {
      return nearly_equal(t.compressed, compressed);
    });
    if (it == types.end()) {
      BlockType t;
      for (const auto& c : compressed) t.radius = std::max(t.radius, hermitian_norm(c));
      t.compressed = std::move(compressed);
      types.push_back(std::move(t));
      it = types.end() - 1;
    }
    it->members.push_back(b);
  }
  std::vector<std::size_t> order(types.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return types[a].radius > types[b].radius; });

  // Each group takes the next unused block of every type that still has one.
  std::vector<std::size_t> next(types.size(), 0);
  std::map<std::vector<std::size_t>, GroupModel> cache;
  Rng rng(params.seed);
  struct Placed {
    VectorXd value;
    MatrixXc columns;
  };
  std::vector<Placed> placed;
  while (true) {
    std::vector<std::size_t> members;
    for (std::size_t t : order)
      if (next[t] < types[t].members.size()) members.push_back(t);
    if (members.empty()) break;
    ++report.block_groups;

    auto cached = cache.find(members);
    if (cached == cache.end()) {
      Index g = 0;
      bool all_rank_one = true;
      for (std::size_t t : members) {
        g += types[t].compressed.front().rows();
        all_rank_one = all_rank_one && types[t].compressed.front().rows() == 1;
      }
      std::vector<MatrixXc> as(m, MatrixXc::Zero(g, g));
      Index offset = 0;
      for (std::size_t t : members) {
        const Index b = types[t].compressed.front().rows();
        for (std::size_t i = 0; i < m; ++i) as[i].block(offset, offset, b, b) = types[t].compressed[i];
        offset += b;
      }
      GroupModel model = GroupClusterer(as, tau).run();
      if (params.refine) refine_group(model, as, all_rank_one, params, rng);
      cached = cache.emplace(members, std::move(model)).first;
    }
    const GroupModel& model = cached->second;
    if (model.refined) ++report.refined_groups;
    for (std::size_t i = 0; i < m; ++i) {
      report.stage_width[i] = std::max(report.stage_width[i], model.width[i]);
      report.clustered_error[i] = std::max(report.clustered_error[i], model.clustered_error[i]);
      for (std::size_t k = 0; k < i; ++k)
        report.residual[i][k] = std::max(report.residual[i][k], model.residual[i][k]);
    }

    MatrixXc group(dim, model.basis.rows());
    Index offset = 0;
    for (std::size_t t : members) {
      const MatrixXc& block = decomposition.blocks[types[t].members[next[t]++]];
      group.middleCols(offset, block.cols()) = block;
      offset += block.cols();
    }
    const MatrixXc columns = group * model.basis;
    for (std::size_t c = 0; c < model.cells.size(); ++c)
      placed.push_back({model.values[c], columns.middleCols(model.cells[c].first,
                                                            model.cells[c].second)});
  }
  report.clustered_bound.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    double sum = 0.0;
    for (std::size_t k = 0; k < i; ++k) sum += report.residual[i][k];
    report.clustered_bound[i] = report.stage_width[i] + 2.0 * sum;
  }

  std::stable_sort(placed.begin(), placed.end(), [](const Placed& a, const Placed& b) {
    return value_less(a.value, b.value);
  });
  CommutingModel& model = build.model;
  model.m = m;
  model.basis.resize(dim, dim);
  Index filled = 0;
  for (auto& p : placed) {
    model.basis.middleCols(filled, p.columns.cols()) = p.columns;
    model.cells.push_back({std::move(p.value), filled, p.columns.cols()});
    filled += p.columns.cols();
  }
  const double top = *std::max_element(set.norm_bounds.begin(), set.norm_bounds.end());
  model.R = top > 0.0 ? 1.05 * top : 1.0;
  if (params.snap) model = snap_to_mesh(model, *params.mesh);
  return build;
}

ApproximationError approximation_error(const CommutingModel& model, const MeanObservableSet& set) {
  if (model.dim() != set.dim() || model.m != set.size())
    throw InvalidInput("approximation_error: model and observables disagree in shape");
  ApproximationError out;
  std::vector<HermitianOperator> ys;
  for (std::size_t i = 0; i < set.size(); ++i) {
    ys.push_back(model.observable(i));
    const double err = operator_norm(set.operators[i] - ys.back());
    out.per_observable.push_back(err);
    out.max_error = std::max(out.max_error, err);
  }
  for (std::size_t i = 0; i < ys.size(); ++i)
    for (std::size_t j = i + 1; j < ys.size(); ++j)
      out.max_commutator = std::max(out.max_commutator, commutator_norm(ys[i], ys[j]));
  return out;
}

std::vector<ConvergenceRow> convergence_experiment(const ObservableFamily& family,
                                                   std::span<const int> n_values,
                                                   const ClusterParams& params,
                                                   std::size_t max_dim) {
  for (int n : n_values) checked_dimension(family.d, window_sites(n), max_dim);
  std::vector<ConvergenceRow> rows;
  for (int n : n_values) {
    const auto set = build_mean_observables(family, n, max_dim);
    const auto build = sequential_joint_cluster(set, params);
    const auto err = approximation_error(build.model, set);
    ConvergenceRow row;
    row.n = n;
    row.tau = build.report.tau;
    row.errors = err.per_observable;
    row.max_error = err.max_error;
    row.max_commutator = err.max_commutator;
    row.cells = build.model.cells.size();
    row.clustered_bound = build.report.clustered_bound;
    row.clustered_error = build.report.clustered_error;
    rows.push_back(std::move(row));
  }
  return rows;
}

CommutingModel snap_to_mesh(const CommutingModel& model, const MeshPointSet& mesh) {
  const auto points = mesh.all_points();
  if (points.empty()) throw InvalidInput("snap_to_mesh: mesh is empty");
  if (static_cast<std::size_t>(points.front().size()) != model.m)
    throw InvalidInput("snap_to_mesh: mesh dimension differs from the model's");
  CommutingModel out = model;
  for (auto& cell : out.cells) {
    const VectorXd* best = &points.front();
    for (const auto& p : points)
      if ((p - cell.value).norm() < (*best - cell.value).norm()) best = &p;
    cell.value = *best;
  }
  sort_cells(out);
  return out;
}

}  // namespace macrolab
