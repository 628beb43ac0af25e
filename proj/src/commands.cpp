#include "macrolab/commands.hpp"

#include "macrolab/random.hpp"

#include <json.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <ostream>
#include <sstream>

namespace macrolab {

namespace {

using nlohmann::json;

class Csv {
 public:
  Csv(const std::string& hash, const std::vector<std::string>& header) {
    out_ << "# config_hash=" << hash << '\n';
    row(header);
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) out_ << (k ? "," : "") << cells[k];
    out_ << '\n';
  }

  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

std::vector<std::string> indexed(const std::string& stem, std::size_t m) {
  std::vector<std::string> out;
  for (std::size_t i = 1; i <= m; ++i) out.push_back(stem + "_" + std::to_string(i));
  return out;
}

template <typename... Parts>
std::vector<std::string> concat(Parts&&... parts) {
  std::vector<std::string> out;
  (out.insert(out.end(), parts.begin(), parts.end()), ...);
  return out;
}

std::vector<std::string> numbers(const VectorXd& v) {
  std::vector<std::string> out;
  for (Index i = 0; i < v.size(); ++i) out.push_back(format_number(v(i)));
  return out;
}

std::vector<std::string> numbers(const std::vector<double>& v) {
  std::vector<std::string> out;
  for (double x : v) out.push_back(format_number(x));
  return out;
}

// Tensor grid with the first coordinate varying slowest.
std::vector<VectorXd> tensor_grid(const std::vector<double>& axis, std::size_t m) {
  std::vector<VectorXd> points;
  std::vector<std::size_t> k(m, 0);
  if (axis.empty()) return points;
  while (true) {
    VectorXd p(static_cast<Index>(m));
    for (std::size_t i = 0; i < m; ++i) p(static_cast<Index>(i)) = axis[k[i]];
    points.push_back(p);
    std::size_t pos = m;
    while (pos > 0 && ++k[pos - 1] == axis.size()) k[--pos] = 0;
    if (pos == 0) break;
  }
  return points;
}

void check_n_values(const ExperimentConfig& cfg, int d) {
  for (int n : cfg.require_n_values()) checked_dimension(d, window_sites(n), cfg.max_dim);
}

ClusterParams cluster_params(const ExperimentConfig& cfg, const EntropyProfile* profile) {
  ClusterParams params;
  params.tau = cfg.tau;
  params.refine = cfg.refine;
  params.seed = cfg.seed;
  params.snap = cfg.snap;
  if (cfg.snap) {
    const double eps = cfg.require_epsilon();
    const double eta = cfg.eta.value_or(2.0 * eps);
    LadderSettings settings;
    settings.grid_step = cfg.ladder_grid_step;
    const auto ladder = contour_ladder(*profile, eps, settings);
    params.mesh = mesh_points(*profile, ladder, eta, cfg.mesh_resolution.value_or(0.0));
  }
  return params;
}

std::string cmd_freeenergy(const ExperimentConfig& cfg) {
  const FreeEnergySurface surface(cfg.require_family());
  const std::size_t m = surface.size();
  const GridSpec grid = cfg.alpha_grid.value_or(GridSpec{-2.0, 2.0, 1.0});
  Csv csv(cfg.hash, concat(indexed("alpha", m), std::vector<std::string>{"p"},
                           indexed("grad", m), std::vector<std::string>{"min_hessian_eig"}));
  for (const auto& alpha : tensor_grid(grid.values(), m)) {
    const auto ev = surface.evaluate(alpha);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(ev.hessian, Eigen::EigenvaluesOnly);
    csv.row(concat(numbers(alpha), std::vector<std::string>{format_number(ev.value)},
                   numbers(ev.gradient),
                   std::vector<std::string>{format_number(es.eigenvalues()(0))}));
  }
  return csv.str();
}

std::string cmd_entropy(const ExperimentConfig& cfg) {
  const EntropyProfile profile(cfg.require_family(), cfg.solver);
  const std::size_t m = profile.size();
  const GridSpec grid = cfg.x_grid.value_or(
      GridSpec{profile.box_lower().minCoeff() - 0.2, profile.box_upper().maxCoeff() + 0.2, 0.1});
  std::vector<VectorXd> points = tensor_grid(grid.values(), m);
  Rng rng(cfg.seed);
  for (int k = 0; k < cfg.random_points; ++k) {
    VectorXd p(static_cast<Index>(m));
    for (Index i = 0; i < p.size(); ++i) p(i) = rng.uniform(grid.min, grid.max);
    points.push_back(p);
  }
  Csv csv(cfg.hash, concat(indexed("x", m), std::vector<std::string>{"mu", "membership"}));
  for (const auto& x : points) {
    const auto res = profile.solve(x);
    csv.row(concat(numbers(x), std::vector<std::string>{format_number(res.value),
                                                         to_string(res.membership)}));
  }
  return csv.str();
}

json to_json(const VectorXd& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

std::string cmd_contours(const ExperimentConfig& cfg) {
  const EntropyProfile profile(cfg.require_family(), cfg.solver);
  const double eps = cfg.require_epsilon();
  const double eta = cfg.eta.value_or(2.0 * eps);
  LadderSettings settings;
  settings.grid_step = cfg.ladder_grid_step;
  const auto ladder = contour_ladder(profile, eps, settings);
  const auto mesh = mesh_points(profile, ladder, eta, cfg.mesh_resolution.value_or(0.0));

  json out;
  out["config_hash"] = cfg.hash;
  out["epsilon"] = ladder.epsilon;
  out["C"] = ladder.C;
  out["x0"] = to_json(ladder.x0);
  out["ladder_grid_step"] = ladder.grid_step;
  out["levels"] = ladder.levels;
  json layers = json::array();
  for (std::size_t i = 0; i < mesh.layers.size(); ++i) {
    json layer;
    layer["index"] = i;
    layer["points"] = json::array();
    for (const auto& p : mesh.layers[i]) layer["points"].push_back(to_json(p));
    layer["mu"] = mesh.mu[i];
    layers.push_back(layer);
  }
  out["mesh"] = {{"eta", mesh.eta}, {"resolution", mesh.resolution}, {"layers", layers}};
  return out.dump(2) + "\n";
}

json model_json(const CommutingModel& model, const std::string& hash, int n) {
  json out;
  out["config_hash"] = hash;
  out["n"] = n;
  out["dim"] = model.dim();
  out["R"] = model.R;
  out["cells"] = json::array();
  for (const auto& cell : model.cells)
    out["cells"].push_back(
        {{"value", to_json(cell.value)}, {"first_column", cell.first_column}, {"rank", cell.rank}});
  // Dense bases are only worth serializing for small windows.
  if (model.dim() <= 256) {
    json basis = json::array();
    for (Index r = 0; r < model.dim(); ++r)
      for (Index c = 0; c < model.dim(); ++c)
        basis.push_back({model.basis(r, c).real(), model.basis(r, c).imag()});
    out["basis"] = basis;
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> cmd_approx(const ExperimentConfig& cfg) {
  const auto& family = cfg.require_family();
  check_n_values(cfg, family.d);
  const std::size_t m = family.size();
  std::optional<EntropyProfile> profile;
  if (cfg.snap) profile.emplace(family, cfg.solver);
  const ClusterParams params = cluster_params(cfg, profile ? &*profile : nullptr);

  std::vector<std::pair<std::string, std::string>> files;
  Csv csv(cfg.hash, concat(std::vector<std::string>{"n", "tau"}, indexed("error", m),
                           std::vector<std::string>{"max_error", "max_commutator", "cells"},
                           indexed("clustered_bound", m)));
  for (int n : cfg.n_values) {
    const auto set = build_mean_observables(family, n, cfg.max_dim);
    const auto build = sequential_joint_cluster(set, params);
    const auto err = approximation_error(build.model, set);
    csv.row(concat(std::vector<std::string>{std::to_string(n), format_number(build.report.tau)},
                   numbers(err.per_observable),
                   std::vector<std::string>{format_number(err.max_error),
                                            format_number(err.max_commutator),
                                            std::to_string(build.model.cells.size())},
                   numbers(build.report.clustered_bound)));
    if (cfg.write_model)
      files.emplace_back("model_n" + std::to_string(n) + ".json",
                         model_json(build.model, cfg.hash, n).dump(2) + "\n");
  }
  files.insert(files.begin(), {command_output("approx"), csv.str()});
  return files;
}

std::string cmd_rankrate(const ExperimentConfig& cfg) {
  const auto& family = cfg.require_family();
  check_n_values(cfg, family.d);
  const EntropyProfile profile(family, cfg.solver);
  const VectorXd& x = cfg.require_center();
  if (static_cast<std::size_t>(x.size()) != family.size())
    throw InvalidInput("config: 'x' must have one entry per generator");
  ModelSupplier supplier;
  if (family.size() >= 2) {
    const ClusterParams params = cluster_params(cfg, &profile);
    supplier = [params](const MeanObservableSet& set) {
      return sequential_joint_cluster(set, params).model;
    };
  }
  const auto records = rank_rate(profile, x, cfg.require_epsilon(), cfg.n_values, cfg.box,
                                 supplier, cfg.max_dim);
  Csv csv(cfg.hash, concat(std::vector<std::string>{"n"}, indexed("x", family.size()),
                           std::vector<std::string>{"eps", "rank", "rate", "target_sup_mu"}));
  for (const auto& r : records)
    csv.row(concat(std::vector<std::string>{std::to_string(r.n)}, numbers(r.x),
                   std::vector<std::string>{format_number(r.eps), std::to_string(r.rank),
                                            format_number(r.rate),
                                            format_number(r.target_sup_mu)}));
  return csv.str();
}

std::string cmd_beta(const ExperimentConfig& cfg) {
  const ProductState state = ProductState::make(cfg.require_rho());
  std::vector<double> eps_values = cfg.eps_values;
  if (eps_values.empty()) eps_values.push_back(cfg.require_epsilon());
  const double entropy = mean_entropy_product(state);
  Csv csv(cfg.hash, {"n", "eps", "rank", "beta", "beta_per_site", "entropy"});
  for (int n : cfg.require_n_values())
    for (double eps : eps_values) {
      const auto res = beta_min_rank(state, eps, n);
      csv.row({std::to_string(n), format_number(eps), std::to_string(res.rank),
               format_number(res.beta), format_number(res.beta / window_sites(n)),
               format_number(entropy)});
    }
  return csv.str();
}

std::string cmd_coarsegrain(const ExperimentConfig& cfg) {
  const auto& phis = cfg.require_interactions();
  if (cfg.block_sizes.empty()) throw InvalidInput("config: missing 'M'");
  check_n_values(cfg, phis.front().d);
  Csv csv(cfg.hash, {"M", "n", "i", "norm_diff", "tail_long_range", "tail_outside_block",
                     "tail_max", "boundary_bound", "bound"});
  for (int M : cfg.block_sizes)
    for (int n : cfg.n_values) {
      const auto k = coarse_grain(phis, M, n, cfg.max_dim);
      const auto h = build_interaction_means(phis, n, cfg.max_dim);
      for (std::size_t i = 0; i < phis.size(); ++i) {
        const double diff = operator_norm(k.operators[i] - h.operators[i]);
        const auto tails = coarse_grain_tail(phis[i], M);
        const double boundary = coarse_grain_boundary_bound(phis[i], M, n);
        csv.row({std::to_string(M), std::to_string(n), std::to_string(i + 1),
                 format_number(diff), format_number(tails.long_range),
                 format_number(tails.outside_block), format_number(tails.max()),
                 format_number(boundary), format_number(tails.max() + boundary)});
      }
    }
  return csv.str();
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"freeenergy", "entropy", "contours", "approx",
                                              "rankrate",   "beta",    "coarsegrain"};
  return names;
}

std::string command_output(const std::string& name) {
  return name == "contours" ? "contours.json" : name + ".csv";
}

std::vector<std::string> run_command(const std::string& name, const ExperimentConfig& cfg,
                                     const std::filesystem::path& out_dir) {
  std::vector<std::pair<std::string, std::string>> files;
  if (name == "freeenergy") files.emplace_back(command_output(name), cmd_freeenergy(cfg));
  else if (name == "entropy") files.emplace_back(command_output(name), cmd_entropy(cfg));
  else if (name == "contours") files.emplace_back(command_output(name), cmd_contours(cfg));
  else if (name == "approx") files = cmd_approx(cfg);
  else if (name == "rankrate") files.emplace_back(command_output(name), cmd_rankrate(cfg));
  else if (name == "beta") files.emplace_back(command_output(name), cmd_beta(cfg));
  else if (name == "coarsegrain") files.emplace_back(command_output(name), cmd_coarsegrain(cfg));
  else throw InvalidInput("unknown command '" + name + "'");

  std::vector<std::string> written;
  for (const auto& [file, content] : files) {
    write_atomically(out_dir, file, content);
    written.push_back(file);
  }
  return written;
}

int run_command_main(const std::string& name, const CommandOptions& options,
                     std::ostream& err) {
  try {
    const auto cfg = load_config(options.config, options.seed, options.max_dim);
    run_command(name, cfg, options.out_dir);
    return kExitOk;
  } catch (const InvalidInput& e) {
    err << "macrolab " << name << ": invalid input: " << e.what() << '\n';
    return kExitInvalidInput;
  } catch (const Inconclusive& e) {
    err << "macrolab " << name << ": inconclusive: " << e.what() << '\n';
    return kExitInconclusive;
  } catch (const std::exception& e) {
    err << "macrolab " << name << ": error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace macrolab
