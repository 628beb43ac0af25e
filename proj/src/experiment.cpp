#include "macrolab/experiment.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace macrolab {

namespace {

using nlohmann::json;

[[noreturn]] void reject(const std::string& what) { throw InvalidInput("config: " + what); }

double number(const json& j, const std::string& key) {
  if (!j.is_number()) reject("'" + key + "' must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) reject("'" + key + "' must be finite");
  return v;
}

double positive(const json& j, const std::string& key) {
  const double v = number(j, key);
  if (!(v > 0.0)) reject("'" + key + "' must be positive");
  return v;
}

int integer(const json& j, const std::string& key) {
  if (!j.is_number_integer()) reject("'" + key + "' must be an integer");
  return j.get<int>();
}

bool boolean(const json& j, const std::string& key) {
  if (!j.is_boolean()) reject("'" + key + "' must be true or false");
  return j.get<bool>();
}

Complex entry(const json& pair, const std::string& key) {
  if (pair.is_number()) return {pair.get<double>(), 0.0};
  if (!pair.is_array() || pair.size() != 2)
    reject("'" + key + "' entries must be numbers or [re, im] pairs");
  return {number(pair[0], key), number(pair[1], key)};
}

// Row-major matrix: either a flat list of d² entries or a list of d rows of
// d entries, where an entry is a real number or an [re, im] pair. A flat list
// of pairs never has rows of length equal to its own length, so the two
// layouts cannot be confused.
MatrixXc matrix(const json& j, const std::string& key) {
  if (!j.is_array() || j.empty()) reject("'" + key + "' must be a non-empty array");
  const bool nested = j[0].is_array() && j[0].size() == j.size() &&
                      (j[0][0].is_array() || j[0][0].is_number());
  if (nested) {
    const Index d = static_cast<Index>(j.size());
    MatrixXc m(d, d);
    for (Index r = 0; r < d; ++r) {
      const json& row = j[static_cast<std::size_t>(r)];
      if (!row.is_array() || static_cast<Index>(row.size()) != d)
        reject("'" + key + "' rows must all have length " + std::to_string(d));
      for (Index c = 0; c < d; ++c) m(r, c) = entry(row[static_cast<std::size_t>(c)], key);
    }
    return m;
  }
  const Index d = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(j.size()))));
  if (d * d != static_cast<Index>(j.size()))
    reject("'" + key + "' must hold d² entries");
  MatrixXc m(d, d);
  for (Index r = 0; r < d; ++r)
    for (Index c = 0; c < d; ++c) m(r, c) = entry(j[static_cast<std::size_t>(r * d + c)], key);
  return m;
}

HermitianOperator hermitian(const json& j, const std::string& key) {
  try {
    return HermitianOperator(matrix(j, key));
  } catch (const InvalidInput& e) {
    reject("'" + key + "': " + e.what());
  }
}

ObservableFamily preset_family(const std::string& name) {
  if (name == "pauli_z") return ObservableFamily::make({pauli_z()});
  if (name == "pauli_x") return ObservableFamily::make({pauli_x()});
  if (name == "pauli_xy") return ObservableFamily::make({pauli_x(), pauli_y()});
  if (name == "pauli_xz") return ObservableFamily::make({pauli_x(), pauli_z()});
  if (name == "pauli_zx") return ObservableFamily::make({pauli_z(), pauli_x()});
  if (name == "pauli_xyz") return ObservableFamily::make({pauli_x(), pauli_y(), pauli_z()});
  if (name == "z_diag12") {
    VectorXd v(2);
    v << 1.0, 2.0;
    return ObservableFamily::make({pauli_z(), HermitianOperator::diagonal(v)});
  }
  reject("unknown family preset '" + name + "'");
}

ObservableFamily family(const json& j) {
  if (j.is_string()) return preset_family(j.get<std::string>());
  if (!j.is_object() || !j.contains("generators")) reject("'family' needs 'generators'");
  std::vector<HermitianOperator> gens;
  for (const auto& g : j.at("generators")) gens.push_back(hermitian(g, "generators"));
  ObservableFamily fam = ObservableFamily::make(std::move(gens));
  if (j.contains("d") && integer(j.at("d"), "family.d") != fam.d)
    reject("'family.d' disagrees with the generator dimension");
  return fam;
}

Interaction interaction(const json& j) {
  if (!j.is_object()) reject("each interaction must be an object");
  for (const char* key : {"d", "range", "terms"})
    if (!j.contains(key)) reject(std::string("interaction needs '") + key + "'");
  std::map<int, HermitianOperator> terms;
  if (!j.at("terms").is_object()) reject("'terms' must map lengths to matrices");
  for (const auto& [len, term] : j.at("terms").items()) {
    int value = 0;
    const auto res = std::from_chars(len.data(), len.data() + len.size(), value);
    if (res.ec != std::errc() || res.ptr != len.data() + len.size())
      reject("interaction term key '" + len + "' is not an integer");
    terms.emplace(value, hermitian(term, "terms." + len));
  }
  return Interaction::make(integer(j.at("d"), "d"), integer(j.at("range"), "range"),
                           std::move(terms));
}

GridSpec grid(const json& j, const std::string& key) {
  if (!j.is_object()) reject("'" + key + "' must be {min, max, step}");
  for (const char* k : {"min", "max", "step"})
    if (!j.contains(k)) reject("'" + key + "' needs '" + k + "'");
  GridSpec g{number(j.at("min"), key), number(j.at("max"), key),
             positive(j.at("step"), key + ".step")};
  if (g.max < g.min) reject("'" + key + "' has max < min");
  if ((g.max - g.min) / g.step > 1e6) reject("'" + key + "' has too many points");
  return g;
}

void apply_solver(const json& j, DualSolverSettings& s) {
  if (!j.is_object()) reject("'solver' must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "gradient_tol") s.gradient_tol = positive(value, key);
    else if (key == "max_iterations") s.max_iterations = integer(value, key);
    else if (key == "divergence_threshold") s.divergence_threshold = positive(value, key);
    else if (key == "decrease_floor") s.decrease_floor = positive(value, key);
    else if (key == "boundary_curvature") s.boundary_curvature = positive(value, key);
    else reject("unknown solver key '" + key + "'");
  }
  if (s.max_iterations < 1) reject("'solver.max_iterations' must be >= 1");
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) h = (h ^ c) * 1099511628211ull;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

std::vector<double> GridSpec::values() const {
  std::vector<double> out;
  const auto count = static_cast<long long>(std::floor((max - min) / step + 1e-9));
  for (long long k = 0; k <= count; ++k) out.push_back(min + static_cast<double>(k) * step);
  return out;
}

const ObservableFamily& ExperimentConfig::require_family() const {
  if (!family) reject("missing 'family'");
  return *family;
}

const std::vector<int>& ExperimentConfig::require_n_values() const {
  if (n_values.empty()) reject("missing 'n_values'");
  return n_values;
}

double ExperimentConfig::require_epsilon() const {
  if (!epsilon) reject("missing 'epsilon'");
  return *epsilon;
}

double ExperimentConfig::require_eta() const {
  if (!eta) reject("missing 'eta'");
  return *eta;
}

const VectorXd& ExperimentConfig::require_center() const {
  if (!center) reject("missing 'x'");
  return *center;
}

const MatrixXc& ExperimentConfig::require_rho() const {
  if (!rho) reject("missing 'rho'");
  return *rho;
}

const std::vector<Interaction>& ExperimentConfig::require_interactions() const {
  if (interactions.empty()) reject("missing 'interactions'");
  return interactions;
}

ExperimentConfig parse_config(const std::string& text, std::uint64_t seed,
                              std::size_t max_dim) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    reject(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) reject("top level must be a JSON object");

  ExperimentConfig cfg;
  cfg.seed = seed;
  cfg.max_dim = max_dim;
  cfg.hash = fnv1a_hex(j.dump() + "|seed=" + std::to_string(seed) +
                       "|max_dim=" + std::to_string(max_dim));
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "family") {
        cfg.family = family(value);
      } else if (key == "interactions") {
        if (!value.is_array()) reject("'interactions' must be an array");
        for (const auto& phi : value) cfg.interactions.push_back(interaction(phi));
      } else if (key == "n_values") {
        if (!value.is_array()) reject("'n_values' must be an array");
        for (const auto& n : value) {
          const int v = integer(n, key);
          if (v < 0) reject("'n_values' entries must be >= 0");
          cfg.n_values.push_back(v);
        }
      } else if (key == "alpha_grid") {
        cfg.alpha_grid = grid(value, key);
      } else if (key == "x_grid") {
        cfg.x_grid = grid(value, key);
      } else if (key == "random_points") {
        cfg.random_points = integer(value, key);
        if (cfg.random_points < 0) reject("'random_points' must be >= 0");
      } else if (key == "x") {
        if (!value.is_array() || value.empty()) reject("'x' must be a non-empty array");
        VectorXd x(static_cast<Index>(value.size()));
        for (std::size_t i = 0; i < value.size(); ++i) x(static_cast<Index>(i)) = number(value[i], key);
        cfg.center = x;
      } else if (key == "epsilon") {
        cfg.epsilon = positive(value, key);
      } else if (key == "box") {
        if (value == "closed") cfg.box = BoxKind::Closed;
        else if (value == "open") cfg.box = BoxKind::Open;
        else reject("'box' must be \"closed\" or \"open\"");
      } else if (key == "eta") {
        cfg.eta = positive(value, key);
      } else if (key == "mesh_resolution") {
        cfg.mesh_resolution = positive(value, key);
      } else if (key == "ladder_grid_step") {
        cfg.ladder_grid_step = positive(value, key);
      } else if (key == "tau") {
        cfg.tau = positive(value, key);
      } else if (key == "refine") {
        cfg.refine = boolean(value, key);
      } else if (key == "snap") {
        cfg.snap = boolean(value, key);
      } else if (key == "write_model") {
        cfg.write_model = boolean(value, key);
      } else if (key == "rho") {
        cfg.rho = matrix(value, key);
      } else if (key == "eps_values") {
        if (!value.is_array()) reject("'eps_values' must be an array");
        for (const auto& e : value) {
          const double v = number(e, key);
          if (!(v > 0.0 && v < 1.0)) reject("'eps_values' entries must lie in (0, 1)");
          cfg.eps_values.push_back(v);
        }
      } else if (key == "M") {
        if (!value.is_array()) reject("'M' must be an array of block sizes");
        for (const auto& m : value) cfg.block_sizes.push_back(integer(m, key));
      } else if (key == "solver") {
        apply_solver(value, cfg.solver);
      } else {
        reject("unknown key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    reject(std::string("type error: ") + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, std::uint64_t seed,
                             std::size_t max_dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) reject("cannot read '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), seed, max_dim);
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_atomically(const std::filesystem::path& dir, const std::string& name,
                      const std::string& content) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InvalidInput("cannot create output directory '" + dir.string() + "'");
  const auto target = dir / name;
  const auto temp = dir / (name + ".tmp");
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot write '" + temp.string() + "'");
    out << content;
    if (!out.flush()) {
      std::filesystem::remove(temp, ec);
      throw InvalidInput("failed writing '" + temp.string() + "'");
    }
  }
  std::filesystem::rename(temp, target, ec);
  if (ec) {
    std::filesystem::remove(temp, ec);
    throw InvalidInput("cannot move output into '" + target.string() + "'");
  }
}

}  // namespace macrolab
