#pragma once

#include "macrolab/approx.hpp"
#include "macrolab/macro_obs.hpp"
#include "macrolab/spectra.hpp"
#include "macrolab/thermo.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace macrolab {

/// Inclusive arithmetic grid min, min+step, ..., max (within step·1e-9).
struct GridSpec {
  double min = 0.0;
  double max = 0.0;
  double step = 1.0;

  std::vector<double> values() const;
};

/// Parsed experiment configuration. Every field is optional at parse time;
/// commands ask for what they need through the require_* accessors, which
/// throw InvalidInput naming the missing key.
struct ExperimentConfig {
  std::optional<ObservableFamily> family;
  std::vector<Interaction> interactions;
  std::vector<int> n_values;
  std::optional<GridSpec> alpha_grid;
  std::optional<GridSpec> x_grid;
  int random_points = 0;
  std::optional<VectorXd> center;
  std::optional<double> epsilon;
  BoxKind box = BoxKind::Closed;
  std::optional<double> eta;
  std::optional<double> mesh_resolution;
  double ladder_grid_step = 0.05;
  std::optional<double> tau;
  bool refine = true;
  bool snap = false;
  bool write_model = false;
  std::optional<MatrixXc> rho;
  std::vector<double> eps_values;
  std::vector<int> block_sizes;
  DualSolverSettings solver;

  std::uint64_t seed = 0;
  std::size_t max_dim = kDefaultMaxDim;
  /// FNV-1a of the canonical JSON text, the seed and the dimension cap.
  std::string hash;

  const ObservableFamily& require_family() const;
  const std::vector<int>& require_n_values() const;
  double require_epsilon() const;
  double require_eta() const;
  const VectorXd& require_center() const;
  const MatrixXc& require_rho() const;
  const std::vector<Interaction>& require_interactions() const;
};

/// Parses the JSON text. Malformed JSON or invalid values throw InvalidInput.
ExperimentConfig parse_config(const std::string& text, std::uint64_t seed = 0,
                              std::size_t max_dim = kDefaultMaxDim);

ExperimentConfig load_config(const std::filesystem::path& path, std::uint64_t seed = 0,
                             std::size_t max_dim = kDefaultMaxDim);

/// Shortest round-trip decimal; "inf", "-inf", "nan" for non-finite values.
std::string format_number(double v);

/// Writes `content` to dir/name through a temporary file and a rename, so a
/// failed run never leaves a partial file behind.
void write_atomically(const std::filesystem::path& dir, const std::string& name,
                      const std::string& content);

}  // namespace macrolab
