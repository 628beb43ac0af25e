#pragma once

#include "macrolab/experiment.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace macrolab {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitInvalidInput = 2;
inline constexpr int kExitInconclusive = 3;

/// Subcommand names in display order.
const std::vector<std::string>& command_names();

/// Output file name of each subcommand.
std::string command_output(const std::string& name);

/// Runs a subcommand and writes its artifact(s) into out_dir. All content is
/// computed before anything is written. Returns the file names written.
std::vector<std::string> run_command(const std::string& name, const ExperimentConfig& config,
                                     const std::filesystem::path& out_dir);

struct CommandOptions {
  std::filesystem::path config;
  std::filesystem::path out_dir = ".";
  std::uint64_t seed = 0;
  std::size_t max_dim = kDefaultMaxDim;
};

/// Loads the config, runs the command and maps failures to exit codes:
/// 2 for invalid input, 3 for an inconclusive solver verdict, 1 otherwise.
/// Diagnostics go to `err`.
int run_command_main(const std::string& name, const CommandOptions& options,
                     std::ostream& err);

}  // namespace macrolab
