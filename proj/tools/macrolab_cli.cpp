#include "macrolab/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"macrolab: macroscopic observables on finite quantum spin chains"};
  app.require_subcommand(1);

  macrolab::CommandOptions options;
  std::string command;
  for (const auto& name : macrolab::command_names()) {
    auto* sub = app.add_subcommand(name, "write " + macrolab::command_output(name));
    sub->add_option("--config", options.config, "experiment JSON")->required();
    sub->add_option("--out", options.out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", options.seed, "seed for sampled points and random starts")
        ->capture_default_str();
    sub->add_option("--max-dim", options.max_dim, "largest dense dimension d^(2n+1)")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->callback([&command, name] { command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : macrolab::kExitInvalidInput;
  }
  return macrolab::run_command_main(command, options, std::cerr);
}
