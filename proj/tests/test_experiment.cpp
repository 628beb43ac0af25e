#include "macrolab/commands.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace macrolab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("macrolab_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("format_number round-trips and names non-finite values") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(-2.0) == "-2");
  CHECK(format_number(1.0 / 3.0) == "0.3333333333333333");
  CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(format_number(std::nan("")) == "nan");
}

TEST_CASE("grid values include both ends") {
  const GridSpec g{-1.0, 1.0, 0.5};
  const auto v = g.values();
  REQUIRE(v.size() == 5);
  CHECK(v.front() == -1.0);
  CHECK(v.back() == 1.0);
  CHECK(GridSpec{0.0, 0.3, 0.1}.values().size() == 4);
}

TEST_CASE("config parsing: presets, matrices and interactions") {
  const auto cfg = parse_config(R"({
    "family": {"generators": [[[0,1],[1,0]], [[[1,0],[0,0]], [[0,0],[-1,0]]]]},
    "interactions": [{"d": 2, "range": 2,
                      "terms": {"2": [[1,0,0,0],[0,-1,0,0],[0,0,-1,0],[0,0,0,1]]}}],
    "n_values": [1, 2], "epsilon": 0.1, "x": [0.1, 0.2], "M": [2],
    "rho": [[0.9, 0], [0, 0.1]], "box": "open", "solver": {"max_iterations": 50}
  })");
  const auto& fam = cfg.require_family();
  CHECK(fam.size() == 2);
  CHECK((fam.generators[0].matrix() - pauli_x().matrix()).norm() == 0.0);
  CHECK((fam.generators[1].matrix() - pauli_z().matrix()).norm() == 0.0);
  CHECK(cfg.require_interactions().size() == 1);
  CHECK(cfg.box == BoxKind::Open);
  CHECK(cfg.solver.max_iterations == 50);
  CHECK(cfg.require_rho()(0, 0).real() == 0.9);
  CHECK(cfg.block_sizes == std::vector<int>{2});
  CHECK(parse_config(R"({"family": "pauli_xyz"})").require_family().size() == 3);
}

TEST_CASE("config parsing rejects bad input with InvalidInput") {
  CHECK_THROWS_AS(parse_config("{not json"), InvalidInput);
  CHECK_THROWS_AS(parse_config("[1, 2]"), InvalidInput);
  CHECK_THROWS_AS(parse_config(R"({"bogus": 1})"), InvalidInput);
  CHECK_THROWS_AS(parse_config(R"({"family": "pauli_w"})"), InvalidInput);
  CHECK_THROWS_AS(parse_config(R"({"epsilon": -0.1})"), InvalidInput);
  CHECK_THROWS_AS(parse_config(R"({"n_values": [1.5]})"), InvalidInput);
  CHECK_THROWS_AS(parse_config(R"({"family": {"generators": [[[0,1],[0,0]]]}})"), InvalidInput);
  CHECK_THROWS_AS(parse_config(R"({"rho": [1, 2, 3]})"), InvalidInput);
  CHECK_THROWS_AS(parse_config("{}").require_family(), InvalidInput);
  CHECK_THROWS_AS(parse_config("{}").require_epsilon(), InvalidInput);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), InvalidInput);
}

TEST_CASE("config hash depends on content, seed and dimension cap") {
  const std::string text = R"({"family": "pauli_z", "epsilon": 0.1})";
  const std::string reordered = R"({"epsilon": 0.1, "family": "pauli_z"})";
  CHECK(parse_config(text).hash == parse_config(reordered).hash);
  CHECK(parse_config(text, 1).hash != parse_config(text, 2).hash);
  CHECK(parse_config(text, 1, 100).hash != parse_config(text, 1, 200).hash);
  CHECK(parse_config(text).hash != parse_config(R"({"family": "pauli_z", "epsilon": 0.2})").hash);
}

TEST_CASE("write_atomically replaces content and leaves no temporary file") {
  const auto dir = fresh_dir("atomic");
  write_atomically(dir, "a.txt", "first");
  write_atomically(dir, "a.txt", "second");
  CHECK(slurp(dir / "a.txt") == "second");
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++files;
  CHECK(files == 1);
  write_atomically(dir / "nested", "b.txt", "x");
  CHECK(slurp(dir / "nested" / "b.txt") == "x");
}

TEST_CASE("commands write their artifacts with the config hash") {
  const auto dir = fresh_dir("commands");
  const auto cfg = parse_config(R"({
    "family": "pauli_z", "n_values": [1, 2], "epsilon": 0.1, "x": [0.3],
    "rho": [[0.9, 0], [0, 0.1]], "alpha_grid": {"min": -1, "max": 1, "step": 1},
    "x_grid": {"min": -1.2, "max": 1.2, "step": 0.4}, "random_points": 3,
    "write_model": true,
    "interactions": [{"d": 2, "range": 2,
                      "terms": {"2": [[1,0,0,0],[0,-1,0,0],[0,0,-1,0],[0,0,0,1]]}}],
    "M": [1]
  })", 5);
  for (const auto& name : command_names()) {
    CAPTURE(name);
    const auto written = run_command(name, cfg, dir);
    REQUIRE(!written.empty());
    CHECK(written.front() == command_output(name));
    const std::string text = slurp(dir / written.front());
    CHECK(text.find(cfg.hash) != std::string::npos);
  }
  CHECK(fs::exists(dir / "model_n2.json"));
  const std::string entropy = slurp(dir / "entropy.csv");
  CHECK(entropy.find("-1.2,-inf,outside") != std::string::npos);
  CHECK(entropy.find(",interior") != std::string::npos);
  CHECK_THROWS_AS(run_command("nope", cfg, dir), InvalidInput);
}

TEST_CASE("run_command_main maps failures to exit codes without partial output") {
  const auto dir = fresh_dir("exit_codes");
  const fs::path bad = dir / "bad.json";
  std::ofstream(bad) << "{\"family\": ";
  std::ostringstream err;
  CommandOptions opts;
  opts.config = bad;
  opts.out_dir = dir / "out";
  CHECK(run_command_main("entropy", opts, err) == kExitInvalidInput);
  CHECK(!fs::exists(dir / "out" / "entropy.csv"));
  CHECK(err.str().find("invalid input") != std::string::npos);

  // A solver budget of one Newton step cannot settle an off-centre point.
  const fs::path starved = dir / "starved.json";
  std::ofstream(starved) << R"({"family": "pauli_zx", "x_grid": {"min": 0.5, "max": 0.5, "step": 1},
                                "solver": {"max_iterations": 1}})";
  opts.config = starved;
  CHECK(run_command_main("entropy", opts, err) == kExitInconclusive);
  CHECK(!fs::exists(dir / "out" / "entropy.csv"));

  const fs::path good = dir / "good.json";
  std::ofstream(good) << R"({"family": "pauli_z", "n_values": [2], "rho": [[0.5,0],[0,0.5]],
                             "epsilon": 0.2})";
  opts.config = good;
  CHECK(run_command_main("beta", opts, err) == kExitOk);
  CHECK(fs::exists(dir / "out" / "beta.csv"));

  // The dimension cap turns an oversized window into invalid input.
  opts.max_dim = 16;
  CHECK(run_command_main("approx", opts, err) == kExitInvalidInput);
}
