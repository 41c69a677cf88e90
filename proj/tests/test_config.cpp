#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "ionlattice/config.hpp"
#include "ionlattice/csv.hpp"
#include "ionlattice/run.hpp"

using namespace ionlattice;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& contents) {
    static int counter = 0;
    path = "test_config_tmp_" + std::to_string(counter++) + ".txt";
    std::ofstream out(path);
    out << contents;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace

TEST_CASE("defaults describe the 35-ion calcium operating point") {
  const ExperimentConfig cfg = resolve("", {});
  CHECK(cfg.ion_count == 35);
  CHECK(cfg.axial_frequency_hz == Catch::Approx(1e5));
  CHECK(cfg.period_nm == Catch::Approx(202.5));
  CHECK(cfg.depth_per_watt_h_mhz == Catch::Approx(4.6));
  CHECK(cfg.power_w == Catch::Approx(1.5));
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("overrides beat file values, file values beat defaults") {
  TempFile file(
      "[trap]\n"
      "ion_count = 5\n"
      "axial_frequency_hz = 2e5  # inline comment\n"
      "\n"
      "[lattice]\n"
      "power_w = 0.7\n");
  const ExperimentConfig cfg =
      resolve(file.path, {"trap.ion_count=3", "run.seed=99"});
  CHECK(cfg.ion_count == 3);                       // CLI wins
  CHECK(cfg.axial_frequency_hz == Catch::Approx(2e5)); // file wins over default
  CHECK(cfg.power_w == Catch::Approx(0.7));
  CHECK(cfg.seed == 99);
}

TEST_CASE("unknown keys are rejected by name") {
  ExperimentConfig cfg;
  CHECK_THROWS_WITH(cfg.set("trap.voltage", "3"),
                    Catch::Matchers::ContainsSubstring("trap.voltage"));
}

TEST_CASE("type mismatches are rejected by key") {
  ExperimentConfig cfg;
  CHECK_THROWS_WITH(cfg.set("trap.ion_count", "many"),
                    Catch::Matchers::ContainsSubstring("trap.ion_count"));
  CHECK_THROWS_WITH(cfg.set("trap.ion_count", "2.5"),
                    Catch::Matchers::ContainsSubstring("integer"));
}

TEST_CASE("duplicate file keys are rejected by name") {
  TempFile file(
      "[run]\n"
      "seed = 1\n"
      "seed = 2\n");
  CHECK_THROWS_WITH(resolve(file.path, {}),
                    Catch::Matchers::ContainsSubstring("run.seed"));
}

TEST_CASE("malformed override strings are config errors") {
  CHECK_THROWS_AS(resolve("", {"no_equals_sign"}), ConfigError);
  CHECK_THROWS_AS(resolve("missing_file_xyz.ini", {}), ConfigError);
}

TEST_CASE("an empty power grid fails validation") {
  ExperimentConfig cfg;
  cfg.set("lattice.power_min_w", "1.0");
  cfg.set("lattice.power_max_w", "0.5");
  CHECK_THROWS_AS(cfg.power_grid(), ConfigError);
}

TEST_CASE("csv output is self-describing and deterministic") {
  const ExperimentConfig cfg = resolve("", {"trap.ion_count=2"});
  const std::string path1 = "test_csv_out_1.csv";
  const std::string path2 = "test_csv_out_2.csv";
  REQUIRE(cli::run("heating-rates", cfg, path1) == cli::exit_ok);
  REQUIRE(cli::run("heating-rates", cfg, path2) == cli::exit_ok);
  const std::string a = slurp(path1), b = slurp(path2);
  CHECK(a == b); // byte-identical reruns
  CHECK(a.find("# ionlattice") == 0);
  CHECK(a.find("# subcommand = heating-rates") != std::string::npos);
  CHECK(a.find("trap.ion_count = 2") != std::string::npos); // resolved config echo
  CHECK(a.find("parametric_quanta_per_ms") != std::string::npos);
  std::remove(path1.c_str());
  std::remove(path2.c_str());
}

TEST_CASE("subcommand dispatch covers the documented set") {
  const std::vector<std::string> expected{
      "statics-sweep", "hull",         "modes",        "transport",
      "bath",          "pulse-heating", "heating-rates", "bound-states",
      "fidelity",      "fk-reference"};
  CHECK(cli::subcommands() == expected);
}

TEST_CASE("config violations exit with code 2, unknown subcommands too") {
  ExperimentConfig cfg;
  cfg.set("lattice.power_min_w", "1.0");
  cfg.set("lattice.power_max_w", "0.5");
  const std::string out = "test_csv_err.csv";
  CHECK(cli::run("statics-sweep", cfg, out) == cli::exit_config_error);
  CHECK(cli::run("not-a-subcommand", ExperimentConfig{}, out) ==
        cli::exit_config_error);
  std::remove(out.c_str());
}

TEST_CASE("numerical failures exit with code 3") {
  ExperimentConfig cfg;
  cfg.set("trap.ion_count", "2");
  cfg.set("run.gradient_tol", "1e-30"); // unreachable tolerance
  const std::string out = "test_csv_err3.csv";
  CHECK(cli::run("modes", cfg, out) == cli::exit_numerical_error);
  std::remove(out.c_str());
}

TEST_CASE("bound-states subcommand writes the expected level count") {
  const ExperimentConfig cfg = resolve("", {});
  const std::string out = "test_csv_bound.csv";
  REQUIRE(cli::run("bound-states", cfg, out) == cli::exit_ok);
  const std::string text = slurp(out);
  CHECK(text.find("level") != std::string::npos);
  std::remove(out.c_str());
}
