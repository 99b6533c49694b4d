#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fermiwalk/config.hpp"
#include "fermiwalk/driver.hpp"
#include "fermiwalk/errors.hpp"
#include "fermiwalk/serialize.hpp"

using namespace fqw;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json base_config() {
  return json{{"d", 3},
              {"walk", {{"kind", "haar"}, {"seed", 7}}},
              {"coupling", {{"kind", "hop"}}},
              {"reservoir", {{"kind", "identity"}}},
              {"lambda_grid", {0.0, 1.3}},
              {"t_grid", {1, 2}}};
}

struct TempDir {
  fs::path path;
  explicit TempDir(const char* tag) {
    path = fs::temp_directory_path() / (std::string("fermiwalk-test-driver-") + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(bool(in));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

json load_json(const fs::path& p) { return json::parse(slurp(p)); }

} // namespace

TEST_CASE("propagate writes csv/json, zero coupling is exactly free") {
  TempDir tmp("propagate");
  const ExperimentConfig cfg = parse_config(base_config());
  run_propagate(cfg, (tmp.path / "a").string());

  const auto rows = read_csv(tmp.path / "a" / "propagate.csv");
  REQUIRE(rows.size() == 5);  // header + 2 lambdas x 2 times
  const auto& header = rows[0];
  REQUIRE(header.size() == 15);
  CHECK(header[7] == "lambda");
  CHECK(header[9] == "err_free");
  int zero_rows = 0;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    CHECK(rows[r][0] == hash_hex(cfg.config_hash));
    if (rows[r][7] == "0") {
      ++zero_rows;
      CHECK(rows[r][9] == "0");  // bitwise zero, not a small number
    }
  }
  CHECK(zero_rows == 2);

  const json rec = load_json(tmp.path / "a" / "propagate.json");
  CHECK(rec["config_hash"] == hash_hex(cfg.config_hash));
  REQUIRE(rec["records"].size() == 4);
  CHECK(!rec["records"][0].contains("result"));  // emit_matrices off

  const json resolved = load_json(tmp.path / "a" / "resolved_config.json");
  CHECK(resolved["config_hash"] == hash_hex(cfg.config_hash));
  CHECK(resolved["config"]["d"] == 3);

  // Rerun: byte identical.
  run_propagate(cfg, (tmp.path / "b").string());
  for (const char* f : {"propagate.csv", "propagate.json", "resolved_config.json"})
    CHECK(slurp(tmp.path / "a" / f) == slurp(tmp.path / "b" / f));
}

TEST_CASE("propagate honors emit_matrices and the path budget") {
  TempDir tmp("budget");
  json j = base_config();
  j["emit_matrices"] = true;
  run_propagate(parse_config(j), (tmp.path / "m").string());
  const json rec = load_json(tmp.path / "m" / "propagate.json");
  CHECK(rec["records"][0].contains("result"));

  json tiny = base_config();
  tiny["budget"] = 10;
  tiny["t_grid"] = {4};
  CHECK_THROWS_AS(run_propagate(parse_config(tiny), (tmp.path / "x").string()),
                  BudgetError);
}

TEST_CASE("spectral writes the spectrum table and the assumption report") {
  TempDir tmp("spectral");
  const ExperimentConfig cfg = parse_config(base_config());
  run_spectral(cfg, tmp.path.string());

  const auto rows = read_csv(tmp.path / "spectrum.csv");
  REQUIRE(rows.size() == 65);  // header + 8^2 superoperator eigenvalues
  int peripheral = 0;
  for (std::size_t r = 1; r < rows.size(); ++r)
    if (rows[r].back() == "peripheral") ++peripheral;
  CHECK(peripheral >= 1);

  const json rep = load_json(tmp.path / "assumptions.json");
  CHECK(rep.contains("assumptions"));
  CHECK(rep["assumptions"].contains("all_pass"));
  CHECK(rep["split"]["peripheral_dim"] == peripheral);
  if (rep["assumptions"]["all_pass"].get<bool>()) {
    CHECK(rep["split"]["peripheral_dim"] == 6);  // d + 3
    CHECK(rep["prediction"]["matched"].get<bool>());
  }
}

TEST_CASE("converge tracks distances and rejects surviving coherence") {
  TempDir tmp("converge");
  json j = base_config();
  j["rho0"] = {{"kind", "sites"}, {"sites", {1}}};
  j["t_grid"] = {1, 2, 6, 12};
  j["lambda_grid"] = {5.0};
  j["mode"] = "ris";
  run_converge(parse_config(j), tmp.path.string());

  const auto rows = read_csv(tmp.path / "converge.csv");
  REQUIRE(rows.size() == 5);
  const auto& header = rows[0];
  const std::size_t fro = header.size() - 2;
  const double first = std::stod(rows[1][fro]);
  const double last = std::stod(rows[4][fro]);
  CHECK(last < first);
  CHECK(load_json(tmp.path / "steady_state.json").contains("steady_state"));

  // Vacuum-filled coherence survives the pinched dynamics forever when the
  // two states share a coupling cluster: hypothesis violation, not a number.
  json bad = base_config();
  bad["rho0"] = {{"kind", "matrix"},
                 {"value", json::array()}};
  Matrix rho = Matrix::Zero(8, 8);
  rho(0, 0) = 0.5;
  rho(7, 7) = 0.5;
  rho(0, 7) = 0.5;
  rho(7, 0) = 0.5;
  bad["rho0"]["value"] = matrix_to_json(rho);
  CHECK_THROWS_AS(run_converge(parse_config(bad), (tmp.path / "bad").string()),
                  HypothesisViolation);
}

TEST_CASE("genericity sweep summarises minors and assumption rates") {
  TempDir tmp("genericity");
  json j = base_config();
  j["d"] = 4;
  j["samples"] = 20;
  run_genericity(parse_config(j), tmp.path.string());

  const auto rows = read_csv(tmp.path / "genericity.csv");
  REQUIRE(rows.size() == 21);
  CHECK(rows[0].back() == "pass");

  const json summary = load_json(tmp.path / "genericity_summary.json");
  CHECK(summary["samples"] == 20);
  CHECK(summary["pass_rate"].get<double>() >= 0.0);
  CHECK(summary["pass_rate"].get<double>() <= 1.0);
  CHECK(summary["min_abs_minor"].get<double>() > 0.0);
}
