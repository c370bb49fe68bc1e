// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "error.hpp"
#include "harness.hpp"

using namespace chpeak;
namespace fs = std::filesystem;

namespace {

nlohmann::json antipeakon_config() {
  return nlohmann::json{{"schema", 1},
                        {"name", "antipeakon"},
                        {"initial", {{"p", {1.0, -1.0}}, {"q", {0.4, 0.6}}}},
                        {"t_final", 2.5},
                        {"samples", 41}};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("scenario parsing and validation") {
  CHECK_THROWS_AS(scenario_from_json(nlohmann::json{{"schema", 2}}), error);
  CHECK_THROWS_AS(scenario_from_json(nlohmann::json{{"schema", 1}}), error);

  const Scenario sc = scenario_from_json(antipeakon_config());
  CHECK(sc.initial.size() == 2);
  CHECK(sc.t_final == 2.5);

  nlohmann::json by_datum{{"schema", 1},
                          {"initial", {{"datum", "sine"}, {"n", 12}}},
                          {"t_final", 0.5}};
  CHECK(scenario_from_json(by_datum).initial.size() == 12);

  nlohmann::json bad{{"schema", 1}, {"initial", {{"datum", "missing"}}}};
  CHECK_THROWS_AS(scenario_from_json(bad), error);
}

TEST_CASE("cmd_simulate: record contents and determinism") {
  const auto cfg = antipeakon_config();
  const RunResult a = cmd_simulate(cfg, "");
  CHECK(a.all_pass);
  CHECK(a.record.at("events").size() == 1);
  CHECK(a.record.at("command") == "simulate");

  const fs::path dir1 = fs::temp_directory_path() / "chpeak_sim1";
  const fs::path dir2 = fs::temp_directory_path() / "chpeak_sim2";
  fs::remove_all(dir1);
  fs::remove_all(dir2);
  cmd_simulate(cfg, dir1.string());
  cmd_simulate(cfg, dir2.string());
  CHECK(slurp(dir1 / "trajectory.csv") == slurp(dir2 / "trajectory.csv"));
  CHECK(slurp(dir1 / "record.json") == slurp(dir2 / "record.json"));
  CHECK(slurp(dir1 / "trajectory.csv").substr(0, 1) == "t");
}

TEST_CASE("cmd_simulate: empty and single-peakon scenarios") {
  nlohmann::json empty{{"schema", 1},
                       {"name", "empty"},
                       {"initial", {{"p", nlohmann::json::array()}, {"q", nlohmann::json::array()}}},
                       {"t_final", 0.5},
                       {"samples", 5}};
  const RunResult r = cmd_simulate(empty, "");
  CHECK(r.all_pass);
  CHECK(r.record.at("events").empty());

  nlohmann::json single{{"schema", 1},
                        {"name", "single"},
                        {"initial", {{"p", {1.0}}, {"q", {0.0}}}},
                        {"t_final", 1.0},
                        {"samples", 11}};
  CHECK(cmd_simulate(single, "").all_pass);
}

TEST_CASE("cmd_metric: identical pair gives zero upper bound") {
  nlohmann::json cfg{{"schema", 1},
                     {"name", "same"},
                     {"u", {{"p", {0.6, 0.4}}, {"q", {0.2, 0.7}}}},
                     {"v", {{"p", {0.6, 0.4}}, {"q", {0.2, 0.7}}}},
                     {"t_final", 0.4},
                     {"samples", 3},
                     {"metric", {{"seeds", {"identity"}}, {"grid", 32}}}};
  const RunResult r = cmd_metric(cfg, "", "");
  CHECK(r.all_pass);
}

TEST_CASE("cmd_metric: perturbed pair stays under the growth envelope") {
  nlohmann::json cfg{{"schema", 1},
                     {"name", "perturbed"},
                     {"u", {{"p", {0.9, 0.7, 0.5}}, {"q", {0.15, 0.45, 0.8}}}},
                     {"v", {{"p", {0.9002, 0.6998, 0.5}}, {"q", {0.15, 0.45, 0.8}}}},
                     {"t_final", 0.5},
                     {"samples", 6},
                     {"metric", {{"seeds", {"identity", "cdf", "characteristic"}}, {"grid", 64}}}};
  const RunResult r = cmd_metric(cfg, "", "all");
  CHECK(r.all_pass);
  bool saw_slope = false;
  for (const auto& v : r.record.at("verdicts"))
    if (v.at("id") == "metric.exponential_slope") saw_slope = true;
  CHECK(saw_slope);

  CHECK_THROWS_AS(cmd_metric(cfg, "", "bogus"), error);
}

TEST_CASE("cmd_approx: table and single-peakon emission") {
  nlohmann::json cfg{{"schema", 1}, {"datum", "sine"}, {"n_values", {8, 16}}};
  const RunResult r = cmd_approx(cfg, "");
  CHECK(r.all_pass);
  CHECK(r.record.at("states").size() == 2);

  nlohmann::json one{{"schema", 1}, {"datum", "constant"}, {"n_values", {1}}};
  const RunResult r1 = cmd_approx(one, "");
  CHECK(r1.record.at("states").at(0).at("p").size() == 1);

  nlohmann::json bad{{"schema", 1}, {"datum", "nope"}};
  CHECK_THROWS_AS(cmd_approx(bad, ""), error);
}

TEST_CASE("cmd_verify: known suites pass, unknown suite is an error") {
  const RunResult r = cmd_verify("kernel", "");
  CHECK(r.all_pass);
  for (const auto& v : r.record.at("verdicts")) {
    CHECK(v.contains("inequality"));
    CHECK(v.contains("measured"));
  }
  CHECK_THROWS_AS(cmd_verify("not-a-suite", ""), error);
}

TEST_CASE("random_state respects its envelope") {
  Rng rng(1);
  for (int k = 0; k < 50; ++k) {
    const PeakonState s = random_state(rng, 1, 5, 2.0, 0.04);
    CHECK(s.size() >= 1);
    CHECK(s.size() <= 5);
    for (double p : s.p) CHECK(std::abs(p) <= 2.0);
    for (std::size_t i = 0; i + 1 < s.size(); ++i) CHECK(s.q[i + 1] > s.q[i]);
  }
}

TEST_CASE("format17 round-trips doubles") {
  for (double v : {0.1, 1.0 / 3.0, 2.1639534137386529, -4.2e-9}) {
    CHECK(std::stod(format17(v)) == v);
  }
}
