// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "approx.hpp"
#include "dynamics.hpp"
#include "metric.hpp"

namespace chpeak {

struct Verdict {
  std::string id;
  std::string inequality;  // the bound being checked, with its constant
  double constant = 0.0;
  double measured = 0.0;   // measured slack/value, pass iff measured <= tolerance
  double tolerance = 0.0;
  bool pass = false;
};

struct MetricOptions {
  std::vector<std::string> seeds{"identity", "cdf", "characteristic"};
  int budget = 0;
  int grid = 128;
};

struct Scenario {
  std::string name = "scenario";
  PeakonState initial;
  double t_final = 1.0;
  int samples = 101;
  SolverConfig solver;
  MetricOptions metric;
};

struct RunResult {
  nlohmann::ordered_json record;
  bool all_pass = true;
};

PeakonState initial_from_json(const nlohmann::json& j);
Scenario scenario_from_json(const nlohmann::json& j);

// CLI drivers.  out_dir may be empty: compute the record without writing files.
RunResult cmd_simulate(const nlohmann::json& config, const std::string& out_dir);
RunResult cmd_metric(const nlohmann::json& config, const std::string& out_dir,
                     const std::string& seed_suite = "");
RunResult cmd_approx(const nlohmann::json& config, const std::string& out_dir);
RunResult cmd_verify(const std::string& suite, const std::string& out_dir);

std::vector<std::string> suite_names();
std::vector<Verdict> run_suite(const std::string& name);

nlohmann::ordered_json verdicts_to_json(const std::vector<Verdict>& verdicts);
bool all_pass(const std::vector<Verdict>& verdicts);

std::string format17(double v);

// Deterministic random draws for the property suites (fixed mapping from the
// raw mt19937_64 stream, identical across platforms).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : g_(seed) {}
  double uniform(double a, double b) {
    const double u = static_cast<double>(g_() >> 11) * 0x1.0p-53;
    return a + (b - a) * u;
  }
  int uniform_int(int a, int b) {  // inclusive
    return a + static_cast<int>(g_() % static_cast<std::uint64_t>(b - a + 1));
  }

 private:
  std::mt19937_64 g_;
};

PeakonState random_state(Rng& rng, int n_min, int n_max, double p_max, double min_gap);

}  // namespace chpeak
