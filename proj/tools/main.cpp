// SPDX-License-Identifier: Apache-2.0
//
// chpeak command line: simulate | metric | approx | verify, driving the
// shared-library C API.  Exit code 0 iff the run succeeded and every verdict
// passed.
#include <cstdio>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "chpeak/chpeak.h"

namespace {

void print_record(const char* record_json) {
  if (!record_json) return;
  try {
    const auto record = nlohmann::json::parse(record_json);
    if (record.contains("events") && !record["events"].empty()) {
      std::printf("events:\n");
      for (const auto& e : record["events"])
        std::printf("  tau=%.12g  qbar=%.12g  atom=%.12g\n", e["tau"].get<double>(),
                    e["qbar"].get<double>(), e["atom"].get<double>());
    }
    if (record.contains("verdicts")) {
      for (const auto& v : record["verdicts"])
        std::printf("[%s] %-32s measured=%.6g tolerance=%.6g  (%s)\n",
                    v["pass"].get<bool>() ? "PASS" : "FAIL", v["id"].get<std::string>().c_str(),
                    v["measured"].get<double>(), v["tolerance"].get<double>(),
                    v["inequality"].get<std::string>().c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "warning: cannot render record: %s\n", e.what());
  }
}

int finish(chpeak_status status, char* record) {
  print_record(record);
  chpeak_string_free(record);
  if (status == CHPEAK_OK) return 0;
  if (status == CHPEAK_VERDICT_FAILED) {
    std::fprintf(stderr, "error: %s\n", chpeak_last_error());
    return 1;
  }
  std::fprintf(stderr, "error (%d): %s\n", static_cast<int>(status), chpeak_last_error());
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Periodic Camassa-Holm multipeakon simulator and transport metric"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(chpeak_version()));

  std::string config, out_dir, seed_suite, suite = "all";

  auto* sim = app.add_subcommand("simulate", "Evolve a scenario and write trajectory.csv");
  sim->add_option("--config", config, "Scenario JSON path")->required();
  sim->add_option("--out", out_dir, "Output directory");

  auto* met = app.add_subcommand("metric", "Distance bounds along a pair of scenarios");
  met->add_option("--config", config, "Pair scenario JSON path")->required();
  met->add_option("--out", out_dir, "Output directory");
  met->add_option("--seed-suite", seed_suite, "Plan seeds: identity|cdf|characteristic|all");

  auto* apx = app.add_subcommand("approx", "Multipeakon approximation error table");
  apx->add_option("--config", config, "Approx JSON path")->required();
  apx->add_option("--out", out_dir, "Output directory");

  auto* ver = app.add_subcommand("verify", "Run a named verification suite");
  ver->add_option("suite", suite, "Suite name (default: all)");
  ver->add_option("--out", out_dir, "Output directory");

  CLI11_PARSE(app, argc, argv);

  char* record = nullptr;
  const char* out = out_dir.empty() ? nullptr : out_dir.c_str();
  if (sim->parsed())
    return finish(chpeak_cmd_simulate(config.c_str(), out, &record), record);
  if (met->parsed())
    return finish(chpeak_cmd_metric(config.c_str(), out,
                                    seed_suite.empty() ? nullptr : seed_suite.c_str(), &record),
                  record);
  if (apx->parsed())
    return finish(chpeak_cmd_approx(config.c_str(), out, &record), record);
  return finish(chpeak_cmd_verify(suite.c_str(), out, &record), record);
}
