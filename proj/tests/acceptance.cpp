// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "harness.hpp"

using namespace chpeak;

namespace {

struct Criterion {
  int number;
  std::string title;
  std::string suite;
  double runtime_limit_s;
};

const std::vector<Criterion> kCriteria = {
    {1, "kernel identities", "kernel", 1.0},
    {2, "conservation on random states", "conservation", 60.0},
    {3, "collision continuation", "collision", 60.0},
    {4, "metric axioms", "metric", 300.0},
    {5, "bound sandwich", "lemma3", 300.0},
    {6, "time Lipschitz bound", "lemma5", 120.0},
    {7, "exponential stability", "lemma7", 300.0},
    {8, "multipeakon approximation convergence", "lemma1", 30.0},
    {9, "equation residual", "residual", 60.0},
    {10, "reversibility across a collision", "reversibility", 60.0},
};

}  // namespace

int main() {
  int failures = 0;
  for (const auto& c : kCriteria) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<Verdict> verdicts;
    std::string error_text;
    try {
      verdicts = run_suite(c.suite);
    } catch (const std::exception& e) {
      error_text = e.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    bool pass = error_text.empty() && !verdicts.empty() && elapsed < c.runtime_limit_s;
    std::string detail;
    for (const auto& v : verdicts) {
      pass = pass && v.pass;
      if (!detail.empty()) detail += "; ";
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%s=%.3g (tol %.3g)", v.id.c_str(), v.measured, v.tolerance);
      detail += buf;
    }
    if (!error_text.empty()) detail = "error: " + error_text;

    std::printf("criterion %02d [%s] %s  %.2fs/%.0fs  %s\n", c.number, c.title.c_str(),
                pass ? "PASS" : "FAIL", elapsed, c.runtime_limit_s, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
  }
  if (failures > 0) std::printf("%d criterion(s) FAILED\n", failures);
  return failures == 0 ? 0 : 1;
}
