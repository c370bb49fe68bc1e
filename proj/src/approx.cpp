// SPDX-License-Identifier: Apache-2.0
#include "approx.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "error.hpp"

namespace chpeak {

PeakonState multipeakon_approx(const SmoothPeriodicDatum& d, int n) {
  require(n >= 1, errc::invalid_argument, "need at least one cell");
  std::vector<double> p(n), q(n);
  for (int i = 0; i < n; ++i) {
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    std::vector<double> edges{lo};
    double atom = 0.0;
    for (const auto& [x, jump] : d.kinks) {
      if (x >= lo && x < hi) {
        atom += jump;
        if (x > lo + 1e-13 && x < hi - 1e-13) edges.push_back(x);
      }
    }
    edges.push_back(hi);
    std::sort(edges.begin(), edges.end());
    p[i] = integrate_edges([&](double y) { return 0.5 * (d.f(y) - d.f2(y)); }, edges) - 0.5 * atom;
    q[i] = (2.0 * i + 1.0) / (2.0 * n);
  }
  return PeakonState(std::move(p), std::move(q));
}

double approx_error(const SmoothPeriodicDatum& d, const PeakonState& s) {
  std::vector<double> bp(s.q);
  for (const auto& [x, jump] : d.kinks) {
    (void)jump;
    bp.push_back(x);
  }
  for (int j = 0; j < 32; ++j) bp.push_back(j / 32.0);
  auto edges = period_edges(bp);
  const double val = integrate_edges(
      [&](double x) {
        const ProfilePoint pt = eval_profile(s, x);
        const double e0 = d.f(x) - pt.u;
        const double e1 = d.f1(x) - pt.ux;
        return e0 * e0 + e1 * e1;
      },
      edges);
  return std::sqrt(std::max(0.0, val));
}

const std::vector<SmoothPeriodicDatum>& datum_corpus() {
  static const std::vector<SmoothPeriodicDatum> corpus = [] {
    constexpr double kTwoPi = 2.0 * std::numbers::pi;
    std::vector<SmoothPeriodicDatum> v;
    v.push_back({"constant", [](double) { return 1.0; }, [](double) { return 0.0; },
                 [](double) { return 0.0; }, {}});
    v.push_back({"sine", [=](double x) { return std::sin(kTwoPi * x); },
                 [=](double x) { return kTwoPi * std::cos(kTwoPi * x); },
                 [=](double x) { return -kTwoPi * kTwoPi * std::sin(kTwoPi * x); }, {}});
    const double x0 = 1.0 / 3.0;
    v.push_back({"chi_bump", [=](double x) { return chi(x - x0); },
                 [=](double x) { return chi_prime(x - x0); },
                 [=](double x) { return chi(x - x0); },
                 {{x0, -2.0}}});
    return v;
  }();
  return corpus;
}

const SmoothPeriodicDatum& datum_by_label(const std::string& label) {
  for (const auto& d : datum_corpus())
    if (d.label == label) return d;
  fail(errc::unknown_label, "unknown datum label: " + label);
}

}  // namespace chpeak
