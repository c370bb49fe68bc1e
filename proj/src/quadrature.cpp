// SPDX-License-Identifier: Apache-2.0
#include "quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "error.hpp"

namespace chpeak {

namespace {

GaussRule build_rule(int n) {
  GaussRule rule;
  rule.nodes.assign(n, 0.0);
  rule.weights.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    double w = 2.0 / ((1.0 - x * x) * pp * pp);
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

}  // namespace

const GaussRule& gauss_rule(int order) {
  require(order >= 2 && order <= 128, errc::invalid_argument, "quadrature order out of range");
  static std::map<int, GaussRule> cache;
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, build_rule(order)).first;
  return it->second;
}

double gauss_panel(const ScalarFn& f, double a, double b, int order) {
  const GaussRule& rule = gauss_rule(order);
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i)
    sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return half * sum;
}

double integrate_edges(const ScalarFn& f, std::span<const double> edges, int order) {
  require(edges.size() >= 2, errc::invalid_argument, "need at least two edges");
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) sum += gauss_panel(f, edges[i], edges[i + 1], order);
  return sum;
}

std::vector<double> period_edges(std::span<const double> breakpoints, double origin) {
  std::vector<double> edges;
  edges.reserve(breakpoints.size() + 2);
  for (double b : breakpoints) {
    double r = b - origin;
    r -= std::floor(r);
    if (r > 1e-13 && r < 1.0 - 1e-13) edges.push_back(origin + r);
  }
  edges.push_back(origin);
  edges.push_back(origin + 1.0);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end(),
                          [](double a, double b) { return std::abs(a - b) < 1e-13; }),
              edges.end());
  if (edges.back() < origin + 1.0 - 1e-13)
    edges.push_back(origin + 1.0);
  else
    edges.back() = origin + 1.0;
  edges.front() = origin;
  return edges;
}

namespace {

double bisect_root(const ScalarFn& f, double a, double b, double fa) {
  for (int it = 0; it < 90; ++it) {
    double m = 0.5 * (a + b);
    if (m == a || m == b) break;
    double fm = f(m);
    if (fm == 0.0) return m;
    if ((fa < 0.0) == (fm < 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

void refine_edges_at_roots(std::vector<double>& edges, std::span<const ScalarFn> fns) {
  constexpr int kSamples = 9;
  std::vector<double> roots;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double a = edges[i], b = edges[i + 1];
    const double h = (b - a) / (kSamples - 1);
    if (h < 1e-13) continue;
    for (const auto& f : fns) {
      double x0 = a, f0 = f(a);
      for (int s = 1; s < kSamples; ++s) {
        double x1 = (s == kSamples - 1) ? b : a + s * h;
        double f1 = f(x1);
        if ((f0 < 0.0 && f1 > 0.0) || (f0 > 0.0 && f1 < 0.0)) {
          double r = bisect_root(f, x0, x1, f0);
          if (r > a + 1e-13 && r < b - 1e-13) roots.push_back(r);
        }
        x0 = x1;
        f0 = f1;
      }
    }
  }
  if (roots.empty()) return;
  edges.insert(edges.end(), roots.begin(), roots.end());
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end(),
                          [](double a, double b) { return std::abs(a - b) < 1e-13; }),
              edges.end());
}

std::vector<double> merged_breakpoints(std::initializer_list<std::span<const double>> lists) {
  std::vector<double> out;
  for (const auto& l : lists) out.insert(out.end(), l.begin(), l.end());
  return out;
}

}  // namespace chpeak
