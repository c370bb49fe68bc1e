// SPDX-License-Identifier: Apache-2.0
#include "kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "error.hpp"
#include "quadrature.hpp"

namespace chpeak {

namespace {
constexpr double kInvEm1 = 1.0 / (std::numbers::e - 1.0);
}

double chi(double x) {
  double r = x - std::floor(x);
  return (std::exp(r) + std::exp(1.0 - r)) * kInvEm1;
}

double chi_prime(double x) {
  double r = x - std::floor(x);
  return (std::exp(r) - std::exp(1.0 - r)) * kInvEm1;
}

double chi_prime(double x, bool& kink) {
  double r = x - std::floor(x);
  kink = (r == 0.0);
  return (std::exp(r) - std::exp(1.0 - r)) * kInvEm1;
}

double chi_tilde(double x) {
  double r = x - std::floor(x);
  return (-std::exp(r) + std::exp(1.0 - r)) * kInvEm1;
}

double periodic_delta(double a, double b) {
  double d = a - b;
  d -= std::floor(d + 0.5);
  return d;
}

double periodic_distance(double a, double b) { return std::abs(periodic_delta(a, b)); }

PeakonState::PeakonState(std::vector<double> strengths, std::vector<double> positions)
    : p(std::move(strengths)), q(std::move(positions)) {
  require(p.size() == q.size(), errc::invalid_argument, "strength/position size mismatch");
  for (double v : p) require(std::isfinite(v), errc::invalid_argument, "non-finite strength");
  for (double& v : q) {
    require(std::isfinite(v), errc::invalid_argument, "non-finite position");
    v -= std::floor(v);
  }
  std::vector<std::size_t> idx(p.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return q[a] < q[b]; });
  std::vector<double> ps(p.size()), qs(p.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    ps[k] = p[idx[k]];
    qs[k] = q[idx[k]];
  }
  p = std::move(ps);
  q = std::move(qs);
  for (std::size_t k = 0; k + 1 < q.size(); ++k)
    require(q[k + 1] > q[k], errc::collision_required, "coincident peakon positions");
  if (q.size() >= 2)
    require(q.front() + 1.0 > q.back(), errc::collision_required, "coincident peakon positions");
}

ProfilePoint eval_profile(const PeakonState& s, double x) {
  double u = 0.0, ux = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double d = x - s.q[i];
    u += s.p[i] * chi(d);
    ux += s.p[i] * chi_prime(d);
  }
  return {x, u, ux, 2.0 * std::atan(ux)};
}

std::vector<double> profile_breakpoints(const PeakonState& s) { return s.q; }

double energy(const PeakonState& s, int order) {
  if (s.empty()) return 0.0;
  auto edges = period_edges(s.q);
  return integrate_edges(
      [&](double x) {
        ProfilePoint pt = eval_profile(s, x);
        return pt.u * pt.u + pt.ux * pt.ux;
      },
      edges, order);
}

double h1_norm(const PeakonState& s) { return std::sqrt(energy(s)); }

double h1_distance(const PeakonState& a, const PeakonState& b) {
  if (a.empty() && b.empty()) return 0.0;
  auto bp = merged_breakpoints({std::span<const double>(a.q), std::span<const double>(b.q)});
  auto edges = period_edges(bp);
  double val = integrate_edges(
      [&](double x) {
        ProfilePoint pa = eval_profile(a, x);
        ProfilePoint pb = eval_profile(b, x);
        const double du = pa.u - pb.u;
        const double dux = pa.ux - pb.ux;
        return du * du + dux * dux;
      },
      edges);
  return std::sqrt(std::max(0.0, val));
}

double l1_distance(const PeakonState& a, const PeakonState& b) {
  if (a.empty() && b.empty()) return 0.0;
  auto bp = merged_breakpoints({std::span<const double>(a.q), std::span<const double>(b.q)});
  auto edges = period_edges(bp);
  ScalarFn diff = [&](double x) { return eval_profile(a, x).u - eval_profile(b, x).u; };
  const ScalarFn fns[] = {diff};
  refine_edges_at_roots(edges, fns);
  return integrate_edges([&](double x) { return std::abs(diff(x)); }, edges);
}

namespace {

double source_integral(const PeakonState& s, double x, bool derivative) {
  if (s.empty()) return 0.0;
  std::vector<double> bp(s.q);
  bp.push_back(x);
  auto edges = period_edges(bp);
  return integrate_edges(
      [&](double y) {
        ProfilePoint pt = eval_profile(s, y);
        const double density = pt.u * pt.u + 0.5 * pt.ux * pt.ux;
        const double k = derivative ? chi_prime(x - y) : chi(x - y);
        return 0.5 * k * density;
      },
      edges);
}

}  // namespace

double source_P(const PeakonState& s, double x) { return source_integral(s, x, false); }

double source_Px(const PeakonState& s, double x) { return source_integral(s, x, true); }

}  // namespace chpeak
