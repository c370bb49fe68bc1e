// SPDX-License-Identifier: Apache-2.0
#include "metric.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "error.hpp"
#include "quadrature.hpp"

namespace chpeak {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double arc_distance(double a, double b) {
  double d = std::fmod(std::abs(a - b), kTwoPi);
  return (d > kPi) ? kTwoPi - d : d;
}

double reduce01(double x) { return x - std::floor(x); }
}  // namespace

double d_diamond(const LiftedPoint& a, const LiftedPoint& b) {
  const double s = std::abs(a.x - b.x) + std::abs(a.u - b.u) + arc_distance(a.theta, b.theta);
  return std::min(1.0, s);
}

// ---------------------------------------------------------------------------
// TransportPlan

TransportPlan::TransportPlan() : xs_{0.0}, ys_{0.0} {}

TransportPlan TransportPlan::identity() { return TransportPlan(); }

TransportPlan TransportPlan::from_breakpoints(std::vector<double> xs, std::vector<double> ys) {
  require(xs.size() == ys.size() && !xs.empty(), errc::invalid_argument,
          "plan breakpoint arrays must be nonempty and of equal size");
  for (std::size_t i = 0; i < xs.size(); ++i)
    require(std::isfinite(xs[i]) && std::isfinite(ys[i]), errc::invalid_argument,
            "non-finite plan breakpoint");
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    require(xs[i + 1] > xs[i], errc::invalid_argument, "plan x-breakpoints must increase strictly");
    require(ys[i + 1] > ys[i], errc::invalid_argument, "plan y-breakpoints must increase strictly");
  }
  require(xs.back() - xs.front() < 1.0, errc::invalid_argument, "plan spans more than one period");
  require(ys.back() - ys.front() < 1.0, errc::invalid_argument, "plan spans more than one period");
  const double n = std::floor(xs.front());
  if (n != 0.0)
    for (std::size_t i = 0; i < xs.size(); ++i) {
      xs[i] -= n;
      ys[i] -= n;
    }
  TransportPlan p;
  p.xs_ = std::move(xs);
  p.ys_ = std::move(ys);
  return p;
}

namespace {

double eval_pl(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  const double n = std::floor(x - xs.front());
  const double r = x - n;
  auto it = std::upper_bound(xs.begin(), xs.end(), r);
  const std::size_t i = static_cast<std::size_t>(it - xs.begin()) - 1;
  const double x0 = xs[i], y0 = ys[i];
  double x1, y1;
  if (i + 1 < xs.size()) {
    x1 = xs[i + 1];
    y1 = ys[i + 1];
  } else {
    x1 = xs.front() + 1.0;
    y1 = ys.front() + 1.0;
  }
  return n + y0 + (r - x0) * (y1 - y0) / (x1 - x0);
}

double slope_pl(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  const double n = std::floor(x - xs.front());
  const double r = x - n;
  auto it = std::upper_bound(xs.begin(), xs.end(), r);
  const std::size_t i = static_cast<std::size_t>(it - xs.begin()) - 1;
  const double x0 = xs[i], y0 = ys[i];
  double x1, y1;
  if (i + 1 < xs.size()) {
    x1 = xs[i + 1];
    y1 = ys[i + 1];
  } else {
    x1 = xs.front() + 1.0;
    y1 = ys.front() + 1.0;
  }
  return (y1 - y0) / (x1 - x0);
}

}  // namespace

double TransportPlan::operator()(double x) const { return eval_pl(xs_, ys_, x); }

double TransportPlan::inverse_at(double y) const { return eval_pl(ys_, xs_, y); }

double TransportPlan::derivative(double x) const { return slope_pl(xs_, ys_, x); }

TransportPlan TransportPlan::inverse() const {
  return from_breakpoints(ys_, xs_);
}

TransportPlan plan_identity() { return TransportPlan::identity(); }

TransportPlan plan_inverse(const TransportPlan& psi) { return psi.inverse(); }

TransportPlan plan_compose(const TransportPlan& outer, const TransportPlan& inner) {
  std::vector<double> xs(inner.xs());
  const double x0 = inner.xs().front();
  for (double xo : outer.xs()) {
    double pre = inner.inverse_at(xo);
    pre -= std::floor(pre - x0);
    xs.push_back(pre);
  }
  std::sort(xs.begin(), xs.end());
  std::vector<double> cx, cy;
  for (double x : xs) {
    const double y = outer(inner(x));
    if (!cx.empty() && (x - cx.back() < 1e-13 || y - cy.back() < 1e-15)) continue;
    cx.push_back(x);
    cy.push_back(y);
  }
  return TransportPlan::from_breakpoints(std::move(cx), std::move(cy));
}

// ---------------------------------------------------------------------------
// cost

std::pair<double, double> phi_pair(const PeakonState& u, const PeakonState& v,
                                   const TransportPlan& psi, double x) {
  const ProfilePoint pu = eval_profile(u, x);
  const ProfilePoint pv = eval_profile(v, psi(x));
  const double ratio = (1.0 + pv.ux * pv.ux) * psi.derivative(x) / (1.0 + pu.ux * pu.ux);
  return {std::min(1.0, ratio), std::min(1.0, 1.0 / ratio)};
}

CostBreakdown transport_cost(const PeakonState& u, const PeakonState& v,
                             const TransportPlan& psi) {
  std::vector<double> bp(u.q);
  for (double x : psi.xs()) bp.push_back(reduce01(x));
  for (double qv : v.q) bp.push_back(reduce01(psi.inverse_at(qv)));
  bp.push_back(reduce01(psi.inverse_at(0.0)));
  auto edges = period_edges(bp);

  auto balance = [&](double x) {
    const ProfilePoint pu = eval_profile(u, x);
    const ProfilePoint pv = eval_profile(v, psi(x));
    return (1.0 + pu.ux * pu.ux) - (1.0 + pv.ux * pv.ux) * psi.derivative(x);
  };
  auto du = [&](double x) { return eval_profile(u, x).u - eval_profile(v, psi(x)).u; };
  auto dtheta = [&](double x) {
    return eval_profile(u, x).theta - eval_profile(v, psi(x)).theta;
  };
  auto xpsi = [&](double x) { return x - psi(x); };
  auto cap = [&](double x) {
    double dth = dtheta(x);
    double s = std::abs(xpsi(x)) + std::abs(du(x)) +
               ((std::abs(dth) > kPi) ? kTwoPi - std::abs(dth) : std::abs(dth));
    return s - 1.0;
  };
  const ScalarFn fns[] = {ScalarFn(balance),
                          ScalarFn(du),
                          ScalarFn(dtheta),
                          ScalarFn([&](double x) { return dtheta(x) - kPi; }),
                          ScalarFn([&](double x) { return dtheta(x) + kPi; }),
                          ScalarFn(xpsi),
                          ScalarFn(cap)};
  refine_edges_at_roots(edges, fns);

  CostBreakdown out;
  out.transport = integrate_edges(
      [&](double x) {
        const ProfilePoint pu = eval_profile(u, x);
        const double y = psi(x);
        const ProfilePoint pv = eval_profile(v, y);
        const double mu = 1.0 + pu.ux * pu.ux;
        const double ratio = (1.0 + pv.ux * pv.ux) * psi.derivative(x) / mu;
        const double phi1 = std::min(1.0, ratio);
        const double d = d_diamond({x, pu.u, pu.theta}, {y, pv.u, pv.theta});
        return d * phi1 * mu;
      },
      edges);
  out.excess = integrate_edges([&](double x) { return std::abs(balance(x)); }, edges);
  out.total = out.transport + out.excess;
  return out;
}

// ---------------------------------------------------------------------------
// cumulative-mass matching

namespace {

class CumulativeMass {
 public:
  explicit CumulativeMass(const PeakonState& s) : s_(s) {
    edges_ = period_edges(s.q);
    cum_.assign(edges_.size(), 0.0);
    for (std::size_t i = 0; i + 1 < edges_.size(); ++i)
      cum_[i + 1] = cum_[i] + gauss_panel([this](double x) { return density(x); }, edges_[i],
                                          edges_[i + 1]);
  }

  double density(double x) const {
    const double ux = eval_profile(s_, x).ux;
    return 1.0 + ux * ux;
  }

  double total() const { return cum_.back(); }

  double value(double x) const {
    const double n = std::floor(x);
    const double r = x - n;
    auto it = std::upper_bound(edges_.begin(), edges_.end(), r);
    std::size_t i = (it == edges_.begin()) ? 0 : static_cast<std::size_t>(it - edges_.begin()) - 1;
    if (i + 1 >= edges_.size()) i = edges_.size() - 2;
    return n * total() + cum_[i] +
           gauss_panel([this](double y) { return density(y); }, edges_[i], r);
  }

  double inverse(double m) const {
    const double n = std::floor(m / total());
    const double mr = m - n * total();
    auto it = std::upper_bound(cum_.begin(), cum_.end(), mr);
    std::size_t i = (it == cum_.begin()) ? 0 : static_cast<std::size_t>(it - cum_.begin()) - 1;
    if (i + 1 >= cum_.size()) i = cum_.size() - 2;
    double a = edges_[i], b = edges_[i + 1];
    double x = 0.5 * (a + b);
    for (int iter = 0; iter < 60; ++iter) {
      const double err = cum_[i] +
                         gauss_panel([this](double y) { return density(y); }, edges_[i], x) - mr;
      if (err > 0.0)
        b = x;
      else
        a = x;
      const double xn = x - err / density(x);
      x = (xn > a && xn < b) ? xn : 0.5 * (a + b);
      if (b - a < 1e-15) break;
    }
    return n + x;
  }

 private:
  PeakonState s_;
  std::vector<double> edges_;
  std::vector<double> cum_;
};

}  // namespace

TransportPlan plan_cdf_match(const PeakonState& u, const PeakonState& v, int grid) {
  grid = std::max(grid, 8);
  const CumulativeMass fu(u), fv(v);
  const double scale = fv.total() / fu.total();

  std::vector<double> xs;
  for (int j = 0; j < grid; ++j) xs.push_back(static_cast<double>(j) / grid);
  for (double q : u.q) xs.push_back(q);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end(),
                       [](double a, double b) { return std::abs(a - b) < 1e-12; }),
           xs.end());

  std::vector<double> masses(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) masses[i] = fu.value(xs[i]) * scale;

  // Anchor objective: mean absolute deviation of the displacement field about
  // its mean.  Rigid shifts score zero, so u = v picks the identity and a
  // translated profile picks the translation; the leftover mean displacement
  // is reduced by an integer at the end.
  auto objective = [&](double c) {
    std::vector<double> d(xs.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      d[i] = fv.inverse(masses[i] + c) - xs[i];
      mean += d[i];
    }
    mean /= xs.size();
    double sum = 0.0;
    for (double v : d) sum += std::abs(v - mean);
    return sum / xs.size();
  };

  const double cstep = fv.total() / grid;
  double best_c = 0.0, best_obj = objective(0.0);
  for (int j = 1; j < grid; ++j) {
    const double c = j * cstep;
    const double o = objective(c);
    if (o < best_obj) {
      best_obj = o;
      best_c = c;
    }
  }
  {  // golden refinement around the best grid anchor
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = best_c - cstep, b = best_c + cstep;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = objective(x1), f2 = objective(x2);
    for (int it = 0; it < 40; ++it) {
      if (f1 < f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - gr * (b - a);
        f1 = objective(x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + gr * (b - a);
        f2 = objective(x2);
      }
    }
    const double c = 0.5 * (a + b);
    if (objective(c) < best_obj) best_c = c;
  }

  std::vector<double> ys(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = fv.inverse(masses[i] + best_c);
  double mean = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) mean += ys[i] - xs[i];
  mean /= xs.size();
  const double k = std::round(mean);
  for (double& y : ys) y -= k;

  // enforce strict monotonicity against inversion roundoff
  std::vector<double> cx, cy;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!cx.empty() && (xs[i] - cx.back() < 1e-13 || ys[i] - cy.back() < 1e-13)) continue;
    cx.push_back(xs[i]);
    cy.push_back(ys[i]);
  }
  return TransportPlan::from_breakpoints(std::move(cx), std::move(cy));
}

// ---------------------------------------------------------------------------
// plans along the flow

namespace {

std::vector<double> char_grid(const TransportPlan& psi0, const PeakonState& at_start, int grid) {
  std::vector<double> xs;
  for (int j = 0; j < grid; ++j) xs.push_back(static_cast<double>(j) / grid);
  for (double x : psi0.xs()) xs.push_back(reduce01(x));
  for (double q : at_start.q) xs.push_back(q);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end(),
                       [](double a, double b) { return std::abs(a - b) < 1e-12; }),
           xs.end());
  return xs;
}

std::vector<double> monotone_fix(std::vector<double> v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] <= v[i - 1]) {
      require(v[i - 1] - v[i] < 1e-9, errc::internal, "flow broke breakpoint monotonicity");
      v[i] = v[i - 1] + 1e-13;
    }
  return v;
}

}  // namespace

TransportPlan plan_characteristic(const Trajectory& traj_u, const Trajectory& traj_v,
                                  const TransportPlan& psi0, double t0, double t1, int grid) {
  std::vector<double> xs = char_grid(psi0, traj_u.state_at(t0), grid);
  std::vector<double> ys(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = psi0(xs[i]);
  auto xs1 = monotone_fix(characteristic_flow_bundle(traj_u, t0, t1, xs));
  auto ys1 = monotone_fix(characteristic_flow_bundle(traj_v, t0, t1, ys));
  return TransportPlan::from_breakpoints(std::move(xs1), std::move(ys1));
}

TransportPlan plan_characteristic(const Trajectory& traj_u, const Trajectory& traj_v,
                                  const TransportPlan& psi0, double t) {
  return plan_characteristic(traj_u, traj_v, psi0, 0.0, t, 128);
}

TransportPlan plan_time_shift(const Trajectory& traj, double s, double s2, int grid) {
  std::vector<double> xs = char_grid(TransportPlan::identity(), traj.state_at(s), grid);
  auto ys = monotone_fix(characteristic_flow_bundle(traj, s, s2, xs));
  return TransportPlan::from_breakpoints(std::move(xs), std::move(ys));
}

// ---------------------------------------------------------------------------
// bounds and optimization

double lower_bound_L1(const PeakonState& u, const PeakonState& v) {
  return l1_distance(u, v) / (2.0 * (2.0 + h1_norm(u) + h1_norm(v)));
}

double upper_bound_H1(const PeakonState& u, const PeakonState& v) {
  return (8.0 * kPi + 3.0) * (1.0 + h1_norm(u) + h1_norm(v)) * h1_distance(u, v);
}

MetricReport optimize_plan(const PeakonState& u, const PeakonState& v,
                           const std::vector<std::pair<std::string, TransportPlan>>& seeds,
                           int budget) {
  require(!seeds.empty(), errc::invalid_argument, "optimize_plan needs at least one seed");
  require(budget >= 0, errc::invalid_argument, "budget must be nonnegative");

  MetricReport report;
  bool have_best = false;
  auto consider = [&](const std::string& label, const TransportPlan& plan) {
    const CostBreakdown cb = transport_cost(u, v, plan);
    if (!have_best || cb.total < report.upper) {
      have_best = true;
      report.upper = cb.total;
      report.breakdown = cb;
      report.best_plan = plan;
      report.plan_label = label;
    }
  };

  for (const auto& [label, seed] : seeds) consider(label, seed);

  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  for (const auto& [label, seed] : seeds) {
    if (budget == 0) break;
    TransportPlan plan = seed;
    double cost = transport_cost(u, v, plan).total;
    const std::size_t m = plan.size();
    for (int sweep = 0; sweep < budget; ++sweep) {
      for (std::size_t k = 0; k < m; ++k) {
        std::vector<double> ys(plan.ys());
        const double y_prev = (m == 1) ? ys[0] - 1.0 : (k == 0 ? ys[m - 1] - 1.0 : ys[k - 1]);
        const double y_next = (m == 1) ? ys[0] + 1.0 : (k + 1 == m ? ys[0] + 1.0 : ys[k + 1]);
        double a = y_prev + 1e-6 * (y_next - y_prev);
        double b = y_next - 1e-6 * (y_next - y_prev);
        auto eval = [&](double yk) {
          ys[k] = yk;
          return transport_cost(u, v, TransportPlan::from_breakpoints(plan.xs(), ys)).total;
        };
        double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
        double f1 = eval(x1), f2 = eval(x2);
        for (int it = 0; it < 32; ++it) {
          if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = eval(x1);
          } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = eval(x2);
          }
        }
        const double yk = 0.5 * (a + b);
        const double fk = eval(yk);
        if (fk < cost) {
          cost = fk;
          std::vector<double> ny(plan.ys());
          ny[k] = yk;
          plan = TransportPlan::from_breakpoints(plan.xs(), ny);
        }
      }
    }
    if (cost < report.upper) {
      report.upper = cost;
      report.breakdown = transport_cost(u, v, plan);
      report.best_plan = plan;
      report.plan_label = label + "+descent";
    }
  }

  report.lower = lower_bound_L1(u, v);
  return report;
}

}  // namespace chpeak
