// SPDX-License-Identifier: Apache-2.0
#include "harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "error.hpp"
#include "quadrature.hpp"

namespace chpeak {

namespace {

constexpr double kPi = std::numbers::pi;

// Lipschitz-in-time constant as a function of the energy bound.
double energy_bracket(double E) { return 10.0 * E * E + 23.0 * E + 3.0; }

Verdict make_verdict(std::string id, std::string inequality, double constant, double measured,
                     double tolerance) {
  Verdict v;
  v.id = std::move(id);
  v.inequality = std::move(inequality);
  v.constant = constant;
  v.measured = measured;
  v.tolerance = tolerance;
  v.pass = measured <= tolerance;
  return v;
}

PeakonState three_peakon_state() {
  return PeakonState({0.9, 0.7, 0.5}, {0.15, 0.45, 0.8});
}

PeakonState antipeakon_state() { return PeakonState({1.0, -1.0}, {0.4, 0.6}); }

double sum_p(const PeakonState& s) {
  double t = 0.0;
  for (double v : s.p) t += v;
  return t;
}

std::vector<std::pair<std::string, TransportPlan>> build_seeds(
    const std::vector<std::string>& names, const PeakonState& u, const PeakonState& v, int grid,
    const Trajectory* traj_u = nullptr, const Trajectory* traj_v = nullptr, double t = 0.0) {
  std::vector<std::pair<std::string, TransportPlan>> seeds;
  for (const auto& name : names) {
    if (name == "identity") {
      seeds.emplace_back("identity", plan_identity());
    } else if (name == "cdf") {
      seeds.emplace_back("cdf", plan_cdf_match(u, v, grid));
    } else if (name == "characteristic") {
      if (traj_u && traj_v && t > 0.0 && !traj_u->has_event_in(0.0, t) &&
          !traj_v->has_event_in(0.0, t))
        seeds.emplace_back("characteristic",
                           plan_characteristic(*traj_u, *traj_v, plan_identity(), 0.0, t, grid));
    } else {
      fail(errc::bad_config, "unknown metric seed: " + name);
    }
  }
  require(!seeds.empty(), errc::bad_config, "no usable metric seeds");
  return seeds;
}

}  // namespace

std::string format17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

PeakonState random_state(Rng& rng, int n_min, int n_max, double p_max, double min_gap) {
  const int n = rng.uniform_int(n_min, n_max);
  std::vector<double> p(n), q(n);
  for (int i = 0; i < n; ++i) {
    double v = rng.uniform(-p_max, p_max);
    if (std::abs(v) < 0.05) v = (v < 0.0) ? -0.05 : 0.05;
    p[i] = v;
  }
  for (int attempt = 0; attempt < 1000; ++attempt) {
    for (int i = 0; i < n; ++i) q[i] = rng.uniform(0.0, 1.0);
    std::sort(q.begin(), q.end());
    if (n == 1) break;
    double gap = 1.0 - (q[n - 1] - q[0]);
    for (int i = 0; i + 1 < n; ++i) gap = std::min(gap, q[i + 1] - q[i]);
    if (gap >= min_gap) break;
  }
  return PeakonState(std::move(p), std::move(q));
}

// ---------------------------------------------------------------------------
// verification suites

namespace {

std::vector<Verdict> suite_kernel() {
  std::vector<Verdict> out;
  {
    // five-point second difference; h balances truncation against roundoff
    const double h = 5e-3;
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      const double x = 0.02 + 0.96 * k / 99.0;
      const double d2 = (-chi(x - 2 * h) + 16.0 * chi(x - h) - 30.0 * chi(x) +
                         16.0 * chi(x + h) - chi(x + 2 * h)) /
                        (12.0 * h * h);
      worst = std::max(worst, std::abs(d2 - chi(x)));
    }
    out.push_back(make_verdict("kernel.chi_ode", "max_x |chi''(x) - chi(x)|", 0.0, worst, 1e-10));
  }
  {
    const double left_limit_at_1 = (std::exp(1.0) - 1.0) / (std::numbers::e - 1.0);
    const double jump = chi_prime(0.0) - left_limit_at_1;
    out.push_back(make_verdict("kernel.delta_jump", "|chi'(0+) - chi'(1-) + 2|", -2.0,
                               std::abs(jump + 2.0), 0.0));
  }
  {
    double worst = 0.0;
    for (int k = 1; k < 1000; ++k) {
      const double x = k / 1000.0;
      worst = std::max(worst, std::abs(chi_tilde(x) + chi_prime(x)));
    }
    out.push_back(make_verdict("kernel.tilde", "max_x |chi_tilde(x) + chi'(x)|", 0.0, worst, 1e-14));
  }
  {
    Rng rng(172001);
    double worst = -1.0;
    for (int s = 0; s < 20; ++s) {
      const PeakonState st = random_state(rng, 1, 5, 2.0, 0.04);
      const double bound = 2.0 * h1_norm(st);
      for (int k = 0; k < 200; ++k) {
        const double x = k / 200.0;
        worst = std::max(worst, std::abs(eval_profile(st, x).u) - bound);
      }
    }
    out.push_back(make_verdict("kernel.sup_norm", "max |u(x)| - 2 ||u||_H1", 2.0, worst, 0.0));
  }
  {
    Rng rng(172002);
    double worst = -1.0;
    for (int s = 0; s < 10; ++s) {
      const PeakonState st = random_state(rng, 1, 5, 2.0, 0.04);
      const double e = energy(st);
      for (int k = 0; k < 50; ++k) {
        const double x = k / 50.0;
        worst = std::max(worst, std::abs(source_P(st, x)) - e);
        worst = std::max(worst, std::abs(source_Px(st, x)) - e);
      }
    }
    out.push_back(make_verdict("kernel.source_bounds", "max(|P|, |Px|) - E", 1.0, worst, 0.0));
  }
  {
    Rng rng(172003);
    double worst = 0.0;
    for (int s = 0; s < 10; ++s) {
      const PeakonState st = random_state(rng, 1, 5, 2.0, 0.04);
      const double e16 = energy(st, 16), e32 = energy(st, 32);
      worst = std::max(worst, std::abs(e16 - e32) / (1.0 + std::abs(e32)));
    }
    out.push_back(
        make_verdict("kernel.quadrature", "|E_16 - E_32| / (1 + E)", 0.0, worst, 1e-12));
  }
  return out;
}

std::vector<Verdict> suite_conservation() {
  Rng rng(202601);
  SolverConfig cfg;
  double worst_h = 0.0, worst_p = 0.0;
  for (int s = 0; s < 50; ++s) {
    const PeakonState st = random_state(rng, 1, 5, 2.0, 0.04);
    const Trajectory traj = evolve(st, 1.0, cfg);
    const double h0 = hamiltonian(st);
    const double p0 = sum_p(st);
    for (const auto& [t, state] : traj.samples()) {
      worst_p = std::max(worst_p, std::abs(sum_p(state) - p0));
      if (traj.regime_at(t) == Regime::regular)
        worst_h = std::max(worst_h, std::abs(hamiltonian(state) - h0) / (1.0 + std::abs(h0)));
    }
  }
  std::vector<Verdict> out;
  out.push_back(make_verdict("conservation.hamiltonian",
                             "max_t |H(t) - H(0)| / (1 + |H(0)|), 50 states", 0.0, worst_h, 1e-8));
  out.push_back(
      make_verdict("conservation.momentum", "max_t |sum p(t) - sum p(0)|", 0.0, worst_p, 1e-8));
  return out;
}

std::vector<Verdict> suite_collision() {
  std::vector<Verdict> out;
  const PeakonState s0 = antipeakon_state();
  SolverConfig cfg;
  const double t_final = 2.5;
  const Trajectory traj = evolve(s0, t_final, cfg);

  out.push_back(make_verdict("collision.event_count", "|#events - 1|", 1.0,
                             std::abs(static_cast<double>(traj.events().size()) - 1.0), 0.0));
  if (traj.events().size() != 1) return out;
  const CollisionEvent ev = traj.events().front();

  out.push_back(
      make_verdict("collision.location", "|qbar - 0.5|", 0.5, std::abs(ev.qbar - 0.5), 1e-9));

  const double e0 = energy(s0);
  const double e1 = energy(traj.state_at(t_final));
  out.push_back(make_verdict("collision.energy", "|E(after) - E(before)| / E(before)", 0.0,
                             std::abs(e1 - e0) / e0, 1e-4));

  {
    double worst = 0.0;
    for (int it = 0; it <= 25; ++it) {
      const double t = t_final * it / 25.0;
      for (int ix = 0; ix < 33; ++ix) {
        const double x = ix / 33.0;
        const double a = traj.profile_at(t, x).u;
        const double b = traj.profile_at(t, 2.0 * ev.qbar - x).u;
        worst = std::max(worst, std::abs(a + b));
      }
    }
    out.push_back(make_verdict("collision.odd_symmetry", "max_{t,x} |u(t, 2 qbar - x) + u(t, x)|",
                               0.0, worst, 1e-6));
  }

  {
    // extrapolate the gap integral of ux^2 to zero gap and compare to the atom
    std::vector<std::pair<double, double>> pts;  // (gap, integral)
    for (const auto& [t, state] : traj.samples()) {
      if (t >= ev.tau || traj.regime_at(t) != Regime::regular) continue;
      if (state.size() != 2) continue;
      const double q0 = state.q[0], q1 = state.q[1];
      const double gap = periodic_distance(q0, q1);
      if (gap > 0.05 || gap <= 0.0) continue;
      double lo = q0, hi = q1;
      if (hi - lo > 0.5) {
        lo = q1;
        hi = q0 + 1.0;
      }
      const double integral = gauss_panel(
          [&](double x) {
            const double ux = eval_profile(state, x).ux;
            return ux * ux;
          },
          lo, hi);
      pts.emplace_back(gap, integral);
    }
    double measured = 1.0;
    if (pts.size() >= 2) {
      std::sort(pts.begin(), pts.end());
      const auto [g1, i1] = pts[0];
      const auto [g2, i2] = pts[1];
      const double extrap = i1 + (i2 - i1) * (0.0 - g1) / (g2 - g1);
      measured = std::abs(extrap - ev.atom) / ev.atom;
    }
    out.push_back(make_verdict("collision.atom", "|lim int_gap ux^2 - atom| / atom", 0.0, measured,
                               5e-2));
  }
  return out;
}

std::vector<std::array<PeakonState, 3>> metric_triples() {
  std::vector<std::array<PeakonState, 3>> triples;
  Rng rng(314159);
  for (int k = 0; k < 200; ++k)
    triples.push_back({random_state(rng, 1, 5, 2.0, 0.05), random_state(rng, 1, 5, 2.0, 0.05),
                       random_state(rng, 1, 5, 2.0, 0.05)});
  return triples;
}

std::vector<Verdict> suite_metric_axioms() {
  const auto triples = metric_triples();
  double worst_id = 0.0, worst_sym = 0.0, worst_tri = -1.0;
  for (const auto& [u, v, w] : triples) {
    worst_id = std::max(worst_id, transport_cost(u, u, plan_identity()).total);
    const TransportPlan psi = plan_cdf_match(u, v, 64);
    const double juv = transport_cost(u, v, psi).total;
    const double jvu = transport_cost(v, u, plan_inverse(psi)).total;
    worst_sym = std::max(worst_sym, std::abs(juv - jvu));
    const TransportPlan flat = psi;
    const TransportPlan sharp = plan_cdf_match(v, w, 64);
    const double lhs = transport_cost(u, w, plan_compose(sharp, flat)).total;
    const double rhs = juv + transport_cost(v, w, sharp).total;
    worst_tri = std::max(worst_tri, lhs - rhs);
  }
  std::vector<Verdict> out;
  out.push_back(make_verdict("metric.identity_zero", "J^id(u, u)", 0.0, worst_id, 0.0));
  out.push_back(make_verdict("metric.symmetry", "max |J^psi(u,v) - J^{psi^-1}(v,u)|", 0.0,
                             worst_sym, 1e-10));
  out.push_back(make_verdict("metric.triangle",
                             "max J^{sharp o flat}(u,w) - J^flat(u,v) - J^sharp(v,w)", 0.0,
                             worst_tri, 1e-8));
  return out;
}

std::vector<Verdict> suite_lemma3() {
  const auto triples = metric_triples();
  double worst_lower = -1.0, worst_upper = -1.0;
  for (const auto& [u, v, w] : triples) {
    (void)w;
    const double lo = lower_bound_L1(u, v);
    const double up = std::min(transport_cost(u, v, plan_identity()).total,
                               transport_cost(u, v, plan_cdf_match(u, v, 64)).total);
    const double hi = upper_bound_H1(u, v);
    worst_lower = std::max(worst_lower, lo - up);
    worst_upper = std::max(worst_upper, up - hi);
  }
  std::vector<Verdict> out;
  out.push_back(make_verdict("lemma3.lower", "max lower_bound_L1 - best upper", 0.0, worst_lower,
                             1e-12));
  out.push_back(make_verdict(
      "lemma3.upper", "max best upper - (8 pi + 3)(1 + ||u|| + ||v||) ||u - v||_H1",
      8.0 * kPi + 3.0, worst_upper, 1e-12));
  return out;
}

std::vector<Verdict> suite_lemma5() {
  const PeakonState u0 = three_peakon_state();
  SolverConfig cfg;
  const Trajectory traj = evolve(u0, 1.0, cfg);
  const double E = energy(u0);
  const double C = energy_bracket(E);
  const double s = 0.3;
  const PeakonState us = traj.state_at(s);
  double worst = 0.0;
  for (const double h : {1e-3, 1e-2, 1e-1}) {
    const PeakonState ush = traj.state_at(s + h);
    double upper = transport_cost(us, ush, plan_time_shift(traj, s, s + h, 128)).total;
    upper = std::min(upper, transport_cost(us, ush, plan_identity()).total);
    upper = std::min(upper, transport_cost(us, ush, plan_cdf_match(us, ush, 128)).total);
    worst = std::max(worst, upper / (C * h));
  }
  std::vector<Verdict> out;
  out.push_back(make_verdict("lemma5.time_lipschitz",
                             "max_h J_upper(u(s), u(s+h)) / (C(E) h), C = 10E^2 + 23E + 3", C,
                             worst, 1.0));
  return out;
}

std::vector<Verdict> suite_lemma7() {
  const PeakonState u0 = three_peakon_state();
  PeakonState v0 = u0;
  v0.p[0] += 4e-5;
  v0.p[1] -= 4e-5;
  v0.p[2] += 4e-5;
  SolverConfig cfg;
  const Trajectory tu = evolve(u0, 1.0, cfg);
  const Trajectory tv = evolve(v0, 1.0, cfg);
  const double kappa = energy_bracket(std::max(energy(u0), energy(v0)));

  std::vector<double> times, uppers;
  for (int k = 0; k <= 10; ++k) {
    const double t = k / 10.0;
    const PeakonState ut = tu.state_at(t);
    const PeakonState vt = tv.state_at(t);
    const auto seeds = build_seeds({"identity", "cdf", "characteristic"}, ut, vt, 128, &tu, &tv, t);
    double best = transport_cost(ut, vt, seeds.front().second).total;
    for (std::size_t i = 1; i < seeds.size(); ++i)
      best = std::min(best, transport_cost(ut, vt, seeds[i].second).total);
    times.push_back(t);
    uppers.push_back(best);
  }
  const double j0 = uppers.front();

  // least-squares slope of log upper
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int n = static_cast<int>(times.size());
  for (int i = 0; i < n; ++i) {
    sx += times[i];
    sy += std::log(uppers[i]);
    sxx += times[i] * times[i];
    sxy += times[i] * std::log(uppers[i]);
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);

  double worst_env = -1e9;
  for (int i = 0; i < n; ++i)
    worst_env = std::max(worst_env, std::log(uppers[i]) - std::log(j0) - kappa * times[i]);

  std::vector<Verdict> out;
  out.push_back(make_verdict("lemma7.initial_distance", "J_upper(0) (target about 1e-3)", j0, j0,
                             1e-2));
  out.push_back(
      make_verdict("lemma7.slope", "fitted d/dt log J_upper <= kappa_max", kappa, slope, kappa));
  out.push_back(make_verdict("lemma7.envelope",
                             "max_t log J_upper(t) - log J_0 - kappa_max t <= log 1.1", kappa,
                             worst_env, std::log(1.1)));
  return out;
}

std::vector<Verdict> suite_lemma1() {
  const SmoothPeriodicDatum& sine = datum_by_label("sine");
  std::vector<double> errs;
  for (const int n : {8, 16, 32, 64})
    errs.push_back(approx_error(sine, multipeakon_approx(sine, n)));
  double worst_mono = -1.0;
  for (std::size_t i = 0; i + 1 < errs.size(); ++i)
    worst_mono = std::max(worst_mono, errs[i + 1] - errs[i]);
  std::vector<Verdict> out;
  out.push_back(make_verdict("lemma1.monotone", "max err(2N) - err(N) over N in {8,16,32}", 0.0,
                             worst_mono, 0.0));
  out.push_back(make_verdict("lemma1.rate", "err(64) - err(8)/4", 4.0, errs.back() - errs.front() / 4.0,
                             0.0));
  return out;
}

std::vector<Verdict> suite_residual() {
  SolverConfig cfg;
  std::vector<Verdict> out;
  {
    const Trajectory traj = evolve(PeakonState({1.0}, {0.3}), 0.5, cfg);
    out.push_back(make_verdict("residual.single_peakon",
                               "||du/dt + u ux + Px||_L2 at dt = 1e-4 (one peakon)", 0.0,
                               residual_check(traj, 0.25, 1e-4), 1e-4));
  }
  {
    const Trajectory traj = evolve(three_peakon_state(), 0.5, cfg);
    out.push_back(make_verdict("residual.three_peakon",
                               "||du/dt + u ux + Px||_L2 at dt = 1e-4 (three peakons)", 0.0,
                               residual_check(traj, 0.25, 1e-4), 1e-3));
  }
  return out;
}

std::vector<Verdict> suite_reversibility() {
  SolverConfig cfg;
  const PeakonState s0 = antipeakon_state();
  const double T = 2.5;
  const Trajectory fwd = evolve(s0, T, cfg);
  const Trajectory bwd = evolve(fwd.state_at(T), -T, cfg);
  const double err = h1_distance(bwd.state_at(-T), s0);
  std::vector<Verdict> out;
  out.push_back(make_verdict("reversibility.round_trip",
                             "||u(forward T then backward T) - u(0)||_H1 across one collision", T,
                             err, 1e-4));
  return out;
}

}  // namespace

std::vector<std::string> suite_names() {
  return {"kernel", "conservation", "collision", "metric",      "lemma1",       "lemma3",
          "lemma5", "lemma7",       "residual",  "reversibility", "all"};
}

std::vector<Verdict> run_suite(const std::string& name) {
  if (name == "kernel") return suite_kernel();
  if (name == "conservation") return suite_conservation();
  if (name == "collision") return suite_collision();
  if (name == "metric") return suite_metric_axioms();
  if (name == "lemma1") return suite_lemma1();
  if (name == "lemma3") return suite_lemma3();
  if (name == "lemma5") return suite_lemma5();
  if (name == "lemma7") return suite_lemma7();
  if (name == "residual") return suite_residual();
  if (name == "reversibility") return suite_reversibility();
  if (name == "all") {
    std::vector<Verdict> out;
    for (const auto& n : suite_names()) {
      if (n == "all") continue;
      auto v = run_suite(n);
      out.insert(out.end(), v.begin(), v.end());
    }
    return out;
  }
  fail(errc::unknown_suite, "unknown verification suite: " + name);
}

// ---------------------------------------------------------------------------
// configuration and drivers

PeakonState initial_from_json(const nlohmann::json& j) {
  if (j.contains("p") || j.contains("q")) {
    require(j.contains("p") && j.contains("q"), errc::bad_config,
            "initial data needs both p and q");
    return PeakonState(j.at("p").get<std::vector<double>>(),
                       j.at("q").get<std::vector<double>>());
  }
  if (j.contains("datum")) {
    const int n = j.value("n", 16);
    return multipeakon_approx(datum_by_label(j.at("datum").get<std::string>()), n);
  }
  fail(errc::bad_config, "initial data needs either p/q arrays or a datum label");
}

namespace {

SolverConfig solver_from_json(const nlohmann::json& j) {
  SolverConfig cfg;
  if (j.is_null()) return cfg;
  cfg.rel_tol = j.value("rel_tol", cfg.rel_tol);
  cfg.abs_tol = j.value("abs_tol", cfg.abs_tol);
  cfg.gap_threshold = j.value("gap_threshold", cfg.gap_threshold);
  cfg.slope_threshold = j.value("slope_threshold", cfg.slope_threshold);
  cfg.max_step = j.value("max_step", cfg.max_step);
  cfg.chart_exit_margin = j.value("chart_exit_margin", cfg.chart_exit_margin);
  cfg.validate();
  return cfg;
}

MetricOptions metric_from_json(const nlohmann::json& j) {
  MetricOptions m;
  if (j.is_null()) return m;
  if (j.contains("seeds")) m.seeds = j.at("seeds").get<std::vector<std::string>>();
  m.budget = j.value("budget", m.budget);
  m.grid = j.value("grid", m.grid);
  require(m.budget >= 0 && m.grid >= 8, errc::bad_config, "bad metric options");
  return m;
}

void check_schema(const nlohmann::json& config) {
  require(config.is_object(), errc::bad_config, "config must be a JSON object");
  require(config.value("schema", 0) == 1, errc::bad_config, "config requires \"schema\": 1");
}

void write_file(const std::string& out_dir, const std::string& name, const std::string& content) {
  if (out_dir.empty()) return;
  std::filesystem::create_directories(out_dir);
  const auto path = std::filesystem::path(out_dir) / name;
  std::ofstream f(path, std::ios::binary);
  require(f.good(), errc::io_error, "cannot open " + path.string());
  f << content;
  require(f.good(), errc::io_error, "write failed for " + path.string());
}

nlohmann::ordered_json scenario_echo(const nlohmann::json& config) {
  return nlohmann::ordered_json::parse(config.dump());
}

}  // namespace

Scenario scenario_from_json(const nlohmann::json& j) {
  check_schema(j);
  Scenario sc;
  sc.name = j.value("name", sc.name);
  require(j.contains("initial"), errc::bad_config, "scenario requires an \"initial\" object");
  sc.initial = initial_from_json(j.at("initial"));
  sc.t_final = j.value("t_final", sc.t_final);
  require(std::isfinite(sc.t_final), errc::bad_config, "t_final must be finite");
  sc.samples = j.value("samples", sc.samples);
  require(sc.samples >= 2, errc::bad_config, "need at least two samples");
  sc.solver = solver_from_json(j.contains("solver") ? j.at("solver") : nlohmann::json());
  sc.metric = metric_from_json(j.contains("metric") ? j.at("metric") : nlohmann::json());
  return sc;
}

nlohmann::ordered_json verdicts_to_json(const std::vector<Verdict>& verdicts) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& v : verdicts) {
    nlohmann::ordered_json row;
    row["id"] = v.id;
    row["inequality"] = v.inequality;
    row["constant"] = v.constant;
    row["measured"] = v.measured;
    row["tolerance"] = v.tolerance;
    row["pass"] = v.pass;
    arr.push_back(row);
  }
  return arr;
}

bool all_pass(const std::vector<Verdict>& verdicts) {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

RunResult cmd_simulate(const nlohmann::json& config, const std::string& out_dir) {
  const Scenario sc = scenario_from_json(config);
  const Trajectory traj = evolve(sc.initial, sc.t_final, sc.solver);

  const std::size_t n = sc.initial.size();
  std::ostringstream csv;
  csv << "t,regime,energy,hamiltonian,momentum";
  for (std::size_t i = 0; i < n; ++i) csv << ",p" << i;
  for (std::size_t i = 0; i < n; ++i) csv << ",q" << i;
  csv << "\n";

  const double h0 = hamiltonian(sc.initial);
  const double p0 = sum_p(sc.initial);
  double worst_h = 0.0, worst_p = 0.0;
  for (int k = 0; k < sc.samples; ++k) {
    const double t = sc.t_final * k / (sc.samples - 1);
    const PeakonState st = traj.state_at(t);
    const Regime regime = traj.regime_at(t);
    const double h = hamiltonian(st);
    const double p = sum_p(st);
    worst_p = std::max(worst_p, std::abs(p - p0));
    if (regime == Regime::regular) worst_h = std::max(worst_h, std::abs(h - h0) / (1.0 + std::abs(h0)));
    csv << format17(t) << ',' << (regime == Regime::chart ? "chart" : "regular") << ','
        << format17(energy(st)) << ',' << format17(h) << ',' << format17(p);
    for (std::size_t i = 0; i < n; ++i) csv << ',' << format17(i < st.size() ? st.p[i] : 0.0);
    for (std::size_t i = 0; i < n; ++i) csv << ',' << format17(i < st.size() ? st.q[i] : 0.0);
    csv << "\n";
  }

  std::vector<Verdict> verdicts;
  verdicts.push_back(make_verdict("simulate.hamiltonian_drift",
                                  "max_t |H(t) - H(0)| / (1 + |H(0)|)", 0.0, worst_h, 1e-8));
  verdicts.push_back(
      make_verdict("simulate.momentum_drift", "max_t |sum p(t) - sum p(0)|", 0.0, worst_p, 1e-8));
  if (!traj.events().empty() && !sc.initial.empty()) {
    const double e0 = energy(sc.initial);
    const double e1 = energy(traj.state_at(sc.t_final));
    verdicts.push_back(make_verdict("simulate.energy_across_events",
                                    "|E(t_final) - E(0)| / E(0)", 0.0, std::abs(e1 - e0) / e0,
                                    1e-4));
  }

  nlohmann::ordered_json record;
  record["schema"] = 1;
  record["command"] = "simulate";
  record["scenario"] = scenario_echo(config);
  nlohmann::ordered_json events = nlohmann::ordered_json::array();
  for (const auto& e : traj.events())
    events.push_back({{"tau", e.tau}, {"qbar", e.qbar}, {"atom", e.atom}});
  record["events"] = events;
  record["verdicts"] = verdicts_to_json(verdicts);
  record["all_pass"] = all_pass(verdicts);

  write_file(out_dir, "trajectory.csv", csv.str());
  write_file(out_dir, "record.json", record.dump(2) + "\n");
  return {record, all_pass(verdicts)};
}

RunResult cmd_metric(const nlohmann::json& config, const std::string& out_dir,
                     const std::string& seed_suite) {
  check_schema(config);
  require(config.contains("u") && config.contains("v"), errc::bad_config,
          "metric config requires \"u\" and \"v\" initial objects");
  const PeakonState u0 = initial_from_json(config.at("u"));
  const PeakonState v0 = initial_from_json(config.at("v"));
  const double t_final = config.value("t_final", 1.0);
  const int samples = config.value("samples", 11);
  require(t_final >= 0.0 && samples >= 2, errc::bad_config, "bad metric time grid");
  const SolverConfig cfg =
      solver_from_json(config.contains("solver") ? config.at("solver") : nlohmann::json());
  MetricOptions mopt =
      metric_from_json(config.contains("metric") ? config.at("metric") : nlohmann::json());
  if (!seed_suite.empty() && seed_suite != "all") {
    if (seed_suite == "identity")
      mopt.seeds = {"identity"};
    else if (seed_suite == "cdf")
      mopt.seeds = {"identity", "cdf"};
    else if (seed_suite == "characteristic")
      mopt.seeds = {"identity", "characteristic"};
    else
      fail(errc::bad_config, "unknown seed suite: " + seed_suite);
  }

  const Trajectory tu = evolve(u0, t_final, cfg);
  const Trajectory tv = evolve(v0, t_final, cfg);
  const double kappa = config.value("kappa_max", energy_bracket(std::max(energy(u0), energy(v0))));

  std::ostringstream csv;
  csv << "t,lower,upper,plan\n";
  std::vector<double> times, lowers, uppers;
  std::vector<std::string> labels;
  for (int k = 0; k < samples; ++k) {
    const double t = t_final * k / (samples - 1);
    const PeakonState ut = tu.state_at(t);
    const PeakonState vt = tv.state_at(t);
    const auto seeds = build_seeds(mopt.seeds, ut, vt, mopt.grid, &tu, &tv, t);
    const MetricReport rep = optimize_plan(ut, vt, seeds, mopt.budget);
    times.push_back(t);
    lowers.push_back(rep.lower);
    uppers.push_back(rep.upper);
    labels.push_back(rep.plan_label);
    csv << format17(t) << ',' << format17(rep.lower) << ',' << format17(rep.upper) << ','
        << rep.plan_label << "\n";
  }

  std::vector<Verdict> verdicts;
  double worst_lu = -1.0;
  for (std::size_t i = 0; i < times.size(); ++i)
    worst_lu = std::max(worst_lu, lowers[i] - uppers[i]);
  verdicts.push_back(
      make_verdict("metric.lower_le_upper", "max_t lower(t) - upper(t)", 0.0, worst_lu, 1e-12));
  const double j0 = uppers.front();
  if (j0 > 0.0) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int n = static_cast<int>(times.size());
    for (int i = 0; i < n; ++i) {
      sx += times[i];
      sy += std::log(uppers[i]);
      sxx += times[i] * times[i];
      sxy += times[i] * std::log(uppers[i]);
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    verdicts.push_back(
        make_verdict("metric.exponential_slope", "fitted d/dt log upper <= kappa_max", kappa,
                     slope, kappa));
    double worst_env = -1e9;
    for (int i = 0; i < n; ++i)
      worst_env = std::max(worst_env, std::log(uppers[i]) - std::log(j0) - kappa * times[i]);
    verdicts.push_back(make_verdict("metric.exponential_envelope",
                                    "max_t log upper(t) - log upper(0) - kappa_max t <= log 1.1",
                                    kappa, worst_env, std::log(1.1)));
  }

  nlohmann::ordered_json record;
  record["schema"] = 1;
  record["command"] = "metric";
  record["scenario"] = scenario_echo(config);
  record["kappa_max"] = kappa;
  record["verdicts"] = verdicts_to_json(verdicts);
  record["all_pass"] = all_pass(verdicts);

  write_file(out_dir, "metric.csv", csv.str());
  write_file(out_dir, "record.json", record.dump(2) + "\n");
  return {record, all_pass(verdicts)};
}

RunResult cmd_approx(const nlohmann::json& config, const std::string& out_dir) {
  check_schema(config);
  require(config.contains("datum"), errc::bad_config, "approx config requires \"datum\"");
  const std::string label = config.at("datum").get<std::string>();
  const SmoothPeriodicDatum& datum = datum_by_label(label);
  std::vector<int> ns = config.value("n_values", std::vector<int>{8, 16, 32, 64});
  require(!ns.empty(), errc::bad_config, "n_values must be nonempty");

  std::ostringstream csv;
  csv << "n,h1_error\n";
  nlohmann::ordered_json states = nlohmann::ordered_json::array();
  std::vector<double> errs;
  for (const int n : ns) {
    const PeakonState st = multipeakon_approx(datum, n);
    const double err = approx_error(datum, st);
    errs.push_back(err);
    csv << n << ',' << format17(err) << "\n";
    states.push_back({{"n", n}, {"p", st.p}, {"q", st.q}, {"h1_error", err}});
  }

  std::vector<Verdict> verdicts;
  const bool ascending = std::is_sorted(ns.begin(), ns.end()) && ns.size() >= 2;
  if (ascending && errs.front() > 1e-10) {
    double worst = -1.0;
    for (std::size_t i = 0; i + 1 < errs.size(); ++i) worst = std::max(worst, errs[i + 1] - errs[i]);
    verdicts.push_back(
        make_verdict("approx.monotone", "max err(n_{k+1}) - err(n_k)", 0.0, worst, 0.0));
  }

  nlohmann::ordered_json record;
  record["schema"] = 1;
  record["command"] = "approx";
  record["scenario"] = scenario_echo(config);
  record["states"] = states;
  record["verdicts"] = verdicts_to_json(verdicts);
  record["all_pass"] = all_pass(verdicts);

  write_file(out_dir, "approx.csv", csv.str());
  write_file(out_dir, "record.json", record.dump(2) + "\n");
  return {record, all_pass(verdicts)};
}

RunResult cmd_verify(const std::string& suite, const std::string& out_dir) {
  const auto verdicts = run_suite(suite);
  nlohmann::ordered_json record;
  record["schema"] = 1;
  record["command"] = "verify";
  record["suite"] = suite;
  record["verdicts"] = verdicts_to_json(verdicts);
  record["all_pass"] = all_pass(verdicts);
  write_file(out_dir, "record.json", record.dump(2) + "\n");
  return {record, all_pass(verdicts)};
}

}  // namespace chpeak
