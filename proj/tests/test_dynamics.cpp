// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dynamics.hpp"
#include "error.hpp"
#include "harness.hpp"
#include "kernel.hpp"
#include "quadrature.hpp"

using namespace chpeak;

namespace {
constexpr double kPi = std::numbers::pi;

PeakonState antipeakon() { return PeakonState({1.0, -1.0}, {0.4, 0.6}); }
}  // namespace

TEST_CASE("rhs_regular: traveling wave, odd pair, momentum conservation") {
  std::vector<double> dp, dq;
  rhs_regular(PeakonState({1.0}, {0.25}), dp, dq);
  CHECK(dp[0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(dq[0] == doctest::Approx(chi(0.0)).epsilon(1e-15));

  // odd symmetry keeps p2 = -p1 for all time, so dp1 = -dp2; the left
  // (positive) strength grows as the pair approaches
  rhs_regular(antipeakon(), dp, dq);
  CHECK(dq[0] + dq[1] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(dp[0] == doctest::Approx(-dp[1]).epsilon(1e-14));
  CHECK(dp[0] > 0.0);

  Rng rng(5150);
  for (int s = 0; s < 10; ++s) {
    const PeakonState st = random_state(rng, 2, 5, 2.0, 0.04);
    rhs_regular(st, dp, dq);
    double total = 0.0;
    for (double v : dp) total += v;
    CHECK(std::abs(total) <= 1e-14 * 100);
  }
}

TEST_CASE("hamiltonian: values, translation invariance, E = 4H") {
  CHECK(hamiltonian(PeakonState({1.0}, {0.2})) == doctest::Approx(0.5 * chi(0.0)).epsilon(1e-15));

  const PeakonState anti({1.0, -1.0}, {0.0, 0.5});
  // direct double-sum oracle
  double h = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) h += 0.5 * anti.p[i] * anti.p[j] * chi(anti.q[i] - anti.q[j]);
  CHECK(hamiltonian(anti) == doctest::Approx(h).epsilon(1e-15));
  CHECK(hamiltonian(anti) == doctest::Approx(chi(0.0) - chi(0.5)).epsilon(1e-14));
  CHECK(hamiltonian(anti) == doctest::Approx(0.244920).epsilon(1e-5));

  const PeakonState st({0.3, -0.8, 1.1}, {0.1, 0.4, 0.75});
  std::vector<double> qs(st.q);
  for (double& q : qs) q += 0.3;
  const PeakonState shifted(st.p, qs);
  CHECK(hamiltonian(shifted) == doctest::Approx(hamiltonian(st)).epsilon(1e-14));

  CHECK(energy(st) == doctest::Approx(4.0 * hamiltonian(st)).epsilon(1e-12));
}

TEST_CASE("detect_collision criteria") {
  SolverConfig cfg;
  cfg.slope_threshold = 1.5;
  cfg.gap_threshold = 0.05;

  const PeakonState hit({1.0, -1.0}, {0.49, 0.51});
  auto res = detect_collision(hit, cfg);
  REQUIRE(res.has_value());
  CHECK(res->first == 0);
  CHECK(res->second == 1);

  const PeakonState same_sign({1.0, 1.0}, {0.49, 0.51});
  CHECK_FALSE(detect_collision(same_sign, cfg).has_value());

  const PeakonState apart({1.0, -1.0}, {0.2, 0.7});
  CHECK_FALSE(detect_collision(apart, cfg).has_value());

  // wrap pair across the period boundary
  const PeakonState wrap({-2.0, 2.0}, {0.002, 0.998});
  auto wres = detect_collision(wrap, cfg);
  REQUIRE(wres.has_value());
  CHECK(wres->first == 1);  // left of the short arc is the peakon at 0.998
  CHECK(wres->second == 0);
}

TEST_CASE("to_rescaled / from_rescaled") {
  const PeakonState s({0.0, 2.0}, {0.4, 0.6});
  const CollisionChart c = to_rescaled(s, {0, 1});
  CHECK(c.z == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(c.w == doctest::Approx(2.0 * std::atan(2.0)).epsilon(1e-15));
  CHECK(c.w == doctest::Approx(2.214297).epsilon(1e-6));
  CHECK(c.eta == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(c.zeta == doctest::Approx(0.8).epsilon(1e-14));

  Rng rng(808);
  for (int k = 0; k < 30; ++k) {
    const double pl = rng.uniform(5.0, 80.0);
    const double pr = -rng.uniform(5.0, 80.0);
    const double q1 = rng.uniform(0.0, 1.0);
    const double gap = rng.uniform(1e-4, 5e-3);
    const PeakonState st({pl, pr, 0.4}, {q1, q1 + gap, q1 + 0.5});
    // locate the close pair in sorted coordinates
    std::size_t i = 0;
    for (std::size_t j = 0; j < 3; ++j)
      if (periodic_distance(st.q[j], st.q[(j + 1) % 3]) < 1e-2) i = j;
    const CollisionChart chart = to_rescaled(st, {i, (i + 1) % 3});
    const PeakonState back = from_rescaled(chart);
    REQUIRE(back.size() == st.size());
    for (std::size_t j = 0; j < st.size(); ++j) {
      CHECK(back.p[j] == doctest::Approx(st.p[j]).epsilon(1e-12));
      CHECK(std::abs(periodic_delta(back.q[j], st.q[j])) <= 1e-12);
    }
  }

  // reconstructed gap shrinks as w -> pi at fixed zeta
  CollisionChart near;
  near.z = 0.3;
  near.eta = 1.0;
  near.zeta = 0.5;
  double prev = 1.0;
  for (double dw : {0.1, 0.01, 0.001}) {
    near.w = kPi + dw;
    const PeakonState r = from_rescaled(near);
    const double gap = periodic_distance(r.q[0], r.q[1]);
    CHECK(gap < prev);
    prev = gap;
  }
  near.w = kPi;
  CHECK_THROWS_AS(from_rescaled(near), error);
}

TEST_CASE("rhs_rescaled: chain-rule oracle away from w = pi") {
  Rng rng(909);
  for (int trial = 0; trial < 20; ++trial) {
    const double delta = (trial % 2 ? 1.0 : -1.0) * rng.uniform(4.0, 30.0);
    const double z = rng.uniform(-1.0, 1.0);
    const double gap = rng.uniform(1e-4, 3e-3);
    const double q1 = 0.45;
    const PeakonState st({0.5 * (z - delta), 0.5 * (z + delta), rng.uniform(-1.0, 1.0)},
                         {q1, q1 + gap, q1 + 0.45});
    const CollisionChart chart = to_rescaled(st, {0, 1});
    const ChartDerivative cd = rhs_rescaled(chart);

    // oracle: differentiate the transform along the regular flow
    std::vector<double> dp, dq;
    rhs_regular(st, dp, dq);
    const double p1 = st.p[0], p2 = st.p[1];
    const double dz = dp[0] + dp[1];
    const double dd = dp[1] - dp[0];
    const double dw = 2.0 * dd / (1.0 + (p2 - p1) * (p2 - p1));
    const double deta = dq[0] + dq[1];
    const double dzeta =
        2.0 * (p2 - p1) * dd * (st.q[1] - st.q[0]) + (p2 - p1) * (p2 - p1) * (dq[1] - dq[0]);

    CHECK(cd.dz == doctest::Approx(dz).epsilon(1e-8));
    CHECK(cd.dw == doctest::Approx(dw).epsilon(1e-8));
    CHECK(cd.deta == doctest::Approx(deta).epsilon(1e-8));
    CHECK(cd.dzeta == doctest::Approx(dzeta).scale(std::abs(dzeta) + 1.0).epsilon(1e-6));
    CHECK(cd.dp_spect[0] == doctest::Approx(dp[2]).epsilon(1e-8));
    CHECK(cd.dq_spect[0] == doctest::Approx(dq[2]).epsilon(1e-8));
  }
}

TEST_CASE("rhs_rescaled: symmetric pair invariants and dw sign near pi") {
  CollisionChart sym;
  sym.z = 0.0;
  sym.eta = 1.0;
  sym.zeta = 0.63;
  for (double w : {kPi - 0.3, kPi - 1e-3, kPi, kPi + 1e-3, kPi + 0.3}) {
    sym.w = w;
    const ChartDerivative d = rhs_rescaled(sym);
    CHECK(d.dz == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(d.deta == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(d.dw < 0.0);
  }
  // removable limit at w = pi: dw -> chi'(0+) = -1 for the bare pair
  sym.w = kPi;
  CHECK(rhs_rescaled(sym).dw == doctest::Approx(-1.0).epsilon(1e-12));

  // spectator inside the gap window is rejected
  CollisionChart bad;
  bad.z = 0.1;
  bad.w = kPi - 0.5;
  bad.eta = 1.0;
  bad.zeta = 0.4;
  const double gap = bad.zeta / std::pow(std::tan(0.5 * bad.w), 2.0);
  bad.spectators = PeakonState({0.5}, {0.5 * bad.eta + 0.25 * gap});
  CHECK_THROWS_AS(rhs_rescaled(bad), error);
}

TEST_CASE("evolve: single peakon travels at speed p chi(0)") {
  SolverConfig cfg;
  const Trajectory traj = evolve(PeakonState({1.0}, {0.0}), 1.0, cfg);
  const PeakonState end = traj.state_at(1.0);
  CHECK(end.p[0] == doctest::Approx(1.0).epsilon(1e-10));
  const double expect = chi(0.0) - 2.0;  // chi(0) mod 1 = 0.16395...
  CHECK(end.q[0] == doctest::Approx(expect).epsilon(1e-8));
  CHECK(traj.events().empty());
}

TEST_CASE("evolve: peakon-antipeakon collision is continued conservatively") {
  SolverConfig cfg;
  const PeakonState s0 = antipeakon();
  const Trajectory traj = evolve(s0, 2.5, cfg);

  REQUIRE(traj.events().size() == 1);
  const CollisionEvent ev = traj.events().front();
  CHECK(ev.qbar == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(ev.atom == doctest::Approx(4.0 * hamiltonian(s0)).epsilon(1e-6));
  CHECK(ev.tau > 0.0);
  CHECK(ev.tau < 2.5);

  const double e0 = energy(s0);
  const double e1 = energy(traj.state_at(2.5));
  CHECK(std::abs(e1 - e0) / e0 <= 1e-4);

  // regime log covers the window and tags a chart interval
  bool saw_chart = false;
  for (const auto& span : traj.regime_log()) saw_chart |= (span.regime == Regime::chart);
  CHECK(saw_chart);
  CHECK(traj.regime_at(ev.tau) == Regime::chart);

  // the flow satisfies u(t) = -u(2 tau - t) for this datum, so the state at
  // 2 tau is the negated initial state
  const PeakonState negated({-1.0, 1.0}, {0.4, 0.6});
  CHECK(h1_distance(traj.state_at(2.0 * ev.tau), negated) <= 2e-5);
}

TEST_CASE("evolve: odd symmetry is preserved through the collision") {
  SolverConfig cfg;
  const Trajectory traj = evolve(antipeakon(), 2.5, cfg);
  double worst = 0.0;
  for (int it = 0; it <= 20; ++it) {
    const double t = 2.5 * it / 20.0;
    for (int ix = 0; ix < 17; ++ix) {
      const double x = ix / 17.0;
      worst = std::max(worst,
                       std::abs(traj.profile_at(t, x).u + traj.profile_at(t, 1.0 - x).u));
    }
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("evolve: Hamiltonian and momentum drift stay small") {
  SolverConfig cfg;
  const PeakonState st({0.9, 0.7, 0.5}, {0.15, 0.45, 0.8});
  const Trajectory traj = evolve(st, 1.0, cfg);
  const double h0 = hamiltonian(st);
  double worst_h = 0.0, worst_p = 0.0;
  for (const auto& [t, state] : traj.samples()) {
    (void)t;
    double sp = 0.0;
    for (double v : state.p) sp += v;
    worst_p = std::max(worst_p, std::abs(sp - 2.1));
    worst_h = std::max(worst_h, std::abs(hamiltonian(state) - h0) / (1.0 + std::abs(h0)));
  }
  CHECK(worst_h <= 1e-8);
  CHECK(worst_p <= 1e-8);
}

TEST_CASE("evolve: time reversal") {
  // H1 distance feels a position error eps as ~2|p| sqrt(eps) through the
  // kinks, so the event-free 1e-6 target needs tight tolerances
  SolverConfig tight;
  tight.rel_tol = 1e-12;
  tight.abs_tol = 1e-14;
  const PeakonState st({0.9, 0.7, 0.5}, {0.15, 0.45, 0.8});
  const Trajectory fwd = evolve(st, 0.7, tight);
  const Trajectory bwd = evolve(fwd.state_at(0.7), -0.7, tight);
  CHECK(h1_distance(bwd.state_at(-0.7), st) <= 1e-6);

  SolverConfig cfg;
  const PeakonState anti = antipeakon();
  const Trajectory f2 = evolve(anti, 2.5, cfg);
  REQUIRE(f2.events().size() == 1);
  const Trajectory b2 = evolve(f2.state_at(2.5), -2.5, cfg);
  CHECK(h1_distance(b2.state_at(-2.5), anti) <= 1e-4);
}

TEST_CASE("evolve: triple simultaneous candidates are rejected") {
  SolverConfig cfg;
  cfg.slope_threshold = 0.5;
  cfg.gap_threshold = 0.05;
  const PeakonState triple({2.0, -2.0, 2.0}, {0.48, 0.5, 0.52});
  CHECK_THROWS_AS(evolve(triple, 0.5, cfg), error);
}

TEST_CASE("characteristic_flow: identity, peak tracking, monotonicity") {
  SolverConfig cfg;
  const Trajectory empty_traj = evolve(PeakonState(), 1.0, cfg);
  CHECK(characteristic_flow(empty_traj, 0.0, 1.0, 0.3) == doctest::Approx(0.3).epsilon(1e-12));

  const Trajectory single = evolve(PeakonState({1.0}, {0.2}), 0.8, cfg);
  const double xi = characteristic_flow(single, 0.0, 0.8, 0.2);
  const PeakonState end = single.state_at(0.8);
  CHECK(std::abs(periodic_delta(xi, end.q[0])) <= 1e-8);

  const Trajectory traj = evolve(PeakonState({0.9, -0.6}, {0.2, 0.7}), 0.5, cfg);
  auto xs = characteristic_flow_bundle(traj, 0.0, 0.5, {0.0, 0.1, 0.3, 0.6, 0.9});
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) CHECK(xs[i] < xs[i + 1]);

  // an event inside the window is an error
  const Trajectory colliding = evolve(antipeakon(), 2.5, cfg);
  REQUIRE(colliding.events().size() == 1);
  const double tau = colliding.events()[0].tau;
  CHECK_THROWS_AS(characteristic_flow(colliding, tau - 0.1, tau + 0.1, 0.2), error);
}

TEST_CASE("residual_check: exact solution leaves only differencing error") {
  SolverConfig cfg;
  CHECK(residual_check(evolve(PeakonState(), 1.0, cfg), 0.5) == 0.0);

  const Trajectory single = evolve(PeakonState({1.0}, {0.3}), 0.5, cfg);
  const double r1 = residual_check(single, 0.25, 1e-4);
  CHECK(r1 <= 1e-4);
  const double r2 = residual_check(single, 0.25, 5e-5);
  CHECK(r2 < r1 + 1e-12);
}
