// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "chpeak/chpeak.h"

namespace {

struct StateGuard {
  chpeak_state* s = nullptr;
  ~StateGuard() { chpeak_state_free(s); }
};
struct TrajGuard {
  chpeak_trajectory* t = nullptr;
  ~TrajGuard() { chpeak_trajectory_free(t); }
};
struct PlanGuard {
  chpeak_plan* p = nullptr;
  ~PlanGuard() { chpeak_plan_free(p); }
};

}  // namespace

TEST_CASE("kernel entry points") {
  CHECK(chpeak_chi(0.0) == doctest::Approx(2.1639534).epsilon(1e-7));
  CHECK(chpeak_chi_prime(0.5) == doctest::Approx(0.0));
  CHECK(chpeak_chi_tilde(0.25) == doctest::Approx(-chpeak_chi_prime(0.25)).epsilon(1e-15));
  CHECK(std::strlen(chpeak_version()) > 0);
}

TEST_CASE("state lifecycle and profile evaluation") {
  const double p[] = {1.0, -1.0};
  const double q[] = {0.4, 0.6};
  StateGuard st;
  REQUIRE(chpeak_state_create(p, q, 2, &st.s) == CHPEAK_OK);
  CHECK(chpeak_state_size(st.s) == 2);

  double u = 0, ux = 0, theta = 0;
  CHECK(chpeak_profile_eval(st.s, 0.5, &u, &ux, &theta) == CHPEAK_OK);
  CHECK(u == doctest::Approx(0.0).epsilon(1e-13));

  double e = 0, h = 0;
  CHECK(chpeak_energy(st.s, &e) == CHPEAK_OK);
  CHECK(chpeak_hamiltonian(st.s, &h) == CHPEAK_OK);
  CHECK(e == doctest::Approx(4.0 * h).epsilon(1e-11));

  double P = 0, Px = 0;
  CHECK(chpeak_source(st.s, 0.3, &P, &Px) == CHPEAK_OK);
  CHECK(std::abs(P) <= e);

  // coincident positions are rejected with the dedicated code
  const double qb[] = {0.4, 0.4};
  chpeak_state* bad = nullptr;
  CHECK(chpeak_state_create(p, qb, 2, &bad) == CHPEAK_ERR_COLLISION_REQUIRED);
  CHECK(std::strlen(chpeak_last_error()) > 0);
}

TEST_CASE("pair rescaling round trip") {
  double chart[4] = {0, 0, 0, 0};
  REQUIRE(chpeak_pair_rescale(0.0, 2.0, 0.4, 0.6, chart) == CHPEAK_OK);
  CHECK(chart[0] == doctest::Approx(2.0));
  CHECK(chart[1] == doctest::Approx(2.0 * std::atan(2.0)).epsilon(1e-14));
  CHECK(chart[2] == doctest::Approx(1.0));
  CHECK(chart[3] == doctest::Approx(0.8).epsilon(1e-13));
  double p1, p2, q1, q2;
  REQUIRE(chpeak_pair_unrescale(chart, &p1, &p2, &q1, &q2) == CHPEAK_OK);
  CHECK(p1 == doctest::Approx(0.0).epsilon(1e-13));
  CHECK(p2 == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(q1 == doctest::Approx(0.4).epsilon(1e-13));
  CHECK(q2 == doctest::Approx(0.6).epsilon(1e-13));
}

TEST_CASE("evolution through one collision via the C surface") {
  const double p[] = {1.0, -1.0};
  const double q[] = {0.4, 0.6};
  StateGuard st;
  REQUIRE(chpeak_state_create(p, q, 2, &st.s) == CHPEAK_OK);

  chpeak_solver_config cfg;
  chpeak_solver_config_default(&cfg);
  TrajGuard traj;
  REQUIRE(chpeak_evolve(st.s, 2.5, &cfg, &traj.t) == CHPEAK_OK);
  REQUIRE(chpeak_trajectory_event_count(traj.t) == 1);

  double tau = 0, qbar = 0, atom = 0;
  REQUIRE(chpeak_trajectory_event(traj.t, 0, &tau, &qbar, &atom) == CHPEAK_OK);
  CHECK(qbar == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(atom > 0.0);

  StateGuard end;
  REQUIRE(chpeak_trajectory_state_at(traj.t, 2.5, &end.s) == CHPEAK_OK);
  double e0 = 0, e1 = 0;
  chpeak_energy(st.s, &e0);
  chpeak_energy(end.s, &e1);
  CHECK(std::abs(e1 - e0) / e0 <= 1e-4);

  double xi = 0;
  CHECK(chpeak_characteristic_flow(traj.t, tau - 0.1, tau + 0.1, 0.2, &xi) ==
        CHPEAK_ERR_EVENT_IN_WINDOW);
  CHECK(chpeak_characteristic_flow(traj.t, 0.0, 0.2, 0.2, &xi) == CHPEAK_OK);

  double res = 0;
  CHECK(chpeak_residual_check(traj.t, 0.3, 1e-4, &res) == CHPEAK_OK);
  CHECK(res <= 1e-3);
}

TEST_CASE("plans and distance bounds via the C surface") {
  const double pu[] = {0.8, -0.4};
  const double qu[] = {0.2, 0.65};
  const double pv[] = {0.5, 0.3};
  const double qv[] = {0.1, 0.5};
  StateGuard u, v;
  REQUIRE(chpeak_state_create(pu, qu, 2, &u.s) == CHPEAK_OK);
  REQUIRE(chpeak_state_create(pv, qv, 2, &v.s) == CHPEAK_OK);

  PlanGuard id, cdf, inv, comp;
  REQUIRE(chpeak_plan_identity(&id.p) == CHPEAK_OK);
  REQUIRE(chpeak_plan_cdf_match(u.s, v.s, 32, &cdf.p) == CHPEAK_OK);
  REQUIRE(chpeak_plan_inverse(cdf.p, &inv.p) == CHPEAK_OK);
  REQUIRE(chpeak_plan_compose(inv.p, cdf.p, &comp.p) == CHPEAK_OK);
  double y = 0;
  REQUIRE(chpeak_plan_eval(comp.p, 0.3, &y) == CHPEAK_OK);
  CHECK(y == doctest::Approx(0.3).epsilon(1e-10));

  double total = 0, transported = 0, excess = 0;
  REQUIRE(chpeak_transport_cost(u.s, v.s, cdf.p, &total, &transported, &excess) == CHPEAK_OK);
  CHECK(total == doctest::Approx(transported + excess).epsilon(1e-13));

  double lo = 0, hi = 0;
  REQUIRE(chpeak_lower_bound_l1(u.s, v.s, &lo) == CHPEAK_OK);
  REQUIRE(chpeak_upper_bound_h1(u.s, v.s, &hi) == CHPEAK_OK);
  CHECK(lo <= total + 1e-12);
  CHECK(total <= hi + 1e-12);

  const chpeak_plan* seeds[] = {id.p, cdf.p};
  double rl = 0, ru = 0;
  PlanGuard best;
  REQUIRE(chpeak_optimize_plan(u.s, v.s, seeds, 2, 0, &rl, &ru, &best.p) == CHPEAK_OK);
  CHECK(rl <= ru + 1e-12);
  CHECK(ru <= total + 1e-12);

  CHECK(chpeak_d_diamond(0, 0, 0.1, 0.5, 2.0, 3.14159) == 1.0);
}

TEST_CASE("approx and verify drivers via the C surface") {
  StateGuard s;
  REQUIRE(chpeak_state_from_datum("sine", 8, &s.s) == CHPEAK_OK);
  CHECK(chpeak_state_size(s.s) == 8);
  double err = 0;
  REQUIRE(chpeak_approx_error("sine", s.s, &err) == CHPEAK_OK);
  CHECK(err > 0.0);

  chpeak_state* nope = nullptr;
  CHECK(chpeak_state_from_datum("nope", 8, &nope) == CHPEAK_ERR_UNKNOWN_LABEL);

  char* record = nullptr;
  REQUIRE(chpeak_cmd_verify("kernel", nullptr, &record) == CHPEAK_OK);
  REQUIRE(record != nullptr);
  CHECK(std::string(record).find("\"all_pass\": true") != std::string::npos);
  chpeak_string_free(record);

  CHECK(chpeak_cmd_verify("bogus", nullptr, nullptr) == CHPEAK_ERR_UNKNOWN_SUITE);
}

TEST_CASE("simulate driver writes deterministic outputs") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "chpeak_capi_sim";
  fs::remove_all(dir);
  const fs::path cfg_path = fs::temp_directory_path() / "chpeak_capi_sim.json";
  {
    std::ofstream f(cfg_path);
    f << R"({"schema":1,"name":"single","initial":{"p":[1.0],"q":[0.0]},)"
      << R"("t_final":1.0,"samples":11})";
  }
  char* record = nullptr;
  REQUIRE(chpeak_cmd_simulate(cfg_path.string().c_str(), dir.string().c_str(), &record) ==
          CHPEAK_OK);
  REQUIRE(record != nullptr);
  CHECK(std::string(record).find("\"all_pass\": true") != std::string::npos);
  chpeak_string_free(record);
  CHECK(fs::exists(dir / "trajectory.csv"));
  CHECK(fs::exists(dir / "record.json"));

  CHECK(chpeak_cmd_simulate("/no/such/config.json", nullptr, nullptr) == CHPEAK_ERR_IO);
}
