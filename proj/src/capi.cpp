// SPDX-License-Identifier: Apache-2.0
#include "chpeak/chpeak.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <string>

#include "error.hpp"
#include "harness.hpp"
#include "kernel.hpp"
#include "metric.hpp"

using namespace chpeak;

struct chpeak_state {
  PeakonState s;
};
struct chpeak_trajectory {
  Trajectory t;
};
struct chpeak_plan {
  TransportPlan p;
};

namespace {

thread_local std::string g_last_error;

chpeak_status map_code(errc code) {
  switch (code) {
    case errc::invalid_argument: return CHPEAK_ERR_INVALID_ARGUMENT;
    case errc::collision_required: return CHPEAK_ERR_COLLISION_REQUIRED;
    case errc::unsupported_interaction: return CHPEAK_ERR_UNSUPPORTED_INTERACTION;
    case errc::singular_chart: return CHPEAK_ERR_SINGULAR_CHART;
    case errc::event_in_window: return CHPEAK_ERR_EVENT_IN_WINDOW;
    case errc::unknown_label: return CHPEAK_ERR_UNKNOWN_LABEL;
    case errc::unknown_suite: return CHPEAK_ERR_UNKNOWN_SUITE;
    case errc::bad_config: return CHPEAK_ERR_BAD_CONFIG;
    case errc::io_error: return CHPEAK_ERR_IO;
    case errc::internal: return CHPEAK_ERR_INTERNAL;
  }
  return CHPEAK_ERR_INTERNAL;
}

template <typename Fn>
chpeak_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return CHPEAK_OK;
  } catch (const error& e) {
    g_last_error = e.what();
    return map_code(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CHPEAK_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

nlohmann::json load_config(const char* path) {
  require(path != nullptr, errc::invalid_argument, "config path is null");
  std::ifstream f(path);
  require(f.good(), errc::io_error, std::string("cannot open config: ") + path);
  try {
    return nlohmann::json::parse(f);
  } catch (const std::exception& e) {
    fail(errc::bad_config, std::string("config parse error: ") + e.what());
  }
}

// Completed run with failing verdicts: report CHPEAK_VERDICT_FAILED but still
// hand the record to the caller.
struct verdict_failure {};

void finish_run(const RunResult& result, char** record_json) {
  if (record_json) *record_json = dup_string(result.record.dump(2) + "\n");
  if (!result.all_pass) throw verdict_failure{};
}

template <typename Fn>
chpeak_status guarded_run(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return CHPEAK_OK;
  } catch (const verdict_failure&) {
    g_last_error = "one or more verdicts failed";
    return CHPEAK_VERDICT_FAILED;
  } catch (const error& e) {
    g_last_error = e.what();
    return map_code(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CHPEAK_ERR_INTERNAL;
  }
}

}  // namespace

extern "C" {

const char* chpeak_version(void) { return "0.1.0"; }

const char* chpeak_last_error(void) { return g_last_error.c_str(); }

void chpeak_string_free(char* s) { std::free(s); }

double chpeak_chi(double x) { return chi(x); }
double chpeak_chi_prime(double x) { return chi_prime(x); }
double chpeak_chi_tilde(double x) { return chi_tilde(x); }

chpeak_status chpeak_state_create(const double* p, const double* q, size_t n, chpeak_state** out) {
  return guarded([&] {
    require(out && (n == 0 || (p && q)), errc::invalid_argument, "null argument");
    *out = new chpeak_state{PeakonState(std::vector<double>(p, p + n),
                                        std::vector<double>(q, q + n))};
  });
}

chpeak_status chpeak_state_from_datum(const char* label, int n, chpeak_state** out) {
  return guarded([&] {
    require(out && label, errc::invalid_argument, "null argument");
    *out = new chpeak_state{multipeakon_approx(datum_by_label(label), n)};
  });
}

void chpeak_state_free(chpeak_state* s) { delete s; }

size_t chpeak_state_size(const chpeak_state* s) { return s ? s->s.size() : 0; }

chpeak_status chpeak_state_get(const chpeak_state* s, double* p, double* q) {
  return guarded([&] {
    require(s && p && q, errc::invalid_argument, "null argument");
    for (std::size_t i = 0; i < s->s.size(); ++i) {
      p[i] = s->s.p[i];
      q[i] = s->s.q[i];
    }
  });
}

chpeak_status chpeak_profile_eval(const chpeak_state* s, double x, double* u, double* ux,
                                  double* theta) {
  return guarded([&] {
    require(s, errc::invalid_argument, "null state");
    const ProfilePoint pt = eval_profile(s->s, x);
    if (u) *u = pt.u;
    if (ux) *ux = pt.ux;
    if (theta) *theta = pt.theta;
  });
}

chpeak_status chpeak_energy(const chpeak_state* s, double* out) {
  return guarded([&] {
    require(s && out, errc::invalid_argument, "null argument");
    *out = energy(s->s);
  });
}

chpeak_status chpeak_hamiltonian(const chpeak_state* s, double* out) {
  return guarded([&] {
    require(s && out, errc::invalid_argument, "null argument");
    *out = hamiltonian(s->s);
  });
}

chpeak_status chpeak_h1_distance(const chpeak_state* a, const chpeak_state* b, double* out) {
  return guarded([&] {
    require(a && b && out, errc::invalid_argument, "null argument");
    *out = h1_distance(a->s, b->s);
  });
}

chpeak_status chpeak_source(const chpeak_state* s, double x, double* p, double* px) {
  return guarded([&] {
    require(s, errc::invalid_argument, "null state");
    if (p) *p = source_P(s->s, x);
    if (px) *px = source_Px(s->s, x);
  });
}

chpeak_status chpeak_approx_error(const char* label, const chpeak_state* s, double* out) {
  return guarded([&] {
    require(label && s && out, errc::invalid_argument, "null argument");
    *out = approx_error(datum_by_label(label), s->s);
  });
}

chpeak_status chpeak_pair_rescale(double p1, double p2, double q1, double q2, double out[4]) {
  return guarded([&] {
    require(out, errc::invalid_argument, "null output");
    require(q2 > q1, errc::invalid_argument, "pair must be position-ordered (q1 < q2)");
    const PeakonState s({p1, p2}, {q1, q2});
    const CollisionChart c = to_rescaled(s, {0, 1});
    out[0] = c.z;
    out[1] = c.w;
    out[2] = c.eta;
    out[3] = c.zeta;
  });
}

chpeak_status chpeak_pair_unrescale(const double in[4], double* p1, double* p2, double* q1,
                                    double* q2) {
  return guarded([&] {
    require(in && p1 && p2 && q1 && q2, errc::invalid_argument, "null argument");
    CollisionChart c;
    c.z = in[0];
    c.w = in[1];
    c.eta = in[2];
    c.zeta = in[3];
    const PeakonState s = from_rescaled(c);
    *p1 = s.p[0];
    *p2 = s.p[1];
    *q1 = s.q[0];
    *q2 = s.q[1];
  });
}

void chpeak_solver_config_default(chpeak_solver_config* cfg) {
  if (!cfg) return;
  const SolverConfig d;
  cfg->rel_tol = d.rel_tol;
  cfg->abs_tol = d.abs_tol;
  cfg->gap_threshold = d.gap_threshold;
  cfg->slope_threshold = d.slope_threshold;
  cfg->max_step = d.max_step;
  cfg->chart_exit_margin = d.chart_exit_margin;
}

chpeak_status chpeak_evolve(const chpeak_state* s, double t_final, const chpeak_solver_config* cfg,
                            chpeak_trajectory** out) {
  return guarded([&] {
    require(s && out, errc::invalid_argument, "null argument");
    SolverConfig c;
    if (cfg) {
      c.rel_tol = cfg->rel_tol;
      c.abs_tol = cfg->abs_tol;
      c.gap_threshold = cfg->gap_threshold;
      c.slope_threshold = cfg->slope_threshold;
      c.max_step = cfg->max_step;
      c.chart_exit_margin = cfg->chart_exit_margin;
    }
    *out = new chpeak_trajectory{evolve(s->s, t_final, c)};
  });
}

void chpeak_trajectory_free(chpeak_trajectory* t) { delete t; }

size_t chpeak_trajectory_event_count(const chpeak_trajectory* t) {
  return t ? t->t.events().size() : 0;
}

chpeak_status chpeak_trajectory_event(const chpeak_trajectory* t, size_t i, double* tau,
                                      double* qbar, double* atom) {
  return guarded([&] {
    require(t, errc::invalid_argument, "null trajectory");
    require(i < t->t.events().size(), errc::invalid_argument, "event index out of range");
    const CollisionEvent& e = t->t.events()[i];
    if (tau) *tau = e.tau;
    if (qbar) *qbar = e.qbar;
    if (atom) *atom = e.atom;
  });
}

chpeak_status chpeak_trajectory_state_at(const chpeak_trajectory* t, double time,
                                         chpeak_state** out) {
  return guarded([&] {
    require(t && out, errc::invalid_argument, "null argument");
    *out = new chpeak_state{t->t.state_at(time)};
  });
}

chpeak_status chpeak_characteristic_flow(const chpeak_trajectory* t, double s, double s2, double x,
                                         double* xi) {
  return guarded([&] {
    require(t && xi, errc::invalid_argument, "null argument");
    *xi = characteristic_flow(t->t, s, s2, x);
  });
}

chpeak_status chpeak_residual_check(const chpeak_trajectory* t, double time, double dt,
                                    double* out) {
  return guarded([&] {
    require(t && out, errc::invalid_argument, "null argument");
    *out = residual_check(t->t, time, dt);
  });
}

double chpeak_d_diamond(double x1, double u1, double theta1, double x2, double u2, double theta2) {
  return d_diamond({x1, u1, theta1}, {x2, u2, theta2});
}

chpeak_status chpeak_plan_identity(chpeak_plan** out) {
  return guarded([&] {
    require(out, errc::invalid_argument, "null output");
    *out = new chpeak_plan{plan_identity()};
  });
}

chpeak_status chpeak_plan_create(const double* xs, const double* ys, size_t n, chpeak_plan** out) {
  return guarded([&] {
    require(out && xs && ys && n > 0, errc::invalid_argument, "null argument");
    *out = new chpeak_plan{TransportPlan::from_breakpoints(std::vector<double>(xs, xs + n),
                                                           std::vector<double>(ys, ys + n))};
  });
}

chpeak_status chpeak_plan_cdf_match(const chpeak_state* u, const chpeak_state* v, int grid,
                                    chpeak_plan** out) {
  return guarded([&] {
    require(u && v && out, errc::invalid_argument, "null argument");
    *out = new chpeak_plan{plan_cdf_match(u->s, v->s, grid)};
  });
}

chpeak_status chpeak_plan_inverse(const chpeak_plan* psi, chpeak_plan** out) {
  return guarded([&] {
    require(psi && out, errc::invalid_argument, "null argument");
    *out = new chpeak_plan{plan_inverse(psi->p)};
  });
}

chpeak_status chpeak_plan_compose(const chpeak_plan* outer, const chpeak_plan* inner,
                                  chpeak_plan** out) {
  return guarded([&] {
    require(outer && inner && out, errc::invalid_argument, "null argument");
    *out = new chpeak_plan{plan_compose(outer->p, inner->p)};
  });
}

chpeak_status chpeak_plan_eval(const chpeak_plan* psi, double x, double* y) {
  return guarded([&] {
    require(psi && y, errc::invalid_argument, "null argument");
    *y = psi->p(x);
  });
}

void chpeak_plan_free(chpeak_plan* psi) { delete psi; }

chpeak_status chpeak_transport_cost(const chpeak_state* u, const chpeak_state* v,
                                    const chpeak_plan* psi, double* total, double* transport,
                                    double* excess) {
  return guarded([&] {
    require(u && v && psi, errc::invalid_argument, "null argument");
    const CostBreakdown cb = transport_cost(u->s, v->s, psi->p);
    if (total) *total = cb.total;
    if (transport) *transport = cb.transport;
    if (excess) *excess = cb.excess;
  });
}

chpeak_status chpeak_lower_bound_l1(const chpeak_state* u, const chpeak_state* v, double* out) {
  return guarded([&] {
    require(u && v && out, errc::invalid_argument, "null argument");
    *out = lower_bound_L1(u->s, v->s);
  });
}

chpeak_status chpeak_upper_bound_h1(const chpeak_state* u, const chpeak_state* v, double* out) {
  return guarded([&] {
    require(u && v && out, errc::invalid_argument, "null argument");
    *out = upper_bound_H1(u->s, v->s);
  });
}

chpeak_status chpeak_optimize_plan(const chpeak_state* u, const chpeak_state* v,
                                   const chpeak_plan* const* seeds, size_t n_seeds, int budget,
                                   double* lower, double* upper, chpeak_plan** best) {
  return guarded([&] {
    require(u && v && seeds && n_seeds > 0, errc::invalid_argument, "null argument");
    std::vector<std::pair<std::string, TransportPlan>> sv;
    for (size_t i = 0; i < n_seeds; ++i) {
      require(seeds[i], errc::invalid_argument, "null seed plan");
      sv.emplace_back("seed" + std::to_string(i), seeds[i]->p);
    }
    const MetricReport rep = optimize_plan(u->s, v->s, sv, budget);
    if (lower) *lower = rep.lower;
    if (upper) *upper = rep.upper;
    if (best) *best = new chpeak_plan{rep.best_plan};
  });
}

chpeak_status chpeak_cmd_simulate(const char* config_path, const char* out_dir,
                                  char** record_json) {
  return guarded_run([&] {
    finish_run(cmd_simulate(load_config(config_path), out_dir ? out_dir : ""), record_json);
  });
}

chpeak_status chpeak_cmd_metric(const char* config_path, const char* out_dir,
                                const char* seed_suite, char** record_json) {
  return guarded_run([&] {
    finish_run(cmd_metric(load_config(config_path), out_dir ? out_dir : "",
                          seed_suite ? seed_suite : ""),
               record_json);
  });
}

chpeak_status chpeak_cmd_approx(const char* config_path, const char* out_dir, char** record_json) {
  return guarded_run([&] {
    finish_run(cmd_approx(load_config(config_path), out_dir ? out_dir : ""), record_json);
  });
}

chpeak_status chpeak_cmd_verify(const char* suite, const char* out_dir, char** record_json) {
  return guarded_run([&] {
    require(suite, errc::invalid_argument, "null suite name");
    finish_run(cmd_verify(suite, out_dir ? out_dir : ""), record_json);
  });
}

}  // extern "C"
