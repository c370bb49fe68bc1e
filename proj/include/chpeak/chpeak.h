/* SPDX-License-Identifier: Apache-2.0
 *
 * chpeak: conservative multi-peakon dynamics of the spatially periodic
 * Camassa-Holm equation and the optimal-transport distance between profiles.
 *
 * C interface of the shared library: opaque handles, status codes, and a
 * small set of scenario-driver entry points that back the CLI.  All functions
 * returning chpeak_status set a thread-local message retrievable through
 * chpeak_last_error() on failure.
 */
#ifndef CHPEAK_H
#define CHPEAK_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum chpeak_status {
  CHPEAK_OK = 0,
  CHPEAK_ERR_INVALID_ARGUMENT = 1,
  CHPEAK_ERR_COLLISION_REQUIRED = 2,    /* coincident peakon positions */
  CHPEAK_ERR_UNSUPPORTED_INTERACTION = 3, /* triple collision or spectator in gap */
  CHPEAK_ERR_SINGULAR_CHART = 4,        /* reconstruction at w = pi */
  CHPEAK_ERR_EVENT_IN_WINDOW = 5,       /* collision event inside a window that must be smooth */
  CHPEAK_ERR_UNKNOWN_LABEL = 6,
  CHPEAK_ERR_UNKNOWN_SUITE = 7,
  CHPEAK_ERR_BAD_CONFIG = 8,
  CHPEAK_ERR_IO = 9,
  CHPEAK_ERR_INTERNAL = 10,
  CHPEAK_VERDICT_FAILED = 11 /* run completed but some verdict did not pass */
} chpeak_status;

typedef struct chpeak_state chpeak_state;
typedef struct chpeak_trajectory chpeak_trajectory;
typedef struct chpeak_plan chpeak_plan;

typedef struct chpeak_solver_config {
  double rel_tol;
  double abs_tol;
  double gap_threshold;
  double slope_threshold;
  double max_step;
  double chart_exit_margin;
} chpeak_solver_config;

const char* chpeak_version(void);
const char* chpeak_last_error(void);
void chpeak_string_free(char* s);

/* periodic kernel */
double chpeak_chi(double x);
double chpeak_chi_prime(double x);
double chpeak_chi_tilde(double x);

/* peakon states */
chpeak_status chpeak_state_create(const double* p, const double* q, size_t n, chpeak_state** out);
chpeak_status chpeak_state_from_datum(const char* label, int n, chpeak_state** out);
void chpeak_state_free(chpeak_state* s);
size_t chpeak_state_size(const chpeak_state* s);
chpeak_status chpeak_state_get(const chpeak_state* s, double* p, double* q);

chpeak_status chpeak_profile_eval(const chpeak_state* s, double x, double* u, double* ux,
                                  double* theta);
chpeak_status chpeak_energy(const chpeak_state* s, double* out);
chpeak_status chpeak_hamiltonian(const chpeak_state* s, double* out);
chpeak_status chpeak_h1_distance(const chpeak_state* a, const chpeak_state* b, double* out);
chpeak_status chpeak_source(const chpeak_state* s, double x, double* p, double* px);
chpeak_status chpeak_approx_error(const char* label, const chpeak_state* s, double* out);

/* rescaled collision variables for one position-ordered pair (p1,q1), (p2,q2):
 * out = { z, w, eta, zeta }; the inverse reconstructs the pair. */
chpeak_status chpeak_pair_rescale(double p1, double p2, double q1, double q2, double out[4]);
chpeak_status chpeak_pair_unrescale(const double in[4], double* p1, double* p2, double* q1,
                                    double* q2);

/* time evolution */
void chpeak_solver_config_default(chpeak_solver_config* cfg);
chpeak_status chpeak_evolve(const chpeak_state* s, double t_final, const chpeak_solver_config* cfg,
                            chpeak_trajectory** out);
void chpeak_trajectory_free(chpeak_trajectory* t);
size_t chpeak_trajectory_event_count(const chpeak_trajectory* t);
chpeak_status chpeak_trajectory_event(const chpeak_trajectory* t, size_t i, double* tau,
                                      double* qbar, double* atom);
chpeak_status chpeak_trajectory_state_at(const chpeak_trajectory* t, double time,
                                         chpeak_state** out);
chpeak_status chpeak_characteristic_flow(const chpeak_trajectory* t, double s, double s2, double x,
                                         double* xi);
chpeak_status chpeak_residual_check(const chpeak_trajectory* t, double time, double dt,
                                    double* out);

/* transport plans and the distance functional */
double chpeak_d_diamond(double x1, double u1, double theta1, double x2, double u2, double theta2);
chpeak_status chpeak_plan_identity(chpeak_plan** out);
chpeak_status chpeak_plan_create(const double* xs, const double* ys, size_t n, chpeak_plan** out);
chpeak_status chpeak_plan_cdf_match(const chpeak_state* u, const chpeak_state* v, int grid,
                                    chpeak_plan** out);
chpeak_status chpeak_plan_inverse(const chpeak_plan* psi, chpeak_plan** out);
chpeak_status chpeak_plan_compose(const chpeak_plan* outer, const chpeak_plan* inner,
                                  chpeak_plan** out);
chpeak_status chpeak_plan_eval(const chpeak_plan* psi, double x, double* y);
void chpeak_plan_free(chpeak_plan* psi);

chpeak_status chpeak_transport_cost(const chpeak_state* u, const chpeak_state* v,
                                    const chpeak_plan* psi, double* total, double* transport,
                                    double* excess);
chpeak_status chpeak_lower_bound_l1(const chpeak_state* u, const chpeak_state* v, double* out);
chpeak_status chpeak_upper_bound_h1(const chpeak_state* u, const chpeak_state* v, double* out);
chpeak_status chpeak_optimize_plan(const chpeak_state* u, const chpeak_state* v,
                                   const chpeak_plan* const* seeds, size_t n_seeds, int budget,
                                   double* lower, double* upper, chpeak_plan** best);

/* scenario drivers; out_dir may be NULL to skip file output; record_json (if
 * non-NULL) receives a malloc'd JSON record to free with chpeak_string_free.
 * Return CHPEAK_OK only when the run succeeded AND every verdict passed. */
chpeak_status chpeak_cmd_simulate(const char* config_path, const char* out_dir,
                                  char** record_json);
chpeak_status chpeak_cmd_metric(const char* config_path, const char* out_dir,
                                const char* seed_suite, char** record_json);
chpeak_status chpeak_cmd_approx(const char* config_path, const char* out_dir, char** record_json);
chpeak_status chpeak_cmd_verify(const char* suite, const char* out_dir, char** record_json);

#ifdef __cplusplus
}
#endif

#endif /* CHPEAK_H */
