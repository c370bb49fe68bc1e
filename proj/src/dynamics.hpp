// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "kernel.hpp"
#include "ode.hpp"

namespace chpeak {

struct SolverConfig {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double gap_threshold = 1e-2;    // periodic distance below which a pair is a collision candidate
  double slope_threshold = 50.0;  // |p_right - p_left| above which the chart switch triggers
  double max_step = 0.1;
  double chart_exit_margin = 0.7853981633974483;  // pi/4

  void validate() const;
};

// Rescaled variables for one colliding pair: z = p1+p2, w = 2 atan(p2-p1)
// taken in (0, 2pi), eta = q1+q2, zeta = (p2-p1)^2 (q2-q1).  The pair is
// position-ordered (q1 < q2, locally unwrapped); w = pi is the impact.
struct CollisionChart {
  double z = 0.0;
  double w = 0.0;
  double eta = 0.0;
  double zeta = 0.0;
  PeakonState spectators;
  std::size_t pair_index = 0;  // sorted slot the pair occupies in the source state
};

struct CollisionEvent {
  double tau;   // time of interaction
  double qbar;  // location in [0,1)
  double atom;  // concentrated energy (limit of the gap integral of ux^2)
};

enum class Regime { regular, chart };

struct RegimeSpan {
  double t0, t1;
  Regime regime;
};

namespace detail {

struct Group {
  enum class Kind { single, pair };
  Kind kind = Kind::single;
  double p = 0.0, q = 0.0;                          // single (q unwrapped)
  double z = 0.0, w = 0.0, eta = 0.0, zeta = 0.0;   // pair (eta unwrapped)

  double center() const { return kind == Kind::single ? q : 0.5 * eta; }
  int dim() const { return kind == Kind::single ? 2 : 4; }
};

void accumulate_field(const Group& g, double x, double& u, double& ux);
void system_rhs(const std::vector<Group>& groups, std::vector<double>& out);
void pack(const std::vector<Group>& groups, std::vector<double>& y);
std::vector<Group> unpack(const std::vector<Group::Kind>& kinds, const std::vector<double>& y);
PeakonState groups_to_state(const std::vector<Group>& groups);

}  // namespace detail

class Trajectory {
 public:
  struct Node {
    double t;
    std::vector<double> y;
    std::vector<double> f;
  };
  struct Segment {
    std::vector<detail::Group::Kind> kinds;
    std::vector<Node> nodes;  // ascending in t
    bool has_chart = false;
    double t_front() const { return nodes.front().t; }
    double t_back() const { return nodes.back().t; }
  };

  double t_min() const { return t_min_; }
  double t_max() const { return t_max_; }
  const std::vector<std::pair<double, PeakonState>>& samples() const { return samples_; }
  const std::vector<CollisionEvent>& events() const { return events_; }
  const std::vector<RegimeSpan>& regime_log() const { return regime_; }
  const std::vector<Segment>& segments() const { return segments_; }
  const SolverConfig& config() const { return cfg_; }

  Regime regime_at(double t) const;
  bool has_event_in(double a, double b) const;  // open interval

  PeakonState state_at(double t) const;
  // Profile evaluation that stays well conditioned through chart windows.
  ProfilePoint profile_at(double t, double x) const;

  std::vector<detail::Group> groups_at(double t) const;

 private:
  friend Trajectory evolve(const PeakonState&, double, const SolverConfig&);
  const Segment& segment_for(double t) const;

  SolverConfig cfg_;
  double t_min_ = 0.0, t_max_ = 0.0;
  std::vector<Segment> segments_;
  std::vector<CollisionEvent> events_;
  std::vector<std::pair<double, PeakonState>> samples_;
  std::vector<RegimeSpan> regime_;
};

// dq_i = sum_j p_j chi(q_i - q_j); dp_i = -sum_{j != i} p_i p_j chi'(q_i - q_j).
void rhs_regular(const PeakonState& s, std::vector<double>& dp, std::vector<double>& dq);

// H = (1/2) sum_{i,j} p_i p_j chi(q_i - q_j).  The flow conserves H, total
// momentum sum_i p_i, and the profile energy E = 4H.
double hamiltonian(const PeakonState& s);

std::optional<std::pair<std::size_t, std::size_t>> detect_collision(const PeakonState& s,
                                                                    const SolverConfig& cfg);

CollisionChart to_rescaled(const PeakonState& s, std::pair<std::size_t, std::size_t> pair);
PeakonState from_rescaled(const CollisionChart& c);

struct ChartDerivative {
  double dz, dw, deta, dzeta;
  std::vector<double> dp_spect, dq_spect;
};
ChartDerivative rhs_rescaled(const CollisionChart& c);

Trajectory evolve(const PeakonState& s0, double t_final, const SolverConfig& cfg);

double characteristic_flow(const Trajectory& traj, double s, double s2, double x);
std::vector<double> characteristic_flow_bundle(const Trajectory& traj, double s, double s2,
                                               std::vector<double> xs);

// L2 norm over one period of (du/dt + u ux + Px), du/dt by centered profile
// differencing.  Panels swept by a moving kink between t-dt and t+dt are
// excluded: across them the Eulerian difference quotient does not converge to
// the a.e. time derivative, so they would only measure the kink motion.
double residual_check(const Trajectory& traj, double t, double dt = 1e-4);

}  // namespace chpeak
