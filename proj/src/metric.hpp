// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dynamics.hpp"
#include "kernel.hpp"

namespace chpeak {

// Point of the lifted space R x R x T (circle of circumference 2 pi).
struct LiftedPoint {
  double x;
  double u;
  double theta;
};

// Capped sum of position, value and circle-arc distances, always <= 1.
double d_diamond(const LiftedPoint& a, const LiftedPoint& b);

// Strictly increasing piecewise-linear periodic map psi with psi(x+1) =
// psi(x)+1, stored as one period of breakpoints.  The integer lift matters:
// plans carry their branch, so psi(x) = x + 0.9 and psi(x) = x - 0.1 are
// different plans with different costs.
class TransportPlan {
 public:
  TransportPlan();  // identity
  static TransportPlan identity();
  static TransportPlan from_breakpoints(std::vector<double> xs, std::vector<double> ys);

  double operator()(double x) const;
  double inverse_at(double y) const;
  double derivative(double x) const;  // psi', piecewise constant, right-continuous

  TransportPlan inverse() const;

  const std::vector<double>& xs() const { return xs_; }
  const std::vector<double>& ys() const { return ys_; }
  std::size_t size() const { return xs_.size(); }

 private:
  std::vector<double> xs_, ys_;
};

TransportPlan plan_identity();
TransportPlan plan_inverse(const TransportPlan& psi);
// Composition (outer o inner); breakpoints are refined exactly.
TransportPlan plan_compose(const TransportPlan& outer, const TransportPlan& inner);

// Mass fractions phi1(x) and phi2(psi(x)); max of the two is always 1 and
// phi1 (1+ux^2) = phi2(psi) (1+vx^2(psi)) psi' balances pointwise.
std::pair<double, double> phi_pair(const PeakonState& u, const PeakonState& v,
                                   const TransportPlan& psi, double x);

struct CostBreakdown {
  double total = 0.0;
  double transport = 0.0;  // d_diamond-weighted transported mass
  double excess = 0.0;     // untransported mass penalty
};

CostBreakdown transport_cost(const PeakonState& u, const PeakonState& v, const TransportPlan& psi);

// Monotone map matching the cumulative measures of density 1+ux^2, anchored
// over the circle shift by smallest mean displacement.
TransportPlan plan_cdf_match(const PeakonState& u, const PeakonState& v, int grid);

// Plan evolved along the characteristic flows of both trajectories from t0 to
// t1 (breakpoints pushed forward).
TransportPlan plan_characteristic(const Trajectory& traj_u, const Trajectory& traj_v,
                                  const TransportPlan& psi0, double t0, double t1, int grid = 128);
TransportPlan plan_characteristic(const Trajectory& traj_u, const Trajectory& traj_v,
                                  const TransportPlan& psi0, double t);

// psi(x) = xi(s2; s, x) along one trajectory: the plan between two time slices.
TransportPlan plan_time_shift(const Trajectory& traj, double s, double s2, int grid = 128);

struct MetricReport {
  double upper = 0.0;
  double lower = 0.0;
  TransportPlan best_plan;
  CostBreakdown breakdown;
  std::string plan_label;
};

// Deterministic coordinate descent (golden section per interior breakpoint,
// fixed sweep order) over each seed; budget counts full sweeps per seed.
MetricReport optimize_plan(const PeakonState& u, const PeakonState& v,
                           const std::vector<std::pair<std::string, TransportPlan>>& seeds,
                           int budget);

// ||u-v||_L1 / (2 (2 + ||u|| + ||v||)): certified lower bound for J.
double lower_bound_L1(const PeakonState& u, const PeakonState& v);

// (8 pi + 3)(1 + ||u|| + ||v||) ||u-v||_H1: certified upper bound via the
// identity plan.
double upper_bound_H1(const PeakonState& u, const PeakonState& v);

}  // namespace chpeak
