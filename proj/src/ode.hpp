// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <vector>

namespace chpeak {

using OdeRhs = std::function<void(double t, const std::vector<double>& y, std::vector<double>& dydt)>;

struct OdeOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = 0.1;
};

// One accepted step; endpoint derivatives allow cubic Hermite dense output.
struct OdeStep {
  double t0 = 0.0, t1 = 0.0;
  std::vector<double> y0, y1, f0, f1;
};

double hermite_eval(const OdeStep& step, std::size_t comp, double t);

// Finds t in [t0,t1] with dense-output component comp equal to target.
// Assumes a sign change over the step; bisection to ~1e-15 in t.
double hermite_root(const OdeStep& step, std::size_t comp, double target);

enum class StepFlow { go_on, stop };
using OdeObserver = std::function<StepFlow(const OdeStep&)>;

// Embedded Dormand-Prince 5(4) with PI-free standard step control.  Integrates
// from (t0,y0) toward t_end (either direction); observer runs after each
// accepted step.  Returns the time actually reached (t_end, or the end of the
// step on which the observer requested a stop).  y0 is updated in place.
double integrate_adaptive(const OdeRhs& rhs, double t0, std::vector<double>& y0, double t_end,
                          const OdeOptions& opts, const OdeObserver& observer = {});

std::vector<double> integrate_to(const OdeRhs& rhs, double t0, std::vector<double> y0, double t_end,
                                 const OdeOptions& opts);

}  // namespace chpeak
