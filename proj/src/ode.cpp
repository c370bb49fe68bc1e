// SPDX-License-Identifier: Apache-2.0
#include "ode.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace chpeak {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                 b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;

}  // namespace

double hermite_eval(const OdeStep& step, std::size_t comp, double t) {
  const double h = step.t1 - step.t0;
  if (h == 0.0) return step.y1[comp];
  const double th = (t - step.t0) / h;
  const double th2 = th * th, th3 = th2 * th;
  const double h00 = 2.0 * th3 - 3.0 * th2 + 1.0;
  const double h10 = th3 - 2.0 * th2 + th;
  const double h01 = -2.0 * th3 + 3.0 * th2;
  const double h11 = th3 - th2;
  return h00 * step.y0[comp] + h * h10 * step.f0[comp] + h01 * step.y1[comp] +
         h * h11 * step.f1[comp];
}

double hermite_root(const OdeStep& step, std::size_t comp, double target) {
  double a = step.t0, b = step.t1;
  double fa = hermite_eval(step, comp, a) - target;
  double fb = hermite_eval(step, comp, b) - target;
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  require((fa < 0.0) != (fb < 0.0), errc::internal, "hermite_root: no sign change");
  for (int it = 0; it < 100; ++it) {
    double m = 0.5 * (a + b);
    if (m == a || m == b) break;
    double fm = hermite_eval(step, comp, m) - target;
    if (fm == 0.0) return m;
    if ((fa < 0.0) == (fm < 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

double integrate_adaptive(const OdeRhs& rhs, double t0, std::vector<double>& y, double t_end,
                          const OdeOptions& opts, const OdeObserver& observer) {
  require(opts.rel_tol > 0 && opts.abs_tol > 0 && opts.max_step > 0, errc::invalid_argument,
          "ode tolerances must be positive");
  const std::size_t n = y.size();
  if (t0 == t_end) return t0;
  const double dir = (t_end > t0) ? 1.0 : -1.0;

  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), y1(n);
  rhs(t0, y, k1);

  double t = t0;
  double h = dir * std::min(opts.max_step, 1e-3 * std::max(1.0, std::abs(t_end - t0)));
  OdeStep step;

  while (dir * (t_end - t) > 0.0) {
    if (dir * (t + h - t_end) > 0.0) h = t_end - t;
    require(std::abs(h) > 1e-15 * std::max(1.0, std::abs(t)), errc::internal,
            "ode step size underflow");

    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
    rhs(t + c2 * h, ytmp, k2);
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    rhs(t + c3 * h, ytmp, k3);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    rhs(t + c4 * h, ytmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    rhs(t + c5 * h, ytmp, k5);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    rhs(t + h, ytmp, k6);
    for (std::size_t i = 0; i < n; ++i)
      y1[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    rhs(t + h, y1, k7);

    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double ei =
          h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = opts.abs_tol + opts.rel_tol * std::max(std::abs(y[i]), std::abs(y1[i]));
      err += (ei / sc) * (ei / sc);
    }
    err = (n > 0) ? std::sqrt(err / n) : 0.0;

    if (err <= 1.0) {
      step.t0 = t;
      step.t1 = t + h;
      step.y0 = y;
      step.y1 = y1;
      step.f0 = k1;
      step.f1 = k7;
      t += h;
      y = y1;
      k1 = k7;  // FSAL
      double factor = (err == 0.0) ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      h = dir * std::min(std::abs(h) * factor, opts.max_step);
      if (observer && observer(step) == StepFlow::stop) return t;
    } else {
      double factor = std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
      h *= factor;
    }
  }
  return t;
}

std::vector<double> integrate_to(const OdeRhs& rhs, double t0, std::vector<double> y0, double t_end,
                                 const OdeOptions& opts) {
  integrate_adaptive(rhs, t0, y0, t_end, opts);
  return y0;
}

}  // namespace chpeak
