// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "kernel.hpp"
#include "quadrature.hpp"

namespace chpeak {

// Closed-form periodic datum with analytic derivatives.  Kinks carry the jump
// of f' at isolated points, so second derivatives with atomic parts (such as
// the kernel itself) are representable: distributionally f'' adds jump * delta
// at each kink.
struct SmoothPeriodicDatum {
  std::string label;
  ScalarFn f;
  ScalarFn f1;
  ScalarFn f2;
  std::vector<std::pair<double, double>> kinks;  // (location in [0,1), jump of f')
};

// Riemann-sum construction: p_i integrates (f - f'')/2 over cell i, placed at
// the cell midpoint.
PeakonState multipeakon_approx(const SmoothPeriodicDatum& d, int n);

// H1 norm of f minus the multipeakon profile.
double approx_error(const SmoothPeriodicDatum& d, const PeakonState& s);

const std::vector<SmoothPeriodicDatum>& datum_corpus();
const SmoothPeriodicDatum& datum_by_label(const std::string& label);

}  // namespace chpeak
