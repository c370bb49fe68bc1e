// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <span>
#include <vector>

namespace chpeak {

using ScalarFn = std::function<double(double)>;

// Gauss-Legendre nodes/weights on [-1,1], computed once per order by Newton
// iteration on the Legendre recurrence.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const GaussRule& gauss_rule(int order);

double gauss_panel(const ScalarFn& f, double a, double b, int order = 16);

// Integrates f over [edges.front(), edges.back()], one Gauss panel per cell.
double integrate_edges(const ScalarFn& f, std::span<const double> edges, int order = 16);

// Sorted, deduplicated edge list spanning [origin, origin+1]; every breakpoint
// is reduced mod 1 relative to origin.
std::vector<double> period_edges(std::span<const double> breakpoints, double origin = 0.0);

// Inserts interior roots of each fn into the edge list so that integrands with
// |.| / min / cap kinks become smooth per panel. Sign changes are located on a
// fixed sampling grid and pinned down by bisection.
void refine_edges_at_roots(std::vector<double>& edges, std::span<const ScalarFn> fns);

std::vector<double> merged_breakpoints(std::initializer_list<std::span<const double>> lists);

}  // namespace chpeak
