// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

namespace chpeak {

// Periodic peakon kernel chi(x) = sum_n exp(-|x - n|).  On [0,1] it reduces to
// (e^x + e^{1-x}) / (e - 1); it is even, 1-periodic and satisfies chi'' = chi
// away from the integer kinks, where chi' jumps by -2.
double chi(double x);

// One-sided derivative of chi, right-limit convention at the kinks.  The kink
// flag tells integrators to split panels there.
double chi_prime(double x);
double chi_prime(double x, bool& kink);

// chi_tilde = (-e^x + e^{1-x}) / (e - 1) on [0,1]; equals -chi' away from kinks.
double chi_tilde(double x);

// Signed difference a - b reduced into [-1/2, 1/2).
double periodic_delta(double a, double b);
double periodic_distance(double a, double b);

// Strengths p_i and sorted positions q_i in [0,1) of N periodic peakons,
// u(x) = sum_i p_i chi(x - q_i).
struct PeakonState {
  std::vector<double> p;
  std::vector<double> q;

  PeakonState() = default;
  PeakonState(std::vector<double> strengths, std::vector<double> positions);

  std::size_t size() const { return p.size(); }
  bool empty() const { return p.empty(); }
};

struct ProfilePoint {
  double x;
  double u;
  double ux;     // right-limit convention at kinks
  double theta;  // 2 atan(ux), in (-pi, pi)
};

ProfilePoint eval_profile(const PeakonState& s, double x);

// Integral over one period of u^2 + ux^2, Gauss-Legendre panels split at the
// peak positions.
double energy(const PeakonState& s, int order = 16);

double h1_norm(const PeakonState& s);
double h1_distance(const PeakonState& a, const PeakonState& b);
double l1_distance(const PeakonState& a, const PeakonState& b);

// Convolution source P = (1/2) chi * (u^2 + ux^2/2) and its derivative
// Px = (1/2) chi' * (u^2 + ux^2/2); panels split at peaks and at x.
double source_P(const PeakonState& s, double x);
double source_Px(const PeakonState& s, double x);

std::vector<double> profile_breakpoints(const PeakonState& s);

}  // namespace chpeak
