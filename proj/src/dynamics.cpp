// SPDX-License-Identifier: Apache-2.0
#include "dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <numeric>

#include "error.hpp"
#include "quadrature.hpp"

namespace chpeak {

namespace {

constexpr double kPi = std::numbers::pi;
const double kChi0 = chi(0.0);

// sinh(g/2) / (g/2)
double sinhc_half(double g) {
  const double u = 0.5 * g;
  if (std::abs(u) < 1e-4) {
    const double u2 = u * u;
    return 1.0 + u2 / 6.0 * (1.0 + u2 / 20.0);
  }
  return std::sinh(u) / u;
}

// (g chi'(g) + chi(0) - chi(g)) / g^2; smooth, limit chi(0)/2 at g = 0.
double a_tilde(double g) {
  if (g < 0.35) {
    // primitive of s*chi(s), expanded: sum_m chi0 g^{2m}/((2m)!(2m+2)) - g^{2m+1}/((2m+1)!(2m+3))
    double sum = 0.0;
    double even = 1.0;  // g^{2m}/(2m)!
    for (int m = 0; m < 12; ++m) {
      const double odd = even * g / (2.0 * m + 1.0);  // g^{2m+1}/(2m+1)!
      const double term = kChi0 * even / (2.0 * m + 2.0) - odd / (2.0 * m + 3.0);
      sum += term;
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
      even = odd * g / (2.0 * m + 2.0);
    }
    return sum;
  }
  return (g * chi_prime(g) + kChi0 - chi(g)) / (g * g);
}

// (sinh(g/2) - g cosh(g/2)) / g; smooth, limit -1/2 at g = 0.
double b_over_g(double g) {
  if (g < 0.35) {
    double sum = 0.0;
    double pw = 1.0;   // (g/2)^{2k}
    double fact = 1.0; // (2k)!
    for (int k = 0; k < 12; ++k) {
      const double term = pw * (0.5 / (fact * (2.0 * k + 1.0)) - 1.0 / fact);
      sum += term;
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
      pw *= 0.25 * g * g;
      fact *= (2.0 * k + 1.0) * (2.0 * k + 2.0);
    }
    return sum;
  }
  return (std::sinh(0.5 * g) - g * std::cosh(0.5 * g)) / g;
}

double reduce01(double x) { return x - std::floor(x); }

struct PairGeom {
  double c;       // cot(w/2)
  double delta;   // tan(w/2)
  double g;       // reconstructed gap zeta * c^2
  double qbar;    // eta / 2
  double cosh_h, sinh_h, sinhc;
};

PairGeom pair_geom(const detail::Group& grp) {
  PairGeom o;
  const double half = 0.5 * grp.w;
  const double sn = std::sin(half), cs = std::cos(half);
  o.c = cs / sn;
  o.delta = sn / cs;  // +-inf at w = pi is fine: the inside branch is then empty
  o.g = std::max(0.0, grp.zeta * o.c * o.c);
  o.qbar = 0.5 * grp.eta;
  o.cosh_h = std::cosh(0.5 * o.g);
  o.sinh_h = std::sinh(0.5 * o.g);
  o.sinhc = sinhc_half(o.g);
  return o;
}

}  // namespace

void SolverConfig::validate() const {
  require(rel_tol > 0 && abs_tol > 0 && max_step > 0, errc::invalid_argument,
          "solver tolerances must be positive");
  require(gap_threshold > 0 && gap_threshold < 0.5, errc::invalid_argument,
          "gap_threshold must lie in (0, 0.5)");
  require(slope_threshold > 0, errc::invalid_argument, "slope_threshold must be positive");
  require(chart_exit_margin > 0 && chart_exit_margin < 0.5 * kPi, errc::invalid_argument,
          "chart_exit_margin must lie in (0, pi/2)");
}

namespace detail {

void accumulate_field(const Group& grp, double x, double& u, double& ux) {
  if (grp.kind == Group::Kind::single) {
    const double d = x - grp.q;
    u += grp.p * chi(d);
    ux += grp.p * chi_prime(d);
    return;
  }
  const PairGeom geo = pair_geom(grp);
  const double d = std::remainder(x - geo.qbar, 1.0);
  if (std::abs(d) >= 0.5 * geo.g) {
    const double a = grp.z * geo.cosh_h;
    const double b = 0.5 * grp.zeta * geo.c * geo.sinhc;
    u += a * chi(d) - b * chi_prime(d);
    ux += a * chi_prime(d) - b * chi(d);
  } else {
    // between the two peaks; ux is genuinely of size tan(w/2) there
    const double cg = chi(0.5 * geo.g), cpg = chi_prime(0.5 * geo.g);
    u += grp.z * std::cosh(d) * cg - geo.delta * std::sinh(d) * cpg;
    ux += grp.z * std::sinh(d) * cg - geo.delta * std::cosh(d) * cpg;
  }
}

void system_rhs(const std::vector<Group>& groups, std::vector<double>& out) {
  std::size_t dim = 0;
  for (const Group& g : groups) dim += g.dim();
  out.assign(dim, 0.0);
  std::size_t off = 0;
  for (std::size_t k = 0; k < groups.size(); ++k) {
    const Group& g = groups[k];
    if (g.kind == Group::Kind::single) {
      double u = 0.0, ux = 0.0;
      for (std::size_t j = 0; j < groups.size(); ++j)
        if (j != k) accumulate_field(groups[j], g.q, u, ux);
      out[off + 0] = -g.p * ux;
      out[off + 1] = g.p * kChi0 + u;
      off += 2;
    } else {
      const PairGeom geo = pair_geom(g);
      double u0 = 0.0, u1 = 0.0;
      for (std::size_t j = 0; j < groups.size(); ++j)
        if (j != k) accumulate_field(groups[j], geo.qbar, u0, u1);
      const double c = geo.c, c2 = c * c;
      const double chig = chi(geo.g), chipg = chi_prime(geo.g);
      out[off + 0] = -g.z * geo.cosh_h * u1 - 0.5 * g.zeta * c * geo.sinhc * u0;
      out[off + 1] = ((1.0 - g.z * g.z * c2) * chipg - 2.0 * c2 * g.z * geo.sinh_h * u0 -
                      2.0 * c * geo.cosh_h * u1) /
                     (1.0 + c2);
      out[off + 2] = g.z * (kChi0 + chig) + 2.0 * geo.cosh_h * u0;
      out[off + 3] = g.zeta * g.zeta * c * a_tilde(geo.g) - g.z * g.z * g.zeta * c * chipg -
                     2.0 * g.z * g.zeta * c * geo.sinh_h * u0 + 2.0 * g.zeta * b_over_g(geo.g) * u1;
      off += 4;
    }
  }
}

void pack(const std::vector<Group>& groups, std::vector<double>& y) {
  y.clear();
  for (const Group& g : groups) {
    if (g.kind == Group::Kind::single) {
      y.push_back(g.p);
      y.push_back(g.q);
    } else {
      y.push_back(g.z);
      y.push_back(g.w);
      y.push_back(g.eta);
      y.push_back(g.zeta);
    }
  }
}

std::vector<Group> unpack(const std::vector<Group::Kind>& kinds, const std::vector<double>& y) {
  std::vector<Group> groups(kinds.size());
  std::size_t off = 0;
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    Group& g = groups[k];
    g.kind = kinds[k];
    if (g.kind == Group::Kind::single) {
      g.p = y[off];
      g.q = y[off + 1];
      off += 2;
    } else {
      g.z = y[off];
      g.w = y[off + 1];
      g.eta = y[off + 2];
      g.zeta = y[off + 3];
      off += 4;
    }
  }
  return groups;
}

PeakonState groups_to_state(const std::vector<Group>& groups) {
  std::vector<double> p, q;
  for (const Group& g : groups) {
    if (g.kind == Group::Kind::single) {
      p.push_back(g.p);
      q.push_back(g.q);
    } else {
      require(std::abs(g.w - kPi) > 1e-14, errc::singular_chart,
              "cannot reconstruct a pair at w = pi");
      const PairGeom geo = pair_geom(g);
      p.push_back(0.5 * (g.z - geo.delta));
      p.push_back(0.5 * (g.z + geo.delta));
      q.push_back(geo.qbar - 0.5 * geo.g);
      q.push_back(geo.qbar + 0.5 * geo.g);
    }
  }
  return PeakonState(std::move(p), std::move(q));
}

}  // namespace detail

using detail::Group;

void rhs_regular(const PeakonState& s, std::vector<double>& dp, std::vector<double>& dq) {
  std::vector<Group> groups(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    groups[i].kind = Group::Kind::single;
    groups[i].p = s.p[i];
    groups[i].q = s.q[i];
  }
  std::vector<double> out;
  detail::system_rhs(groups, out);
  dp.resize(s.size());
  dq.resize(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    dp[i] = out[2 * i];
    dq[i] = out[2 * i + 1];
  }
}

double hamiltonian(const PeakonState& s) {
  double h = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j) h += s.p[i] * s.p[j] * chi(s.q[i] - s.q[j]);
  return 0.5 * h;
}

namespace {

struct Candidate {
  std::size_t left, right;  // group indices, left has the smaller circle coordinate
  double gap;
};

// Qualifying adjacent single-single pairs; throws if candidates overlap.
// A pair qualifies only when it is closing in the direction of integration:
// ahead of an impact the left strength runs to +infinity and the right one to
// -infinity, so p_right - p_left must be large of the sign opposite to dir.
// Pairs emerging from a collision never re-qualify.
std::vector<Candidate> detect_candidates(const std::vector<Group>& groups, const SolverConfig& cfg,
                                         double dir) {
  std::vector<Candidate> out;
  const std::size_t m = groups.size();
  if (m < 2) return out;
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return reduce01(groups[a].center()) < reduce01(groups[b].center());
  });
  const std::size_t adjacency = (m == 2) ? 1 : m;
  for (std::size_t i = 0; i < adjacency; ++i) {
    const std::size_t a = order[i], b = order[(i + 1) % m];
    if (groups[a].kind != Group::Kind::single || groups[b].kind != Group::Kind::single) continue;
    const double qa = reduce01(groups[a].q), qb = reduce01(groups[b].q);
    const double gap = periodic_distance(qa, qb);
    if (gap >= cfg.gap_threshold) continue;
    if (groups[a].p * groups[b].p >= 0.0) continue;
    double fwd = qb - qa;
    fwd -= std::floor(fwd);
    Candidate c;
    if (fwd <= 0.5) {
      c.left = a;
      c.right = b;
    } else {
      c.left = b;
      c.right = a;
    }
    c.gap = gap;
    if (dir * (groups[c.right].p - groups[c.left].p) >= -cfg.slope_threshold) continue;
    out.push_back(c);
  }
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t j = i + 1; j < out.size(); ++j) {
      const bool overlap = out[i].left == out[j].left || out[i].left == out[j].right ||
                           out[i].right == out[j].left || out[i].right == out[j].right;
      require(!overlap, errc::unsupported_interaction,
              "three or more peakons are simultaneous collision candidates");
    }
  return out;
}

Group promote_pair(const Group& left, const Group& right) {
  const double q1 = reduce01(left.q);
  double fwd = reduce01(right.q) - q1;
  fwd -= std::floor(fwd);
  const double q2 = q1 + fwd;
  const double delta = right.p - left.p;
  double w = 2.0 * std::atan(delta);
  if (w <= 0.0) w += 2.0 * kPi;
  Group g;
  g.kind = Group::Kind::pair;
  g.z = left.p + right.p;
  g.w = w;
  g.eta = q1 + q2;
  g.zeta = delta * delta * fwd;
  return g;
}

std::pair<Group, Group> expand_pair(const Group& g) {
  const PairGeom geo = pair_geom(g);
  Group l, r;
  l.kind = r.kind = Group::Kind::single;
  l.p = 0.5 * (g.z - geo.delta);
  r.p = 0.5 * (g.z + geo.delta);
  l.q = geo.qbar - 0.5 * geo.g;
  r.q = geo.qbar + 0.5 * geo.g;
  return {l, r};
}

void check_guards(const std::vector<Group>& groups) {
  for (std::size_t k = 0; k < groups.size(); ++k) {
    if (groups[k].kind != Group::Kind::pair) continue;
    const PairGeom gk = pair_geom(groups[k]);
    for (std::size_t j = 0; j < groups.size(); ++j) {
      if (j == k) continue;
      double dist, limit;
      if (groups[j].kind == Group::Kind::single) {
        dist = periodic_distance(groups[j].q, gk.qbar);
        limit = 0.5 * gk.g + 1e-9;
      } else {
        const PairGeom gj = pair_geom(groups[j]);
        dist = periodic_distance(gj.qbar, gk.qbar);
        limit = 0.5 * (gk.g + gj.g) + 1e-9;
      }
      require(dist > limit, errc::unsupported_interaction,
              "spectator entered the gap window of a colliding pair (dist " +
                  std::to_string(dist) + ", window " + std::to_string(limit) + " at qbar " +
                  std::to_string(gk.qbar - std::floor(gk.qbar)) + ", w-pi " +
                  std::to_string(groups[k].w - kPi) + ", zeta " + std::to_string(groups[k].zeta) +
                  ")");
    }
  }
}

struct ChartMeta {
  double entry_dist = 0.0;
  bool crossed = false;
};

// Leaves the chart once the pair has swung chart_exit_margin past the impact,
// or earlier when the reconstructed pair interval grows toward a spectator
// (the collision-cascade handoff: the released pair and its neighbors then
// form fresh flanking pairs).  Outgoing pairs are separating, so detection
// cannot immediately re-promote them.
bool chart_exit_due(const std::vector<Group>& groups, std::size_t k, const ChartMeta& meta,
                    const SolverConfig& cfg) {
  const Group& g = groups[k];
  const PairGeom geo = pair_geom(g);
  if (geo.g > 0.25) return true;
  if (meta.crossed) {
    double nearest = 1e300;
    for (std::size_t j = 0; j < groups.size(); ++j) {
      if (j == k) continue;
      if (groups[j].kind == Group::Kind::single) {
        nearest = std::min(nearest, periodic_distance(groups[j].q, geo.qbar));
      } else {
        const PairGeom gj = pair_geom(groups[j]);
        nearest = std::min(nearest, periodic_distance(gj.qbar, geo.qbar) - 0.5 * gj.g);
      }
    }
    if (geo.g > 0.5 * nearest) return true;
    return std::abs(g.w - kPi) > cfg.chart_exit_margin;
  }
  return std::abs(g.w - kPi) > std::max(cfg.chart_exit_margin, 1.1 * meta.entry_dist + 1e-3);
}

}  // namespace

std::optional<std::pair<std::size_t, std::size_t>> detect_collision(const PeakonState& s,
                                                                    const SolverConfig& cfg) {
  std::vector<Group> groups(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    groups[i].kind = Group::Kind::single;
    groups[i].p = s.p[i];
    groups[i].q = s.q[i];
  }
  auto cands = detect_candidates(groups, cfg, 1.0);
  if (cands.empty()) return std::nullopt;
  const auto best = std::min_element(cands.begin(), cands.end(),
                                     [](const Candidate& a, const Candidate& b) { return a.gap < b.gap; });
  return std::make_pair(best->left, best->right);
}

CollisionChart to_rescaled(const PeakonState& s, std::pair<std::size_t, std::size_t> pair) {
  const std::size_t i = pair.first, j = pair.second;
  require(i < s.size() && j < s.size() && i != j, errc::invalid_argument, "bad pair indices");
  Group left, right;
  left.kind = right.kind = Group::Kind::single;
  left.p = s.p[i];
  left.q = s.q[i];
  right.p = s.p[j];
  right.q = s.q[j];
  Group pg = promote_pair(left, right);
  CollisionChart c;
  c.z = pg.z;
  c.w = pg.w;
  c.eta = pg.eta;
  c.zeta = pg.zeta;
  c.pair_index = std::min(i, j);
  std::vector<double> sp, sq;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (k == i || k == j) continue;
    sp.push_back(s.p[k]);
    sq.push_back(s.q[k]);
  }
  c.spectators = PeakonState(std::move(sp), std::move(sq));
  return c;
}

PeakonState from_rescaled(const CollisionChart& c) {
  require(std::abs(c.w - kPi) > 1e-14, errc::singular_chart, "from_rescaled at w = pi");
  Group g;
  g.kind = Group::Kind::pair;
  g.z = c.z;
  g.w = c.w;
  g.eta = c.eta;
  g.zeta = c.zeta;
  auto [l, r] = expand_pair(g);
  std::vector<double> p(c.spectators.p), q(c.spectators.q);
  p.push_back(l.p);
  q.push_back(l.q);
  p.push_back(r.p);
  q.push_back(r.q);
  return PeakonState(std::move(p), std::move(q));
}

ChartDerivative rhs_rescaled(const CollisionChart& c) {
  std::vector<Group> groups;
  Group pg;
  pg.kind = Group::Kind::pair;
  pg.z = c.z;
  pg.w = c.w;
  pg.eta = c.eta;
  pg.zeta = c.zeta;
  groups.push_back(pg);
  for (std::size_t k = 0; k < c.spectators.size(); ++k) {
    Group g;
    g.kind = Group::Kind::single;
    g.p = c.spectators.p[k];
    g.q = c.spectators.q[k];
    groups.push_back(g);
  }
  check_guards(groups);
  std::vector<double> out;
  detail::system_rhs(groups, out);
  ChartDerivative d;
  d.dz = out[0];
  d.dw = out[1];
  d.deta = out[2];
  d.dzeta = out[3];
  for (std::size_t k = 0; k < c.spectators.size(); ++k) {
    d.dp_spect.push_back(out[4 + 2 * k]);
    d.dq_spect.push_back(out[4 + 2 * k + 1]);
  }
  return d;
}

// ---------------------------------------------------------------------------
// evolve

Trajectory evolve(const PeakonState& s0, double t_final, const SolverConfig& cfg) {
  cfg.validate();
  require(std::isfinite(t_final), errc::invalid_argument, "t_final must be finite");

  Trajectory traj;
  traj.cfg_ = cfg;

  std::vector<Group> groups(s0.size());
  std::vector<ChartMeta> meta(s0.size());
  for (std::size_t i = 0; i < s0.size(); ++i) {
    groups[i].kind = Group::Kind::single;
    groups[i].p = s0.p[i];
    groups[i].q = s0.q[i];
  }

  auto sort_groups = [&]() {
    std::vector<std::size_t> order(groups.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return reduce01(groups[a].center()) < reduce01(groups[b].center());
    });
    std::vector<Group> ng;
    std::vector<ChartMeta> nm;
    for (std::size_t k : order) {
      ng.push_back(groups[k]);
      nm.push_back(meta[k]);
    }
    groups = std::move(ng);
    meta = std::move(nm);
  };

  const bool trace = std::getenv("CHPEAK_TRACE") != nullptr;
  const double dir = (t_final >= 0.0) ? 1.0 : -1.0;
  double t = 0.0;

  auto apply_structural = [&]() -> bool {
    bool changed = false;
    // chart exits
    for (std::size_t k = groups.size(); k-- > 0;) {
      if (groups[k].kind != Group::Kind::pair) continue;
      if (!chart_exit_due(groups, k, meta[k], cfg)) continue;
      auto [l, r] = expand_pair(groups[k]);
      if (trace)
        std::fprintf(stderr, "[%.6f] exit chart w-pi=%.3e zeta=%.3e -> p=(%.3e,%.3e) gap=%.3e\n", t,
                     groups[k].w - kPi, groups[k].zeta, l.p, r.p, r.q - l.q);
      groups[k] = l;
      meta[k] = ChartMeta{};
      groups.insert(groups.begin() + k + 1, r);
      meta.insert(meta.begin() + k + 1, ChartMeta{});
      changed = true;
    }
    // chart entries
    auto cands = detect_candidates(groups, cfg, dir);
    if (!cands.empty()) {
      std::vector<bool> consumed(groups.size(), false);
      std::vector<Group> ng;
      std::vector<ChartMeta> nm;
      for (const Candidate& c : cands) consumed[c.left] = consumed[c.right] = true;
      for (std::size_t k = 0; k < groups.size(); ++k) {
        bool is_left = false;
        const Candidate* cand = nullptr;
        for (const Candidate& c : cands)
          if (c.left == k) {
            is_left = true;
            cand = &c;
          }
        if (is_left) {
          Group pg = promote_pair(groups[cand->left], groups[cand->right]);
          if (trace)
            std::fprintf(stderr,
                         "[%.6f] enter chart p=(%.3e,%.3e) gap=%.3e -> w-pi=%.3e zeta=%.3e\n", t,
                         groups[cand->left].p, groups[cand->right].p, cand->gap, pg.w - kPi,
                         pg.zeta);
          ChartMeta m;
          m.entry_dist = std::abs(pg.w - kPi);
          ng.push_back(pg);
          nm.push_back(m);
        } else if (!consumed[k]) {
          ng.push_back(groups[k]);
          nm.push_back(meta[k]);
        }
      }
      groups = std::move(ng);
      meta = std::move(nm);
      changed = true;
    }
    if (changed) sort_groups();
    return changed;
  };

  sort_groups();
  {
    int iters = 0;
    while (apply_structural())
      require(++iters < 64, errc::internal, "structural changes did not settle");
  }

  std::vector<CollisionEvent> events;

  while (true) {
    Trajectory::Segment seg;
    for (const Group& g : groups) seg.kinds.push_back(g.kind);
    seg.has_chart = std::any_of(groups.begin(), groups.end(),
                                [](const Group& g) { return g.kind == Group::Kind::pair; });

    std::vector<double> y;
    detail::pack(groups, y);

    OdeOptions opts;
    opts.rel_tol = cfg.rel_tol;
    opts.abs_tol = cfg.abs_tol;
    opts.max_step = seg.has_chart ? std::min(cfg.max_step, 0.01) : cfg.max_step;

    auto rhs = [&seg](double, const std::vector<double>& yy, std::vector<double>& dy) {
      auto gs = detail::unpack(seg.kinds, yy);
      detail::system_rhs(gs, dy);
    };

    std::vector<double> f0;
    rhs(t, y, f0);
    seg.nodes.push_back({t, y, f0});

    bool pending = false;
    if (t != t_final) {
      auto observer = [&](const OdeStep& st) -> StepFlow {
        std::size_t off = 0;
        for (std::size_t k = 0; k < groups.size(); ++k) {
          if (seg.kinds[k] == Group::Kind::pair) {
            const double w0 = st.y0[off + 1], w1 = st.y1[off + 1];
            if ((w0 - kPi) * (w1 - kPi) < 0.0) {
              const double tstar = hermite_root(st, off + 1, kPi);
              const double eta = hermite_eval(st, off + 2, tstar);
              const double zeta = hermite_eval(st, off + 3, tstar);
              events.push_back({tstar, reduce01(0.5 * eta), zeta});
              meta[k].crossed = true;
            }
            off += 4;
          } else {
            off += 2;
          }
        }
        auto gs = detail::unpack(seg.kinds, st.y1);
        for (std::size_t k = 0; k < gs.size(); ++k) {
          if (gs[k].kind == Group::Kind::pair && chart_exit_due(gs, k, meta[k], cfg)) pending = true;
        }
        if (!pending) check_guards(gs);
        if (!pending && !detect_candidates(gs, cfg, dir).empty()) pending = true;
        seg.nodes.push_back({st.t1, st.y1, st.f1});
        return pending ? StepFlow::stop : StepFlow::go_on;
      };
      t = integrate_adaptive(rhs, t, y, t_final, opts, observer);
      groups = detail::unpack(seg.kinds, y);
    }

    traj.segments_.push_back(std::move(seg));
    if (!pending) break;
    int iters = 0;
    while (apply_structural())
      require(++iters < 64, errc::internal, "structural changes did not settle");
    if (t == t_final) break;
  }

  // normalize ascending
  if (t_final < 0.0) {
    std::reverse(traj.segments_.begin(), traj.segments_.end());
    for (auto& seg : traj.segments_) std::reverse(seg.nodes.begin(), seg.nodes.end());
  }
  traj.t_min_ = std::min(0.0, t_final);
  traj.t_max_ = std::max(0.0, t_final);

  std::sort(events.begin(), events.end(),
            [](const CollisionEvent& a, const CollisionEvent& b) { return a.tau < b.tau; });
  traj.events_ = std::move(events);

  double last_t = traj.t_min_ - 1.0;
  for (const auto& seg : traj.segments_) {
    for (const auto& node : seg.nodes) {
      if (node.t <= last_t) continue;
      auto gs = detail::unpack(seg.kinds, node.y);
      bool reconstructible = true;
      for (const Group& g : gs)
        if (g.kind == Group::Kind::pair && std::abs(std::tan(0.5 * g.w)) > 1e8) reconstructible = false;
      if (reconstructible) {
        traj.samples_.emplace_back(node.t, detail::groups_to_state(gs));
        last_t = node.t;
      }
    }
  }

  for (const auto& seg : traj.segments_) {
    const Regime r = seg.has_chart ? Regime::chart : Regime::regular;
    if (!traj.regime_.empty() && traj.regime_.back().regime == r)
      traj.regime_.back().t1 = seg.t_back();
    else
      traj.regime_.push_back({seg.t_front(), seg.t_back(), r});
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Trajectory queries

const Trajectory::Segment& Trajectory::segment_for(double t) const {
  require(!segments_.empty(), errc::internal, "empty trajectory");
  require(t >= t_min_ - 1e-12 && t <= t_max_ + 1e-12, errc::invalid_argument,
          "time outside trajectory range");
  for (const auto& seg : segments_)
    if (t <= seg.t_back() + 1e-14) return seg;
  return segments_.back();
}

namespace {

std::vector<Group> groups_in_segment(const Trajectory::Segment& seg, double t,
                                     const SolverConfig& cfg) {
  const auto& nodes = seg.nodes;
  t = std::clamp(t, nodes.front().t, nodes.back().t);
  std::size_t lo = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].t <= t) lo = i;
  if (std::abs(nodes[lo].t - t) < 1e-14) return detail::unpack(seg.kinds, nodes[lo].y);
  OdeOptions opts;
  opts.rel_tol = cfg.rel_tol;
  opts.abs_tol = cfg.abs_tol;
  opts.max_step = cfg.max_step;
  auto rhs = [&seg](double, const std::vector<double>& yy, std::vector<double>& dy) {
    auto gs = detail::unpack(seg.kinds, yy);
    detail::system_rhs(gs, dy);
  };
  std::vector<double> y = nodes[lo].y;
  integrate_adaptive(rhs, nodes[lo].t, y, t, opts);
  return detail::unpack(seg.kinds, y);
}

}  // namespace

std::vector<Group> Trajectory::groups_at(double t) const {
  const Segment& seg = segment_for(t);
  return groups_in_segment(seg, t, cfg_);
}

PeakonState Trajectory::state_at(double t) const { return detail::groups_to_state(groups_at(t)); }

ProfilePoint Trajectory::profile_at(double t, double x) const {
  auto gs = groups_at(t);
  double u = 0.0, ux = 0.0;
  for (const Group& g : gs) detail::accumulate_field(g, x, u, ux);
  return {x, u, ux, 2.0 * std::atan(ux)};
}

Regime Trajectory::regime_at(double t) const {
  for (const auto& span : regime_)
    if (t >= span.t0 - 1e-14 && t <= span.t1 + 1e-14) return span.regime;
  return Regime::regular;
}

bool Trajectory::has_event_in(double a, double b) const {
  const double lo = std::min(a, b), hi = std::max(a, b);
  for (const auto& e : events_)
    if (e.tau > lo && e.tau < hi) return true;
  return false;
}

// ---------------------------------------------------------------------------
// characteristics

std::vector<double> characteristic_flow_bundle(const Trajectory& traj, double s, double s2,
                                               std::vector<double> xs) {
  require(s >= traj.t_min() - 1e-12 && s <= traj.t_max() + 1e-12 && s2 >= traj.t_min() - 1e-12 &&
              s2 <= traj.t_max() + 1e-12,
          errc::invalid_argument, "characteristic interval outside trajectory range");
  require(!traj.has_event_in(s, s2), errc::event_in_window,
          "characteristic interval contains a collision event");
  if (s == s2 || xs.empty()) return xs;

  const auto& segments = traj.segments();
  const double dir = (s2 > s) ? 1.0 : -1.0;

  std::size_t si = 0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& seg = segments[i];
    if (s >= seg.t_front() - 1e-14 && s <= seg.t_back() + 1e-14) {
      si = i;
      if (dir > 0 && s >= seg.t_back() && i + 1 < segments.size()) si = i + 1;
      if (dir > 0) break;
    }
  }
  if (dir < 0) {
    for (std::size_t i = segments.size(); i-- > 0;) {
      const auto& seg = segments[i];
      if (s >= seg.t_front() - 1e-14 && s <= seg.t_back() + 1e-14) {
        si = i;
        if (s <= seg.t_front() && i > 0) si = i - 1;
        break;
      }
    }
  }

  double cur = s;
  while (true) {
    const auto& seg = segments[si];
    const double stop = (dir > 0) ? std::min(seg.t_back(), s2) : std::max(seg.t_front(), s2);
    if (stop != cur) {
      auto gs = groups_in_segment(seg, cur, traj.config());
      std::vector<double> y;
      detail::pack(gs, y);
      const std::size_t dim = y.size();
      y.insert(y.end(), xs.begin(), xs.end());
      auto rhs = [&seg, dim](double, const std::vector<double>& yy, std::vector<double>& dy) {
        std::vector<double> core(yy.begin(), yy.begin() + dim);
        auto gs2 = detail::unpack(seg.kinds, core);
        detail::system_rhs(gs2, dy);
        dy.resize(yy.size());
        for (std::size_t i = dim; i < yy.size(); ++i) {
          double u = 0.0, ux = 0.0;
          for (const Group& g : gs2) detail::accumulate_field(g, yy[i], u, ux);
          dy[i] = u;
        }
      };
      OdeOptions opts;
      opts.rel_tol = traj.config().rel_tol;
      opts.abs_tol = traj.config().abs_tol;
      opts.max_step = traj.config().max_step;
      integrate_adaptive(rhs, cur, y, stop, opts);
      std::copy(y.begin() + dim, y.end(), xs.begin());
      cur = stop;
    }
    if (cur == s2) break;
    require((dir > 0 && si + 1 < segments.size()) || (dir < 0 && si > 0), errc::internal,
            "characteristic ran out of segments");
    si += (dir > 0) ? 1 : std::size_t(-1);
  }
  return xs;
}

double characteristic_flow(const Trajectory& traj, double s, double s2, double x) {
  return characteristic_flow_bundle(traj, s, s2, {x})[0];
}

// ---------------------------------------------------------------------------
// equation residual

double residual_check(const Trajectory& traj, double t, double dt) {
  require(dt > 0, errc::invalid_argument, "dt must be positive");
  require(t - dt >= traj.t_min() - 1e-12 && t + dt <= traj.t_max() + 1e-12, errc::invalid_argument,
          "differencing stencil outside trajectory range");
  const PeakonState sm = traj.state_at(t - dt);
  const PeakonState s0 = traj.state_at(t);
  const PeakonState sp = traj.state_at(t + dt);
  if (s0.empty()) return 0.0;

  // swept corridor of each kink between t-dt and t+dt
  struct Corridor {
    double lo, hi;
  };
  std::vector<Corridor> corridors;
  auto nearest_offset = [](const PeakonState& s, double x) {
    double best = 0.0, bd = 1e9;
    for (double qq : s.q) {
      const double d = periodic_delta(qq, x);
      if (std::abs(d) < bd) {
        bd = std::abs(d);
        best = d;
      }
    }
    return best;
  };
  for (double q0 : s0.q) {
    const double dm = nearest_offset(sm, q0);
    const double dp = nearest_offset(sp, q0);
    const double lo = q0 + std::min({0.0, dm, dp});
    const double hi = q0 + std::max({0.0, dm, dp});
    if (hi > lo) corridors.push_back({lo, hi});
  }

  std::vector<double> bp;
  for (double v : s0.q) bp.push_back(v);
  for (double v : sm.q) bp.push_back(v);
  for (double v : sp.q) bp.push_back(v);
  for (const auto& c : corridors) {
    bp.push_back(c.lo);
    bp.push_back(c.hi);
  }
  auto edges = period_edges(bp);

  auto in_corridor = [&](double x) {
    for (const auto& c : corridors) {
      double r = x - c.lo;
      r -= std::floor(r);
      if (r <= (c.hi - c.lo) + 1e-15) return true;
    }
    return false;
  };

  double total = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double mid = 0.5 * (edges[i] + edges[i + 1]);
    if (in_corridor(mid)) continue;
    total += gauss_panel(
        [&](double x) {
          const double dudt = (eval_profile(sp, x).u - eval_profile(sm, x).u) / (2.0 * dt);
          const ProfilePoint p0 = eval_profile(s0, x);
          const double r = dudt + p0.u * p0.ux + source_Px(s0, x);
          return r * r;
        },
        edges[i], edges[i + 1]);
  }
  return std::sqrt(std::max(0.0, total));
}

}  // namespace chpeak
