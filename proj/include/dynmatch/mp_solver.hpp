#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "dynmatch/errors.hpp"
#include "dynmatch/extreme_points.hpp"
#include "dynmatch/fluid.hpp"
#include "dynmatch/network.hpp"
#include "dynmatch/transport.hpp"

namespace dynmatch {

enum class MpSolver { LP, VertexEnumeration, FrankWolfe, MultiStartGradient };

inline const char* to_string(MpSolver s) {
  switch (s) {
    case MpSolver::LP: return "LP";
    case MpSolver::VertexEnumeration: return "VertexEnumeration";
    case MpSolver::FrankWolfe: return "FrankWolfe";
    case MpSolver::MultiStartGradient: return "MultiStartGradient";
  }
  return "?";
}

struct MpSolution {
  MatchingRates m_star;
  double objective = 0.0;
  bool is_extreme_point = false;
  MpSolver solver_used = MpSolver::LP;
  // False only for the mixed-hazard heuristic.
  bool global_guarantee = true;
  std::size_t iterations = 0;
  // Frank-Wolfe duality gap at termination (0 for exact routes).
  double gap = 0.0;
  std::vector<double> objective_trace;  // Frank-Wolfe iterates
};

struct MpOptions {
  std::size_t fw_max_iterations = 10000;
  double fw_gap_tolerance = 1e-8;
  std::size_t multistart_points = 50;
  std::uint64_t multistart_seed = 0x5eed;
  bool record_trace = false;
};

// Optimal rates for max sum v m over the polytope (the zero-holding-cost
// problem), by max-profit flow.
inline MatchingRates solve_lp_value_only(const RealMatrix& values, std::span<const double> lambda,
                                         std::span<const double> mu) {
  return MatchingRates(solve_transport(values, lambda, mu).allocation);
}

inline MatchingRates solve_lp_value_only(const Network& net) {
  return solve_lp_value_only(net.values, net.lambda, net.mu);
}

// F(lambda, mu): optimal value of the zero-holding-cost problem.
inline double matching_value_bound(const RealMatrix& values, std::span<const double> lambda,
                                   std::span<const double> mu) {
  return solve_transport(values, lambda, mu).value;
}

namespace detail {

inline MpSolution finish(const Network& net, MatchingRates m, MpSolver solver) {
  // Clean round-off so the point is feasible within tolerance.
  for (double& x : m.m.flat()) if (x < 0.0) x = 0.0;
  MpSolution sol;
  sol.objective = mp_objective(net, m);
  sol.is_extreme_point = is_extreme_point(net.lambda, net.mu, m.m);
  sol.solver_used = solver;
  sol.m_star = std::move(m);
  return sol;
}

// Exact when every patience law is exponential (q*, i* affine in m) or when
// all holding costs vanish.
inline MpSolution solve_by_lp(const Network& net) {
  RealMatrix weights = net.values;
  for (std::size_t j = 0; j < net.J(); ++j) {
    for (std::size_t k = 0; k < net.K(); ++k) {
      if (net.demand_cost[j] != 0.0) weights(j, k) += net.demand_cost[j] / net.demand_patience[j].rate();
      if (net.supply_cost[k] != 0.0) weights(j, k) += net.supply_cost[k] / net.supply_patience[k].rate();
    }
  }
  return finish(net, MatchingRates(solve_transport(weights, net.lambda, net.mu).allocation),
                MpSolver::LP);
}

// Best vertex with deterministic tie-break: lexicographically smallest m
// among values within 1e-9 of the maximum.
inline MpSolution solve_by_vertices(const Network& net) {
  const std::vector<ExtremePoint> points = enumerate_extreme_points(net);
  std::vector<double> values(points.size());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    values[i] = mp_objective(net, points[i].m);
    best = std::max(best, values[i]);
  }
  std::size_t pick = points.size();
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (values[i] < best - 1e-9) continue;
    if (pick == points.size() || lexicographically_less(points[i].m.m, points[pick].m.m)) pick = i;
  }
  MpSolution sol = finish(net, points[pick].m, MpSolver::VertexEnumeration);
  sol.iterations = points.size();
  return sol;
}

inline double inner(const RealMatrix& a, const RealMatrix& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.flat()[i] * b.flat()[i];
  return s;
}

inline RealMatrix axpy(const RealMatrix& x, double t, const RealMatrix& d) {
  RealMatrix out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out.flat()[i] = std::max(0.0, x.flat()[i] + t * d.flat()[i]);
  return out;
}

inline RealMatrix finite_gradient(const Network& net, const RealMatrix& x) {
  RealMatrix g = mp_gradient_extended(net, MatchingRates(x));
  for (double& v : g.flat()) v = std::clamp(v, -1e8, 1e8);
  return g;
}

inline RealMatrix linear_oracle(const Network& net, const RealMatrix& grad) {
  RealMatrix w = grad;
  for (double& v : w.flat()) v = std::max(0.0, v);
  return solve_transport(w, net.lambda, net.mu).allocation;
}

// Maximizes the concave phi(t) = f(x + t d) on [0, t_max] by bisection on
// phi'(t) = <grad f(x + t d), d>.
inline double concave_line_search(const Network& net, const RealMatrix& x, const RealMatrix& d,
                                  double t_max) {
  auto slope = [&](double t) { return inner(finite_gradient(net, axpy(x, t, d)), d); };
  if (slope(t_max) >= 0.0) return t_max;
  double lo = 0.0, hi = t_max;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (slope(mid) > 0.0) lo = mid; else hi = mid;
  }
  return lo;
}

// Away-step Frank-Wolfe with exact line search; linear subproblems go to the
// transportation solver. For concave objectives (non-increasing hazards).
inline MpSolution solve_by_frank_wolfe(const Network& net, const MpOptions& opt) {
  const std::size_t J = net.J(), K = net.K();
  struct Atom {
    RealMatrix v;
    double weight;
  };
  RealMatrix x = linear_oracle(net, finite_gradient(net, RealMatrix(J, K, 0.0)));
  std::vector<Atom> active{{x, 1.0}};
  double fx = mp_objective(net, MatchingRates(x));
  MpSolution trace_holder;
  if (opt.record_trace) trace_holder.objective_trace.push_back(fx);

  double gap = std::numeric_limits<double>::infinity();
  std::size_t iter = 0;
  for (; iter < opt.fw_max_iterations; ++iter) {
    const RealMatrix g = finite_gradient(net, x);
    const RealMatrix s = linear_oracle(net, g);
    gap = inner(g, s) - inner(g, x);
    if (gap < opt.fw_gap_tolerance) break;

    std::size_t away = 0;
    for (std::size_t a = 1; a < active.size(); ++a) {
      if (inner(g, active[a].v) < inner(g, active[away].v)) away = a;
    }
    const double away_gap = inner(g, x) - inner(g, active[away].v);

    RealMatrix d(J, K);
    double t_max;
    const bool forward = gap >= away_gap || active.size() == 1;
    if (forward) {
      for (std::size_t i = 0; i < d.size(); ++i) d.flat()[i] = s.flat()[i] - x.flat()[i];
      t_max = 1.0;
    } else {
      const double w = active[away].weight;
      for (std::size_t i = 0; i < d.size(); ++i) d.flat()[i] = x.flat()[i] - active[away].v.flat()[i];
      t_max = w / (1.0 - w);
    }
    const double t = concave_line_search(net, x, d, t_max);
    const RealMatrix next = axpy(x, t, d);
    const double fnext = mp_objective(net, MatchingRates(next));
    if (!(fnext >= fx) || t == 0.0) {
      if (forward) break;  // no ascent possible along the FW direction
      active.erase(active.begin() + static_cast<long>(away));
      double total = 0.0;
      for (const Atom& a : active) total += a.weight;
      for (Atom& a : active) a.weight /= total;
      continue;
    }

    if (forward) {
      for (Atom& a : active) a.weight *= (1.0 - t);
      auto it = std::find_if(active.begin(), active.end(),
                             [&](const Atom& a) { return max_abs_difference(a.v, s) <= 1e-12; });
      if (t >= 1.0) {
        active.assign(1, Atom{s, 1.0});
      } else if (it != active.end()) {
        it->weight += t;
      } else {
        active.push_back({s, t});
      }
    } else {
      for (Atom& a : active) a.weight *= (1.0 + t);
      active[away].weight -= t;
      if (t >= t_max || active[away].weight <= 1e-14) {
        active.erase(active.begin() + static_cast<long>(away));
      }
    }
    std::erase_if(active, [](const Atom& a) { return a.weight <= 0.0; });
    x = next;
    fx = fnext;
    if (opt.record_trace) trace_holder.objective_trace.push_back(fx);
  }
  MpSolution sol = finish(net, MatchingRates(x), MpSolver::FrankWolfe);
  sol.iterations = iter;
  sol.gap = std::max(0.0, gap);
  sol.objective_trace = std::move(trace_holder.objective_trace);
  return sol;
}

// Euclidean projection of y onto {x >= 0, sum x <= cap}.
inline void project_capped_simplex(std::span<double> y, double cap) {
  double sum = 0.0;
  for (double& v : y) {
    v = std::max(0.0, v);
    sum += v;
  }
  if (sum <= cap) return;
  std::vector<double> sorted(y.begin(), y.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0, tau = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    cumulative += sorted[i];
    const double t = (cumulative - cap) / static_cast<double>(i + 1);
    if (i + 1 == sorted.size() || sorted[i + 1] <= t) {
      tau = t;
      break;
    }
  }
  for (double& v : y) v = std::max(0.0, v - tau);
}

// Projection onto the polytope by Dykstra's alternating projections between
// the row-capped and column-capped sets.
inline RealMatrix project_onto_polytope(const Network& net, const RealMatrix& y) {
  const std::size_t J = net.J(), K = net.K();
  RealMatrix x = y, p(J, K, 0.0), q(J, K, 0.0);
  std::vector<double> buf;
  for (int iter = 0; iter < 500; ++iter) {
    RealMatrix prev = x;
    RealMatrix r(J, K);
    for (std::size_t i = 0; i < x.size(); ++i) r.flat()[i] = x.flat()[i] + p.flat()[i];
    RealMatrix a = r;
    for (std::size_t j = 0; j < J; ++j) {
      buf.assign(a.row(j).begin(), a.row(j).end());
      project_capped_simplex(buf, net.lambda[j]);
      for (std::size_t k = 0; k < K; ++k) a(j, k) = buf[k];
    }
    for (std::size_t i = 0; i < x.size(); ++i) p.flat()[i] = r.flat()[i] - a.flat()[i];
    RealMatrix s(J, K);
    for (std::size_t i = 0; i < x.size(); ++i) s.flat()[i] = a.flat()[i] + q.flat()[i];
    RealMatrix b = s;
    for (std::size_t k = 0; k < K; ++k) {
      buf.resize(J);
      for (std::size_t j = 0; j < J; ++j) buf[j] = b(j, k);
      project_capped_simplex(buf, net.mu[k]);
      for (std::size_t j = 0; j < J; ++j) b(j, k) = buf[j];
    }
    for (std::size_t i = 0; i < x.size(); ++i) q.flat()[i] = s.flat()[i] - b.flat()[i];
    x = b;
    if (max_abs_difference(x, prev) < 1e-13) break;
  }
  // The column projection is exact; shave any residual row excess.
  for (std::size_t j = 0; j < J; ++j) {
    const double s = x.row_sum(j);
    if (s > net.lambda[j]) for (std::size_t k = 0; k < K; ++k) x(j, k) *= net.lambda[j] / s;
  }
  return x;
}

inline RealMatrix projected_ascent(const Network& net, RealMatrix x) {
  double fx = mp_objective(net, MatchingRates(x));
  double step = 1.0;
  for (int iter = 0; iter < 300 && step > 1e-12; ++iter) {
    const RealMatrix g = finite_gradient(net, x);
    bool improved = false;
    while (step > 1e-12) {
      RealMatrix y = x;
      for (std::size_t i = 0; i < y.size(); ++i) y.flat()[i] += step * g.flat()[i];
      y = project_onto_polytope(net, y);
      const double fy = mp_objective(net, MatchingRates(y));
      if (fy > fx + 1e-14) {
        x = std::move(y);
        fx = fy;
        improved = true;
        step *= 2.0;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
  }
  return x;
}

// Heuristic for mixed hazard trends: projected gradient ascent from random
// feasible points and from the best vertex (when enumerable).
inline MpSolution solve_by_multistart(const Network& net, const MpOptions& opt) {
  const std::size_t J = net.J(), K = net.K();
  std::vector<RealMatrix> starts;
  if (J * K <= kMaxEnumerationEdges) starts.push_back(solve_by_vertices(net).m_star.m);
  std::mt19937_64 rng(opt.multistart_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t s = 0; s < opt.multistart_points; ++s) {
    RealMatrix x(J, K);
    for (double& v : x.flat()) v = unit(rng);
    for (std::size_t j = 0; j < J; ++j) {
      const double r = x.row_sum(j);
      const double scale = net.lambda[j] * unit(rng) / r;
      for (std::size_t k = 0; k < K; ++k) x(j, k) *= scale;
    }
    for (std::size_t k = 0; k < K; ++k) {
      const double c = x.col_sum(k);
      if (c > net.mu[k]) for (std::size_t j = 0; j < J; ++j) x(j, k) *= net.mu[k] / c;
    }
    starts.push_back(std::move(x));
  }
  RealMatrix best;
  double best_value = -std::numeric_limits<double>::infinity();
  for (const RealMatrix& s : starts) {
    RealMatrix x = projected_ascent(net, s);
    const double v = mp_objective(net, MatchingRates(x));
    if (v > best_value + 1e-12) {
      best_value = v;
      best = std::move(x);
    }
  }
  MpSolution sol = finish(net, MatchingRates(best), MpSolver::MultiStartGradient);
  sol.global_guarantee = false;
  sol.iterations = starts.size();
  return sol;
}

}  // namespace detail

// Route forced by the caller. LP is exact only for exponential patience or
// zero holding costs; the others follow the hazard-trend classes.
inline MpSolution solve_mp_with(const Network& net, MpSolver solver, const MpOptions& opt = {}) {
  net.validate();
  switch (solver) {
    case MpSolver::LP: return detail::solve_by_lp(net);
    case MpSolver::VertexEnumeration: return detail::solve_by_vertices(net);
    case MpSolver::FrankWolfe: return detail::solve_by_frank_wolfe(net, opt);
    case MpSolver::MultiStartGradient: return detail::solve_by_multistart(net, opt);
  }
  return detail::solve_by_lp(net);
}

// Dispatch on the hazard classes of the patience laws:
//   zero costs or all constant hazards -> LP on the adjusted weights
//   all non-decreasing  -> convex objective, best vertex
//   all non-increasing  -> concave objective, Frank-Wolfe
//   otherwise           -> multi-start heuristic (no global guarantee)
inline MpSolution solve_mp(const Network& net, const MpOptions& opt = {}) {
  using enum HazardTrend;
  net.validate();
  if (net.has_zero_costs() || net.all_trends(Constant, Constant)) return detail::solve_by_lp(net);
  if (net.all_trends(Constant, Increasing)) return detail::solve_by_vertices(net);
  if (net.all_trends(Constant, Decreasing)) return detail::solve_by_frank_wolfe(net, opt);
  return detail::solve_by_multistart(net, opt);
}

// Asymptotic upper bound on the long-run average value per unit time and
// per unit of scale: the optimal value of the rate problem.
inline double upper_bound(const Network& net, const MpOptions& opt = {}) {
  return solve_mp(net, opt).objective;
}

}  // namespace dynmatch
