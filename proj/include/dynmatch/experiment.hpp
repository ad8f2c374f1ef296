#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dynmatch/config.hpp"
#include "dynmatch/mp_solver.hpp"
#include "dynmatch/priority.hpp"
#include "dynmatch/simulator.hpp"

namespace dynmatch {

// Optimal MP solution that is also a vertex. Linear and convex objectives
// always have one; LP ties can land off a vertex, so those fall back to
// vertex enumeration. Concave or mixed objectives raise ConfigError.
inline MpSolution optimal_extreme_point(const Network& net) {
  MpSolution sol = solve_mp(net);
  if (sol.is_extreme_point) return sol;
  const bool vertex_optimal = net.has_zero_costs() ||
                              net.all_trends(HazardTrend::Constant, HazardTrend::Increasing);
  if (vertex_optimal && net.J() * net.K() <= kMaxEnumerationEdges) {
    return solve_mp_with(net, MpSolver::VertexEnumeration);
  }
  throw ConfigError("priority policy needs an optimal extreme point; the MP optimum (" +
                    std::string(to_string(sol.solver_used)) +
                    ") is not a vertex. Supply experiment.priority_sets explicitly.");
}

inline Policy make_policy(const std::string& name, const Network& net,
                          const std::optional<PrioritySets>& sets = std::nullopt,
                          const std::optional<MatchingRates>& rates = std::nullopt) {
  if (name == "lp") return LpBased{};
  if (name == "matching-rate") return MatchingRateBased{rates ? *rates : solve_mp(net).m_star};
  if (name == "priority") {
    if (sets) return PriorityOrdering{*sets};
    return PriorityOrdering{build_priority_sets(net, optimal_extreme_point(net).m_star)};
  }
  throw ConfigError("unknown policy '" + name + "'");
}

inline SimConfig make_sim_config(const ExperimentConfig& cfg) {
  SimConfig s;
  s.net = cfg.net;
  s.n = cfg.n;
  s.review_base = cfg.review_base;
  s.review_exponent = cfg.review_exponent;
  s.horizon = cfg.horizon;
  s.policy = make_policy(cfg.policy, cfg.net, cfg.priority_sets, cfg.rates);
  // Rate gaps are measured against the rates the policy tracks.
  if (const auto* p = std::get_if<MatchingRateBased>(&s.policy)) s.reference_rates = p->m;
  if (const auto* p = std::get_if<PriorityOrdering>(&s.policy)) s.reference_rates = greedy_yp(cfg.net, p->sets);
  s.arrival_kind = cfg.arrivals;
  s.erlang_k = cfg.erlang_k;
  s.seed = cfg.seed;
  s.trajectory_stride = cfg.trajectory_stride;
  return s;
}

// One point of the sweep grid, with its own network (patience and supply
// rates substituted) and the MP bound used for ratios.
struct SweepCell {
  std::int64_t n;
  double review_base;
  std::string policy;
  std::string patience;
  std::vector<double> mu;
  Network net;
  double upper_bound;
  // Fluid reneging fractions (lambda - sum m*)+ / lambda from the
  // zero-holding-cost rate problem, aggregated over nodes.
  double fluid_demand_reneging;
  double fluid_supply_reneging;
};

inline std::vector<SweepCell> sweep_cells(const ExperimentConfig& cfg) {
  const SweepAxes& ax = cfg.sweep;
  const std::vector<std::int64_t> ns = ax.n.empty() ? std::vector{cfg.n} : ax.n;
  const std::vector<double> ls = ax.review_base.empty() ? std::vector{cfg.review_base} : ax.review_base;
  const std::vector<std::string> ps = ax.policy.empty() ? std::vector{cfg.policy} : ax.policy;
  const std::vector<std::vector<double>> mus = ax.mu.empty() ? std::vector<std::vector<double>>{cfg.net.mu} : ax.mu;
  std::vector<std::optional<LabeledPatience>> pats;
  if (ax.patience.empty()) pats.push_back(std::nullopt);
  for (const auto& p : ax.patience) pats.push_back(p);

  std::vector<SweepCell> cells;
  for (const auto& pat : pats) {
    for (const auto& mu : mus) {
      Network net = cfg.net;
      net.mu = mu;
      if (pat) {
        net.demand_patience.assign(net.J(), pat->dist);
        net.supply_patience.assign(net.K(), pat->dist);
      }
      net.validate();
      const double ub = upper_bound(net);
      const MatchingRates value_only = solve_lp_value_only(net);
      double lam = 0.0, unmatched_d = 0.0, mu_total = 0.0, unmatched_s = 0.0;
      for (std::size_t j = 0; j < net.J(); ++j) {
        lam += net.lambda[j];
        unmatched_d += std::max(0.0, net.lambda[j] - value_only.demand_matched(j));
      }
      for (std::size_t k = 0; k < net.K(); ++k) {
        mu_total += net.mu[k];
        unmatched_s += std::max(0.0, net.mu[k] - value_only.supply_matched(k));
      }
      for (auto n : ns) {
        for (double l : ls) {
          for (const auto& p : ps) {
            cells.push_back({n, l, p, pat ? pat->label : std::string("instance"), mu, net, ub,
                             unmatched_d / lam, unmatched_s / mu_total});
          }
        }
      }
    }
  }
  return cells;
}

inline SimConfig cell_config(const ExperimentConfig& cfg, const SweepCell& cell) {
  ExperimentConfig c = cfg;
  c.net = cell.net;
  c.n = cell.n;
  c.review_base = cell.review_base;
  c.policy = cell.policy;
  // Explicit sets and rates only apply to the base instance.
  if (!(cell.net == cfg.net)) {
    c.priority_sets.reset();
    c.rates.reset();
  }
  return make_sim_config(c);
}

}  // namespace dynmatch
