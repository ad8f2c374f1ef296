#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <vector>

#include "dynmatch/distributions.hpp"
#include "dynmatch/errors.hpp"
#include "dynmatch/network.hpp"

namespace dynmatch {

// Invariant queue lengths (q*, i*) of the fluid model under matching rates m.
struct InvariantState {
  std::vector<double> q_star;
  std::vector<double> i_star;
};

// Invariant queue of a single node with arrival rate `rate`, patience law `g`
// and total matched rate `matched`:
//   rate/theta                               if matched == 0
//   rate/theta * G_e(G^{-1}(1 - matched/rate)) otherwise.
// Sums within kFeasibilityTol of 0 or `rate` are clamped onto the boundary.
inline double invariant_queue(double rate, const PatienceDistribution& g, double matched) {
  if (matched > rate + kFeasibilityTol || matched < -kFeasibilityTol) {
    throw FeasibilityError("matched rate outside [0, arrival rate]");
  }
  const double full = rate / g.rate();
  if (matched <= kFeasibilityTol) return full;
  if (matched >= rate - kFeasibilityTol) return 0.0;
  const double p = 1.0 - matched / rate;
  return full * g.excess_life_cdf(g.inverse_cdf(p));
}

inline double q_star(const Network& net, const MatchingRates& m, std::size_t j) {
  require_feasible(net, m);
  return invariant_queue(net.lambda[j], net.demand_patience[j], m.demand_matched(j));
}

inline double i_star(const Network& net, const MatchingRates& m, std::size_t k) {
  require_feasible(net, m);
  return invariant_queue(net.mu[k], net.supply_patience[k], m.supply_matched(k));
}

inline InvariantState invariant_state(const Network& net, const MatchingRates& m) {
  require_feasible(net, m);
  InvariantState s;
  s.q_star.resize(net.J());
  s.i_star.resize(net.K());
  for (std::size_t j = 0; j < net.J(); ++j) {
    s.q_star[j] = invariant_queue(net.lambda[j], net.demand_patience[j], m.demand_matched(j));
  }
  for (std::size_t k = 0; k < net.K(); ++k) {
    s.i_star[k] = invariant_queue(net.mu[k], net.supply_patience[k], m.supply_matched(k));
  }
  return s;
}

// sum v m - sum cD q*(m) - sum cS i*(m).
inline double mp_objective(const Network& net, const MatchingRates& m) {
  const InvariantState s = invariant_state(net, m);
  double value = 0.0;
  for (std::size_t j = 0; j < net.J(); ++j) {
    for (std::size_t k = 0; k < net.K(); ++k) value += net.values(j, k) * m(j, k);
  }
  for (std::size_t j = 0; j < net.J(); ++j) value -= net.demand_cost[j] * s.q_star[j];
  for (std::size_t k = 0; k < net.K(); ++k) value -= net.supply_cost[k] * s.i_star[k];
  return value;
}

namespace detail {

// 1/h(G^{-1}(1 - matched/rate)), i.e. -d(invariant queue)/d(matched).
inline double queue_sensitivity(double rate, const PatienceDistribution& g, double matched) {
  const double p = std::clamp(1.0 - matched / rate, 0.0, 1.0);
  return g.reciprocal_hazard_at_quantile(p);
}

}  // namespace detail

// Gradient of mp_objective:
//   v_jk + cD_j / hD_j(GD_j^{-1}(1 - row_j/lambda_j)) + cS_k / hS_k(GS_k^{-1}(1 - col_k/mu_k)).
// Only defined when every row and column sum is strictly inside (0, capacity).
inline RealMatrix mp_gradient(const Network& net, const MatchingRates& m) {
  require_feasible(net, m);
  for (std::size_t j = 0; j < net.J(); ++j) {
    const double s = m.demand_matched(j);
    if (s <= kFeasibilityTol || s >= net.lambda[j] - kFeasibilityTol) {
      throw GradientUndefinedError("demand node " + std::to_string(j) + " is at a boundary");
    }
  }
  for (std::size_t k = 0; k < net.K(); ++k) {
    const double s = m.supply_matched(k);
    if (s <= kFeasibilityTol || s >= net.mu[k] - kFeasibilityTol) {
      throw GradientUndefinedError("supply node " + std::to_string(k) + " is at a boundary");
    }
  }
  RealMatrix grad(net.J(), net.K());
  for (std::size_t j = 0; j < net.J(); ++j) {
    const double dj = net.demand_cost[j] *
        detail::queue_sensitivity(net.lambda[j], net.demand_patience[j], m.demand_matched(j));
    for (std::size_t k = 0; k < net.K(); ++k) {
      const double dk = net.supply_cost[k] *
          detail::queue_sensitivity(net.mu[k], net.supply_patience[k], m.supply_matched(k));
      grad(j, k) = net.values(j, k) + dj + dk;
    }
  }
  return grad;
}

// Same formula, extended to the boundary by the one-sided limits of the
// hazard. Entries may be +inf (e.g. increasing hazard with h(0) = 0 at a
// saturated node). Used by the first-order solvers.
inline RealMatrix mp_gradient_extended(const Network& net, const MatchingRates& m) {
  RealMatrix grad(net.J(), net.K());
  std::vector<double> dk(net.K());
  for (std::size_t k = 0; k < net.K(); ++k) {
    dk[k] = net.supply_cost[k] == 0.0
                ? 0.0
                : net.supply_cost[k] * detail::queue_sensitivity(net.mu[k], net.supply_patience[k],
                                                                 m.supply_matched(k));
  }
  for (std::size_t j = 0; j < net.J(); ++j) {
    const double dj = net.demand_cost[j] == 0.0
                          ? 0.0
                          : net.demand_cost[j] *
                                detail::queue_sensitivity(net.lambda[j], net.demand_patience[j],
                                                          m.demand_matched(j));
    for (std::size_t k = 0; k < net.K(); ++k) grad(j, k) = net.values(j, k) + dj + dk[k];
  }
  return grad;
}

// Sampled fluid path (Qbar(t), Ibar(t)) from the empty state.
struct FluidTrajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> demand;
  std::vector<std::vector<double>> supply;

  InvariantState terminal() const { return {demand.back(), supply.back()}; }

  // Rows: t, Q_1..Q_J, I_1..I_K.
  void write_csv(std::ostream& os) const {
    os << "t";
    for (std::size_t j = 0; j < demand.front().size(); ++j) os << ",Q" << j + 1;
    for (std::size_t k = 0; k < supply.front().size(); ++k) os << ",I" << k + 1;
    os << "\n";
    for (std::size_t i = 0; i < times.size(); ++i) {
      os << times[i];
      for (double q : demand[i]) os << "," << q;
      for (double x : supply[i]) os << "," << x;
      os << "\n";
    }
  }
};

namespace detail {

// Queue-level fluid dynamics of one node started empty:
//   x' = rate * (1 - G(G_e^{-1}(theta x / rate))) - matched.
// The reneging rate rate * G(chi) follows from the head-of-line age
// chi = G_e^{-1}(theta x / rate).
class NodeFluid {
 public:
  NodeFluid(double rate, const PatienceDistribution& g, double matched)
      : rate_(rate), g_(&g), matched_(std::clamp(matched, 0.0, rate)), cap_(rate / g.rate()) {}

  double cap() const { return cap_; }

  double drift(double x) {
    x = std::clamp(x, 0.0, cap_);
    const double p = x / cap_;
    double surv = 0.0;
    if (p < 1.0) {
      hint_ = g_->inverse_excess_life_cdf(p, hint_);
      surv = g_->survival(hint_);
    }
    return rate_ * surv - matched_;
  }

 private:
  double rate_;
  const PatienceDistribution* g_;
  double matched_;
  double cap_;
  double hint_ = -1.0;
};

inline double rk4_step(NodeFluid& node, double x, double dt) {
  const double k1 = node.drift(x);
  const double k2 = node.drift(x + 0.5 * dt * k1);
  const double k3 = node.drift(x + 0.5 * dt * k2);
  const double k4 = node.drift(x + dt * k3);
  return std::clamp(x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), 0.0, node.cap());
}

}  // namespace detail

inline double default_fluid_step(const Network& net) {
  double max_theta = 0.0;
  for (const auto& g : net.demand_patience) max_theta = std::max(max_theta, g.rate());
  for (const auto& g : net.supply_patience) max_theta = std::max(max_theta, g.rate());
  return std::min(1.0 / (10.0 * max_theta), 0.01);
}

// Classic fixed-step RK4 from Qbar(0) = Ibar(0) = 0. dt <= 0 selects
// default_fluid_step. Every `record_stride`-th step is stored, plus the end.
inline FluidTrajectory fluid_trajectory(const Network& net, const MatchingRates& m, double horizon,
                                        double dt, std::size_t record_stride = 1) {
  if (!(horizon > 0.0)) throw DomainError("fluid horizon must be > 0");
  if (dt < 0.0 || std::isnan(dt)) throw DomainError("fluid step must be > 0");
  if (dt == 0.0) dt = default_fluid_step(net);
  require_feasible(net, m);
  record_stride = std::max<std::size_t>(record_stride, 1);

  std::vector<detail::NodeFluid> demand_nodes, supply_nodes;
  for (std::size_t j = 0; j < net.J(); ++j) {
    demand_nodes.emplace_back(net.lambda[j], net.demand_patience[j], m.demand_matched(j));
  }
  for (std::size_t k = 0; k < net.K(); ++k) {
    supply_nodes.emplace_back(net.mu[k], net.supply_patience[k], m.supply_matched(k));
  }

  FluidTrajectory out;
  std::vector<double> q(net.J(), 0.0), s(net.K(), 0.0);
  auto record = [&](double t) {
    out.times.push_back(t);
    out.demand.push_back(q);
    out.supply.push_back(s);
  };
  record(0.0);
  const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
  for (std::size_t step = 1; step <= steps; ++step) {
    const double h = std::min(dt, horizon - (step - 1) * dt);
    for (std::size_t j = 0; j < q.size(); ++j) q[j] = detail::rk4_step(demand_nodes[j], q[j], h);
    for (std::size_t k = 0; k < s.size(); ++k) s[k] = detail::rk4_step(supply_nodes[k], s[k], h);
    if (step % record_stride == 0 || step == steps) record(std::min(horizon, step * dt));
  }
  return out;
}

}  // namespace dynmatch
