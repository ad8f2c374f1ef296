#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "dynmatch/distributions.hpp"
#include "dynmatch/errors.hpp"
#include "dynmatch/matrix.hpp"

namespace dynmatch {

inline constexpr double kFeasibilityTol = 1e-9;

// Bipartite instance: demand nodes j with arrival rate lambda_j, holding cost
// cD_j and patience law GD_j; supply nodes k likewise; match values v_jk.
struct Network {
  std::vector<double> lambda;
  std::vector<double> mu;
  RealMatrix values;
  std::vector<double> demand_cost;
  std::vector<double> supply_cost;
  std::vector<PatienceDistribution> demand_patience;
  std::vector<PatienceDistribution> supply_patience;

  std::size_t J() const { return lambda.size(); }
  std::size_t K() const { return mu.size(); }

  bool has_zero_costs() const {
    for (double c : demand_cost) if (c != 0.0) return false;
    for (double c : supply_cost) if (c != 0.0) return false;
    return true;
  }

  // Throws DomainError on any violated invariant.
  void validate() const {
    if (lambda.empty() || mu.empty()) throw DomainError("network needs J, K >= 1");
    if (values.rows() != J() || values.cols() != K()) {
      throw DomainError("values matrix must be J x K");
    }
    if (demand_cost.size() != J() || demand_patience.size() != J()) {
      throw DomainError("demand cost / patience vectors must have length J");
    }
    if (supply_cost.size() != K() || supply_patience.size() != K()) {
      throw DomainError("supply cost / patience vectors must have length K");
    }
    auto positive = [](double x) { return x > 0.0 && std::isfinite(x); };
    auto nonneg = [](double x) { return x >= 0.0 && std::isfinite(x); };
    for (double x : lambda) if (!positive(x)) throw DomainError("arrival rates must be > 0");
    for (double x : mu) if (!positive(x)) throw DomainError("arrival rates must be > 0");
    for (double x : values.flat()) if (!nonneg(x)) throw DomainError("values must be >= 0");
    for (double x : demand_cost) if (!nonneg(x)) throw DomainError("costs must be >= 0");
    for (double x : supply_cost) if (!nonneg(x)) throw DomainError("costs must be >= 0");
  }

  bool all_trends(HazardTrend a, HazardTrend b) const {
    for (const auto& d : demand_patience) {
      if (d.hazard_trend() != a && d.hazard_trend() != b) return false;
    }
    for (const auto& d : supply_patience) {
      if (d.hazard_trend() != a && d.hazard_trend() != b) return false;
    }
    return true;
  }

  friend bool operator==(const Network&, const Network&) = default;
};

// Same patience law on every node; zero costs unless given.
inline Network make_network(std::vector<double> lambda, std::vector<double> mu, RealMatrix values,
                            const PatienceDistribution& patience,
                            std::vector<double> demand_cost = {},
                            std::vector<double> supply_cost = {}) {
  Network net;
  net.lambda = std::move(lambda);
  net.mu = std::move(mu);
  net.values = std::move(values);
  net.demand_cost = demand_cost.empty() ? std::vector<double>(net.J(), 0.0) : std::move(demand_cost);
  net.supply_cost = supply_cost.empty() ? std::vector<double>(net.K(), 0.0) : std::move(supply_cost);
  net.demand_patience.assign(net.J(), patience);
  net.supply_patience.assign(net.K(), patience);
  net.validate();
  return net;
}

// A point m of the polytope {m >= 0, row sums <= lambda, column sums <= mu}.
struct MatchingRates {
  RealMatrix m;

  MatchingRates() = default;
  explicit MatchingRates(RealMatrix rates) : m(std::move(rates)) {}
  MatchingRates(std::size_t J, std::size_t K) : m(J, K, 0.0) {}

  double operator()(std::size_t j, std::size_t k) const { return m(j, k); }
  double& operator()(std::size_t j, std::size_t k) { return m(j, k); }
  std::size_t J() const { return m.rows(); }
  std::size_t K() const { return m.cols(); }
  double demand_matched(std::size_t j) const { return m.row_sum(j); }
  double supply_matched(std::size_t k) const { return m.col_sum(k); }

  friend bool operator==(const MatchingRates&, const MatchingRates&) = default;
};

inline bool is_feasible(std::span<const double> lambda, std::span<const double> mu,
                        const RealMatrix& m, double tol = kFeasibilityTol) {
  if (m.rows() != lambda.size() || m.cols() != mu.size()) return false;
  for (double x : m.flat()) if (!(x >= -tol)) return false;
  for (std::size_t j = 0; j < m.rows(); ++j) if (m.row_sum(j) > lambda[j] + tol) return false;
  for (std::size_t k = 0; k < m.cols(); ++k) if (m.col_sum(k) > mu[k] + tol) return false;
  return true;
}

inline void require_feasible(const Network& net, const MatchingRates& m,
                             double tol = kFeasibilityTol) {
  if (!is_feasible(net.lambda, net.mu, m.m, tol)) {
    throw FeasibilityError("matching rates lie outside the feasible polytope");
  }
}

}  // namespace dynmatch
