#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "dynmatch/errors.hpp"
#include "dynmatch/extreme_points.hpp"
#include "dynmatch/network.hpp"

namespace dynmatch {

// Ordered partition P_0, ..., P_H, P_{H+1} of the J*K edges. The last set
// holds the zero-rate edges and is always present (possibly empty).
struct PrioritySets {
  std::size_t J = 0, K = 0;
  std::vector<std::vector<Edge>> sets;

  int H() const { return static_cast<int>(sets.size()) - 2; }
  const std::vector<Edge>& zero_set() const { return sets.back(); }

  std::string to_string() const {
    std::string s;
    for (std::size_t h = 0; h < sets.size(); ++h) {
      s += "P" + std::to_string(h) + ": {" + detail::format_edges(sets[h]) + "}\n";
    }
    return s;
  }

  friend bool operator==(const PrioritySets&, const PrioritySets&) = default;
};

// Throws StructureError unless `p` partitions the J*K edges and every set
// before the last is node-disjoint.
inline void validate_priority_sets(const PrioritySets& p) {
  if (p.sets.empty()) throw StructureError("priority sets: no sets");
  std::vector<int> seen(p.J * p.K, 0);
  for (std::size_t h = 0; h < p.sets.size(); ++h) {
    std::vector<bool> row(p.J, false), col(p.K, false);
    for (const Edge& e : p.sets[h]) {
      if (e.demand >= p.J || e.supply >= p.K) throw StructureError("priority sets: edge out of range");
      if (seen[e.demand * p.K + e.supply]++) {
        throw StructureError("priority sets: edge " + detail::format_edges(std::vector{e}) +
                             " appears twice");
      }
      if (h + 1 == p.sets.size()) continue;
      if (row[e.demand] || col[e.supply]) {
        throw StructureError("priority sets: P" + std::to_string(h) + " is not node-disjoint");
      }
      row[e.demand] = col[e.supply] = true;
    }
  }
  for (int c : seen) if (c == 0) throw StructureError("priority sets: not every edge is covered");
}

// Priority-set construction from an optimal extreme point. The consideration
// set is scanned in lexicographic (j,k) order; tightness uses `tol`.
inline PrioritySets build_priority_sets(std::span<const double> lambda, std::span<const double> mu,
                                        const MatchingRates& m_star, double tol = kFeasibilityTol) {
  const std::size_t J = lambda.size(), K = mu.size();
  if (m_star.J() != J || m_star.K() != K) throw DomainError("m* must be J x K");
  if (auto cycle = find_support_cycle(m_star.m, tol)) {
    throw StructureError("m* is not an extreme point; support cycle " +
                         detail::format_edges(*cycle));
  }
  PrioritySets out{J, K, {}};
  std::vector<double> d(lambda.begin(), lambda.end()), s(mu.begin(), mu.end());
  std::vector<Edge> remaining = detail::support_of(m_star.m, tol);

  while (!remaining.empty()) {
    std::vector<Edge> current;
    std::vector<bool> blocked_row(J, false), blocked_col(K, false);
    for (const Edge& e : remaining) {
      if (blocked_row[e.demand] || blocked_col[e.supply]) continue;
      const double x = m_star(e.demand, e.supply);
      if (std::abs(x - d[e.demand]) <= tol || std::abs(x - s[e.supply]) <= tol) {
        current.push_back(e);
        d[e.demand] -= x;
        s[e.supply] -= x;
        blocked_row[e.demand] = blocked_col[e.supply] = true;
      }
    }
    if (current.empty()) {
      throw StructureError("no tight edge among " + detail::format_edges(remaining) +
                           "; m* is not an extreme point");
    }
    std::erase_if(remaining, [&](const Edge& e) {
      return std::find(current.begin(), current.end(), e) != current.end();
    });
    out.sets.push_back(std::move(current));
  }

  std::vector<Edge> zeros;
  for (std::size_t j = 0; j < J; ++j) {
    for (std::size_t k = 0; k < K; ++k) {
      if (!(m_star(j, k) > tol)) zeros.push_back({j, k});
    }
  }
  out.sets.push_back(std::move(zeros));
  return out;
}

inline PrioritySets build_priority_sets(const Network& net, const MatchingRates& m_star,
                                        double tol = kFeasibilityTol) {
  return build_priority_sets(net.lambda, net.mu, m_star, tol);
}

// y^p: min of residual row and column capacity, where the residuals only
// subtract edges of strictly earlier sets.
inline MatchingRates greedy_yp(std::span<const double> lambda, std::span<const double> mu,
                               const PrioritySets& sets) {
  validate_priority_sets(sets);
  if (sets.J != lambda.size() || sets.K != mu.size()) {
    throw StructureError("priority sets do not match the network size");
  }
  MatchingRates y(sets.J, sets.K);
  std::vector<double> row_used(sets.J, 0.0), col_used(sets.K, 0.0);
  for (const auto& set : sets.sets) {
    for (const Edge& e : set) {
      y(e.demand, e.supply) = std::max(0.0, std::min(lambda[e.demand] - row_used[e.demand],
                                                     mu[e.supply] - col_used[e.supply]));
    }
    for (const Edge& e : set) {
      row_used[e.demand] += y(e.demand, e.supply);
      col_used[e.supply] += y(e.demand, e.supply);
    }
  }
  return y;
}

inline MatchingRates greedy_yp(const Network& net, const PrioritySets& sets) {
  return greedy_yp(net.lambda, net.mu, sets);
}

}  // namespace dynmatch
