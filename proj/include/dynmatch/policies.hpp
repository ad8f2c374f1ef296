#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "dynmatch/matrix.hpp"
#include "dynmatch/network.hpp"
#include "dynmatch/priority.hpp"
#include "dynmatch/transport.hpp"

namespace dynmatch {

// Discrete-review match counts computed from the pre-match snapshot
// (Q(il-), I(il-)). All three return nonnegative integer J x K matrices whose
// row sums are <= Q and column sums are <= I.

// floor(m_jk * min(n l^n, Q_j / lambda_j, I_k / mu_k)) with unscaled rates.
inline CountMatrix policy_matching_rate_based(std::span<const std::int64_t> Q,
                                              std::span<const std::int64_t> I,
                                              const MatchingRates& m, double n,
                                              double review_length,
                                              std::span<const double> lambda,
                                              std::span<const double> mu) {
  const std::size_t J = Q.size(), K = I.size();
  CountMatrix out(J, K, 0);
  const double period = n * review_length;
  for (std::size_t j = 0; j < J; ++j) {
    const double qj = static_cast<double>(Q[j]) / lambda[j];
    for (std::size_t k = 0; k < K; ++k) {
      if (m(j, k) <= 0.0) continue;
      const double t = std::min({period, qj, static_cast<double>(I[k]) / mu[k]});
      // The guard only absorbs round-off in products like m * n * l^n.
      out(j, k) = static_cast<std::int64_t>(std::floor(m(j, k) * t + 1e-9));
    }
  }
  return out;
}

// Greedy in set order. Residuals are updated edge by edge, which equals the
// set-level recursion for node-disjoint sets and keeps the shared-node zero
// set admissible.
inline CountMatrix policy_priority_ordering(std::span<const std::int64_t> Q,
                                            std::span<const std::int64_t> I,
                                            const PrioritySets& sets) {
  CountMatrix out(Q.size(), I.size(), 0);
  std::vector<std::int64_t> q(Q.begin(), Q.end()), s(I.begin(), I.end());
  for (const auto& set : sets.sets) {
    for (const Edge& e : set) {
      const std::int64_t c = std::max<std::int64_t>(0, std::min(q[e.demand], s[e.supply]));
      out(e.demand, e.supply) = c;
      q[e.demand] -= c;
      s[e.supply] -= c;
    }
  }
  return out;
}

// Integral transport optimum on the snapshot.
inline CountMatrix policy_lp_based(std::span<const std::int64_t> Q, std::span<const std::int64_t> I,
                                   const RealMatrix& values) {
  std::vector<double> rows(Q.begin(), Q.end()), cols(I.begin(), I.end());
  const TransportSolution sol = solve_transport(values, rows, cols);
  CountMatrix out(Q.size(), I.size(), 0);
  for (std::size_t i = 0; i < out.size(); ++i) out.flat()[i] = std::llround(sol.allocation.flat()[i]);
  return out;
}

}  // namespace dynmatch
