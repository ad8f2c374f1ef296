#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dynmatch/errors.hpp"
#include "dynmatch/matrix.hpp"
#include "dynmatch/network.hpp"

namespace dynmatch {

inline constexpr std::size_t kMaxEnumerationEdges = 20;

// A vertex of {m >= 0, row sums <= lambda, column sums <= mu}.
struct ExtremePoint {
  MatchingRates m;
  std::vector<Edge> support;  // {(j,k): m_jk > 0}, row-major order
  std::vector<bool> tight_demand;
  std::vector<bool> tight_supply;
};

namespace detail {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent_[b] = a;
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
};

// Bipartite graph on J + K vertices; demand j is vertex j, supply k is J + k.
struct SupportGraph {
  std::size_t J = 0, K = 0;
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj;  // (neighbor, edge index)

  SupportGraph(std::size_t J_, std::size_t K_, std::span<const Edge> edges) : J(J_), K(K_), adj(J_ + K_) {
    for (std::size_t e = 0; e < edges.size(); ++e) {
      adj[edges[e].demand].push_back({J + edges[e].supply, e});
      adj[J + edges[e].supply].push_back({edges[e].demand, e});
    }
  }
};

inline std::vector<Edge> support_of(const RealMatrix& m, double tol) {
  std::vector<Edge> edges;
  for (std::size_t j = 0; j < m.rows(); ++j) {
    for (std::size_t k = 0; k < m.cols(); ++k) {
      if (m(j, k) > tol) edges.push_back({j, k});
    }
  }
  return edges;
}

inline std::string format_edges(std::span<const Edge> edges) {
  std::string s;
  for (const Edge& e : edges) {
    if (!s.empty()) s += " ";
    s += "(" + std::to_string(e.demand + 1) + "," + std::to_string(e.supply + 1) + ")";
  }
  return s;
}

}  // namespace detail

// Edges of one cycle in the support {m_jk > tol}, or nullopt for a forest.
inline std::optional<std::vector<Edge>> find_support_cycle(const RealMatrix& m,
                                                           double tol = kFeasibilityTol) {
  const std::size_t J = m.rows(), K = m.cols();
  const std::vector<Edge> edges = detail::support_of(m, tol);
  detail::DisjointSets sets(J + K);
  std::vector<Edge> forest;
  for (const Edge& e : edges) {
    if (sets.unite(e.demand, J + e.supply)) {
      forest.push_back(e);
      continue;
    }
    // Path from demand e.demand to supply e.supply inside the forest, plus e.
    detail::SupportGraph g(J, K, forest);
    const std::size_t src = e.demand, dst = J + e.supply;
    std::vector<long> via(J + K, -1);
    std::vector<std::size_t> prev(J + K, 0), stack{src};
    std::vector<bool> seen(J + K, false);
    seen[src] = true;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (auto [v, idx] : g.adj[u]) {
        if (seen[v]) continue;
        seen[v] = true;
        prev[v] = u;
        via[v] = static_cast<long>(idx);
        stack.push_back(v);
      }
    }
    std::vector<Edge> cycle{e};
    for (std::size_t v = dst; v != src; v = prev[v]) cycle.push_back(forest[via[v]]);
    return cycle;
  }
  return std::nullopt;
}

// Vertex test: the support is a forest and each of its trees has at most one
// node whose constraint is slack.
inline bool is_extreme_point(std::span<const double> lambda, std::span<const double> mu,
                             const RealMatrix& m, double tol = kFeasibilityTol) {
  if (!is_feasible(lambda, mu, m, tol)) return false;
  if (find_support_cycle(m, tol)) return false;
  const std::size_t J = m.rows(), K = m.cols();
  detail::DisjointSets sets(J + K);
  for (const Edge& e : detail::support_of(m, tol)) sets.unite(e.demand, J + e.supply);
  std::vector<int> slack_count(J + K, 0);
  for (std::size_t j = 0; j < J; ++j) {
    if (m.row_sum(j) < lambda[j] - tol) ++slack_count[sets.find(j)];
  }
  for (std::size_t k = 0; k < K; ++k) {
    if (m.col_sum(k) < mu[k] - tol) ++slack_count[sets.find(J + k)];
  }
  for (std::size_t v = 0; v < J + K; ++v) {
    // Isolated nodes are trivial trees: a single slack node there is fine.
    if (slack_count[v] > 1) return false;
  }
  return true;
}

inline ExtremePoint describe_extreme_point(std::span<const double> lambda,
                                           std::span<const double> mu, MatchingRates m,
                                           double tol = kFeasibilityTol) {
  ExtremePoint p;
  p.support = detail::support_of(m.m, tol);
  p.tight_demand.resize(lambda.size());
  p.tight_supply.resize(mu.size());
  for (std::size_t j = 0; j < lambda.size(); ++j) {
    p.tight_demand[j] = std::abs(m.demand_matched(j) - lambda[j]) <= tol;
  }
  for (std::size_t k = 0; k < mu.size(); ++k) {
    p.tight_supply[k] = std::abs(m.supply_matched(k) - mu[k]) <= tol;
  }
  p.m = std::move(m);
  return p;
}

namespace detail {

// All strictly positive edge assignments supported exactly on one tree whose
// nodes are all tight except possibly `root`. Leaves are peeled toward the root.
inline std::vector<std::vector<double>> tree_solutions(const SupportGraph& g,
                                                       std::span<const std::size_t> nodes,
                                                       std::size_t edge_count,
                                                       std::span<const double> caps,
                                                       double tol) {
  std::vector<std::vector<double>> out;
  std::vector<std::size_t> order, parent_edge(g.adj.size()), parent(g.adj.size());
  std::vector<char> seen(g.adj.size());
  for (std::size_t root : nodes) {
    order.clear();
    for (std::size_t v : nodes) seen[v] = 0;
    order.push_back(root);
    seen[root] = 1;
    for (std::size_t i = 0; i < order.size(); ++i) {
      for (auto [v, e] : g.adj[order[i]]) {
        if (seen[v]) continue;
        seen[v] = 1;
        parent[v] = order[i];
        parent_edge[v] = e;
        order.push_back(v);
      }
    }
    std::vector<double> value(edge_count, 0.0);
    std::vector<double> used(g.adj.size(), 0.0);
    bool ok = true;
    for (std::size_t i = order.size(); i-- > 1;) {
      const std::size_t v = order[i];
      const double x = caps[v] - used[v];
      if (!(x > tol)) { ok = false; break; }
      value[parent_edge[v]] = x;
      used[parent[v]] += x;
    }
    if (!ok || used[root] > caps[root] + tol) continue;
    bool duplicate = false;
    for (const auto& prev : out) {
      double d = 0.0;
      for (std::size_t e = 0; e < edge_count; ++e) d = std::max(d, std::abs(prev[e] - value[e]));
      if (d <= tol) { duplicate = true; break; }
    }
    if (!duplicate) out.push_back(std::move(value));
  }
  return out;
}

}  // namespace detail

// Every vertex of {m >= 0, row sums <= lambda, column sums <= mu}. For each
// acyclic edge subset F and each choice of at most one slack node per tree
// of F, the tight constraints determine m on F; positive solutions are kept.
// Exponential in J*K; limited to kMaxEnumerationEdges edges.
inline std::vector<ExtremePoint> enumerate_extreme_points(std::span<const double> lambda,
                                                          std::span<const double> mu,
                                                          double tol = kFeasibilityTol) {
  const std::size_t J = lambda.size(), K = mu.size(), E = J * K;
  if (E > kMaxEnumerationEdges) {
    throw SizeError("vertex enumeration limited to J*K <= " +
                    std::to_string(kMaxEnumerationEdges) + " (got " + std::to_string(E) + ")");
  }
  std::vector<double> caps(lambda.begin(), lambda.end());
  caps.insert(caps.end(), mu.begin(), mu.end());

  std::vector<ExtremePoint> points;
  std::vector<Edge> edges;
  for (std::uint32_t mask = 0; mask < (std::uint32_t{1} << E); ++mask) {
    edges.clear();
    detail::DisjointSets sets(J + K);
    bool acyclic = true;
    for (std::size_t e = 0; e < E && acyclic; ++e) {
      if (!(mask >> e & 1u)) continue;
      const Edge edge{e / K, e % K};
      acyclic = sets.unite(edge.demand, J + edge.supply);
      edges.push_back(edge);
    }
    if (!acyclic) continue;

    // Group the forest into trees.
    detail::SupportGraph g(J, K, edges);
    std::vector<std::vector<std::size_t>> tree_nodes;
    std::vector<long> tree_of(J + K, -1);
    for (std::size_t v = 0; v < J + K; ++v) {
      if (g.adj[v].empty()) continue;
      const std::size_t r = sets.find(v);
      if (tree_of[r] < 0) {
        tree_of[r] = static_cast<long>(tree_nodes.size());
        tree_nodes.emplace_back();
      }
      tree_nodes[tree_of[r]].push_back(v);
    }

    std::vector<std::vector<std::vector<double>>> per_tree;
    bool empty = false;
    for (const auto& nodes : tree_nodes) {
      per_tree.push_back(detail::tree_solutions(g, nodes, edges.size(), caps, tol));
      if (per_tree.back().empty()) { empty = true; break; }
    }
    if (empty) continue;

    // Cartesian product over trees; each tree only writes its own edges.
    std::vector<std::size_t> pick(per_tree.size(), 0);
    while (true) {
      MatchingRates m(J, K);
      for (std::size_t t = 0; t < per_tree.size(); ++t) {
        const auto& vals = per_tree[t][pick[t]];
        for (std::size_t e = 0; e < edges.size(); ++e) {
          if (vals[e] > 0.0) m(edges[e].demand, edges[e].supply) = vals[e];
        }
      }
      points.push_back(describe_extreme_point(lambda, mu, std::move(m), tol));
      std::size_t t = 0;
      while (t < pick.size() && ++pick[t] == per_tree[t].size()) pick[t++] = 0;
      if (t == pick.size()) break;
    }
  }
  return points;
}

inline std::vector<ExtremePoint> enumerate_extreme_points(const Network& net) {
  return enumerate_extreme_points(net.lambda, net.mu);
}

}  // namespace dynmatch
