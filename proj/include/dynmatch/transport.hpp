#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "dynmatch/errors.hpp"
#include "dynmatch/matrix.hpp"

namespace dynmatch {

// max sum w_jk y_jk  s.t.  sum_k y_jk <= row_caps_j,  sum_j y_jk <= col_caps_k,  y >= 0.
struct TransportInstance {
  RealMatrix weights;
  std::vector<double> row_caps;
  std::vector<double> col_caps;
};

struct TransportSolution {
  RealMatrix allocation;
  double value = 0.0;
};

namespace detail {

// Residual network for the max-profit flow formulation:
//   source -> demand j   (cap row_caps_j, cost 0)
//   demand j -> supply k (cap inf, cost -w_jk), only for w_jk > 0
//   supply k -> sink     (cap col_caps_k, cost 0)
class ProfitFlowNetwork {
 public:
  explicit ProfitFlowNetwork(const TransportInstance& inst)
      : J_(inst.row_caps.size()), K_(inst.col_caps.size()), node_count_(J_ + K_ + 2) {
    const int s = source(), t = sink();
    for (std::size_t j = 0; j < J_; ++j) add_arc(s, demand(j), inst.row_caps[j], 0.0);
    edge_arc_.assign(J_ * K_, -1);
    for (std::size_t j = 0; j < J_; ++j) {
      for (std::size_t k = 0; k < K_; ++k) {
        const double w = inst.weights(j, k);
        if (w > 0.0) {
          edge_arc_[j * K_ + k] = static_cast<int>(arcs_.size());
          add_arc(demand(j), supply(k), std::numeric_limits<double>::infinity(), -w);
        }
      }
    }
    for (std::size_t k = 0; k < K_; ++k) add_arc(supply(k), t, inst.col_caps[k], 0.0);
  }

  // Successive shortest (most profitable) augmenting paths until no path
  // with strictly positive profit remains.
  void run() {
    const std::size_t n = node_count_;
    std::vector<double> dist(n);
    std::vector<int> pred(n);
    while (true) {
      std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
      std::fill(pred.begin(), pred.end(), -1);
      dist[source()] = 0.0;
      for (std::size_t pass = 0; pass + 1 < n; ++pass) {
        bool changed = false;
        for (std::size_t a = 0; a < arcs_.size(); ++a) {
          const Arc& arc = arcs_[a];
          if (arc.residual <= kResidualEps || !std::isfinite(dist[arc.from])) continue;
          const double cand = dist[arc.from] + arc.cost;
          if (cand < dist[arc.to] - 1e-12) {
            dist[arc.to] = cand;
            pred[arc.to] = static_cast<int>(a);
            changed = true;
          }
        }
        if (!changed) break;
      }
      if (pred[sink()] < 0 || dist[sink()] >= -1e-12) return;
      double push = std::numeric_limits<double>::infinity();
      for (int v = sink(); v != source(); v = arcs_[pred[v]].from) {
        push = std::min(push, arcs_[pred[v]].residual);
      }
      if (!(push > kResidualEps) || !std::isfinite(push)) return;
      for (int v = sink(); v != source(); v = arcs_[pred[v]].from) {
        const int a = pred[v];
        arcs_[a].residual -= push;
        arcs_[a ^ 1].residual += push;
      }
    }
  }

  TransportSolution solution(const TransportInstance& inst) const {
    TransportSolution out{RealMatrix(J_, K_, 0.0), 0.0};
    for (std::size_t j = 0; j < J_; ++j) {
      for (std::size_t k = 0; k < K_; ++k) {
        const int a = edge_arc_[j * K_ + k];
        if (a < 0) continue;
        const double flow = arcs_[a ^ 1].residual;  // reverse residual = flow
        out.allocation(j, k) = flow;
        out.value += inst.weights(j, k) * flow;
      }
    }
    return out;
  }

 private:
  static constexpr double kResidualEps = 1e-12;

  struct Arc {
    int from;
    int to;
    double residual;
    double cost;
  };

  int source() const { return 0; }
  int demand(std::size_t j) const { return static_cast<int>(1 + j); }
  int supply(std::size_t k) const { return static_cast<int>(1 + J_ + k); }
  int sink() const { return static_cast<int>(1 + J_ + K_); }

  void add_arc(int from, int to, double cap, double cost) {
    arcs_.push_back({from, to, cap, cost});
    arcs_.push_back({to, from, 0.0, -cost});
  }

  std::size_t J_, K_;
  std::size_t node_count_;
  std::vector<Arc> arcs_;
  std::vector<int> edge_arc_;
};

}  // namespace detail

// Exact solver for the capped transportation problem. With integral caps
// every augmentation is integral, so the returned allocation is integral.
// Zero-weight edges carry no flow.
inline TransportSolution solve_transport(const TransportInstance& inst) {
  const std::size_t J = inst.row_caps.size(), K = inst.col_caps.size();
  if (inst.weights.rows() != J || inst.weights.cols() != K) {
    throw DomainError("transport weights must be (#row caps) x (#col caps)");
  }
  auto ok = [](double x) { return x >= 0.0 && std::isfinite(x); };
  for (double x : inst.weights.flat()) if (!ok(x)) throw DomainError("transport weights must be >= 0");
  for (double x : inst.row_caps) if (!ok(x)) throw DomainError("transport caps must be >= 0");
  for (double x : inst.col_caps) if (!ok(x)) throw DomainError("transport caps must be >= 0");
  detail::ProfitFlowNetwork net(inst);
  net.run();
  return net.solution(inst);
}

inline TransportSolution solve_transport(const RealMatrix& weights, std::span<const double> rows,
                                         std::span<const double> cols) {
  return solve_transport(TransportInstance{weights, {rows.begin(), rows.end()},
                                           {cols.begin(), cols.end()}});
}

}  // namespace dynmatch
