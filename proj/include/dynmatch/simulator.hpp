#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <deque>
#include <exception>
#include <mutex>
#include <optional>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "dynmatch/errors.hpp"
#include "dynmatch/network.hpp"
#include "dynmatch/policies.hpp"
#include "dynmatch/priority.hpp"

namespace dynmatch {

struct MatchingRateBased {
  MatchingRates m;
};
struct PriorityOrdering {
  PrioritySets sets;
};
struct LpBased {};

using Policy = std::variant<MatchingRateBased, PriorityOrdering, LpBased>;

inline std::string policy_name(const Policy& p) {
  switch (p.index()) {
    case 0: return "matching-rate";
    case 1: return "priority";
    default: return "lp";
  }
}

enum class ArrivalKind { Poisson, Erlang, Deterministic };

struct SimConfig {
  Network net;
  std::int64_t n = 1;
  double review_base = 1.0;
  double review_exponent = 2.0 / 3.0;
  double horizon = 1.0;
  Policy policy = LpBased{};
  ArrivalKind arrival_kind = ArrivalKind::Poisson;
  int erlang_k = 2;
  std::uint64_t seed = 1;
  // When set, the run reports sup_{t<=T} max_jk |M_jk(t)/n - m_jk t|.
  std::optional<MatchingRates> reference_rates;
  // Record (t, Q, I) after every `trajectory_stride`-th review; 0 disables.
  std::size_t trajectory_stride = 0;

  double review_length() const {
    return review_base * std::pow(static_cast<double>(n), -review_exponent);
  }

  void validate() const {
    net.validate();
    if (n < 1) throw ConfigError("n must be >= 1");
    if (!(review_base > 0.0)) throw ConfigError("review length l must be > 0");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon T must be > 0");
    if (!(review_length() < horizon)) throw ConfigError("review length l^n must be < T");
    if (arrival_kind == ArrivalKind::Erlang && erlang_k < 1) throw ConfigError("Erlang k must be >= 1");
    if (const auto* p = std::get_if<MatchingRateBased>(&policy)) {
      if (!is_feasible(net.lambda, net.mu, p->m.m)) {
        throw ConfigError("matching-rate policy needs feasible rates m");
      }
    }
    if (const auto* p = std::get_if<PriorityOrdering>(&policy)) {
      if (p->sets.J != net.J() || p->sets.K != net.K()) {
        throw ConfigError("priority sets do not match the network size");
      }
      try {
        validate_priority_sets(p->sets);
      } catch (const StructureError& e) {
        throw ConfigError(e.what());
      }
    }
    if (reference_rates && (reference_rates->J() != net.J() || reference_rates->K() != net.K())) {
      throw ConfigError("reference rates must be J x K");
    }
  }
};

struct TrajectoryRow {
  double t;
  std::vector<std::int64_t> demand;
  std::vector<std::int64_t> supply;
};

struct SimResult {
  CountMatrix matches;
  std::vector<std::int64_t> arrivals_demand, arrivals_supply;
  std::vector<std::int64_t> reneged_demand, reneged_supply;
  std::vector<std::int64_t> final_demand, final_supply;
  std::vector<double> queue_integral_demand, queue_integral_supply;
  double match_value = 0.0;
  double holding_cost = 0.0;
  double objective = 0.0;  // V_M(T) = match_value - holding_cost
  double horizon = 0.0;
  std::int64_t n = 1;
  std::int64_t reviews = 0;
  // Counts of policy outputs that had to be clipped, negative counts, or
  // failed flow-balance identities. Zero for an admissible run.
  std::int64_t admissibility_violations = 0;
  bool flow_balanced = true;
  double rate_gap = 0.0;
  std::vector<TrajectoryRow> trajectory;

  static double fraction(const std::vector<std::int64_t>& num, const std::vector<std::int64_t>& den) {
    std::int64_t a = 0, b = 0;
    for (auto x : num) a += x;
    for (auto x : den) b += x;
    return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
  }
  double demand_reneging_fraction() const { return fraction(reneged_demand, arrivals_demand); }
  double supply_reneging_fraction() const { return fraction(reneged_supply, arrivals_supply); }
  // Time-average queue length divided by n.
  double scaled_mean_demand_queue(std::size_t j) const {
    return queue_integral_demand[j] / (horizon * static_cast<double>(n));
  }
  double scaled_mean_supply_queue(std::size_t k) const {
    return queue_integral_supply[k] / (horizon * static_cast<double>(n));
  }
  // V_M(T) / (n T).
  double scaled_objective() const { return objective / (horizon * static_cast<double>(n)); }
};

namespace detail {

class NodeQueue {
 public:
  struct Entry {
    double arrival;
    double deadline;
    bool alive;
  };

  std::uint64_t push(double arrival, double deadline) {
    entries_.push_back({arrival, deadline, true});
    ++size_;
    return base_ + entries_.size() - 1;
  }

  // True if the entry was still resident (and is now removed as reneged).
  bool renege(std::uint64_t id) {
    if (id < base_) return false;
    Entry& e = entries_[id - base_];
    if (!e.alive) return false;
    e.alive = false;
    --size_;
    compact();
    return true;
  }

  // Removes the `count` oldest residents; returns how many were removed.
  std::int64_t pop_oldest(std::int64_t count) {
    std::int64_t removed = 0;
    for (std::size_t i = 0; i < entries_.size() && removed < count; ++i) {
      if (!entries_[i].alive) continue;
      entries_[i].alive = false;
      ++removed;
    }
    size_ -= removed;
    compact();
    return removed;
  }

  std::int64_t size() const { return size_; }

  // Oldest resident arrival time; FCFS check helper.
  std::optional<double> head_arrival() const {
    for (const Entry& e : entries_) if (e.alive) return e.arrival;
    return std::nullopt;
  }

 private:
  void compact() {
    while (!entries_.empty() && !entries_.front().alive) {
      entries_.pop_front();
      ++base_;
    }
  }

  std::deque<Entry> entries_;
  std::uint64_t base_ = 0;
  std::int64_t size_ = 0;
};

enum class EventType : int { Deadline = 0, Arrival = 1, Review = 2 };

struct Event {
  double time;
  EventType type;
  std::size_t node;    // demand j -> j, supply k -> J + k
  std::uint64_t id;    // entry id (deadline) or review index
  std::uint64_t seq;   // insertion order

  // Min-heap order: time, then deadlines < arrivals < reviews, then node,
  // then insertion order.
  friend bool operator>(const Event& a, const Event& b) {
    if (a.time != b.time) return a.time > b.time;
    if (a.type != b.type) return static_cast<int>(a.type) > static_cast<int>(b.type);
    if (a.node != b.node) return a.node > b.node;
    return a.seq > b.seq;
  }
};

inline std::mt19937_64 node_stream(std::uint64_t seed, std::size_t node, std::uint32_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(node), purpose};
  return std::mt19937_64(seq);
}

class Simulation {
 public:
  explicit Simulation(const SimConfig& cfg)
      : cfg_(cfg), J_(cfg.net.J()), K_(cfg.net.K()), queues_(J_ + K_),
        last_change_(J_ + K_, 0.0), integral_(J_ + K_, 0.0) {}

  SimResult run() {
    const Network& net = cfg_.net;
    const double T = cfg_.horizon;
    const double ln = cfg_.review_length();
    const double n = static_cast<double>(cfg_.n);

    SimResult r;
    r.matches = CountMatrix(J_, K_, 0);
    r.arrivals_demand.assign(J_, 0);
    r.arrivals_supply.assign(K_, 0);
    r.reneged_demand.assign(J_, 0);
    r.reneged_supply.assign(K_, 0);
    r.horizon = T;
    r.n = cfg_.n;

    for (std::size_t v = 0; v < J_ + K_; ++v) {
      arrival_rng_.push_back(node_stream(cfg_.seed, v, 1));
      patience_rng_.push_back(node_stream(cfg_.seed, v, 2));
      rate_.push_back(n * (v < J_ ? net.lambda[v] : net.mu[v - J_]));
      patience_.push_back(v < J_ ? &net.demand_patience[v] : &net.supply_patience[v - J_]);
      schedule_arrival(v, 0.0);
    }
    const auto review_count = static_cast<std::uint64_t>(std::floor(T / ln + 1e-9));
    if (review_count >= 1) push({std::min(ln, T), EventType::Review, 0, 1, 0});

    std::vector<std::int64_t> Q(J_), I(K_);
    while (!events_.empty() && events_.top().time <= T) {
      const Event ev = events_.top();
      events_.pop();
      switch (ev.type) {
        case EventType::Arrival: {
          touch(ev.node, ev.time);
          const double patience = patience_[ev.node]->sample(patience_rng_[ev.node]);
          const std::uint64_t id = queues_[ev.node].push(ev.time, ev.time + patience);
          push({ev.time + patience, EventType::Deadline, ev.node, id, 0});
          if (ev.node < J_) ++r.arrivals_demand[ev.node]; else ++r.arrivals_supply[ev.node - J_];
          schedule_arrival(ev.node, ev.time);
          break;
        }
        case EventType::Deadline: {
          touch(ev.node, ev.time);
          if (queues_[ev.node].renege(ev.id)) {
            if (ev.node < J_) ++r.reneged_demand[ev.node]; else ++r.reneged_supply[ev.node - J_];
          }
          break;
        }
        case EventType::Review: {
          for (std::size_t j = 0; j < J_; ++j) Q[j] = queues_[j].size();
          for (std::size_t k = 0; k < K_; ++k) I[k] = queues_[J_ + k].size();
          const CountMatrix c = decide(Q, I, ln);
          if (cfg_.reference_rates) update_gap(r, ev.time);
          execute(r, c, ev.time, Q, I);
          if (cfg_.reference_rates) update_gap(r, ev.time);
          ++r.reviews;
          if (cfg_.trajectory_stride > 0 && ev.id % cfg_.trajectory_stride == 0) {
            TrajectoryRow row{ev.time, {}, {}};
            for (std::size_t j = 0; j < J_; ++j) row.demand.push_back(queues_[j].size());
            for (std::size_t k = 0; k < K_; ++k) row.supply.push_back(queues_[J_ + k].size());
            r.trajectory.push_back(std::move(row));
          }
          if (ev.id < review_count) {
            push({std::min(static_cast<double>(ev.id + 1) * ln, T), EventType::Review, 0, ev.id + 1, 0});
          }
          break;
        }
      }
    }
    if (cfg_.reference_rates) update_gap(r, T);

    for (std::size_t v = 0; v < J_ + K_; ++v) touch(v, T);
    r.queue_integral_demand.assign(integral_.begin(), integral_.begin() + J_);
    r.queue_integral_supply.assign(integral_.begin() + J_, integral_.end());
    for (std::size_t j = 0; j < J_; ++j) r.final_demand.push_back(queues_[j].size());
    for (std::size_t k = 0; k < K_; ++k) r.final_supply.push_back(queues_[J_ + k].size());

    for (std::size_t j = 0; j < J_; ++j) {
      for (std::size_t k = 0; k < K_; ++k) {
        r.match_value += net.values(j, k) * static_cast<double>(r.matches(j, k));
      }
      r.holding_cost += net.demand_cost[j] * r.queue_integral_demand[j];
    }
    for (std::size_t k = 0; k < K_; ++k) r.holding_cost += net.supply_cost[k] * r.queue_integral_supply[k];
    r.objective = r.match_value - r.holding_cost;

    // Arrivals = residents + reneged + matched, per node.
    for (std::size_t j = 0; j < J_; ++j) {
      if (r.arrivals_demand[j] != r.final_demand[j] + r.reneged_demand[j] + r.matches.row_sum(j)) {
        r.flow_balanced = false;
        ++r.admissibility_violations;
      }
    }
    for (std::size_t k = 0; k < K_; ++k) {
      if (r.arrivals_supply[k] != r.final_supply[k] + r.reneged_supply[k] + r.matches.col_sum(k)) {
        r.flow_balanced = false;
        ++r.admissibility_violations;
      }
    }
    return r;
  }

 private:
  void push(Event e) {
    e.seq = seq_++;
    events_.push(e);
  }

  void schedule_arrival(std::size_t v, double now) {
    double gap;
    switch (cfg_.arrival_kind) {
      case ArrivalKind::Poisson:
        gap = std::exponential_distribution<double>(rate_[v])(arrival_rng_[v]);
        break;
      case ArrivalKind::Erlang:
        gap = std::gamma_distribution<double>(cfg_.erlang_k, 1.0 / (cfg_.erlang_k * rate_[v]))(
            arrival_rng_[v]);
        break;
      default:
        gap = 1.0 / rate_[v];
        break;
    }
    push({now + gap, EventType::Arrival, v, 0, 0});
  }

  void touch(std::size_t v, double t) {
    integral_[v] += static_cast<double>(queues_[v].size()) * (t - last_change_[v]);
    last_change_[v] = t;
  }

  CountMatrix decide(const std::vector<std::int64_t>& Q, const std::vector<std::int64_t>& I,
                     double ln) const {
    return std::visit(
        [&](const auto& p) -> CountMatrix {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, MatchingRateBased>) {
            return policy_matching_rate_based(Q, I, p.m, static_cast<double>(cfg_.n), ln,
                                              cfg_.net.lambda, cfg_.net.mu);
          } else if constexpr (std::is_same_v<P, PriorityOrdering>) {
            return policy_priority_ordering(Q, I, p.sets);
          } else {
            return policy_lp_based(Q, I, cfg_.net.values);
          }
        },
        cfg_.policy);
  }

  // Applies the counts oldest-first, clipping (and flagging) any request
  // beyond what is resident.
  void execute(SimResult& r, const CountMatrix& c, double t, std::vector<std::int64_t> q,
               std::vector<std::int64_t> s) {
    for (std::size_t v = 0; v < J_ + K_; ++v) touch(v, t);
    for (std::size_t j = 0; j < J_; ++j) {
      for (std::size_t k = 0; k < K_; ++k) {
        std::int64_t want = c(j, k);
        if (want < 0) {
          ++r.admissibility_violations;
          want = 0;
        }
        const std::int64_t take = std::min({want, q[j], s[k]});
        if (take < want) ++r.admissibility_violations;
        if (take == 0) continue;
        const std::int64_t a = queues_[j].pop_oldest(take);
        const std::int64_t b = queues_[J_ + k].pop_oldest(take);
        if (a != take || b != take) ++r.admissibility_violations;
        q[j] -= take;
        s[k] -= take;
        r.matches(j, k) += take;
      }
    }
  }

  void update_gap(SimResult& r, double t) const {
    const double n = static_cast<double>(cfg_.n);
    for (std::size_t j = 0; j < J_; ++j) {
      for (std::size_t k = 0; k < K_; ++k) {
        const double d = std::abs(static_cast<double>(r.matches(j, k)) / n -
                                  (*cfg_.reference_rates)(j, k) * t);
        r.rate_gap = std::max(r.rate_gap, d);
      }
    }
  }

  const SimConfig& cfg_;
  std::size_t J_, K_;
  std::vector<NodeQueue> queues_;
  std::vector<double> last_change_, integral_;
  std::vector<std::mt19937_64> arrival_rng_, patience_rng_;
  std::vector<double> rate_;
  std::vector<const PatienceDistribution*> patience_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::uint64_t seq_ = 0;
};

}  // namespace detail

// One sample path from the empty state. Per-node random streams depend only
// on (seed, node), so different policies see the same arrivals and patience
// draws for a given seed.
inline SimResult run(const SimConfig& cfg) {
  cfg.validate();
  return detail::Simulation(cfg).run();
}

// Runs f(i) for i in [0, count) on up to `jobs` threads (0 = hardware).
template <typename F>
void parallel_for(std::size_t count, std::size_t jobs, F&& f) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, count);
  if (jobs <= 1) {
    for (std::size_t i = 0; i < count; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (std::size_t w = 0; w < jobs; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < count;) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

struct Stat {
  double mean = 0.0;
  double stderr_ = 0.0;
};

inline Stat summarize(const std::vector<double>& xs) {
  Stat s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stderr_ = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  }
  return s;
}

// Named scalars of a run, in CSV column order.
inline std::vector<std::pair<std::string, double>> scalar_fields(const SimResult& r) {
  std::vector<std::pair<std::string, double>> f{
      {"objective", r.objective},
      {"scaled_objective", r.scaled_objective()},
      {"match_value", r.match_value},
      {"holding_cost", r.holding_cost},
      {"demand_reneging_fraction", r.demand_reneging_fraction()},
      {"supply_reneging_fraction", r.supply_reneging_fraction()},
      {"rate_gap", r.rate_gap},
      {"reviews", static_cast<double>(r.reviews)},
      {"admissibility_violations", static_cast<double>(r.admissibility_violations)},
  };
  for (std::size_t j = 0; j < r.arrivals_demand.size(); ++j) {
    f.emplace_back("Q" + std::to_string(j + 1) + "_mean", r.scaled_mean_demand_queue(j));
  }
  for (std::size_t k = 0; k < r.arrivals_supply.size(); ++k) {
    f.emplace_back("I" + std::to_string(k + 1) + "_mean", r.scaled_mean_supply_queue(k));
  }
  return f;
}

struct ReplicationSummary {
  std::vector<SimResult> runs;
  std::vector<std::string> names;
  std::vector<Stat> stats;

  Stat stat(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) if (names[i] == name) return stats[i];
    throw std::out_of_range("no statistic named " + name);
  }
};

// R runs with seeds seed, seed+1, ..., seed+R-1; results are ordered by
// replication, so the summary does not depend on `jobs`.
inline ReplicationSummary replicate(const SimConfig& cfg, std::size_t R, std::size_t jobs = 0) {
  if (R < 1) throw ConfigError("replication count must be >= 1");
  cfg.validate();
  ReplicationSummary out;
  out.runs.resize(R);
  parallel_for(R, jobs, [&](std::size_t i) {
    SimConfig c = cfg;
    c.seed = cfg.seed + i;
    out.runs[i] = detail::Simulation(c).run();
  });
  for (const auto& [name, v] : scalar_fields(out.runs.front())) {
    (void)v;
    out.names.push_back(name);
  }
  for (std::size_t f = 0; f < out.names.size(); ++f) {
    std::vector<double> xs;
    for (const SimResult& r : out.runs) xs.push_back(scalar_fields(r)[f].second);
    out.stats.push_back(summarize(xs));
  }
  return out;
}

}  // namespace dynmatch
