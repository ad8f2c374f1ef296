#include <gtest/gtest.h>

#include "dynmatch/mp_solver.hpp"
#include "dynmatch/simulator.hpp"

using namespace dynmatch;

namespace {

SimConfig single_edge(const PatienceDistribution& g, double mu, std::int64_t n, double T) {
  SimConfig c;
  c.net = make_network({1.0}, {mu}, RealMatrix(1, 1, 1.0), g);
  c.n = n;
  c.horizon = T;
  c.review_base = 0.01;
  c.review_exponent = 0.0;
  c.policy = LpBased{};
  c.seed = 2024;
  return c;
}

void expect_admissible(const SimResult& r) {
  EXPECT_EQ(r.admissibility_violations, 0);
  EXPECT_TRUE(r.flow_balanced);
  for (auto x : r.matches.flat()) EXPECT_GE(x, 0);
  for (auto x : r.final_demand) EXPECT_GE(x, 0);
  for (auto x : r.final_supply) EXPECT_GE(x, 0);
}

}  // namespace

TEST(Simulator, ZeroArrivalHorizon) {
  SimConfig c = single_edge(PatienceDistribution::exponential(1.0), 1.0, 1, 1e-9);
  c.review_base = 1e-10;
  c.arrival_kind = ArrivalKind::Deterministic;  // first arrival at t = 1
  const SimResult r = run(c);
  EXPECT_EQ(r.arrivals_demand[0] + r.arrivals_supply[0], 0);
  EXPECT_EQ(r.matches.total(), 0);
  EXPECT_DOUBLE_EQ(r.objective, 0.0);
}

TEST(Simulator, ConfigErrors) {
  SimConfig c = single_edge(PatienceDistribution::exponential(1.0), 1.0, 10, 1.0);
  c.n = 0;
  EXPECT_THROW(run(c), ConfigError);
  c.n = 10;
  c.review_base = 2.0;  // l^n >= T
  EXPECT_THROW(run(c), ConfigError);
  c.review_base = 0.1;
  MatchingRates m(1, 1);
  m(0, 0) = 5.0;
  c.policy = MatchingRateBased{m};
  EXPECT_THROW(run(c), ConfigError);
}

TEST(Simulator, FlowBalanceAndDeterminism) {
  for (auto kind : {ArrivalKind::Poisson, ArrivalKind::Erlang, ArrivalKind::Deterministic}) {
    SimConfig c = single_edge(PatienceDistribution::gamma(3.0, 1.0 / 3.0), 0.8, 50, 20.0);
    c.arrival_kind = kind;
    const SimResult a = run(c), b = run(c);
    expect_admissible(a);
    EXPECT_EQ(a.matches, b.matches);
    EXPECT_EQ(a.reneged_demand, b.reneged_demand);
    EXPECT_DOUBLE_EQ(a.objective, b.objective);
    EXPECT_GT(a.matches.total(), 0);
  }
}

TEST(Simulator, ReviewCountAndArrivalRate) {
  SimConfig c = single_edge(PatienceDistribution::exponential(1.0), 1.0, 100, 10.0);
  c.review_base = 0.1;
  const SimResult r = run(c);
  EXPECT_EQ(r.reviews, 100);
  EXPECT_NEAR(static_cast<double>(r.arrivals_demand[0]), 1000.0, 5.0 * std::sqrt(1000.0));
}

TEST(Simulator, LpSingleEdgeNearBound) {
  const SimConfig c = single_edge(PatienceDistribution::exponential(1.0), 1.0, 100, 100.0);
  const SimResult r = run(c);
  expect_admissible(r);
  const double bound = matching_value_bound(c.net.values, c.net.lambda, c.net.mu);
  EXPECT_GE(r.scaled_objective() / bound, 0.9);
  EXPECT_LE(r.scaled_objective() / bound, 1.05);
}

TEST(Simulator, ExcessDemandRenegesAtFluidRate) {
  const SimConfig c = single_edge(PatienceDistribution::gamma(0.7, 1.0 / 0.7), 0.5, 100, 100.0);
  const SimResult r = run(c);
  expect_admissible(r);
  EXPECT_NEAR(r.demand_reneging_fraction(), 0.4942, 0.03);
  // Supply never waits longer than one review period while demand is backlogged.
  EXPECT_LT(r.supply_reneging_fraction(), c.net.supply_patience[0].cdf(c.review_length()));
}

TEST(Simulator, QueueIntegralMatchesInvariantUnderLp) {
  // Only demand waits when mu < lambda; q* = (lambda - mu)/theta.
  const SimConfig c = single_edge(PatienceDistribution::exponential(1.0), 0.5, 200, 50.0);
  const SimResult r = run(c);
  EXPECT_NEAR(r.scaled_mean_demand_queue(0), 0.5, 0.05);
}

TEST(Simulator, ReplicateIsDeterministicAndMatchesRun) {
  const SimConfig c = single_edge(PatienceDistribution::uniform(1.0), 0.9, 50, 20.0);
  const ReplicationSummary one = replicate(c, 1);
  EXPECT_EQ(one.runs.front().matches, run(c).matches);
  const ReplicationSummary a = replicate(c, 6, 1), b = replicate(c, 6, 3);
  for (std::size_t i = 0; i < a.stats.size(); ++i) {
    EXPECT_DOUBLE_EQ(a.stats[i].mean, b.stats[i].mean);
    EXPECT_DOUBLE_EQ(a.stats[i].stderr_, b.stats[i].stderr_);
  }
  EXPECT_THROW(replicate(c, 0), ConfigError);
}

TEST(Simulator, CommonRandomNumbersAcrossPolicies) {
  SimConfig c;
  RealMatrix v(2, 2, 1.0);
  c.net = make_network({1.0, 1.0}, {1.0, 1.0}, v, PatienceDistribution::exponential(1.0));
  c.n = 20;
  c.horizon = 10.0;
  c.policy = LpBased{};
  const SimResult a = run(c);
  c.policy = PriorityOrdering{PrioritySets{2, 2, {{Edge{0, 0}, Edge{1, 1}}, {Edge{0, 1}, Edge{1, 0}}}}};
  const SimResult b = run(c);
  EXPECT_EQ(a.arrivals_demand, b.arrivals_demand);
  EXPECT_EQ(a.arrivals_supply, b.arrivals_supply);
}

TEST(Simulator, RateGapShrinksWithScale) {
  RealMatrix v(2, 3, 0.0);
  v(0, 0) = v(0, 1) = v(1, 1) = v(1, 2) = 1.0;
  SimConfig c;
  c.net = make_network({2.0, 1.5}, {1.0, 2.0, 0.5}, v, PatienceDistribution::exponential(1.0));
  const MpSolution sol = solve_mp(c.net);
  c.policy = MatchingRateBased{sol.m_star};
  c.reference_rates = sol.m_star;
  c.horizon = 10.0;
  double prev = 1e300;
  for (std::int64_t n : {10, 100, 1000}) {
    c.n = n;
    const SimResult r = run(c);
    expect_admissible(r);
    EXPECT_LT(r.rate_gap, prev);
    prev = r.rate_gap;
  }
}

TEST(Simulator, TrajectoryRows) {
  SimConfig c = single_edge(PatienceDistribution::exponential(1.0), 1.0, 10, 1.0);
  c.review_base = 0.1;
  c.trajectory_stride = 2;
  const SimResult r = run(c);
  EXPECT_EQ(r.trajectory.size(), 5u);
  EXPECT_NEAR(r.trajectory.front().t, 0.2, 1e-12);
}
