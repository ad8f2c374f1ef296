#include <random>

#include <gtest/gtest.h>

#include "dynmatch/mp_solver.hpp"
#include "support/oracles.hpp"

using namespace dynmatch;

namespace {

Network sec53(const PatienceDistribution& g) {
  RealMatrix v(4, 4);
  const double vals[4][4] = {{1, 2, 3, 1}, {1, 1, 1, 1}, {2, 1, 1, 2}, {3, 3, 2, 1}};
  for (std::size_t j = 0; j < 4; ++j) for (std::size_t k = 0; k < 4; ++k) v(j, k) = vals[j][k];
  return make_network({3, 2, 1, 3}, {2, 2, 2, 2}, v, g, {1, 2, 1, 2}, {2, 1, 2, 1});
}

Network random_net(std::mt19937_64& rng, const PatienceDistribution& g, std::size_t J, std::size_t K) {
  std::uniform_real_distribution<double> u(0.2, 3.0), c(0.0, 2.0);
  std::vector<double> lambda(J), mu(K), cd(J), cs(K);
  for (double& x : lambda) x = u(rng);
  for (double& x : mu) x = u(rng);
  for (double& x : cd) x = c(rng);
  for (double& x : cs) x = c(rng);
  RealMatrix v(J, K);
  for (double& x : v.flat()) x = c(rng);
  return make_network(lambda, mu, v, g, cd, cs);
}

// Single supply node, two demand nodes, equal values.
Network one_supply(const PatienceDistribution& g, double lambda2, double c1d, double c2d) {
  RealMatrix v(2, 1, 1.0);
  return make_network({1.0, lambda2}, {1.0}, v, g, {c1d, c2d}, {1.0});
}

// Grid argmax over m = (m11, m21) with step 1/100 of each demand rate.
MatchingRates grid_argmax(const Network& net) {
  MatchingRates best(2, 1);
  double best_value = -1e300;
  for (int a = 0; a <= 100; ++a) {
    for (int b = 0; b <= 100; ++b) {
      MatchingRates m(2, 1);
      m(0, 0) = net.lambda[0] * a / 100.0;
      m(1, 0) = net.lambda[1] * b / 100.0;
      if (m(0, 0) + m(1, 0) > net.mu[0] + 1e-12) continue;
      const double v = mp_objective(net, m);
      if (v > best_value + 1e-12) {
        best_value = v;
        best = m;
      }
    }
  }
  return best;
}

}  // namespace

TEST(MpSolver, DispatchFollowsHazardClasses) {
  EXPECT_EQ(solve_mp(sec53(PatienceDistribution::exponential(3.0))).solver_used, MpSolver::LP);
  EXPECT_EQ(solve_mp(sec53(PatienceDistribution::uniform(3.0))).solver_used, MpSolver::VertexEnumeration);
  EXPECT_EQ(solve_mp(sec53(PatienceDistribution::gamma(3.0, 1.0 / 9.0))).solver_used,
            MpSolver::VertexEnumeration);
  EXPECT_EQ(solve_mp(sec53(PatienceDistribution::gamma(0.7, 1.0))).solver_used, MpSolver::FrankWolfe);
  Network mixed = sec53(PatienceDistribution::uniform(3.0));
  mixed.supply_patience[0] = PatienceDistribution::gamma(0.7, 1.0);
  const MpSolution sol = solve_mp(mixed, {.multistart_points = 5});
  EXPECT_EQ(sol.solver_used, MpSolver::MultiStartGradient);
  EXPECT_FALSE(sol.global_guarantee);
}

TEST(MpSolver, ZeroCostsReduceToTransport) {
  Network net = sec53(PatienceDistribution::uniform(3.0));
  net.demand_cost.assign(4, 0.0);
  net.supply_cost.assign(4, 0.0);
  const MpSolution sol = solve_mp(net);
  EXPECT_EQ(sol.solver_used, MpSolver::LP);
  EXPECT_NEAR(sol.objective, matching_value_bound(net.values, net.lambda, net.mu), 1e-9);
}

TEST(MpSolver, ExponentialLpAgreesWithVertexEnumeration) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 30; ++t) {
    const Network net = random_net(rng, PatienceDistribution::exponential(1.7), 2, 3);
    const MpSolution lp = solve_mp_with(net, MpSolver::LP);
    const MpSolution ve = solve_mp_with(net, MpSolver::VertexEnumeration);
    EXPECT_NEAR(lp.objective, ve.objective, 1e-9);
    EXPECT_NEAR(lp.objective, mp_objective(net, lp.m_star), 1e-9);
  }
}

TEST(MpSolver, ConvexCaseBeatsRandomFeasiblePoints) {
  std::mt19937_64 rng(9);
  for (const auto& g : {PatienceDistribution::uniform(2.0), PatienceDistribution::gamma(3.0, 1.0 / 9.0)}) {
    for (int t = 0; t < 10; ++t) {
      const Network net = random_net(rng, g, 3, 3);
      const MpSolution sol = solve_mp(net);
      EXPECT_TRUE(sol.is_extreme_point);
      for (int s = 0; s < 100; ++s) {
        const MatchingRates m(oracle::random_feasible(net.lambda, net.mu, rng));
        EXPECT_GE(sol.objective, mp_objective(net, m) - 1e-9);
      }
    }
  }
}

TEST(MpSolver, ConcaveCaseFrankWolfe) {
  std::mt19937_64 rng(13);
  const auto g = PatienceDistribution::gamma(0.7, 1.0 / 0.7);
  for (int t = 0; t < 5; ++t) {
    const Network net = random_net(rng, g, 2, 3);
    const MpSolution sol = solve_mp(net, {.record_trace = true});
    EXPECT_EQ(sol.solver_used, MpSolver::FrankWolfe);
    EXPECT_LT(sol.gap, 1e-6);
    for (std::size_t i = 1; i < sol.objective_trace.size(); ++i) {
      EXPECT_GE(sol.objective_trace[i], sol.objective_trace[i - 1] - 1e-12);
    }
    for (const auto& p : enumerate_extreme_points(net)) {
      EXPECT_GE(sol.objective, mp_objective(net, p.m) - 1e-7);
    }
    for (int s = 0; s < 100; ++s) {
      const MatchingRates m(oracle::random_feasible(net.lambda, net.mu, rng));
      EXPECT_GE(sol.objective, mp_objective(net, m) - 1e-7);
    }
  }
}

TEST(MpSolver, MixedCaseAtLeastBestVertex) {
  std::mt19937_64 rng(17);
  Network net = random_net(rng, PatienceDistribution::uniform(1.0), 2, 2);
  net.demand_patience[1] = PatienceDistribution::gamma(0.7, 1.0);
  const MpSolution sol = solve_mp(net, {.multistart_points = 10});
  const MpSolution ve = solve_mp_with(net, MpSolver::VertexEnumeration);
  EXPECT_GE(sol.objective, ve.objective - 1e-12);
  EXPECT_TRUE(is_feasible(net.lambda, net.mu, sol.m_star.m));
}

TEST(MpSolver, SolutionIsFeasibleAndConsistent) {
  for (const auto& g : {PatienceDistribution::exponential(3.0), PatienceDistribution::uniform(3.0),
                        PatienceDistribution::gamma(3.0, 1.0 / 9.0), PatienceDistribution::gamma(0.7, 1.0)}) {
    const Network net = sec53(g);
    const MpSolution sol = solve_mp(net);
    EXPECT_TRUE(is_feasible(net.lambda, net.mu, sol.m_star.m)) << g.describe();
    EXPECT_NEAR(sol.objective, mp_objective(net, sol.m_star), 1e-9);
    EXPECT_DOUBLE_EQ(upper_bound(net), sol.objective);
  }
}

TEST(MpSolver, DeterministicTieBreak) {
  // Two identical supply nodes: both single-edge vertices tie.
  RealMatrix v(1, 2, 1.0);
  const Network net = make_network({1.0}, {1.0, 1.0}, v, PatienceDistribution::uniform(1.0), {0.5}, {0.5, 0.5});
  const MpSolution a = solve_mp(net), b = solve_mp(net);
  EXPECT_EQ(a.m_star, b.m_star);
  EXPECT_DOUBLE_EQ(a.m_star(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(a.m_star(0, 1), 1.0);
}

// With lambda1 = lambda2 = mu1 = 1 and c1D = 0 both patience laws favour
// demand type 2; the grid search certifies it.
TEST(MpSolver, OneSupplyListedInstance) {
  for (const auto& g : {PatienceDistribution::exponential(1.0), PatienceDistribution::uniform(1.0)}) {
    const Network net = one_supply(g, 1.0, 0.0, 4.0);
    const MpSolution sol = solve_mp(net);
    const MatchingRates grid = grid_argmax(net);
    EXPECT_TRUE(sol.is_extreme_point);
    EXPECT_NEAR(sol.objective, mp_objective(net, grid), 1e-9) << g.describe();
    EXPECT_NEAR(max_abs_difference(sol.m_star.m, grid.m), 0.0, 1e-9);
    EXPECT_DOUBLE_EQ(sol.m_star(1, 0), 1.0);
    EXPECT_DOUBLE_EQ(sol.m_star(0, 0), 0.0);
  }
}

// lambda2 = 2, c1D = 3, c2D = 4: exponential prefers (2,1), uniform (1,1).
TEST(MpSolver, OneSupplyPriorityFlipsWithPatience) {
  const Network e = one_supply(PatienceDistribution::exponential(1.0), 2.0, 3.0, 4.0);
  const Network u = one_supply(PatienceDistribution::uniform(1.0), 2.0, 3.0, 4.0);
  const MpSolution se = solve_mp(e), su = solve_mp(u);
  EXPECT_NEAR(max_abs_difference(se.m_star.m, grid_argmax(e).m), 0.0, 1e-9);
  EXPECT_NEAR(max_abs_difference(su.m_star.m, grid_argmax(u).m), 0.0, 1e-9);
  EXPECT_DOUBLE_EQ(se.m_star(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(su.m_star(0, 0), 1.0);
}
