#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "dynmatch/fluid.hpp"
#include "support/oracles.hpp"

using namespace dynmatch;

namespace {

Network two_by_two(const PatienceDistribution& g) {
  RealMatrix v(2, 2);
  v(0, 0) = 1.0; v(0, 1) = 2.0; v(1, 0) = 0.5; v(1, 1) = 1.5;
  return make_network({2.0, 1.0}, {1.5, 1.0}, v, g, {1.0, 2.0}, {0.5, 1.0});
}

}  // namespace

TEST(Fluid, EmptyMatchingGivesFullQueue) {
  const auto g = PatienceDistribution::gamma(3.0, 1.0 / 9.0);
  EXPECT_DOUBLE_EQ(invariant_queue(2.0, g, 0.0), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(invariant_queue(2.0, g, 2.0), 0.0);
}

TEST(Fluid, ExponentialAndUniformClosedForms) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double lambda = 0.2 + 3.0 * u(rng), theta = 0.2 + 3.0 * u(rng), s = lambda * u(rng);
    EXPECT_NEAR(invariant_queue(lambda, PatienceDistribution::exponential(theta), s),
                (lambda - s) / theta, 1e-12);
    EXPECT_NEAR(invariant_queue(lambda, PatienceDistribution::uniform(theta), s),
                lambda / theta * (1.0 - (s / lambda) * (s / lambda)), 1e-12);
  }
}

// lambda = 2, gamma(shape 3, mean 1/3), matched 1.2; 30-digit reference.
TEST(Fluid, GammaInvariantFrozenValue) {
  EXPECT_NEAR(invariant_queue(2.0, PatienceDistribution::gamma(3.0, 1.0 / 9.0), 1.2),
              0.43642752318504395898, 1e-12);
}

TEST(Fluid, InfeasibleRatesRejected) {
  const Network net = two_by_two(PatienceDistribution::exponential(1.0));
  MatchingRates m(2, 2);
  m(0, 0) = 1.6;  // column 0 cap is 1.5
  EXPECT_THROW(invariant_state(net, m), FeasibilityError);
  EXPECT_THROW(mp_objective(net, m), FeasibilityError);
}

TEST(Fluid, GradientMatchesFiniteDifferences) {
  for (const auto& g : {PatienceDistribution::exponential(1.5), PatienceDistribution::uniform(1.0),
                        PatienceDistribution::gamma(3.0, 0.2), PatienceDistribution::gamma(0.7, 1.0)}) {
    const Network net = two_by_two(g);
    MatchingRates m(2, 2);
    m(0, 0) = 0.6; m(0, 1) = 0.4; m(1, 0) = 0.3; m(1, 1) = 0.2;
    const RealMatrix grad = mp_gradient(net, m);
    auto f = [&](const std::vector<double>& x) {
      MatchingRates y(2, 2);
      for (std::size_t i = 0; i < 4; ++i) y.m.flat()[i] = x[i];
      return mp_objective(net, y);
    };
    const std::vector<double> x0(m.m.flat().begin(), m.m.flat().end());
    for (std::size_t i = 0; i < 4; ++i) {
      EXPECT_NEAR(grad.flat()[i], oracle::partial(f, x0, i), 1e-6) << g.describe() << " i=" << i;
    }
  }
}

TEST(Fluid, GradientUndefinedOnBoundary) {
  const Network net = two_by_two(PatienceDistribution::uniform(1.0));
  MatchingRates m(2, 2);
  m(0, 0) = 0.5;
  EXPECT_THROW(mp_gradient(net, m), GradientUndefinedError);  // row 2 is empty
  m(1, 1) = 1.0;
  EXPECT_THROW(mp_gradient(net, m), GradientUndefinedError);  // row 2 saturated
  EXPECT_NO_THROW(mp_gradient_extended(net, m));
}

TEST(Fluid, TrajectoryConvergesToInvariant) {
  for (const auto& g : {PatienceDistribution::exponential(1.0), PatienceDistribution::uniform(2.0),
                        PatienceDistribution::gamma(3.0, 1.0 / 9.0), PatienceDistribution::gamma(0.7, 1.0 / 0.7)}) {
    const Network net = two_by_two(g);
    MatchingRates m(2, 2);
    m(0, 0) = 0.7; m(0, 1) = 0.5; m(1, 0) = 0.4; m(1, 1) = 0.1;
    const FluidTrajectory tr = fluid_trajectory(net, m, 60.0, 0.0, 100);
    const InvariantState inv = invariant_state(net, m);
    const InvariantState end = tr.terminal();
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(end.q_star[j], inv.q_star[j], 1e-4) << g.describe();
    for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(end.i_star[k], inv.i_star[k], 1e-4) << g.describe();
    EXPECT_DOUBLE_EQ(tr.times.back(), 60.0);
  }
}

TEST(Fluid, TrajectoryCsvHeader) {
  const Network net = two_by_two(PatienceDistribution::exponential(1.0));
  const FluidTrajectory tr = fluid_trajectory(net, MatchingRates(2, 2), 1.0, 0.1);
  std::ostringstream os;
  tr.write_csv(os);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "t,Q1,Q2,I1,I2");
  EXPECT_EQ(tr.times.size(), 11u);
}

TEST(Fluid, TrajectoryDomainErrors) {
  const Network net = two_by_two(PatienceDistribution::exponential(1.0));
  EXPECT_THROW(fluid_trajectory(net, MatchingRates(2, 2), 0.0, 0.1), DomainError);
  EXPECT_THROW(fluid_trajectory(net, MatchingRates(2, 2), 1.0, -0.1), DomainError);
}
