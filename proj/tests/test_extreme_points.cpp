#include <random>
#include <set>

#include <gtest/gtest.h>

#include "dynmatch/extreme_points.hpp"
#include "dynmatch/transport.hpp"
#include "support/oracles.hpp"

using namespace dynmatch;
using oracle::Rational;

namespace {

std::set<std::vector<double>> as_set(const std::vector<ExtremePoint>& pts) {
  std::set<std::vector<double>> s;
  for (const auto& p : pts) s.insert({p.m.m.flat().begin(), p.m.m.flat().end()});
  return s;
}

std::set<std::vector<double>> as_set(const std::set<std::vector<Rational>>& pts) {
  std::set<std::vector<double>> s;
  for (const auto& p : pts) {
    std::vector<double> v;
    for (const auto& r : p) v.push_back(boost::rational_cast<double>(r));
    s.insert(v);
  }
  return s;
}

}  // namespace

TEST(ExtremePoints, SingleEdge) {
  const auto pts = enumerate_extreme_points(std::vector{2.0}, std::vector{3.0});
  const auto s = as_set(pts);
  EXPECT_EQ(s, (std::set<std::vector<double>>{{0.0}, {2.0}}));
}

TEST(ExtremePoints, OrderedLikeOracleOn2x2And2x3) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> num(1, 6);
  for (int t = 0; t < 20; ++t) {
    for (std::size_t K : {2u, 3u}) {
      std::vector<Rational> lr, mr;
      std::vector<double> ld, md;
      for (int j = 0; j < 2; ++j) {
        lr.emplace_back(num(rng), 2);
        ld.push_back(boost::rational_cast<double>(lr.back()));
      }
      for (std::size_t k = 0; k < K; ++k) {
        mr.emplace_back(num(rng), 2);
        md.push_back(boost::rational_cast<double>(mr.back()));
      }
      const auto mine = as_set(enumerate_extreme_points(ld, md));
      const auto ref = as_set(oracle::rational_vertices(lr, mr));
      EXPECT_EQ(mine, ref);
    }
  }
}

TEST(ExtremePoints, ForestSupportWithOneSlackPerTree) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.2, 3.0);
  std::uniform_int_distribution<int> dim(1, 3);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> lambda(dim(rng)), mu(dim(rng));
    for (double& x : lambda) x = u(rng);
    for (double& x : mu) x = u(rng);
    const auto pts = enumerate_extreme_points(lambda, mu);
    EXPECT_EQ(as_set(pts).size(), pts.size()) << "duplicate vertices";
    for (const auto& p : pts) {
      EXPECT_FALSE(find_support_cycle(p.m.m).has_value());
      EXPECT_TRUE(is_extreme_point(lambda, mu, p.m.m));
    }
  }
}

TEST(ExtremePoints, InteriorPointIsNotExtreme) {
  RealMatrix m(2, 2, 0.25);
  EXPECT_TRUE(find_support_cycle(m).has_value());
  EXPECT_FALSE(is_extreme_point(std::vector{1.0, 1.0}, std::vector{1.0, 1.0}, m));
  RealMatrix half(1, 1, 0.5);
  EXPECT_TRUE(is_extreme_point(std::vector{1.0}, std::vector{2.0}, RealMatrix(1, 1, 1.0)));
  EXPECT_FALSE(is_extreme_point(std::vector{1.0}, std::vector{2.0}, half));
}

TEST(ExtremePoints, CycleIsReported) {
  RealMatrix m(2, 2, 0.25);
  const auto cycle = find_support_cycle(m);
  ASSERT_TRUE(cycle.has_value());
  EXPECT_EQ(cycle->size(), 4u);
}

TEST(ExtremePoints, SizeLimit) {
  EXPECT_THROW(enumerate_extreme_points(std::vector<double>(5, 1.0), std::vector<double>(5, 1.0)),
               SizeError);
}

TEST(ExtremePoints, TransportOptimumIsBestVertex) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int t = 0; t < 30; ++t) {
    std::vector<double> lambda{u(rng) + 0.1, u(rng) + 0.1}, mu{u(rng) + 0.1, u(rng) + 0.1, u(rng) + 0.1};
    RealMatrix w(2, 3);
    for (double& x : w.flat()) x = u(rng);
    double best = 0.0;
    for (const auto& p : enumerate_extreme_points(lambda, mu)) {
      double v = 0.0;
      for (std::size_t i = 0; i < 6; ++i) v += w.flat()[i] * p.m.m.flat()[i];
      best = std::max(best, v);
    }
    EXPECT_NEAR(solve_transport(w, lambda, mu).value, best, 1e-9);
  }
}
