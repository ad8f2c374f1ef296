#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "dynmatch/experiment.hpp"

using namespace dynmatch;

namespace {

const char* kMinimal = R"(
instance:
  lambda: [2, 1.5]
  mu: [1, 2, 0.5]
  values: [[1, 1, 0], [0, 1, 1]]
  patience: {kind: gamma, shape: 3, mean: 0.5}
experiment:
  kind: simulate
  n: 50
  policy: priority
  priority_sets: [[[1, 1], [2, 3]], [[1, 2]], [[2, 2]], [[1, 3], [2, 1]]]
)";

std::string read(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Config, ParsesInstanceAndExperiment) {
  const ExperimentConfig cfg = parse_config(kMinimal);
  EXPECT_EQ(cfg.net.J(), 2u);
  EXPECT_EQ(cfg.net.K(), 3u);
  EXPECT_EQ(cfg.kind, "simulate");
  EXPECT_EQ(cfg.n, 50);
  EXPECT_DOUBLE_EQ(cfg.net.demand_patience[0].scale(), 0.5 / 3.0);
  ASSERT_TRUE(cfg.priority_sets.has_value());
  EXPECT_EQ(cfg.priority_sets->sets.size(), 4u);
  EXPECT_EQ(cfg.priority_sets->sets[0][1], (Edge{1, 2}));
  EXPECT_DOUBLE_EQ(cfg.net.demand_cost[1], 0.0);
}

TEST(Config, RoundTripIsCanonical) {
  const ExperimentConfig cfg = parse_config(kMinimal);
  const std::string text = serialize_config(cfg);
  const ExperimentConfig again = parse_config(text);
  EXPECT_EQ(again, cfg);
  EXPECT_EQ(serialize_config(again), text);
}

TEST(Config, BundledConfigsRoundTrip) {
  const std::filesystem::path dir = std::filesystem::path(DYNMATCH_SOURCE_DIR) / "configs";
  int count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".cfg") continue;
    const ExperimentConfig cfg = parse_config(read(entry.path()));
    EXPECT_EQ(parse_config(serialize_config(cfg)), cfg) << entry.path();
    ++count;
  }
  EXPECT_GE(count, 3);
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_config("instance: {lambda: [1], mu: [1], values: [[1]], bogus: 1}"), ConfigError);
  EXPECT_THROW(parse_config("instance: {lambda: [1], mu: [1]}"), ConfigError);
  EXPECT_THROW(parse_config("instance: {lambda: [-1], mu: [1], values: [[1]]}"), ConfigError);
  EXPECT_THROW(parse_config("instance: {lambda: [1], mu: [1], values: [[1, 2]]}"), ConfigError);
  EXPECT_THROW(parse_config("instance: {lambda: [1], mu: [1], values: [[1]], patience: {kind: weibull}}"),
               ConfigError);
  EXPECT_THROW(parse_config("instance: {lambda: [1], mu: [1], values: [[1]]}\nexperiment: {kind: dance}"),
               ConfigError);
  EXPECT_THROW(parse_config("instance: {lambda: [1], mu: [1], values: [[1]]}\nexperiment: {policy: fifo}"),
               ConfigError);
  EXPECT_THROW(parse_config("instance: {lambda: [1], mu: [1], values: [[1]]}\nexperiment: {rates: [[2]]}"),
               ConfigError);
  EXPECT_THROW(parse_config("instance: {lambda: [1, 1], mu: [1], values: [[1], [1]]}\n"
                            "experiment: {priority_sets: [[[1, 1], [2, 1]], []]}"),
               ConfigError);
  EXPECT_THROW(parse_config("[1, 2"), ConfigError);
}

// Priority needs an optimal vertex; the concave route does not promise one.
TEST(Config, PriorityPrerequisite) {
  ExperimentConfig cfg = parse_config(R"(
instance:
  lambda: [1, 1]
  mu: [1, 1]
  values: [[1, 0.2], [0.3, 1]]
  demand_cost: [1, 1]
  supply_cost: [1, 1]
  patience: {kind: gamma, shape: 0.5, mean: 1}
experiment: {kind: simulate, policy: priority}
)");
  const MpSolution sol = solve_mp(cfg.net);
  if (sol.is_extreme_point) {
    EXPECT_NO_THROW(make_sim_config(cfg));
  } else {
    EXPECT_THROW(make_sim_config(cfg), ConfigError);
  }
  cfg.priority_sets = PrioritySets{2, 2, {{Edge{0, 0}, Edge{1, 1}}, {Edge{0, 1}, Edge{1, 0}}}};
  EXPECT_NO_THROW(make_sim_config(cfg));
}

TEST(Config, SweepCells) {
  const ExperimentConfig cfg = parse_config(R"(
instance: {lambda: [1], mu: [1], values: [[1]]}
experiment:
  kind: sweep
  sweep:
    n: [10, 100]
    mu: [0.5, 1.5]
    patience: [{kind: exponential, mean: 1}, {label: g, kind: gamma, shape: 0.7, mean: 1}]
)");
  const auto cells = sweep_cells(cfg);
  EXPECT_EQ(cells.size(), 8u);
  EXPECT_DOUBLE_EQ(cells.front().fluid_demand_reneging, 0.5);
  EXPECT_DOUBLE_EQ(cells[2].fluid_supply_reneging, 1.0 / 3.0);
  EXPECT_EQ(cells.back().patience, "g");
}
