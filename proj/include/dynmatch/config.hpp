#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "dynmatch/distributions.hpp"
#include "dynmatch/errors.hpp"
#include "dynmatch/network.hpp"
#include "dynmatch/priority.hpp"
#include "dynmatch/simulator.hpp"

namespace dynmatch {

struct LabeledPatience {
  std::string label;
  PatienceDistribution dist;
  friend bool operator==(const LabeledPatience&, const LabeledPatience&) = default;
};

struct SweepAxes {
  std::vector<std::int64_t> n;
  std::vector<double> review_base;
  std::vector<std::string> policy;
  std::vector<LabeledPatience> patience;
  std::vector<std::vector<double>> mu;  // each entry replaces the supply rates
  std::string layout = "cells";         // cells | table1
  friend bool operator==(const SweepAxes&, const SweepAxes&) = default;
};

struct MarkovGrid {
  double lambda = 1.0;
  double mu = 0.5;
  double theta = 1.0;
  std::vector<double> n{1, 10, 100, 1000};
  friend bool operator==(const MarkovGrid&, const MarkovGrid&) = default;
};

struct ExperimentConfig {
  Network net;
  std::string kind = "solve";  // solve | priority-sets | simulate | sweep | validate
  std::int64_t n = 100;
  double review_base = 1.0;
  double review_exponent = 2.0 / 3.0;
  double horizon = 100.0;
  std::string policy = "lp";  // lp | matching-rate | priority
  ArrivalKind arrivals = ArrivalKind::Poisson;
  int erlang_k = 2;
  std::uint64_t seed = 1;
  std::size_t replications = 1;
  std::size_t jobs = 0;
  std::string output;
  std::size_t trajectory_stride = 0;
  std::optional<PrioritySets> priority_sets;
  std::optional<MatchingRates> rates;
  SweepAxes sweep;
  std::string validate_suite = "invariants";
  MarkovGrid markov;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

inline const std::set<std::string> kExperimentKinds{"solve", "priority-sets", "simulate", "sweep",
                                                   "validate"};
inline const std::set<std::string> kPolicies{"lp", "matching-rate", "priority"};
inline const std::set<std::string> kValidateSuites{"invariants", "markov", "extreme-points",
                                                   "convergence"};

namespace detail {

inline void check_keys(const YAML::Node& node, const std::string& where,
                       const std::set<std::string>& allowed) {
  if (!node.IsMap()) throw ConfigError(where + ": expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.contains(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
T get(const YAML::Node& node, const std::string& where) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(where + ": malformed value");
  }
}

inline std::vector<double> get_vector(const YAML::Node& node, const std::string& where) {
  if (!node.IsSequence()) throw ConfigError(where + ": expected a list");
  return get<std::vector<double>>(node, where);
}

inline RealMatrix get_matrix(const YAML::Node& node, const std::string& where) {
  if (!node.IsSequence() || node.size() == 0) throw ConfigError(where + ": expected a list of rows");
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < node.size(); ++i) {
    rows.push_back(get_vector(node[i], where + "[" + std::to_string(i) + "]"));
  }
  RealMatrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols()) throw ConfigError(where + ": ragged rows");
    for (std::size_t c = 0; c < m.cols(); ++c) m(i, c) = rows[i][c];
  }
  return m;
}

// {kind: exponential|uniform, rate|mean} or {kind: gamma, shape, scale|mean}.
inline LabeledPatience parse_patience(const YAML::Node& node, const std::string& where) {
  check_keys(node, where, {"kind", "rate", "mean", "shape", "scale", "label"});
  if (!node["kind"]) throw ConfigError(where + ": missing 'kind'");
  const auto kind = get<std::string>(node["kind"], where + ".kind");
  auto num = [&](const char* key) { return get<double>(node[key], where + "." + key); };
  LabeledPatience out{"", PatienceDistribution::exponential(1.0)};
  try {
    if (kind == "exponential" || kind == "uniform") {
      if (node["shape"] || node["scale"]) throw ConfigError(where + ": shape/scale only apply to gamma");
      if (node["rate"] && node["mean"]) throw ConfigError(where + ": give rate or mean, not both");
      double rate = 1.0;
      if (node["rate"]) rate = num("rate");
      else if (node["mean"]) rate = 1.0 / num("mean");
      out.dist = kind == "exponential" ? PatienceDistribution::exponential(rate)
                                       : PatienceDistribution::uniform(rate);
    } else if (kind == "gamma") {
      if (!node["shape"]) throw ConfigError(where + ": gamma needs 'shape'");
      if (node["rate"]) throw ConfigError(where + ": gamma takes scale or mean");
      const double shape = num("shape");
      if (node["scale"] && node["mean"]) throw ConfigError(where + ": give scale or mean, not both");
      if (node["scale"]) out.dist = PatienceDistribution::gamma(shape, num("scale"));
      else if (node["mean"]) out.dist = PatienceDistribution::gamma_with_mean(shape, num("mean"));
      else out.dist = PatienceDistribution::gamma_with_mean(shape, 1.0);
    } else {
      throw ConfigError(where + ": unknown patience kind '" + kind + "'");
    }
  } catch (const DomainError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  out.label = node["label"] ? get<std::string>(node["label"], where + ".label") : kind;
  return out;
}

inline std::vector<PatienceDistribution> parse_patience_list(const YAML::Node& node,
                                                             const std::string& where) {
  if (!node.IsSequence()) throw ConfigError(where + ": expected a list");
  std::vector<PatienceDistribution> out;
  for (std::size_t i = 0; i < node.size(); ++i) {
    out.push_back(parse_patience(node[i], where + "[" + std::to_string(i) + "]").dist);
  }
  return out;
}

inline Network parse_instance(const YAML::Node& node) {
  check_keys(node, "instance",
             {"lambda", "mu", "values", "demand_cost", "supply_cost", "patience", "demand_patience",
              "supply_patience"});
  for (const char* key : {"lambda", "mu", "values"}) {
    if (!node[key]) throw ConfigError(std::string("instance: missing '") + key + "'");
  }
  Network net;
  net.lambda = get_vector(node["lambda"], "instance.lambda");
  net.mu = get_vector(node["mu"], "instance.mu");
  net.values = get_matrix(node["values"], "instance.values");
  net.demand_cost = node["demand_cost"] ? get_vector(node["demand_cost"], "instance.demand_cost")
                                        : std::vector<double>(net.J(), 0.0);
  net.supply_cost = node["supply_cost"] ? get_vector(node["supply_cost"], "instance.supply_cost")
                                        : std::vector<double>(net.K(), 0.0);
  const PatienceDistribution base = node["patience"]
                                        ? parse_patience(node["patience"], "instance.patience").dist
                                        : PatienceDistribution::exponential(1.0);
  net.demand_patience = node["demand_patience"]
                            ? parse_patience_list(node["demand_patience"], "instance.demand_patience")
                            : std::vector<PatienceDistribution>(net.J(), base);
  net.supply_patience = node["supply_patience"]
                            ? parse_patience_list(node["supply_patience"], "instance.supply_patience")
                            : std::vector<PatienceDistribution>(net.K(), base);
  try {
    net.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("instance: ") + e.what());
  }
  return net;
}

// 1-based [[j, k], ...] per set.
inline PrioritySets parse_priority_sets(const YAML::Node& node, const Network& net) {
  if (!node.IsSequence()) throw ConfigError("experiment.priority_sets: expected a list of sets");
  PrioritySets p{net.J(), net.K(), {}};
  for (std::size_t h = 0; h < node.size(); ++h) {
    std::vector<Edge> set;
    for (std::size_t i = 0; i < node[h].size(); ++i) {
      const auto e = get<std::vector<std::size_t>>(node[h][i], "experiment.priority_sets");
      if (e.size() != 2 || e[0] < 1 || e[1] < 1) {
        throw ConfigError("experiment.priority_sets: edges are 1-based [j, k] pairs");
      }
      set.push_back({e[0] - 1, e[1] - 1});
    }
    p.sets.push_back(std::move(set));
  }
  try {
    validate_priority_sets(p);
  } catch (const StructureError& e) {
    throw ConfigError(std::string("experiment.priority_sets: ") + e.what());
  }
  return p;
}

inline ArrivalKind parse_arrivals(const std::string& s) {
  if (s == "poisson") return ArrivalKind::Poisson;
  if (s == "erlang") return ArrivalKind::Erlang;
  if (s == "deterministic") return ArrivalKind::Deterministic;
  throw ConfigError("experiment.arrivals: unknown kind '" + s + "'");
}

inline const char* arrivals_name(ArrivalKind k) {
  switch (k) {
    case ArrivalKind::Poisson: return "poisson";
    case ArrivalKind::Erlang: return "erlang";
    case ArrivalKind::Deterministic: return "deterministic";
  }
  return "?";
}

inline void parse_sweep(const YAML::Node& node, ExperimentConfig& cfg) {
  check_keys(node, "experiment.sweep", {"n", "review_base", "policy", "patience", "mu", "layout"});
  if (node["n"]) cfg.sweep.n = get<std::vector<std::int64_t>>(node["n"], "experiment.sweep.n");
  if (node["review_base"]) cfg.sweep.review_base = get_vector(node["review_base"], "experiment.sweep.review_base");
  if (node["policy"]) {
    cfg.sweep.policy = get<std::vector<std::string>>(node["policy"], "experiment.sweep.policy");
    for (const auto& p : cfg.sweep.policy) {
      if (!kPolicies.contains(p)) throw ConfigError("experiment.sweep.policy: unknown policy '" + p + "'");
    }
  }
  if (node["patience"]) {
    const YAML::Node list = node["patience"];
    if (!list.IsSequence()) throw ConfigError("experiment.sweep.patience: expected a list");
    for (std::size_t i = 0; i < list.size(); ++i) {
      cfg.sweep.patience.push_back(
          parse_patience(list[i], "experiment.sweep.patience[" + std::to_string(i) + "]"));
    }
  }
  if (node["mu"]) {
    const YAML::Node list = node["mu"];
    if (!list.IsSequence()) throw ConfigError("experiment.sweep.mu: expected a list");
    for (std::size_t i = 0; i < list.size(); ++i) {
      std::vector<double> mu = list[i].IsSequence()
                                   ? get_vector(list[i], "experiment.sweep.mu")
                                   : std::vector<double>(cfg.net.K(), get<double>(list[i], "experiment.sweep.mu"));
      if (mu.size() != cfg.net.K()) throw ConfigError("experiment.sweep.mu: entries must have length K");
      cfg.sweep.mu.push_back(std::move(mu));
    }
  }
  if (node["layout"]) {
    cfg.sweep.layout = get<std::string>(node["layout"], "experiment.sweep.layout");
    if (cfg.sweep.layout != "cells" && cfg.sweep.layout != "table1") {
      throw ConfigError("experiment.sweep.layout: expected 'cells' or 'table1'");
    }
  }
}

inline void parse_validate(const YAML::Node& node, ExperimentConfig& cfg) {
  check_keys(node, "experiment.validate", {"suite", "markov"});
  if (node["suite"]) cfg.validate_suite = get<std::string>(node["suite"], "experiment.validate.suite");
  if (!kValidateSuites.contains(cfg.validate_suite)) {
    throw ConfigError("experiment.validate.suite: unknown suite '" + cfg.validate_suite + "'");
  }
  if (const YAML::Node m = node["markov"]) {
    check_keys(m, "experiment.validate.markov", {"lambda", "mu", "theta", "n"});
    if (m["lambda"]) cfg.markov.lambda = get<double>(m["lambda"], "markov.lambda");
    if (m["mu"]) cfg.markov.mu = get<double>(m["mu"], "markov.mu");
    if (m["theta"]) cfg.markov.theta = get<double>(m["theta"], "markov.theta");
    if (m["n"]) cfg.markov.n = get_vector(m["n"], "markov.n");
  }
}

inline void parse_experiment(const YAML::Node& node, ExperimentConfig& cfg) {
  check_keys(node, "experiment",
             {"kind", "n", "review_base", "review_exponent", "horizon", "policy", "arrivals",
              "erlang_k", "seed", "replications", "jobs", "output", "trajectory_stride",
              "priority_sets", "rates", "sweep", "validate"});
  if (node["kind"]) cfg.kind = get<std::string>(node["kind"], "experiment.kind");
  if (!kExperimentKinds.contains(cfg.kind)) throw ConfigError("experiment.kind: unknown '" + cfg.kind + "'");
  if (node["n"]) cfg.n = get<std::int64_t>(node["n"], "experiment.n");
  if (node["review_base"]) cfg.review_base = get<double>(node["review_base"], "experiment.review_base");
  if (node["review_exponent"]) cfg.review_exponent = get<double>(node["review_exponent"], "experiment.review_exponent");
  if (node["horizon"]) cfg.horizon = get<double>(node["horizon"], "experiment.horizon");
  if (node["policy"]) cfg.policy = get<std::string>(node["policy"], "experiment.policy");
  if (!kPolicies.contains(cfg.policy)) throw ConfigError("experiment.policy: unknown '" + cfg.policy + "'");
  if (node["arrivals"]) cfg.arrivals = parse_arrivals(get<std::string>(node["arrivals"], "experiment.arrivals"));
  if (node["erlang_k"]) cfg.erlang_k = get<int>(node["erlang_k"], "experiment.erlang_k");
  if (node["seed"]) cfg.seed = get<std::uint64_t>(node["seed"], "experiment.seed");
  if (node["replications"]) cfg.replications = get<std::size_t>(node["replications"], "experiment.replications");
  if (node["jobs"]) cfg.jobs = get<std::size_t>(node["jobs"], "experiment.jobs");
  if (node["output"]) cfg.output = get<std::string>(node["output"], "experiment.output");
  if (node["trajectory_stride"]) cfg.trajectory_stride = get<std::size_t>(node["trajectory_stride"], "experiment.trajectory_stride");
  if (node["priority_sets"]) cfg.priority_sets = parse_priority_sets(node["priority_sets"], cfg.net);
  if (node["rates"]) {
    MatchingRates m(get_matrix(node["rates"], "experiment.rates"));
    if (!is_feasible(cfg.net.lambda, cfg.net.mu, m.m)) throw ConfigError("experiment.rates: infeasible");
    cfg.rates = std::move(m);
  }
  if (node["sweep"]) parse_sweep(node["sweep"], cfg);
  if (node["validate"]) parse_validate(node["validate"], cfg);
  if (cfg.n < 1) throw ConfigError("experiment.n must be >= 1");
  if (!(cfg.review_base > 0.0)) throw ConfigError("experiment.review_base must be > 0");
  if (!(cfg.horizon > 0.0)) throw ConfigError("experiment.horizon must be > 0");
  if (cfg.replications < 1) throw ConfigError("experiment.replications must be >= 1");
  for (auto v : cfg.sweep.n) if (v < 1) throw ConfigError("experiment.sweep.n entries must be >= 1");
  for (auto v : cfg.sweep.review_base) if (!(v > 0.0)) throw ConfigError("experiment.sweep.review_base entries must be > 0");
}

}  // namespace detail

inline ExperimentConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("config: expected a mapping with 'instance' and 'experiment'");
  detail::check_keys(root, "config", {"instance", "experiment"});
  if (!root["instance"]) throw ConfigError("config: missing 'instance'");
  ExperimentConfig cfg;
  cfg.net = detail::parse_instance(root["instance"]);
  if (root["experiment"]) detail::parse_experiment(root["experiment"], cfg);
  return cfg;
}

namespace detail {

inline void emit_patience(YAML::Emitter& out, const PatienceDistribution& g, const std::string& label) {
  out << YAML::BeginMap;
  if (!label.empty()) out << YAML::Key << "label" << YAML::Value << label;
  switch (g.kind()) {
    case PatienceDistribution::Kind::Exponential:
      out << YAML::Key << "kind" << YAML::Value << "exponential" << YAML::Key << "rate" << YAML::Value << g.rate();
      break;
    case PatienceDistribution::Kind::Uniform:
      out << YAML::Key << "kind" << YAML::Value << "uniform" << YAML::Key << "rate" << YAML::Value << g.rate();
      break;
    case PatienceDistribution::Kind::Gamma:
      out << YAML::Key << "kind" << YAML::Value << "gamma" << YAML::Key << "shape" << YAML::Value << g.shape()
          << YAML::Key << "scale" << YAML::Value << g.scale();
      break;
  }
  out << YAML::EndMap;
}

inline void emit_matrix(YAML::Emitter& out, const RealMatrix& m) {
  out << YAML::BeginSeq;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out << YAML::Flow << std::vector<double>(m.row(r).begin(), m.row(r).end());
  }
  out << YAML::EndSeq;
}

}  // namespace detail

// Canonical form: every field explicit, per-node patience lists, gamma as
// (shape, scale), exponential/uniform as rate.
inline std::string serialize_config(const ExperimentConfig& cfg) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "instance" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "lambda" << YAML::Value << YAML::Flow << cfg.net.lambda;
  out << YAML::Key << "mu" << YAML::Value << YAML::Flow << cfg.net.mu;
  out << YAML::Key << "values" << YAML::Value;
  detail::emit_matrix(out, cfg.net.values);
  out << YAML::Key << "demand_cost" << YAML::Value << YAML::Flow << cfg.net.demand_cost;
  out << YAML::Key << "supply_cost" << YAML::Value << YAML::Flow << cfg.net.supply_cost;
  out << YAML::Key << "demand_patience" << YAML::Value << YAML::BeginSeq;
  for (const auto& g : cfg.net.demand_patience) detail::emit_patience(out, g, "");
  out << YAML::EndSeq;
  out << YAML::Key << "supply_patience" << YAML::Value << YAML::BeginSeq;
  for (const auto& g : cfg.net.supply_patience) detail::emit_patience(out, g, "");
  out << YAML::EndSeq;
  out << YAML::EndMap;

  out << YAML::Key << "experiment" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value << cfg.kind;
  out << YAML::Key << "n" << YAML::Value << cfg.n;
  out << YAML::Key << "review_base" << YAML::Value << cfg.review_base;
  out << YAML::Key << "review_exponent" << YAML::Value << cfg.review_exponent;
  out << YAML::Key << "horizon" << YAML::Value << cfg.horizon;
  out << YAML::Key << "policy" << YAML::Value << cfg.policy;
  out << YAML::Key << "arrivals" << YAML::Value << detail::arrivals_name(cfg.arrivals);
  out << YAML::Key << "erlang_k" << YAML::Value << cfg.erlang_k;
  out << YAML::Key << "seed" << YAML::Value << cfg.seed;
  out << YAML::Key << "replications" << YAML::Value << cfg.replications;
  out << YAML::Key << "jobs" << YAML::Value << cfg.jobs;
  out << YAML::Key << "output" << YAML::Value << cfg.output;
  out << YAML::Key << "trajectory_stride" << YAML::Value << cfg.trajectory_stride;
  if (cfg.priority_sets) {
    out << YAML::Key << "priority_sets" << YAML::Value << YAML::BeginSeq;
    for (const auto& set : cfg.priority_sets->sets) {
      out << YAML::Flow << YAML::BeginSeq;
      for (const Edge& e : set) out << YAML::Flow << std::vector<std::size_t>{e.demand + 1, e.supply + 1};
      out << YAML::EndSeq;
    }
    out << YAML::EndSeq;
  }
  if (cfg.rates) {
    out << YAML::Key << "rates" << YAML::Value;
    detail::emit_matrix(out, cfg.rates->m);
  }
  out << YAML::Key << "sweep" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "n" << YAML::Value << YAML::Flow << cfg.sweep.n;
  out << YAML::Key << "review_base" << YAML::Value << YAML::Flow << cfg.sweep.review_base;
  out << YAML::Key << "policy" << YAML::Value << YAML::Flow << cfg.sweep.policy;
  out << YAML::Key << "patience" << YAML::Value << YAML::BeginSeq;
  for (const auto& p : cfg.sweep.patience) detail::emit_patience(out, p.dist, p.label);
  out << YAML::EndSeq;
  out << YAML::Key << "mu" << YAML::Value << YAML::BeginSeq;
  for (const auto& mu : cfg.sweep.mu) out << YAML::Flow << mu;
  out << YAML::EndSeq;
  out << YAML::Key << "layout" << YAML::Value << cfg.sweep.layout;
  out << YAML::EndMap;
  out << YAML::Key << "validate" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "suite" << YAML::Value << cfg.validate_suite;
  out << YAML::Key << "markov" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "lambda" << YAML::Value << cfg.markov.lambda;
  out << YAML::Key << "mu" << YAML::Value << cfg.markov.mu;
  out << YAML::Key << "theta" << YAML::Value << cfg.markov.theta;
  out << YAML::Key << "n" << YAML::Value << YAML::Flow << cfg.markov.n;
  out << YAML::EndMap << YAML::EndMap;
  out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace dynmatch
