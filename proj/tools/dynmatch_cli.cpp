// dynmatch: solve, simulate and sweep two-sided matching networks from a
// YAML config. CSV goes to --out (or experiment.output, or stdout); progress
// and summaries go to stderr unless --quiet.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dynmatch/dynmatch.hpp"
#include "dynmatch/experiment.hpp"

using namespace dynmatch;

namespace {

struct Options {
  std::string config;
  std::string out;
  bool quiet = false;
};

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw ConfigError("cannot open output file '" + path + "'");
    }
    os().precision(10);
  }
  std::ostream& os() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename T>
std::optional<T> env_number(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  try {
    std::size_t used = 0;
    const unsigned long long x = std::stoull(v, &used);
    if (used != std::string(v).size()) throw std::invalid_argument(v);
    return static_cast<T>(x);
  } catch (const std::exception&) {
    throw ConfigError(std::string(name) + " must be a non-negative integer");
  }
}

std::string format_rates(const RealMatrix& m) {
  std::ostringstream os;
  os.precision(10);
  for (std::size_t j = 0; j < m.rows(); ++j) {
    if (j) os << ';';
    for (std::size_t k = 0; k < m.cols(); ++k) os << (k ? " " : "") << m(j, k);
  }
  return os.str();
}

std::string format_set(const std::vector<Edge>& set) {
  std::ostringstream os;
  for (std::size_t i = 0; i < set.size(); ++i) {
    os << (i ? " " : "") << '(' << set[i].demand + 1 << ',' << set[i].supply + 1 << ')';
  }
  return os.str();
}

std::vector<LabeledPatience> patience_variants(const ExperimentConfig& cfg) {
  return cfg.sweep.patience;
}

Network with_patience(Network net, const PatienceDistribution& g) {
  net.demand_patience.assign(net.J(), g);
  net.supply_patience.assign(net.K(), g);
  return net;
}

// ---------------------------------------------------------------- solve

int cmd_solve(const ExperimentConfig& cfg, const Options& opt) {
  std::vector<std::pair<std::string, Network>> nets;
  if (cfg.sweep.patience.empty()) nets.emplace_back("instance", cfg.net);
  for (const auto& p : patience_variants(cfg)) nets.emplace_back(p.label, with_patience(cfg.net, p.dist));

  Output out(opt.out);
  out.os() << "patience,solver,objective,is_extreme_point,global_guarantee,m_star,first_priority_set\n";
  for (const auto& [label, net] : nets) {
    const MpSolution sol = solve_mp(net);
    std::string first = "";
    if (sol.is_extreme_point) {
      try {
        first = format_set(build_priority_sets(net, sol.m_star).sets.front());
      } catch (const StructureError&) {
      }
    }
    out.os() << label << ',' << to_string(sol.solver_used) << ',' << sol.objective << ','
             << sol.is_extreme_point << ',' << sol.global_guarantee << ',' << format_rates(sol.m_star.m)
             << ',' << first << '\n';
    if (!opt.quiet) {
      std::cerr << label << ": objective " << sol.objective << " via " << to_string(sol.solver_used);
      if (!first.empty()) std::cerr << ", priority edge " << first;
      std::cerr << '\n';
    }
  }
  return 0;
}

// -------------------------------------------------------- priority-sets

int cmd_priority_sets(const ExperimentConfig& cfg, const Options& opt) {
  const MpSolution sol = optimal_extreme_point(cfg.net);
  const PrioritySets p = cfg.priority_sets ? *cfg.priority_sets : build_priority_sets(cfg.net, sol.m_star);
  const MatchingRates y = greedy_yp(cfg.net, p);
  Output out(opt.out);
  out.os() << "set,j,k,m_star,y_p\n";
  for (std::size_t h = 0; h < p.sets.size(); ++h) {
    for (const Edge& e : p.sets[h]) {
      out.os() << h << ',' << e.demand + 1 << ',' << e.supply + 1 << ',' << sol.m_star(e.demand, e.supply) << ','
               << y(e.demand, e.supply) << '\n';
    }
  }
  if (!opt.quiet) {
    std::cerr << p.to_string() << "H = " << p.H() << ", |y^p - m*| = " << max_abs_difference(y.m, sol.m_star.m)
              << '\n';
  }
  return 0;
}

// ------------------------------------------------------------- simulate

void write_trajectory(const SimResult& r, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open trajectory file '" + path + "'");
  os << 't';
  for (std::size_t j = 0; j < r.arrivals_demand.size(); ++j) os << ",Q" << j + 1;
  for (std::size_t k = 0; k < r.arrivals_supply.size(); ++k) os << ",I" << k + 1;
  os << '\n';
  os.precision(10);
  for (const TrajectoryRow& row : r.trajectory) {
    os << row.t;
    for (auto x : row.demand) os << ',' << x;
    for (auto x : row.supply) os << ',' << x;
    os << '\n';
  }
}

int cmd_simulate(const ExperimentConfig& cfg, const Options& opt, std::size_t jobs) {
  const SimConfig sc = make_sim_config(cfg);
  const ReplicationSummary rs = replicate(sc, cfg.replications, jobs);
  Output out(opt.out);
  out.os() << "replication,seed,policy";
  for (const auto& name : rs.names) out.os() << ',' << name;
  out.os() << '\n';
  std::int64_t violations = 0;
  for (std::size_t r = 0; r < rs.runs.size(); ++r) {
    out.os() << r << ',' << sc.seed + r << ',' << policy_name(sc.policy);
    for (const auto& [name, v] : scalar_fields(rs.runs[r])) out.os() << ',' << v;
    out.os() << '\n';
    violations += rs.runs[r].admissibility_violations;
  }
  if (sc.trajectory_stride > 0 && !opt.out.empty()) write_trajectory(rs.runs.front(), opt.out + ".trajectory.csv");
  if (!opt.quiet) {
    const double ub = upper_bound(cfg.net);
    const Stat s = rs.stat("scaled_objective");
    std::cerr << policy_name(sc.policy) << ": V/(nT) = " << s.mean << " +- " << s.stderr_ << ", bound " << ub
              << ", ratio " << s.mean / ub << ", violations " << violations << '\n';
  }
  return violations == 0 ? 0 : 3;
}

// ---------------------------------------------------------------- sweep

int cmd_sweep(const ExperimentConfig& cfg, const Options& opt, std::size_t jobs) {
  const std::vector<SweepCell> cells = sweep_cells(cfg);
  std::vector<SimConfig> configs;
  for (const SweepCell& c : cells) configs.push_back(cell_config(cfg, c));
  const std::size_t R = cfg.replications;
  std::vector<SimResult> results(cells.size() * R);
  parallel_for(results.size(), jobs, [&](std::size_t i) {
    SimConfig c = configs[i / R];
    c.seed += i % R;
    results[i] = run(c);
  });
  std::int64_t violations = 0;
  for (const SimResult& r : results) violations += r.admissibility_violations;

  Output out(opt.out);
  if (cfg.sweep.layout == "table1") {
    std::vector<std::string> labels;
    for (const SweepCell& c : cells) {
      if (std::find(labels.begin(), labels.end(), c.patience) == labels.end()) labels.push_back(c.patience);
    }
    out.os() << "mu";
    for (const auto& l : labels) out.os() << ',' << l << "_RD," << l << "_RS";
    out.os() << ",fluid_rD,fluid_rS\n";
    // cells are ordered patience-major, so collect per supply vector.
    std::vector<std::vector<double>> mus;
    for (const SweepCell& c : cells) {
      if (std::find(mus.begin(), mus.end(), c.mu) == mus.end()) mus.push_back(c.mu);
    }
    for (const auto& mu : mus) {
      double mu_total = 0.0;
      for (double x : mu) mu_total += x;
      out.os() << mu_total;
      const SweepCell* fluid = nullptr;
      for (const auto& l : labels) {
        std::vector<double> rd, rs;
        for (std::size_t c = 0; c < cells.size(); ++c) {
          if (cells[c].mu != mu || cells[c].patience != l) continue;
          fluid = &cells[c];
          for (std::size_t r = 0; r < R; ++r) {
            rd.push_back(results[c * R + r].demand_reneging_fraction());
            rs.push_back(results[c * R + r].supply_reneging_fraction());
          }
        }
        out.os() << ',' << summarize(rd).mean << ',' << summarize(rs).mean;
      }
      out.os() << ',' << fluid->fluid_demand_reneging << ',' << fluid->fluid_supply_reneging << '\n';
    }
  } else {
    out.os() << "n,review_base,review_length,policy,patience,mu,replication,seed,upper_bound,scaled_objective,"
                "ratio,demand_reneging_fraction,supply_reneging_fraction,rate_gap,admissibility_violations\n";
    for (std::size_t c = 0; c < cells.size(); ++c) {
      std::ostringstream mu;
      for (std::size_t k = 0; k < cells[c].mu.size(); ++k) mu << (k ? " " : "") << cells[c].mu[k];
      for (std::size_t r = 0; r < R; ++r) {
        const SimResult& res = results[c * R + r];
        out.os() << cells[c].n << ',' << cells[c].review_base << ',' << configs[c].review_length() << ','
                 << cells[c].policy << ',' << cells[c].patience << ',' << mu.str() << ',' << r << ','
                 << configs[c].seed + r << ',' << cells[c].upper_bound << ',' << res.scaled_objective() << ','
                 << res.scaled_objective() / cells[c].upper_bound << ',' << res.demand_reneging_fraction() << ','
                 << res.supply_reneging_fraction() << ',' << res.rate_gap << ',' << res.admissibility_violations
                 << '\n';
      }
    }
  }
  if (!opt.quiet) std::cerr << cells.size() << " cells x " << R << " replications, violations " << violations << '\n';
  return violations == 0 ? 0 : 3;
}

// ------------------------------------------------------------- validate

class Checks {
 public:
  explicit Checks(std::ostream& os, std::string suite) : os_(os), suite_(std::move(suite)) {
    os_ << "suite,check,value,reference,gap,tolerance,status\n";
  }
  void add(const std::string& name, double value, double reference, double tolerance) {
    add_gap(name, value, reference, std::abs(value - reference), tolerance);
  }
  void add_gap(const std::string& name, double value, double reference, double gap, double tolerance) {
    const bool ok = gap <= tolerance;
    failed_ += ok ? 0 : 1;
    os_ << suite_ << ',' << name << ',' << value << ',' << reference << ',' << gap << ',' << tolerance << ','
        << (ok ? "pass" : "fail") << '\n';
  }
  int failed() const { return failed_; }

 private:
  std::ostream& os_;
  std::string suite_;
  int failed_ = 0;
};

MatchingRates random_feasible(const std::vector<double>& lambda, const std::vector<double>& mu,
                              std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RealMatrix m(lambda.size(), mu.size());
  for (double& x : m.flat()) x = u(rng);
  double scale = 1.0;
  for (std::size_t j = 0; j < lambda.size(); ++j) scale = std::min(scale, lambda[j] / m.row_sum(j));
  for (std::size_t k = 0; k < mu.size(); ++k) scale = std::min(scale, mu[k] / m.col_sum(k));
  const double s = scale * u(rng);
  for (double& x : m.flat()) x *= s;
  return MatchingRates(m);
}

void validate_invariants(Checks& checks, const ExperimentConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  double worst_exp = 0.0, worst_uni = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const MatchingRates m = random_feasible(cfg.net.lambda, cfg.net.mu, rng);
    const Network e = with_patience(cfg.net, PatienceDistribution::exponential(1.5));
    const Network u = with_patience(cfg.net, PatienceDistribution::uniform(1.5));
    for (std::size_t j = 0; j < cfg.net.J(); ++j) {
      const double lam = cfg.net.lambda[j], s = m.demand_matched(j);
      worst_exp = std::max(worst_exp, std::abs(q_star(e, m, j) - (lam - s) / 1.5));
      worst_uni = std::max(worst_uni, std::abs(q_star(u, m, j) - lam / 1.5 * (1.0 - (s / lam) * (s / lam))));
    }
  }
  checks.add_gap("q_star_exponential_closed_form", worst_exp, 0.0, worst_exp, 1e-9);
  checks.add_gap("q_star_uniform_closed_form", worst_uni, 0.0, worst_uni, 1e-9);

  const MpSolution sol = solve_mp(cfg.net);
  checks.add_gap("mp_solution_feasible", 0.0, 0.0,
                 is_feasible(cfg.net.lambda, cfg.net.mu, sol.m_star.m) ? 0.0 : 1.0, 0.0);
  checks.add("mp_objective_recomputed", mp_objective(cfg.net, sol.m_star), sol.objective, 1e-9);
  checks.add_gap("mp_below_value_bound", sol.objective, upper_bound(cfg.net),
                 std::max(0.0, sol.objective - matching_value_bound(cfg.net.values, cfg.net.lambda, cfg.net.mu)),
                 1e-9);
}

void validate_markov(Checks& checks, const ExperimentConfig& cfg) {
  const MarkovGrid& g = cfg.markov;
  const double q_inv = std::max(0.0, g.lambda - g.mu) / g.theta;
  const double i_inv = std::max(0.0, g.mu - g.lambda) / g.theta;
  for (double n : g.n) {
    const BirthDeathSpec spec{g.lambda, g.mu, g.theta, n, 0};
    const StationaryDistribution d = stationary_distribution(spec);
    const MeanQueues mq = mean_queues(d, n), cf = mean_queues_closed_form(spec);
    const std::string tag = "n=" + std::to_string(static_cast<long long>(n));
    checks.add_gap("balance_residual " + tag, balance_residual(spec, d), 0.0, balance_residual(spec, d), 1e-10);
    checks.add("closed_form_demand " + tag, mq.demand, cf.demand, 1e-9 * std::max(1.0, cf.demand));
    // Reported against the invariant queue; the gap only has to shrink in n.
    checks.add_gap("scaled_demand_vs_invariant " + tag, mq.scaled_demand, q_inv,
                   std::abs(mq.scaled_demand - q_inv), 1.0 / std::sqrt(n));
    checks.add_gap("scaled_supply_vs_invariant " + tag, mq.scaled_supply, i_inv,
                   std::abs(mq.scaled_supply - i_inv), 1.0 / std::sqrt(n));
  }
}

void validate_extreme_points(Checks& checks, const ExperimentConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> u(0.2, 3.0);
  std::uniform_int_distribution<int> dim(1, 3);
  int bad_forest = 0, bad_value = 0, total = 0;
  for (int t = 0; t < 100; ++t) {
    std::vector<double> lambda(dim(rng)), mu(dim(rng));
    for (double& x : lambda) x = u(rng);
    for (double& x : mu) x = u(rng);
    RealMatrix w(lambda.size(), mu.size());
    for (double& x : w.flat()) x = u(rng);
    double best = 0.0;
    for (const ExtremePoint& p : enumerate_extreme_points(lambda, mu)) {
      ++total;
      if (!is_extreme_point(lambda, mu, p.m.m)) ++bad_forest;
      double v = 0.0;
      for (std::size_t e = 0; e < w.flat().size(); ++e) v += w.flat()[e] * p.m.m.flat()[e];
      best = std::max(best, v);
    }
    if (std::abs(solve_transport(w, lambda, mu).value - best) > 1e-6) ++bad_value;
  }
  checks.add_gap("vertices_have_forest_support", bad_forest, 0.0, bad_forest, 0.0);
  checks.add_gap("transport_equals_best_vertex", bad_value, 0.0, bad_value, 0.0);
  checks.add_gap("vertices_enumerated", total, 0.0, 0.0, 0.0);
}

void validate_convergence(Checks& checks, const ExperimentConfig& cfg, std::size_t jobs) {
  const MpSolution sol = solve_mp(cfg.net);
  const FluidTrajectory traj = fluid_trajectory(cfg.net, sol.m_star, 40.0, 0.0, 100);
  const InvariantState inv = invariant_state(cfg.net, sol.m_star);
  double fluid_gap = 0.0;
  const InvariantState end = traj.terminal();
  for (std::size_t j = 0; j < cfg.net.J(); ++j) fluid_gap = std::max(fluid_gap, std::abs(end.q_star[j] - inv.q_star[j]));
  for (std::size_t k = 0; k < cfg.net.K(); ++k) fluid_gap = std::max(fluid_gap, std::abs(end.i_star[k] - inv.i_star[k]));
  checks.add_gap("fluid_terminal_vs_invariant", fluid_gap, 0.0, fluid_gap, 1e-4);

  const std::vector<std::int64_t> ns = cfg.sweep.n.empty() ? std::vector<std::int64_t>{10, 100, 1000} : cfg.sweep.n;
  SimConfig sc;
  sc.net = cfg.net;
  sc.horizon = std::min(cfg.horizon, 10.0);
  sc.review_base = 1.0;
  sc.review_exponent = 2.0 / 3.0;
  sc.policy = MatchingRateBased{sol.m_star};
  sc.reference_rates = sol.m_star;
  sc.seed = cfg.seed;
  double prev = 1e300;
  for (auto n : ns) {
    sc.n = n;
    const double gap = replicate(sc, 5, jobs).stat("rate_gap").mean;
    checks.add_gap("rate_gap_decreases n=" + std::to_string(n), gap, prev, std::max(0.0, gap - prev), 0.0);
    prev = gap;
  }
}

int cmd_validate(const ExperimentConfig& cfg, const Options& opt, const std::string& suite, std::size_t jobs) {
  Output out(opt.out);
  Checks checks(out.os(), suite);
  if (suite == "invariants") validate_invariants(checks, cfg);
  else if (suite == "markov") validate_markov(checks, cfg);
  else if (suite == "extreme-points") validate_extreme_points(checks, cfg);
  else if (suite == "convergence") validate_convergence(checks, cfg, jobs);
  else throw ConfigError("unknown validate suite '" + suite + "'");
  if (!opt.quiet) std::cerr << suite << ": " << (checks.failed() ? "FAIL" : "pass") << '\n';
  return checks.failed() ? 4 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic two-sided matching: rate problem, priority sets, simulation"};
  app.require_subcommand(0, 1);
  app.fallthrough();
  Options opt;
  std::uint64_t seed = 0;
  std::size_t jobs = 0;
  app.add_option("--config,-c", opt.config, "YAML experiment config")->required()->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "base seed (overrides DYNMATCH_SEED and the config)");
  auto* jobs_opt = app.add_option("--jobs,-j", jobs, "worker threads, 0 = hardware (overrides DYNMATCH_JOBS)");
  app.add_option("--out,-o", opt.out, "CSV output path (default: experiment.output, else stdout)");
  app.add_flag("--quiet,-q", opt.quiet, "no summary on stderr");

  app.add_subcommand("solve", "solve the rate problem; one row per patience variant");
  app.add_subcommand("priority-sets", "priority sets of the optimal extreme point");
  app.add_subcommand("simulate", "replicated discrete-review simulation");
  app.add_subcommand("sweep", "simulate every cell of experiment.sweep");
  auto* validate = app.add_subcommand("validate", "oracle suites");
  std::string suite;
  validate->add_option("suite", suite, "invariants | markov | extreme-points | convergence")
      ->check(CLI::IsMember({"invariants", "markov", "extreme-points", "convergence"}));

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg = parse_config(read_file(opt.config));
    if (auto s = env_number<std::uint64_t>("DYNMATCH_SEED")) cfg.seed = *s;
    if (auto j = env_number<std::size_t>("DYNMATCH_JOBS")) cfg.jobs = *j;
    if (*seed_opt) cfg.seed = seed;
    if (*jobs_opt) cfg.jobs = jobs;
    if (opt.out.empty()) opt.out = cfg.output;

    std::string kind = cfg.kind;
    if (!app.get_subcommands().empty()) kind = app.get_subcommands().front()->get_name();
    if (kind == "solve") return cmd_solve(cfg, opt);
    if (kind == "priority-sets") return cmd_priority_sets(cfg, opt);
    if (kind == "simulate") return cmd_simulate(cfg, opt, cfg.jobs);
    if (kind == "sweep") return cmd_sweep(cfg, opt, cfg.jobs);
    if (kind == "validate") return cmd_validate(cfg, opt, suite.empty() ? cfg.validate_suite : suite, cfg.jobs);
    throw ConfigError("unknown experiment kind '" + kind + "'");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
