#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "dynmatch/errors.hpp"

namespace dynmatch {

// Single-edge system with exponential patience (rate theta on both sides)
// and Poisson arrivals n*lambda, n*mu. X = Q - I is a birth-death chain on
// the integers:
//   x >= 0:  up n*lambda,              down n*mu + x*theta
//   x <  0:  up n*lambda + |x|*theta,  down n*mu
struct BirthDeathSpec {
  double lambda = 1.0;
  double mu = 1.0;
  double theta = 1.0;
  double n = 1.0;
  // State space {-N..N}; 0 selects N adaptively.
  std::int64_t truncation = 0;

  void validate() const {
    auto positive = [](double x) { return x > 0.0 && std::isfinite(x); };
    if (!positive(lambda) || !positive(mu) || !positive(theta) || !positive(n)) {
      throw DomainError("birth-death rates and scaling must be > 0");
    }
    if (truncation < 0) throw DomainError("truncation must be >= 0");
  }

  double up(std::int64_t x) const {
    return x >= 0 ? n * lambda : n * lambda + static_cast<double>(-x) * theta;
  }
  double down(std::int64_t x) const {
    return x > 0 ? n * mu + static_cast<double>(x) * theta : n * mu;
  }
};

struct StationaryDistribution {
  std::int64_t N = 0;
  std::vector<double> p;  // p[x + N]
  double tail_bound = 0.0;

  double operator()(std::int64_t x) const {
    return (x < -N || x > N) ? 0.0 : p[static_cast<std::size_t>(x + N)];
  }
};

inline constexpr double kTailTolerance = 1e-12;

namespace detail {

// Product form in log space, normalized by log-sum-exp. The tail beyond +-N
// is bounded by a geometric series since the ratio of successive weights
// decreases outward.
inline StationaryDistribution product_form(const BirthDeathSpec& s, std::int64_t N) {
  std::vector<double> logw(static_cast<std::size_t>(2 * N + 1));
  logw[N] = 0.0;
  for (std::int64_t x = 1; x <= N; ++x) {
    logw[N + x] = logw[N + x - 1] + std::log(s.up(x - 1)) - std::log(s.down(x));
    logw[N - x] = logw[N - x + 1] + std::log(s.down(-x + 1)) - std::log(s.up(-x));
  }
  const double top = *std::max_element(logw.begin(), logw.end());
  double z = 0.0;
  for (double lw : logw) z += std::exp(lw - top);
  StationaryDistribution out;
  out.N = N;
  out.p.resize(logw.size());
  for (std::size_t i = 0; i < logw.size(); ++i) out.p[i] = std::exp(logw[i] - top) / z;

  const double r_pos = s.up(N) / s.down(N + 1);
  const double r_neg = s.down(-N) / s.up(-N - 1);
  auto tail = [](double edge, double r) { return r < 1.0 ? edge * r / (1.0 - r) : INFINITY; };
  out.tail_bound = tail(out.p.back(), r_pos) + tail(out.p.front(), r_neg);
  return out;
}

}  // namespace detail

// pi(x) = pi(0) prod_{i=1}^{x} n lambda / (n mu + i theta) for x > 0, and the
// mirror image for x < 0. Adaptive truncation starts at
// N = ceil(10 n max(lambda, mu) / theta) and doubles until the tail bound is
// below 1e-12; a fixed N that fails the bound throws TruncationError.
inline StationaryDistribution stationary_distribution(const BirthDeathSpec& s) {
  s.validate();
  if (s.truncation > 0) {
    StationaryDistribution d = detail::product_form(s, s.truncation);
    if (!(d.tail_bound < kTailTolerance)) {
      throw TruncationError("truncation N = " + std::to_string(s.truncation) +
                            " leaves tail mass bound " + std::to_string(d.tail_bound));
    }
    return d;
  }
  auto N = static_cast<std::int64_t>(std::ceil(10.0 * s.n * std::max(s.lambda, s.mu) / s.theta));
  N = std::max<std::int64_t>(N, 10);
  for (int attempt = 0; attempt < 30; ++attempt, N *= 2) {
    StationaryDistribution d = detail::product_form(s, N);
    if (d.tail_bound < kTailTolerance) return d;
  }
  throw TruncationError("adaptive truncation did not reach the tail tolerance");
}

// Largest |global balance residual| over interior states, relative to the
// total outflow of the state.
inline double balance_residual(const BirthDeathSpec& s, const StationaryDistribution& d) {
  double worst = 0.0;
  for (std::int64_t x = -d.N + 1; x <= d.N - 1; ++x) {
    const double out = d(x) * (s.up(x) + s.down(x));
    const double in = d(x - 1) * s.up(x - 1) + d(x + 1) * s.down(x + 1);
    worst = std::max(worst, std::abs(out - in));
  }
  return worst;
}

struct MeanQueues {
  double demand = 0.0;  // E[X+]
  double supply = 0.0;  // E[X-]
  double scaled_demand = 0.0;  // E[X+] / n
  double scaled_supply = 0.0;
};

inline MeanQueues mean_queues(const StationaryDistribution& d, double n) {
  MeanQueues m;
  for (std::int64_t x = 1; x <= d.N; ++x) {
    m.demand += static_cast<double>(x) * d(x);
    m.supply += static_cast<double>(x) * d(-x);
  }
  m.scaled_demand = m.demand / n;
  m.scaled_supply = m.supply / n;
  return m;
}

inline MeanQueues mean_queues(const BirthDeathSpec& s) {
  return mean_queues(stationary_distribution(s), s.n);
}

// Cross-check through incomplete gamma functions. With a = n lambda / theta
// and b = n mu / theta the positive side sums to
//   S(a, b) = sum_{x>=0} a^x Gamma(b+1)/Gamma(b+1+x) = b gamma(b, a) e^a a^{-b},
// and sum_{x>=1} x t_x = a S - b (S - 1). Accurate for moderate n only.
inline MeanQueues mean_queues_closed_form(const BirthDeathSpec& s) {
  s.validate();
  const double a = s.n * s.lambda / s.theta, b = s.n * s.mu / s.theta;
  auto side = [](double a_, double b_) {
    const double log_s = a_ - b_ * std::log(a_) + std::lgamma(b_ + 1.0) +
                         std::log(boost::math::gamma_p(b_, a_));
    const double sum = std::exp(log_s);
    return std::pair{sum - 1.0, a_ * sum - b_ * (sum - 1.0)};
  };
  const auto [pos_mass, pos_mean] = side(a, b);
  const auto [neg_mass, neg_mean] = side(b, a);
  const double z = 1.0 + pos_mass + neg_mass;
  MeanQueues m;
  m.demand = pos_mean / z;
  m.supply = neg_mean / z;
  m.scaled_demand = m.demand / s.n;
  m.scaled_supply = m.supply / s.n;
  return m;
}

}  // namespace dynmatch
