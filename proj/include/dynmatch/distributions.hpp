#pragma once

#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "dynmatch/errors.hpp"

namespace dynmatch {

enum class HazardTrend { Constant, Increasing, Decreasing };

inline const char* to_string(HazardTrend t) {
  switch (t) {
    case HazardTrend::Constant: return "constant";
    case HazardTrend::Increasing: return "increasing";
    case HazardTrend::Decreasing: return "decreasing";
  }
  return "?";
}

namespace detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Solves f(x) = target for continuous nondecreasing f with f(lo) <= target <= f(hi).
// Newton steps are accepted only while they stay inside the current bracket;
// otherwise the bracket is bisected.
template <typename F, typename DF>
double solve_monotone(F&& f, DF&& df, double target, double lo, double hi, double x) {
  if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
  for (int iter = 0; iter < 300; ++iter) {
    const double r = f(x) - target;
    if (r == 0.0) return x;
    if (r < 0.0) lo = x; else hi = x;
    const double slope = df(x);
    double next = (slope > 0.0 && std::isfinite(slope)) ? x - r / slope : lo - 1.0;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-15 * std::max(1.0, std::abs(x)) ||
        hi - lo <= 1e-15 * std::max(1.0, std::abs(x))) {
      return next;
    }
    x = next;
  }
  return x;
}

inline double require_probability(double p) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw DomainError("probability must lie in [0, 1), got " + std::to_string(p));
  }
  return p;
}

inline double require_nonnegative(double x) {
  if (!(x >= 0.0)) throw DomainError("argument must be >= 0, got " + std::to_string(x));
  return x;
}

}  // namespace detail

// Patience-time law G with density g, hazard h = g / (1 - G), mean 1/theta and
// excess-life CDF G_e(x) = theta * int_0^x (1 - G(u)) du.
//
// Immutable after construction; safe to share across threads.
class PatienceDistribution {
 public:
  enum class Kind { Exponential, Uniform, Gamma };

  // Exponential with rate theta (mean 1/theta).
  static PatienceDistribution exponential(double rate) {
    check_positive(rate, "exponential rate");
    return PatienceDistribution(Kind::Exponential, rate, 0.0);
  }

  // Uniform on [0, 2/theta] (mean 1/theta).
  static PatienceDistribution uniform(double rate) {
    check_positive(rate, "uniform rate");
    return PatienceDistribution(Kind::Uniform, rate, 0.0);
  }

  static PatienceDistribution gamma(double shape, double scale) {
    check_positive(shape, "gamma shape");
    check_positive(scale, "gamma scale");
    return PatienceDistribution(Kind::Gamma, shape, scale);
  }

  static PatienceDistribution gamma_with_mean(double shape, double mean) {
    check_positive(mean, "gamma mean");
    return gamma(shape, mean / shape);
  }

  Kind kind() const { return kind_; }
  double shape() const { return kind_ == Kind::Gamma ? a_ : 1.0; }
  double scale() const { return kind_ == Kind::Gamma ? b_ : 1.0 / a_; }

  double mean() const { return kind_ == Kind::Gamma ? a_ * b_ : 1.0 / a_; }
  double rate() const { return 1.0 / mean(); }
  double variance() const {
    switch (kind_) {
      case Kind::Exponential: return 1.0 / (a_ * a_);
      case Kind::Uniform: return 1.0 / (3.0 * a_ * a_);
      case Kind::Gamma: return a_ * b_ * b_;
    }
    return 0.0;
  }

  // Right edge H of the support; +inf for exponential and gamma.
  double support_end() const { return kind_ == Kind::Uniform ? 2.0 / a_ : detail::kInf; }

  HazardTrend hazard_trend() const {
    switch (kind_) {
      case Kind::Exponential: return HazardTrend::Constant;
      case Kind::Uniform: return HazardTrend::Increasing;
      case Kind::Gamma:
        if (a_ == 1.0) return HazardTrend::Constant;
        return a_ > 1.0 ? HazardTrend::Increasing : HazardTrend::Decreasing;
    }
    return HazardTrend::Constant;
  }

  double cdf(double x) const {
    detail::require_nonnegative(x);
    switch (kind_) {
      case Kind::Exponential: return -std::expm1(-a_ * x);
      case Kind::Uniform: return std::min(1.0, 0.5 * a_ * x);
      case Kind::Gamma:
        if (std::isinf(x)) return 1.0;
        return boost::math::gamma_p(a_, x / b_);
    }
    return 0.0;
  }

  double survival(double x) const {
    detail::require_nonnegative(x);
    switch (kind_) {
      case Kind::Exponential: return std::exp(-a_ * x);
      case Kind::Uniform: return std::max(0.0, 1.0 - 0.5 * a_ * x);
      case Kind::Gamma:
        if (std::isinf(x)) return 0.0;
        return boost::math::gamma_q(a_, x / b_);
    }
    return 0.0;
  }

  double pdf(double x) const {
    detail::require_nonnegative(x);
    switch (kind_) {
      case Kind::Exponential: return a_ * std::exp(-a_ * x);
      case Kind::Uniform: return x < 2.0 / a_ ? 0.5 * a_ : 0.0;
      case Kind::Gamma:
        if (std::isinf(x)) return 0.0;
        if (x == 0.0) return a_ < 1.0 ? detail::kInf : (a_ == 1.0 ? 1.0 / b_ : 0.0);
        return boost::math::gamma_p_derivative(a_, x / b_) / b_;
    }
    return 0.0;
  }

  // Defined on the interior of the support only.
  double hazard(double x) const {
    detail::require_nonnegative(x);
    if (x >= support_end()) {
      throw DomainError("hazard evaluated at or beyond the support edge");
    }
    switch (kind_) {
      case Kind::Exponential: return a_;
      case Kind::Uniform: return 1.0 / (2.0 / a_ - x);
      case Kind::Gamma: {
        const double s = survival(x);
        if (s > 1e-300) return pdf(x) / s;
        // Far tail: h(x) ~ (1/b) / (1 - (a-1)/z).
        const double z = x / b_;
        return 1.0 / (b_ * (1.0 - (a_ - 1.0) / z));
      }
    }
    return 0.0;
  }

  double excess_life_cdf(double x) const {
    detail::require_nonnegative(x);
    switch (kind_) {
      case Kind::Exponential: return -std::expm1(-a_ * x);
      case Kind::Uniform: {
        if (x >= 2.0 / a_) return 1.0;
        return a_ * x - 0.25 * a_ * a_ * x * x;
      }
      case Kind::Gamma: {
        if (std::isinf(x)) return 1.0;
        // theta * int_0^x (1 - P(a, u/b)) du, integrated by parts.
        const double z = x / b_;
        return (z / a_) * boost::math::gamma_q(a_, z) + boost::math::gamma_p(a_ + 1.0, z);
      }
    }
    return 0.0;
  }

  double inverse_cdf(double p) const {
    detail::require_probability(p);
    if (p == 0.0) return 0.0;
    switch (kind_) {
      case Kind::Exponential: return -std::log1p(-p) / a_;
      case Kind::Uniform: return 2.0 * p / a_;
      case Kind::Gamma: {
        const double hi = upper_bracket([this](double x) { return cdf(x); }, p);
        return detail::solve_monotone([this](double x) { return cdf(x); },
                                      [this](double x) { return pdf(x); }, p, 0.0, hi,
                                      mean());
      }
    }
    return 0.0;
  }

  // `hint` is an optional starting point (e.g. the previous solution in an
  // integration loop); negative means none.
  double inverse_excess_life_cdf(double p, double hint = -1.0) const {
    detail::require_probability(p);
    if (p == 0.0) return 0.0;
    switch (kind_) {
      case Kind::Exponential: return -std::log1p(-p) / a_;
      case Kind::Uniform: return 2.0 * (1.0 - std::sqrt(1.0 - p)) / a_;
      case Kind::Gamma: {
        const double theta = rate();
        auto f = [this](double x) { return excess_life_cdf(x); };
        const double hi = upper_bracket(f, p, hint > 0.0 ? 2.0 * hint : mean());
        return detail::solve_monotone(f, [this, theta](double x) { return theta * survival(x); },
                                      p, 0.0, hi, hint > 0.0 ? hint : mean());
      }
    }
    return 0.0;
  }

  // 1 / h(G^{-1}(p)) for p in [0, 1], using the analytic limits at both ends.
  // This is the sensitivity -d q*/d(matched rate) of the invariant queue.
  double reciprocal_hazard_at_quantile(double p) const {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile level must lie in [0, 1]");
    switch (kind_) {
      case Kind::Exponential: return 1.0 / a_;
      case Kind::Uniform: return (2.0 / a_) * (1.0 - p);
      case Kind::Gamma: {
        if (p == 0.0) return a_ < 1.0 ? 0.0 : (a_ == 1.0 ? b_ : detail::kInf);
        if (p == 1.0 || 1.0 - p < 1e-300) return b_;
        const double x = inverse_cdf(p);
        return (1.0 - p) / pdf(x);
      }
    }
    return 0.0;
  }

  // Exact sampling: inverse transform for exponential and uniform, the
  // standard library's gamma generator otherwise.
  template <typename Rng>
  double sample(Rng& rng) const {
    switch (kind_) {
      case Kind::Exponential: {
        const double u = std::generate_canonical<double, 53>(rng);
        return -std::log1p(-u) / a_;
      }
      case Kind::Uniform: return (2.0 / a_) * std::generate_canonical<double, 53>(rng);
      case Kind::Gamma: return std::gamma_distribution<double>(a_, b_)(rng);
    }
    return 0.0;
  }

  std::string describe() const {
    std::ostringstream os;
    os.precision(10);
    switch (kind_) {
      case Kind::Exponential: os << "exponential(rate=" << a_ << ")"; break;
      case Kind::Uniform: os << "uniform(rate=" << a_ << ")"; break;
      case Kind::Gamma: os << "gamma(shape=" << a_ << ",scale=" << b_ << ")"; break;
    }
    return os.str();
  }

  friend bool operator==(const PatienceDistribution&, const PatienceDistribution&) = default;

 private:
  PatienceDistribution(Kind kind, double a, double b) : kind_(kind), a_(a), b_(b) {}

  static void check_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw DomainError(std::string(what) + " must be finite and > 0");
    }
  }

  template <typename F>
  double upper_bracket(F&& f, double p, double start = 0.0) const {
    double hi = std::max(start, 2.0 * mean());
    while (f(hi) <= p && hi < 1e300) hi *= 2.0;
    return hi;
  }

  Kind kind_;
  double a_;  // rate theta (exponential, uniform) or shape (gamma)
  double b_;  // gamma scale
};

inline const char* to_string(PatienceDistribution::Kind k) {
  switch (k) {
    case PatienceDistribution::Kind::Exponential: return "exponential";
    case PatienceDistribution::Kind::Uniform: return "uniform";
    case PatienceDistribution::Kind::Gamma: return "gamma";
  }
  return "?";
}

}  // namespace dynmatch
