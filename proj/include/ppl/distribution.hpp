#ifndef PPL_DISTRIBUTION_HPP
#define PPL_DISTRIBUTION_HPP

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ppl/rng.hpp"
#include "ppl/value.hpp"

namespace ppl {

/// A distribution parameter outside its domain.
class DomainError : public EvalError {
 public:
  using EvalError::EvalError;
};

/// Primitive distribution: a sampler (`sample`) paired with a log-density or
/// log-mass function (`log_prob`). Out-of-support values score -infinity.
///
/// Parameter conventions: normal(mean, sd), gamma(shape, rate), beta(a, b),
/// flip(p) over booleans, bernoulli(p) over {0, 1}, categorical over
/// [value weight] pairs, discrete over 0..n-1, uniform-discrete over
/// [lo, hi), uniform-continuous over [lo, hi].
class Distribution {
 public:
  enum class Kind {
    Normal,
    Gamma,
    Beta,
    Flip,
    Bernoulli,
    Categorical,
    Discrete,
    UniformDiscrete,
    UniformContinuous
  };

  static DistPtr normal(double mean, double sd) {
    require(std::isfinite(mean), "normal", "mean must be finite");
    require(sd > 0 && std::isfinite(sd), "normal", "sd must be positive");
    return make(Kind::Normal, {mean, sd});
  }
  static DistPtr gamma(double shape, double rate) {
    require(shape > 0 && std::isfinite(shape), "gamma", "shape must be positive");
    require(rate > 0 && std::isfinite(rate), "gamma", "rate must be positive");
    return make(Kind::Gamma, {shape, rate});
  }
  static DistPtr beta(double a, double b) {
    require(a > 0 && std::isfinite(a), "beta", "a must be positive");
    require(b > 0 && std::isfinite(b), "beta", "b must be positive");
    return make(Kind::Beta, {a, b});
  }
  static DistPtr flip(double p) {
    require(p >= 0 && p <= 1, "flip", "p must lie in [0, 1]");
    return make(Kind::Flip, {p});
  }
  static DistPtr bernoulli(double p) {
    require(p >= 0 && p <= 1, "bernoulli", "p must lie in [0, 1]");
    return make(Kind::Bernoulli, {p});
  }
  /// Weights are normalized; repeated values keep separate entries.
  static DistPtr categorical(std::vector<std::pair<Value, double>> entries) {
    std::vector<double> weights;
    Items values;
    for (auto& [v, w] : entries) {
      values.push_back(std::move(v));
      weights.push_back(w);
    }
    normalize(weights, "categorical");
    return make(Kind::Categorical, std::move(weights), std::move(values));
  }
  static DistPtr discrete(std::vector<double> weights) {
    normalize(weights, "discrete");
    return make(Kind::Discrete, std::move(weights));
  }
  static DistPtr uniform_discrete(std::int64_t lo, std::int64_t hi) {
    require(lo < hi, "uniform-discrete", "lo must be less than hi");
    return make(Kind::UniformDiscrete, {static_cast<double>(lo), static_cast<double>(hi)});
  }
  static DistPtr uniform_continuous(double lo, double hi) {
    require(std::isfinite(lo) && std::isfinite(hi), "uniform-continuous",
            "bounds must be finite");
    require(lo < hi, "uniform-continuous", "lo must be less than hi");
    return make(Kind::UniformContinuous, {lo, hi});
  }

  Kind kind() const { return kind_; }
  const std::vector<double>& params() const { return params_; }
  /// Support values of a categorical distribution.
  const Items& values() const { return values_; }

  std::string name() const {
    switch (kind_) {
      case Kind::Normal: return "normal";
      case Kind::Gamma: return "gamma";
      case Kind::Beta: return "beta";
      case Kind::Flip: return "flip";
      case Kind::Bernoulli: return "bernoulli";
      case Kind::Categorical: return "categorical";
      case Kind::Discrete: return "discrete";
      case Kind::UniformDiscrete: return "uniform-discrete";
      case Kind::UniformContinuous: return "uniform-continuous";
    }
    return "?";
  }

  Value sample(Rng& rng) const {
    switch (kind_) {
      case Kind::Normal:
        return params_[0] + params_[1] * standard_normal(rng);
      case Kind::Gamma:
        return standard_gamma(params_[0], rng) / params_[1];
      case Kind::Beta: {
        double x = standard_gamma(params_[0], rng);
        double y = standard_gamma(params_[1], rng);
        return x / (x + y);
      }
      case Kind::Flip:
        return rng.uniform() < params_[0];
      case Kind::Bernoulli:
        return rng.uniform() < params_[0] ? 1 : 0;
      case Kind::Categorical:
        return values_[pick(rng)];
      case Kind::Discrete:
        return static_cast<std::int64_t>(pick(rng));
      case Kind::UniformDiscrete: {
        auto lo = static_cast<std::int64_t>(params_[0]);
        auto span = static_cast<std::uint64_t>(static_cast<std::int64_t>(params_[1]) - lo);
        return lo + static_cast<std::int64_t>(rng.below(span));
      }
      case Kind::UniformContinuous:
        return params_[0] + (params_[1] - params_[0]) * rng.uniform();
    }
    return Value();
  }

  double log_prob(const Value& v) const {
    constexpr double ninf = -std::numeric_limits<double>::infinity();
    switch (kind_) {
      case Kind::Normal: {
        if (!v.is_number()) return ninf;
        double z = (v.to_double() - params_[0]) / params_[1];
        return -0.5 * z * z - std::log(params_[1]) - 0.5 * std::log(2 * std::numbers::pi);
      }
      case Kind::Gamma: {
        if (!v.is_number()) return ninf;
        double x = v.to_double(), k = params_[0], rate = params_[1];
        if (x < 0) return ninf;
        if (x == 0) {
          if (k < 1) return std::numeric_limits<double>::infinity();
          return k == 1 ? std::log(rate) : ninf;
        }
        return k * std::log(rate) - std::lgamma(k) + (k - 1) * std::log(x) - rate * x;
      }
      case Kind::Beta: {
        if (!v.is_number()) return ninf;
        double x = v.to_double(), a = params_[0], b = params_[1];
        if (x < 0 || x > 1) return ninf;
        double lbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
        return (a - 1) * std::log(x) + (b - 1) * std::log1p(-x) - lbeta;
      }
      case Kind::Flip: {
        auto b = v.get_if<bool>();
        if (!b) return ninf;
        return std::log(*b ? params_[0] : 1 - params_[0]);
      }
      case Kind::Bernoulli: {
        auto i = v.get_if<std::int64_t>();
        if (!i) return ninf;
        if (*i == 1) return std::log(params_[0]);
        if (*i == 0) return std::log(1 - params_[0]);
        return ninf;
      }
      case Kind::Categorical: {
        double p = 0;
        for (std::size_t i = 0; i < values_.size(); ++i) {
          if (values_[i] == v) p += params_[i];
        }
        return std::log(p);
      }
      case Kind::Discrete: {
        auto i = v.get_if<std::int64_t>();
        if (!i || *i < 0 || static_cast<std::size_t>(*i) >= params_.size()) return ninf;
        return std::log(params_[static_cast<std::size_t>(*i)]);
      }
      case Kind::UniformDiscrete: {
        auto i = v.get_if<std::int64_t>();
        if (!i || *i < params_[0] || *i >= params_[1]) return ninf;
        return -std::log(params_[1] - params_[0]);
      }
      case Kind::UniformContinuous: {
        if (!v.is_number()) return ninf;
        double x = v.to_double();
        if (x < params_[0] || x > params_[1]) return ninf;
        return -std::log(params_[1] - params_[0]);
      }
    }
    return ninf;
  }

  /// Enumerates the support of finite discrete kinds.
  std::optional<Items> finite_support() const {
    switch (kind_) {
      case Kind::Flip:
        return Items{false, true};
      case Kind::Bernoulli:
        return Items{0, 1};
      case Kind::Categorical: {
        SetData distinct(values_.begin(), values_.end());
        return Items(distinct.begin(), distinct.end());
      }
      case Kind::Discrete: {
        Items out;
        for (std::size_t i = 0; i < params_.size(); ++i) out.emplace_back(static_cast<std::int64_t>(i));
        return out;
      }
      case Kind::UniformDiscrete: {
        Items out;
        for (auto i = static_cast<std::int64_t>(params_[0]); i < params_[1]; ++i) out.emplace_back(i);
        return out;
      }
      default:
        return std::nullopt;
    }
  }

  static double standard_normal(Rng& rng) {
    double u1 = rng.uniform_open();
    double u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2 * std::numbers::pi * u2);
  }

  /// Marsaglia-Tsang; shape < 1 is boosted via U^(1/shape).
  static double standard_gamma(double shape, Rng& rng) {
    if (shape < 1) {
      double u = rng.uniform_open();
      return standard_gamma(shape + 1, rng) * std::pow(u, 1 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1 / std::sqrt(9 * d);
    for (;;) {
      double x, v;
      do {
        x = standard_normal(rng);
        v = 1 + c * x;
      } while (v <= 0);
      v = v * v * v;
      double u = rng.uniform_open();
      if (u < 1 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1 - v + std::log(v))) return d * v;
    }
  }

 private:
  Distribution(Kind kind, std::vector<double> params, Items values)
      : kind_(kind), params_(std::move(params)), values_(std::move(values)) {}

  static DistPtr make(Kind kind, std::vector<double> params, Items values = {}) {
    return DistPtr(new Distribution(kind, std::move(params), std::move(values)));
  }

  static void require(bool ok, const char* dist, const char* what) {
    if (!ok) throw DomainError(std::string(dist) + ": " + what);
  }

  static void normalize(std::vector<double>& weights, const char* dist) {
    require(!weights.empty(), dist, "weights must not be empty");
    double total = 0;
    for (double w : weights) {
      require(w >= 0 && std::isfinite(w), dist, "weights must be non-negative");
      total += w;
    }
    require(total > 0, dist, "weights must have a positive sum");
    for (double& w : weights) w /= total;
  }

  std::size_t pick(Rng& rng) const {
    double u = rng.uniform();
    double acc = 0;
    for (std::size_t i = 0; i < params_.size(); ++i) {
      acc += params_[i];
      if (u < acc && params_[i] > 0) return i;
    }
    // Rounding left u above the cumulative sum; take the last positive entry.
    for (std::size_t i = params_.size(); i-- > 0;) {
      if (params_[i] > 0) return i;
    }
    return 0;
  }

  Kind kind_;
  std::vector<double> params_;
  Items values_;
};

/// Stateless random process: `produce` yields the distribution of the next
/// variable, `absorb` returns the process updated with an observed value.
class RandomProcess {
 public:
  enum class Kind { BetaBernoulli };

  static ProcPtr beta_bernoulli(double a, double b) {
    if (!(a > 0) || !(b > 0)) throw DomainError("beta-bernoulli: a and b must be positive");
    return ProcPtr(new RandomProcess(Kind::BetaBernoulli, {a, b}));
  }

  Kind kind() const { return kind_; }
  const std::vector<double>& params() const { return params_; }

  DistPtr produce() const {
    return Distribution::bernoulli(params_[0] / (params_[0] + params_[1]));
  }

  ProcPtr absorb(const Value& v) const {
    auto i = v.get_if<std::int64_t>();
    if (i && *i == 1) return beta_bernoulli(params_[0] + 1, params_[1]);
    if (i && *i == 0) return beta_bernoulli(params_[0], params_[1] + 1);
    throw EvalError("beta-bernoulli: cannot absorb " + to_string(v));
  }

 private:
  RandomProcess(Kind kind, std::vector<double> params) : kind_(kind), params_(std::move(params)) {}

  Kind kind_;
  std::vector<double> params_;
};

inline int compare_distributions(const Distribution& a, const Distribution& b) {
  if (a.kind() != b.kind()) return a.kind() < b.kind() ? -1 : 1;
  if (a.params() != b.params()) return a.params() < b.params() ? -1 : 1;
  const Items& va = a.values();
  const Items& vb = b.values();
  return detail::compare_ranges(va.begin(), va.end(), vb.begin(), vb.end());
}

inline int compare_processes(const RandomProcess& a, const RandomProcess& b) {
  if (a.kind() != b.kind()) return a.kind() < b.kind() ? -1 : 1;
  if (a.params() != b.params()) return a.params() < b.params() ? -1 : 1;
  return 0;
}

inline std::string describe(const Distribution& d) {
  std::string out = "(" + d.name();
  if (d.kind() == Distribution::Kind::Categorical) {
    out += " [";
    for (std::size_t i = 0; i < d.values().size(); ++i) {
      if (i) out += " ";
      out += "[" + to_string(d.values()[i]) + " " + format_real(d.params()[i]) + "]";
    }
    out += "]";
  } else if (d.kind() == Distribution::Kind::Discrete) {
    out += " [";
    for (std::size_t i = 0; i < d.params().size(); ++i) {
      if (i) out += " ";
      out += format_real(d.params()[i]);
    }
    out += "]";
  } else if (d.kind() == Distribution::Kind::UniformDiscrete) {
    out += " " + std::to_string(static_cast<std::int64_t>(d.params()[0])) + " " +
           std::to_string(static_cast<std::int64_t>(d.params()[1]));
  } else {
    for (double p : d.params()) out += " " + format_real(p);
  }
  return out + ")";
}

inline std::string describe(const RandomProcess& p) {
  return "(beta-bernoulli " + format_real(p.params()[0]) + " " + format_real(p.params()[1]) + ")";
}

}  // namespace ppl

#endif  // PPL_DISTRIBUTION_HPP
