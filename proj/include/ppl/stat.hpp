#ifndef PPL_STAT_HPP
#define PPL_STAT_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ppl/state.hpp"
#include "ppl/value.hpp"

namespace ppl::stat {

class StatError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct WeightedSample {
  Value result;
  double log_weight = 0.0;
};

inline std::vector<WeightedSample> from_states(const std::vector<State>& states) {
  std::vector<WeightedSample> out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back({s.result, s.log_weight});
  return out;
}

inline double log_sum_exp(const std::vector<double>& xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

inline double mean(const std::vector<double>& xs) {
  if (xs.empty()) throw StatError("mean of empty input");
  double s = 0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

/// Population standard deviation (divisor n).
inline double std(const std::vector<double>& xs) {
  double m = mean(xs);
  double ss = 0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

/// Self-normalized weights exp(w_i - logsumexp(w)).
inline std::vector<double> normalized_weights(const std::vector<double>& log_weights) {
  double total = log_sum_exp(log_weights);
  if (!(total > -std::numeric_limits<double>::infinity())) {
    throw StatError("all weights are zero");
  }
  std::vector<double> w;
  w.reserve(log_weights.size());
  for (double lw : log_weights) w.push_back(std::exp(lw - total));
  return w;
}

inline std::vector<double> log_weights_of(const std::vector<WeightedSample>& samples) {
  std::vector<double> lw;
  lw.reserve(samples.size());
  for (const auto& s : samples) lw.push_back(s.log_weight);
  return lw;
}

inline double weighted_mean(const std::vector<WeightedSample>& samples,
                            const std::function<double(const Value&)>& f) {
  auto w = normalized_weights(log_weights_of(samples));
  double total = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (w[i] > 0) total += w[i] * f(samples[i].result);
  }
  return total;
}

/// Weighted standard deviation of f (population convention).
inline double weighted_std(const std::vector<WeightedSample>& samples,
                           const std::function<double(const Value&)>& f) {
  auto w = normalized_weights(log_weights_of(samples));
  double m = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (w[i] > 0) m += w[i] * f(samples[i].result);
  }
  double var = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (w[i] > 0) {
      double d = f(samples[i].result) - m;
      var += w[i] * d * d;
    }
  }
  return std::sqrt(var);
}

inline double empirical_probability(const std::vector<WeightedSample>& samples,
                                    const std::function<bool(const Value&)>& pred) {
  return weighted_mean(samples, [&](const Value& v) { return pred(v) ? 1.0 : 0.0; });
}

/// Effective sample size (sum w)^2 / sum w^2.
inline double ess(const std::vector<double>& log_weights) {
  auto w = normalized_weights(log_weights);
  double sq = 0;
  for (double x : w) sq += x * x;
  return 1.0 / sq;
}

/// Equal-width bins spanning [min, max]: (bin center, count) pairs.
inline std::vector<std::pair<double, std::size_t>> histogram(const std::vector<double>& xs, int bins) {
  if (bins < 1) throw StatError("histogram needs at least one bin");
  std::vector<std::pair<double, std::size_t>> out;
  if (xs.empty()) return out;
  auto [lo_it, hi_it] = std::minmax_element(xs.begin(), xs.end());
  double lo = *lo_it, hi = *hi_it;
  double width = (hi - lo) / bins;
  std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
  for (double x : xs) {
    auto b = width > 0 ? static_cast<std::size_t>((x - lo) / width) : 0;
    counts[std::min(b, counts.size() - 1)]++;
  }
  for (int i = 0; i < bins; ++i) {
    out.emplace_back(lo + (i + 0.5) * width, counts[static_cast<std::size_t>(i)]);
  }
  return out;
}

}  // namespace ppl::stat

#endif  // PPL_STAT_HPP
