#ifndef PPL_TESTS_GOF_HPP
#define PPL_TESTS_GOF_HPP

// Goodness-of-fit checks against Boost.Math reference distributions.

#include <boost/math/distributions/chi_squared.hpp>

#include <functional>
#include <map>
#include <vector>

#include "ppl/ppl.hpp"

namespace gof {

/// Two-sided 5 sigma tail probability.
inline constexpr double kFiveSigma = 5.733e-7;

struct Result {
  double statistic;
  double df;
  double p_value;
};

inline double chi2_upper_tail(double statistic, double df) {
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(df), statistic));
}

/// Binned chi-square with `bins` equiprobable cells from the reference quantile.
inline Result continuous(const std::vector<double>& xs, const std::function<double(double)>& cdf, int bins = 50) {
  std::vector<double> counts(static_cast<std::size_t>(bins), 0);
  for (double x : xs) {
    auto b = static_cast<int>(cdf(x) * bins);
    counts[static_cast<std::size_t>(std::clamp(b, 0, bins - 1))] += 1;
  }
  double expected = static_cast<double>(xs.size()) / bins;
  double stat = 0;
  for (double c : counts) stat += (c - expected) * (c - expected) / expected;
  double df = bins - 1;
  return {stat, df, chi2_upper_tail(stat, df)};
}

/// Chi-square of observed value counts against an exact mass function.
inline Result discrete(const std::vector<ppl::Value>& xs, const std::vector<std::pair<ppl::Value, double>>& pmf) {
  std::map<ppl::Value, double, ppl::ValueLess> counts;
  for (const auto& x : xs) counts[x] += 1;
  double n = static_cast<double>(xs.size());
  double stat = 0;
  double seen = 0;
  int cells = 0;
  for (const auto& [v, p] : pmf) {
    if (p <= 0) continue;
    double c = counts.count(v) ? counts[v] : 0;
    seen += c;
    stat += (c - n * p) * (c - n * p) / (n * p);
    ++cells;
  }
  if (seen != n) return {INFINITY, 0, 0};  // values outside the support
  double df = std::max(cells - 1, 1);
  return {stat, df, chi2_upper_tail(stat, df)};
}

inline std::vector<double> draw_reals(const ppl::Distribution& d, std::size_t n, std::uint64_t seed) {
  ppl::Rng rng(seed);
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(d.sample(rng).to_double());
  return out;
}

inline std::vector<ppl::Value> draw_values(const ppl::Distribution& d, std::size_t n, std::uint64_t seed) {
  ppl::Rng rng(seed);
  std::vector<ppl::Value> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(d.sample(rng));
  return out;
}

}  // namespace gof

#endif  // PPL_TESTS_GOF_HPP
