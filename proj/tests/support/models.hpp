#ifndef PPL_TESTS_MODELS_HPP
#define PPL_TESTS_MODELS_HPP

// Example programs and closed-form answers used as test oracles.

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "ppl/ppl.hpp"

namespace models {

inline std::string program_path(const std::string& file) { return std::string(PPL_PROGRAMS_DIR) + "/" + file; }

inline std::string program_text(const std::string& file) {
  std::ifstream in(program_path(file));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ppl::Program load(const std::string& file) {
  return ppl::load_module(program_text(file), file)->only_query();
}

/// Log density of a bivariate normal.
inline double bivariate_normal_log_pdf(double x1, double x2, double m1, double m2, double v11, double v12,
                                       double v22) {
  double det = v11 * v22 - v12 * v12;
  double d1 = x1 - m1, d2 = x2 - m2;
  double q = (v22 * d1 * d1 - 2 * v12 * d1 * d2 + v11 * d2 * d2) / det;
  return -std::log(2 * M_PI) - 0.5 * std::log(det) - 0.5 * q;
}

/// Posterior probability that one customer made both deli orders. Under
/// "same", both delays share one Gaussian arrival time, so the pair is
/// bivariate normal; under "different" they are independent.
inline double deli_same_customer_probability() {
  const double mu = 10, sd_arrive = 3, sd_walk = 1, lunch = 13, dinner = 9, prior = 2.0 / 3.0;
  double var_prior = sd_arrive * sd_arrive, var_walk = sd_walk * sd_walk;
  double same = bivariate_normal_log_pdf(lunch, dinner, mu, mu, var_prior + var_walk, var_prior,
                                         var_prior + var_walk);
  double different = bivariate_normal_log_pdf(lunch, dinner, mu, mu, var_prior + var_walk, 0,
                                              var_prior + var_walk);
  double a = std::log(prior) + same, b = std::log(1 - prior) + different;
  return 1 / (1 + std::exp(b - a));
}

/// Normal(0, 1) prior, one unit-variance observation y: posterior N(y/2, 1/2).
inline constexpr double kConjugatePosteriorMean = 1.0;
inline const double kConjugatePosteriorSd = std::sqrt(0.5);

/// Exact posterior over [a b] for two-flips.anglican, by enumeration.
inline std::map<std::pair<bool, bool>, double> two_flips_posterior() {
  std::map<std::pair<bool, bool>, double> p;
  double z = 0;
  for (bool a : {false, true}) {
    for (bool b : {false, true}) {
      double w = (a ? 0.5 : 0.5) * (b ? 0.3 : 0.7) * ((a || b) ? 0.9 : 0.2);
      p[{a, b}] = w;
      z += w;
    }
  }
  for (auto& [k, v] : p) v /= z;
  return p;
}

}  // namespace models

#endif  // PPL_TESTS_MODELS_HPP
