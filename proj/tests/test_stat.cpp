#include <gtest/gtest.h>

#include <random>

#include "support/models.hpp"

using namespace ppl;
using stat::WeightedSample;

namespace {

double as_real(const Value& v) { return v.to_double(); }

std::vector<WeightedSample> random_samples(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> n01;
  std::vector<WeightedSample> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({Value(n01(rng)), 4 * n01(rng)});
  return out;
}

}  // namespace

TEST(Stat, MeanAndStd) {
  EXPECT_EQ(stat::mean({1, 2, 3}), 2.0);
  EXPECT_EQ(stat::std({2, 2, 2}), 0.0);
  EXPECT_DOUBLE_EQ(stat::std({1, 3}), 1.0);  // population convention
  EXPECT_THROW(stat::mean({}), stat::StatError);
  EXPECT_THROW(stat::std({}), stat::StatError);
}

TEST(Stat, ImportanceSamplesOfANormal) {
  auto program = load_module("(sample (normal 5 2))", "<t>")->only_query();
  std::vector<double> xs;
  for (const auto& s : infer("importance", program, Value(), {.seed = 21})->take(10000)) {
    xs.push_back(s.result.to_double());
  }
  EXPECT_NEAR(stat::mean(xs), 5, 0.1);
  EXPECT_NEAR(stat::std(xs), 2, 0.1);
}

TEST(Stat, UniformWeightsReduceToMean) {
  std::vector<WeightedSample> s{{Value(1), -3}, {Value(2.5), -3}, {Value(4), -3}};
  EXPECT_DOUBLE_EQ(stat::weighted_mean(s, as_real), 2.5);
  EXPECT_DOUBLE_EQ(stat::ess(stat::log_weights_of(s)), 3.0);
}

TEST(Stat, WeightedEstimates) {
  std::vector<WeightedSample> s{{Value(0.0), std::log(1.0)}, {Value(10.0), std::log(3.0)}};
  EXPECT_DOUBLE_EQ(stat::weighted_mean(s, as_real), 7.5);
  EXPECT_NEAR(stat::weighted_std(s, as_real), std::sqrt(0.25 * 56.25 + 0.75 * 6.25), 1e-12);
  EXPECT_DOUBLE_EQ(stat::empirical_probability(s, [](const Value& v) { return v.to_double() > 5; }), 0.75);
  EXPECT_NEAR(stat::ess({0.0, std::log(3.0)}), 1 / (0.25 * 0.25 + 0.75 * 0.75), 1e-12);
}

TEST(Stat, ZeroWeightsAreErrors) {
  const double ninf = -std::numeric_limits<double>::infinity();
  std::vector<WeightedSample> s{{Value(1), ninf}, {Value(2), ninf}};
  EXPECT_THROW(stat::weighted_mean(s, as_real), stat::StatError);
  EXPECT_THROW(stat::ess({ninf}), stat::StatError);
  EXPECT_THROW(stat::weighted_mean({}, as_real), stat::StatError);
  // One surviving sample is enough.
  s.push_back({Value(5), 0});
  EXPECT_EQ(stat::weighted_mean(s, as_real), 5.0);
}

TEST(StatProperty, SelfNormalizationIgnoresConstantShifts) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> shift(-700, 700);
  for (int trial = 0; trial < 200; ++trial) {
    auto s = random_samples(rng, 1 + rng() % 40);
    auto shifted = s;
    double c = shift(rng);
    for (auto& x : shifted) x.log_weight += c;
    auto pos = [](const Value& v) { return v.to_double() > 0; };
    EXPECT_NEAR(stat::weighted_mean(shifted, as_real), stat::weighted_mean(s, as_real), 1e-9);
    EXPECT_NEAR(stat::empirical_probability(shifted, pos), stat::empirical_probability(s, pos), 1e-9);
    EXPECT_NEAR(stat::ess(stat::log_weights_of(shifted)), stat::ess(stat::log_weights_of(s)), 1e-9);
  }
}

TEST(StatProperty, Bounds) {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 200; ++trial) {
    auto s = random_samples(rng, 1 + rng() % 40);
    double ess = stat::ess(stat::log_weights_of(s));
    EXPECT_GE(ess, 1 - 1e-9);
    EXPECT_LE(ess, static_cast<double>(s.size()) + 1e-9);
    double p = stat::empirical_probability(s, [](const Value& v) { return v.to_double() > 0.3; });
    EXPECT_GE(p, 0);
    EXPECT_LE(p, 1);
  }
}

TEST(Histogram, SymmetricPoints) {
  auto h = stat::histogram({0, 1, 3, 4}, 2);
  ASSERT_EQ(h.size(), 2u);
  EXPECT_EQ(h[0].second, 2u);
  EXPECT_EQ(h[1].second, 2u);
  EXPECT_DOUBLE_EQ(h[0].first, 1.0);
  EXPECT_DOUBLE_EQ(h[1].first, 3.0);
}

TEST(Histogram, EdgeCases) {
  EXPECT_THROW(stat::histogram({1, 2}, 0), stat::StatError);
  EXPECT_TRUE(stat::histogram({}, 3).empty());
  auto h = stat::histogram({2, 2, 2}, 4);
  std::size_t total = 0;
  for (const auto& [c, n] : h) total += n;
  EXPECT_EQ(total, 3u);
}

TEST(HistogramProperty, CountsSumToInputLength) {
  std::mt19937_64 rng(33);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> xs(rng() % 200);
    for (auto& x : xs) x = n01(rng) * 100;
    int bins = 1 + static_cast<int>(rng() % 30);
    std::size_t total = 0;
    for (const auto& [c, n] : stat::histogram(xs, bins)) total += n;
    EXPECT_EQ(total, xs.size());
  }
}

TEST(Histogram, DeliArrivalTimeModeIsNearTheMean) {
  auto seq = infer("lmh", models::load("deli.anglican"), Value(), {.seed = 34});
  seq->drop(5000);
  std::vector<double> times;
  for (const auto& s : seq->take(30000)) {
    Value t = prim::get_in_coll(s.result, kw("times-to-arrive"), Value());
    times.push_back(seq_items(t)[0].to_double());
  }
  auto h = stat::histogram(times, 20);
  double width = h[1].first - h[0].first;
  auto mode = std::max_element(h.begin(), h.end(), [](auto& a, auto& b) { return a.second < b.second; });
  EXPECT_NEAR(mode->first, stat::mean(times), width);
  // Unimodal up to sampling noise: no bin away from the mode beats its
  // nearer neighbour by more than a few standard errors.
  auto m = static_cast<std::size_t>(mode - h.begin());
  for (std::size_t i = 0; i + 1 < h.size(); ++i) {
    auto [near, far] = i < m ? std::pair{h[i + 1].second, h[i].second} : std::pair{h[i].second, h[i + 1].second};
    EXPECT_LE(static_cast<double>(far), static_cast<double>(near) + 4 * std::sqrt(static_cast<double>(far) + 1))
        << i;
  }
}

TEST(Stat, DeliSameCustomerFrequency) {
  auto seq = infer("lmh", models::load("deli.anglican"), Value(), {.seed = 35});
  seq->drop(5000);
  auto samples = stat::from_states(seq->take(50000));
  double p = stat::empirical_probability(
      samples, [](const Value& r) { return prim::get_in_coll(r, kw("same-customer"), Value()).truthy(); });
  EXPECT_NEAR(p, 0.12, 0.03);
}
