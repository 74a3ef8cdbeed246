#include <gtest/gtest.h>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/uniform.hpp>

#include <cmath>
#include <random>

#include "support/gof.hpp"
#include "support/run.hpp"

using namespace ppl;
using testing_support::read_value;
using testing_support::result_of;

namespace {

constexpr std::size_t kDraws = 100000;
const double kInf = std::numeric_limits<double>::infinity();

Value kw(const char* k) { return Value(Keyword{k}); }

double total_mass(const Distribution& d) {
  auto support = d.finite_support();
  EXPECT_TRUE(support.has_value());
  double s = 0;
  for (const auto& v : *support) s += std::exp(d.log_prob(v));
  return s;
}

}  // namespace

TEST(Distribution, DocumentedPoints) {
  EXPECT_NEAR(Distribution::bernoulli(0.5)->log_prob(1), -0.6931471805599453, 1e-15);
  EXPECT_NEAR(Distribution::normal(0, 1)->log_prob(0.0), -0.9189385332046727, 1e-15);
  EXPECT_EQ(Distribution::bernoulli(0.3)->log_prob(7), -kInf);
  EXPECT_NEAR(Distribution::categorical({{kw("a"), 1}, {kw("b"), 3}})->log_prob(kw("b")), std::log(0.75), 1e-15);
  EXPECT_EQ(Distribution::flip(0.5)->log_prob(1), -kInf);
  EXPECT_EQ(Distribution::uniform_continuous(0, 1)->log_prob(2.0), -kInf);
  EXPECT_EQ(Distribution::gamma(2, 1)->log_prob(-1.0), -kInf);
  EXPECT_EQ(Distribution::normal(0, 1)->log_prob(kw("x")), -kInf);
}

TEST(Distribution, Supports) {
  Rng rng(5);
  auto flip = Distribution::flip(0.5);
  auto b1 = Distribution::bernoulli(1.0);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_TRUE(flip->sample(rng).is<bool>());
    EXPECT_EQ(b1->sample(rng), Value(1));
  }
  EXPECT_EQ(make_vector(*Distribution::uniform_discrete(0, 3)->finite_support()), read_value("[0 1 2]"));
}

TEST(Distribution, CategoricalValuesMayBeFunctions) {
  Value v = result_of("(sample (categorical [[normal 0.5] [gamma 0.5]]))");
  ASSERT_TRUE(v.is<FnPtr>());
  EXPECT_TRUE(v.as<FnPtr>()->name() == "normal" || v.as<FnPtr>()->name() == "gamma");
  EXPECT_EQ(result_of("(sample (categorical ['brown 0.5] ['brown 0.5]))"), Value(Symbol{"brown"}));
}

TEST(Distribution, DomainErrorsNameTheParameter) {
  auto message = [](auto f) {
    try {
      f();
    } catch (const DomainError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message([] { Distribution::normal(0, 0); }).find("sd"), std::string::npos);
  EXPECT_NE(message([] { Distribution::gamma(-1, 1); }).find("shape"), std::string::npos);
  EXPECT_NE(message([] { Distribution::gamma(1, 0); }).find("rate"), std::string::npos);
  EXPECT_NE(message([] { Distribution::beta(0, 1); }).find("a"), std::string::npos);
  EXPECT_NE(message([] { Distribution::flip(1.5); }).find("p"), std::string::npos);
  EXPECT_NE(message([] { Distribution::bernoulli(-0.1); }).find("p"), std::string::npos);
  EXPECT_NE(message([] { Distribution::discrete({0, 0}); }).find("weights"), std::string::npos);
  EXPECT_NE(message([] { Distribution::discrete({1, -1}); }).find("weights"), std::string::npos);
  EXPECT_NE(message([] { Distribution::uniform_discrete(3, 3); }).find("lo"), std::string::npos);
  EXPECT_NE(message([] { Distribution::uniform_continuous(1, 0); }).find("lo"), std::string::npos);
  EXPECT_THROW(testing_support::run_once("(normal 0 -1)"), RuntimeError);
}

TEST(DistributionGof, Normal) {
  auto xs = gof::draw_reals(*Distribution::normal(1.5, 2), kDraws, 11);
  boost::math::normal_distribution<> ref(1.5, 2);
  auto r = gof::continuous(xs, [&](double x) { return cdf(ref, x); });
  EXPECT_GT(r.p_value, gof::kFiveSigma) << r.statistic;
  EXPECT_NEAR(stat::mean(xs), 1.5, 5 * 2 / std::sqrt(kDraws));
  auto std_normal = gof::draw_reals(*Distribution::normal(0, 1), kDraws, 12);
  EXPECT_NEAR(stat::mean(std_normal), 0, 0.02);
}

TEST(DistributionGof, GammaShapeRate) {
  for (auto [shape, rate] : {std::pair{2.0, 3.0}, std::pair{0.5, 1.0}, std::pair{9.0, 0.5}}) {
    auto xs = gof::draw_reals(*Distribution::gamma(shape, rate), kDraws, 21);
    boost::math::gamma_distribution<> ref(shape, 1 / rate);
    auto r = gof::continuous(xs, [&](double x) { return cdf(ref, x); });
    EXPECT_GT(r.p_value, gof::kFiveSigma) << shape << " " << rate;
    EXPECT_NEAR(stat::mean(xs), shape / rate, 5 * std::sqrt(shape) / rate / std::sqrt(kDraws));
  }
}

TEST(DistributionGof, Beta) {
  for (auto [a, b] : {std::pair{2.0, 5.0}, std::pair{0.5, 0.5}}) {
    auto xs = gof::draw_reals(*Distribution::beta(a, b), kDraws, 31);
    boost::math::beta_distribution<> ref(a, b);
    auto r = gof::continuous(xs, [&](double x) { return cdf(ref, x); });
    EXPECT_GT(r.p_value, gof::kFiveSigma) << a << " " << b;
  }
}

TEST(DistributionGof, UniformContinuous) {
  auto xs = gof::draw_reals(*Distribution::uniform_continuous(-1, 3), kDraws, 41);
  boost::math::uniform_distribution<> ref(-1, 3);
  auto r = gof::continuous(xs, [&](double x) { return cdf(ref, x); });
  EXPECT_GT(r.p_value, gof::kFiveSigma);
}

TEST(DistributionGof, DiscreteKinds) {
  struct Case {
    DistPtr d;
    std::vector<std::pair<Value, double>> pmf;
  };
  std::vector<Case> cases{
      {Distribution::flip(0.3), {{true, 0.3}, {false, 0.7}}},
      {Distribution::bernoulli(0.7), {{1, 0.7}, {0, 0.3}}},
      {Distribution::categorical({{kw("a"), 1}, {kw("b"), 3}}), {{kw("a"), 0.25}, {kw("b"), 0.75}}},
      {Distribution::discrete({1, 2, 3, 4}), {{0, 0.1}, {1, 0.2}, {2, 0.3}, {3, 0.4}}},
      {Distribution::uniform_discrete(0, 3), {{0, 1.0 / 3}, {1, 1.0 / 3}, {2, 1.0 / 3}}},
  };
  std::uint64_t seed = 50;
  for (const auto& c : cases) {
    auto xs = gof::draw_values(*c.d, kDraws, ++seed);
    auto r = gof::discrete(xs, c.pmf);
    EXPECT_GT(r.p_value, gof::kFiveSigma) << describe(*c.d);
  }
  auto ud = gof::draw_values(*Distribution::uniform_discrete(0, 3), kDraws, 77);
  for (std::int64_t k = 0; k < 3; ++k) {
    double f = static_cast<double>(std::count(ud.begin(), ud.end(), Value(k))) / kDraws;
    EXPECT_NEAR(f, 1.0 / 3, 0.01);
  }
}

TEST(DistributionDensity, MatchesReference) {
  for (double x : {-3.0, -0.5, 0.0, 1.0, 4.2}) {
    EXPECT_NEAR(Distribution::normal(1, 2)->log_prob(x), std::log(pdf(boost::math::normal_distribution<>(1, 2), x)),
                1e-12);
  }
  for (double x : {0.1, 1.0, 2.5, 7.0}) {
    EXPECT_NEAR(Distribution::gamma(2.5, 3)->log_prob(x),
                std::log(pdf(boost::math::gamma_distribution<>(2.5, 1.0 / 3), x)), 1e-12);
  }
  for (double x : {0.05, 0.5, 0.9}) {
    EXPECT_NEAR(Distribution::beta(2, 5)->log_prob(x), std::log(pdf(boost::math::beta_distribution<>(2, 5), x)),
                1e-12);
  }
  EXPECT_NEAR(Distribution::uniform_continuous(-1, 3)->log_prob(0.0), std::log(0.25), 1e-15);
}

TEST(DistributionProperty, DiscreteNormalization) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 200; ++i) {
    double p = u(rng);
    EXPECT_NEAR(total_mass(*Distribution::flip(p)), 1, 1e-9);
    EXPECT_NEAR(total_mass(*Distribution::bernoulli(p)), 1, 1e-9);
    std::vector<double> w;
    std::vector<std::pair<Value, double>> entries;
    std::size_t n = 1 + rng() % 20;
    for (std::size_t j = 0; j < n; ++j) {
      w.push_back(u(rng) * 10 + 1e-3);
      entries.emplace_back(Value(static_cast<std::int64_t>(j)), w.back());
    }
    EXPECT_NEAR(total_mass(*Distribution::discrete(w)), 1, 1e-9);
    EXPECT_NEAR(total_mass(*Distribution::categorical(entries)), 1, 1e-9);
    auto lo = static_cast<std::int64_t>(rng() % 50) - 25;
    EXPECT_NEAR(total_mass(*Distribution::uniform_discrete(lo, lo + 1 + static_cast<std::int64_t>(rng() % 40))), 1,
                1e-9);
  }
}

TEST(RandomProcess, BetaBernoulli) {
  auto p = RandomProcess::beta_bernoulli(1, 1);
  EXPECT_EQ(compare_distributions(*p->produce(), *Distribution::bernoulli(0.5)), 0);
  auto q = p->absorb(1);
  EXPECT_EQ(q->params(), (std::vector<double>{2, 1}));
  EXPECT_EQ(p->params(), (std::vector<double>{1, 1}));  // unchanged
  auto r = q->absorb(1)->absorb(0);
  EXPECT_EQ(compare_distributions(*r->produce(), *Distribution::bernoulli(3.0 / 5.0)), 0);
  EXPECT_THROW(p->absorb(7), EvalError);
}

TEST(RandomProcess, ConjugacyProperty) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    double a = 1 + static_cast<double>(rng() % 5);
    double b = 1 + static_cast<double>(rng() % 5);
    auto proc = RandomProcess::beta_bernoulli(a, b);
    int k = static_cast<int>(rng() % 30), ones = 0;
    for (int j = 0; j < k; ++j) {
      int x = static_cast<int>(rng() % 2);
      ones += x;
      proc = proc->absorb(x);
    }
    EXPECT_EQ(proc->produce()->params()[0], (a + ones) / (a + b + k));
  }
}

TEST(RandomProcess, QueryLevelUse) {
  const char* src = R"(
    (defm sample-beta-binomial [n a b]
      (loop [process (beta-bernoulli a b)
             values []]
        (if (= (count values) n)
          values
          (let [dist (produce process)
                value (sample dist)]
            (recur (absorb process value)
                   (conj values value))))))
    (defquery q [n] (sample-beta-binomial n 1 1)))";
  EXPECT_EQ(result_of(src, read_value("[0]")), read_value("[]"));
  Value v = result_of(src, read_value("[20]"));
  EXPECT_EQ(seq_size(v), 20u);
}

TEST(State, Accessors) {
  State s0 = initial_state();
  EXPECT_EQ(s0.log_weight, 0.0);
  EXPECT_TRUE(s0.result.is_nil());
  EXPECT_TRUE(s0.mem->empty());
  EXPECT_EQ(retrieve_value(s0, {kw("k")}), Value());
  EXPECT_EQ(add_log_weight(s0, -1.5).log_weight, -1.5);
  State m = set_mem(s0, 1, {Value(2)}, Value(3));
  EXPECT_TRUE(in_mem(m, 1, {Value(2)}));
  EXPECT_EQ(get_mem(m, 1, {Value(2)}), Value(3));
  EXPECT_FALSE(in_mem(m, 2, {Value(2)}));
  EXPECT_EQ(set_result(s0, 5).result, Value(5));
}

TEST(State, MemIdsDoNotCollide) {
  State s = initial_state();
  for (std::int64_t id = 0; id < 4; ++id) {
    for (std::int64_t a = 0; a < 4; ++a) s = set_mem(s, id, {Value(a)}, Value(id * 10 + a));
  }
  for (std::int64_t id = 0; id < 4; ++id) {
    for (std::int64_t a = 0; a < 4; ++a) EXPECT_EQ(get_mem(s, id, {Value(a)}), Value(id * 10 + a));
  }
  EXPECT_EQ(s.mem->size(), 16u);
}

TEST(State, UpdatesNeverMutateTheOriginal) {
  State s = store_value(set_mem(initial_state(), 1, {}, Value(1)), {kw("a")}, Value(1));
  State snapshot = s;
  add_log_weight(s, 2);
  set_result(s, 9);
  set_mem(s, 1, {}, Value(2));
  set_mem(s, 2, {}, Value(2));
  store_value(s, {kw("c"), kw("d")}, Value(3));
  set_extra(s, "x", Value(1));
  EXPECT_EQ(s, snapshot);
}

TEST(Math, Primitives) {
  EXPECT_EQ(result_of("(exp 0)"), Value(1.0));
  EXPECT_NEAR(result_of("(log (exp 3.5))").to_double(), 3.5, 1e-12);
  EXPECT_EQ(result_of("(floor 1.9)"), Value(1.0));
  EXPECT_EQ(result_of("(abs -3)"), Value(3));
  EXPECT_NEAR(result_of("(sin 0.5)").to_double(), std::sin(0.5), 1e-15);
  EXPECT_EQ(result_of("(sqrt 9)"), Value(3.0));
  EXPECT_EQ(result_of("(pow 2 10)"), Value(1024.0));
  EXPECT_EQ(result_of("(Math/log 1)"), Value(0.0));
}

TEST(Values, NumericTower) {
  EXPECT_EQ(result_of("(= 1 1.0)"), Value(false));
  EXPECT_EQ(result_of("(== 1 1.0)"), Value(true));
  EXPECT_EQ(result_of("(/ 6 3)"), Value(2));
  EXPECT_EQ(result_of("(/ 1 2)"), Value(0.5));
  EXPECT_EQ(result_of("(+ 1 2.5)"), Value(3.5));
  EXPECT_THROW(result_of("(* 9223372036854775807 2)"), RuntimeError);
  EXPECT_THROW(result_of("(/ 1 0)"), RuntimeError);
  EXPECT_EQ(result_of("(/ 1.0 0)"), Value(kInf));
}

TEST(Values, SequencesAndCollections) {
  EXPECT_EQ(result_of("(= [1 2] '(1 2))"), Value(true));
  EXPECT_EQ(result_of("(conj [1] 2)"), read_value("[1 2]"));
  EXPECT_EQ(result_of("(conj '(1) 2)"), read_value("(2 1)"));
  EXPECT_EQ(result_of("(assoc {:a 1} :b 2)"), read_value("{:a 1 :b 2}"));
  EXPECT_EQ(result_of("(get-in {:a {:b 3}} [:a :b])"), Value(3));
  EXPECT_EQ(result_of("(contains? #{1 2} 2)"), Value(true));
  EXPECT_EQ(result_of("(range 3)"), read_value("(0 1 2)"));
  EXPECT_EQ(result_of("(rest [1])"), read_value("()"));
  EXPECT_EQ(result_of("(next [1])"), Value());
  EXPECT_EQ(result_of("(str \"a\" 1 :k)"), Value("a1:k"));
  EXPECT_EQ(result_of("(mean [1 2 3])"), Value(2.0));
  EXPECT_EQ(result_of("(frequencies [:a :b :a])"), read_value("{:a 2 :b 1}"));
}

TEST(Values, ObservePrimitive) {
  EXPECT_NEAR(result_of("(observe* (normal 0 1) 0)").to_double(), -0.9189385332046727, 1e-15);
}

TEST(RngContract, SameSeedSameSequence) {
  Rng a(99), b(99), c(100);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    auto x = a();
    EXPECT_EQ(x, b());
    differs = differs || x != c();
  }
  EXPECT_TRUE(differs);
  Rng parent(1);
  Rng child = parent.split();
  EXPECT_FALSE(child == parent);
}
