#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "d2d/errors.hpp"
#include "d2d/strategy.hpp"
#include "oracles.hpp"

using namespace d2d;

namespace {

std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t n) {
  std::exponential_distribution<double> ex(1.0);
  std::vector<double> p(n);
  double s = 0.0;
  for (auto& v : p) s += (v = ex(rng) + 1e-3);
  for (auto& v : p) v /= s;
  return p;
}

OptionSet random_nonempty_subset(std::mt19937_64& rng, std::size_t n) {
  OptionSet s;
  std::bernoulli_distribution coin(0.5);
  while (s.empty())
    for (std::size_t k = 0; k < n; ++k)
      if (coin(rng)) s.insert(static_cast<int>(k));
  return s;
}

}  // namespace

TEST(MixedStrategy, ValidatesEntries) {
  EXPECT_NO_THROW(MixedStrategy({0.3, 0.7}));
  EXPECT_NO_THROW(MixedStrategy({0.3, 0.7 + 5e-10}));
  EXPECT_THROW(MixedStrategy({0.3, 0.6}), DomainError);
  EXPECT_THROW(MixedStrategy({-0.1, 1.1}), DomainError);
  EXPECT_THROW(MixedStrategy(std::vector<double>{}), DomainError);
  EXPECT_EQ(MixedStrategy::uniform(4).probs(), std::vector<double>(4, 0.25));
  EXPECT_EQ(MixedStrategy::pure(3, 2).probs(), (std::vector<double>{0, 0, 1}));
}

TEST(MixedStrategy, FormatAndFlows) {
  EXPECT_EQ(format_strategy(MixedStrategy({0.25, 0.75})), "[0.250000, 0.750000]");
  EXPECT_EQ(format_strategy(MixedStrategy({0.25, 0.75}), 2), "[0.25, 0.75]");
  EXPECT_EQ(flows_from_strategy(10.0, MixedStrategy({0.25, 0.75})), (std::vector<double>{2.5, 7.5}));
  EXPECT_DOUBLE_EQ(l1_distance(MixedStrategy({0.25, 0.75}), MixedStrategy({0.5, 0.5})), 0.5);
}

TEST(Rule1, HandValues) {
  const auto a = rule1_update(MixedStrategy({0.5, 0.5}), {0}, 0.5);
  EXPECT_NEAR(a[0], 0.75, 1e-9);
  EXPECT_NEAR(a[1], 0.25, 1e-9);
  const auto b = rule1_update(MixedStrategy({0.2, 0.3, 0.5}), {0, 2}, 0.5);
  // s = 0.7 grows to 0.85.
  EXPECT_NEAR(b[0], 0.2 * 0.85 / 0.7, 1e-9);
  EXPECT_NEAR(b[1], 0.15, 1e-9);
  EXPECT_NEAR(b[2], 0.5 * 0.85 / 0.7, 1e-9);
}

TEST(Rule1, SingletonIsConvexStepTowardVertex) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto p = random_simplex(rng, 4);
    const int k = static_cast<int>(rng() % 4);
    const double eta = std::uniform_real_distribution<double>(0.01, 0.99)(rng);
    const auto q = rule1_update(MixedStrategy(p), {k}, eta);
    for (std::size_t j = 0; j < 4; ++j)
      EXPECT_NEAR(q[j], (1 - eta) * p[j] + (static_cast<int>(j) == k ? eta : 0.0), 1e-14);
  }
}

TEST(Rule1, ZeroMassIsDomainError) {
  EXPECT_THROW(rule1_update(MixedStrategy({1.0, 0.0}), {1}, 0.5), DomainError);
  EXPECT_THROW(rule1_update(MixedStrategy({0.5, 0.5}), {}, 0.5), DomainError);
  EXPECT_THROW(rule1_update(MixedStrategy({0.5, 0.5}), {2}, 0.5), DomainError);
  EXPECT_THROW(rule1_update(MixedStrategy({0.5, 0.5}), {0}, 1.0), DomainError);
}

TEST(Rule2, HandValue) {
  const auto a = rule2_update(MixedStrategy({0.25, 0.75}), {0}, 0.5);
  const double e = std::exp(0.5);
  EXPECT_NEAR(a[0], e / (e + 3.0), 1e-9);
  EXPECT_NEAR(a[1], 3.0 / (e + 3.0), 1e-9);
  // Zero entries stay zero.
  const auto b = rule2_update(MixedStrategy({0.0, 1.0}), {0}, 0.5);
  EXPECT_EQ(b[0], 0.0);
}

TEST(Rules, AgreeWithOracles) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 500; ++i) {
    const std::size_t n = 2 + rng() % 5;
    const auto p = random_simplex(rng, n);
    const auto K = random_nonempty_subset(rng, n);
    const double eta = std::uniform_real_distribution<double>(0.01, 0.99)(rng);
    EXPECT_LT(oracle::max_abs_diff(rule1_update(MixedStrategy(p), K, eta).probs(),
                                   oracle::rule1(p, K, eta)), 1e-14);
    EXPECT_LT(oracle::max_abs_diff(rule2_update(MixedStrategy(p), K, eta).probs(),
                                   oracle::rule2(p, K, eta)), 1e-14);
  }
}

TEST(Rules, MovementBoundAndMonotonicity) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    const std::size_t n = 2 + rng() % 4;
    const MixedStrategy p(random_simplex(rng, n));
    auto K = random_nonempty_subset(rng, n);
    const double eta = std::uniform_real_distribution<double>(0.01, 0.99)(rng);
    for (auto rule : {UpdateRule::rule1, UpdateRule::rule2}) {
      const auto q = apply_rule(rule, p, K, eta);
      EXPECT_LE(l1_distance(p, q), 2.0 * eta + 1e-12);
      double s = 0.0, s_new = 0.0;
      for (int k : K) s += p[k], s_new += q[k];
      EXPECT_GE(s_new, s - 1e-15);
    }
  }
}

TEST(Propensity, SoftmaxFormMatchesRule2) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 300; ++i) {
    const std::size_t n = 2 + rng() % 5;
    const auto p = random_simplex(rng, n);
    const auto K = random_nonempty_subset(rng, n);
    const double eta = std::uniform_real_distribution<double>(0.01, 0.99)(rng);
    std::vector<double> q(n);
    for (std::size_t k = 0; k < n; ++k) q[k] = std::log(p[k]) + 1.7;  // any shift
    const auto viaq = softmax(propensity_update(q, K, eta));
    EXPECT_LT(oracle::max_abs_diff(viaq.probs(), rule2_update(MixedStrategy(p), K, eta).probs()),
              1e-12);
  }
}

TEST(Schedule, HarmonicAndConstant) {
  StepSchedule s;
  for (int t = 0; t < 50; ++t) EXPECT_DOUBLE_EQ(s.at(t), 1.0 / (t + 2.0));
  StepSchedule c{StepSchedule::Kind::constant, 0.2, 2};
  EXPECT_DOUBLE_EQ(c.at(0), 0.2);
  EXPECT_DOUBLE_EQ(c.at(100), 0.2);
  StepSchedule bad{StepSchedule::Kind::harmonic, 1.0, 2};
  EXPECT_THROW(bad.validate(), ConfigError);
  EXPECT_THROW(s.at(-1), DomainError);
  EXPECT_EQ(parse_schedule_kind("constant"), StepSchedule::Kind::constant);
  EXPECT_EQ(parse_update_rule("rule2"), UpdateRule::rule2);
  EXPECT_THROW(parse_update_rule("rule3"), ConfigError);
}
