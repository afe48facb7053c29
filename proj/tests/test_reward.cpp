#include <gtest/gtest.h>

#include <cmath>

#include "forage/error.hpp"
#include "forage/reward.hpp"
#include "forage/rng.hpp"

using namespace forage;

TEST(Metrics, ExactMatch) {
  EXPECT_EQ(exact_match("novak djokovic.", {"Novak Djokovic"}), 1.0);
  EXPECT_EQ(exact_match("", {"x"}), 0.0);
  EXPECT_EQ(exact_match("the answer", {"answer"}), 1.0);
  EXPECT_EQ(exact_match("b", {"a", "B!"}), 1.0);
}

TEST(Metrics, TokenF1) {
  EXPECT_EQ(token_f1("same words", {"same words"}), 1.0);
  EXPECT_EQ(token_f1("x y", {"z"}), 0.0);
  EXPECT_DOUBLE_EQ(token_f1("x y", {"y z"}), 0.5);
  // the leading article goes before counting: "a b" is just "b"
  EXPECT_DOUBLE_EQ(token_f1("a b", {"b c"}), 2.0 / 3.0);
  EXPECT_EQ(token_f1("", {"the"}), 1.0);  // both empty after normalization
  // multiset: pred x x y vs gold x y y -> overlap 2, P = R = 2/3
  EXPECT_DOUBLE_EQ(token_f1("x x y", {"x y y"}), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(token_f1("x y", {"q", "x y"}), 1.0);
}

TEST(Metrics, OutcomeReward) {
  RewardConfig em;
  RewardConfig f1;
  f1.outcome_metric = OutcomeMetric::TokenF1;
  EXPECT_EQ(outcome_reward("X", {"x"}, em), 1.0);
  EXPECT_EQ(outcome_reward("y", {"x"}, em), 0.0);
  EXPECT_DOUBLE_EQ(outcome_reward("x y", {"y z"}, f1), 0.5);
}

TEST(Gain, MaxOfCurve) {
  EXPECT_DOUBLE_EQ(information_gain_reward({{1.0 / 3, 2.0 / 3, 2.0 / 3}}), 2.0 / 3);
  EXPECT_EQ(information_gain_reward({}), 0.0);
  EXPECT_THROW(information_gain_reward({{0.5, 0.2}}), Error);
  Rng rng(9);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> v;
    double c = 0;
    for (std::uint64_t j = 0, n = 1 + rng.below(7); j < n; ++j) {
      c = std::min(1.0, c + rng.uniform() * 0.4);
      v.push_back(c);
    }
    EXPECT_EQ(information_gain_reward({v}), v.back());
  }
}

TEST(Efficiency, Examples) {
  EXPECT_EQ(efficiency_penalty(2, 0.95), 1.0);
  EXPECT_DOUBLE_EQ(efficiency_penalty(4, 0.95), 0.95 * 0.95);
  EXPECT_EQ(efficiency_penalty(1, 0.95), 1.0);
  EXPECT_THROW(efficiency_penalty(0, 0.95), Error);
}

TEST(Total, Examples) {
  const RewardConfig cfg;
  EXPECT_EQ(cfg.alpha, 0.2);
  EXPECT_EQ(cfg.beta, 0.95);
  EXPECT_NEAR(total_reward(1, 1, 2, cfg).total, 1.2, 1e-12);
  EXPECT_NEAR(total_reward(0, 0.5, 4, cfg).total, 0.9025 * 0.1, 1e-12);
  for (std::size_t t = 1; t < 10; ++t) EXPECT_EQ(total_reward(0, 0, t, cfg).total, 0.0);
  const auto b = total_reward(1, 0.5, 5, cfg);
  EXPECT_EQ(b.steps_T, 5u);
  EXPECT_DOUBLE_EQ(b.total, b.efficiency * (b.outcome + cfg.alpha * b.gain));
}

TEST(Total, Properties) {
  const RewardConfig cfg;
  Rng rng(4);
  for (int i = 0; i < 500; ++i) {
    const double o = rng.uniform(), g = rng.uniform();
    const std::size_t t = 1 + rng.below(8);
    const double r = total_reward(o, g, t, cfg).total;
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, 1 + cfg.alpha);
    EXPECT_GE(total_reward(std::min(1.0, o + 0.1), g, t, cfg).total, r);
    EXPECT_GE(total_reward(o, std::min(1.0, g + 0.1), t, cfg).total, r);
    if (t >= 2) EXPECT_LE(total_reward(o, g, t + 1, cfg).total, r);
  }
  RewardConfig flat = cfg;
  flat.beta = 1.0;
  EXPECT_EQ(total_reward(1, 1, 2, flat).total, total_reward(1, 1, 7, flat).total);
}

TEST(Total, ConfigValidation) {
  RewardConfig bad;
  bad.alpha = -0.1;
  EXPECT_THROW(validate(bad), Error);
  bad = {};
  bad.beta = 0.0;
  EXPECT_THROW(validate(bad), Error);
  bad = {};
  bad.alpha = 0.0;
  bad.beta = 1.0;
  EXPECT_NO_THROW(validate(bad));
}

TEST(Foraging, Examples) {
  const RewardConfig cfg;
  EXPECT_NEAR(foraging_objective(1, 1, 0, cfg), 1.2, 1e-12);
  EXPECT_NEAR(foraging_objective(1, 1, 3, cfg), 1.2 * 0.857375, 1e-12);
  RewardConfig a0 = cfg;
  a0.alpha = 0;
  EXPECT_DOUBLE_EQ(foraging_objective(1, 0.7, 3, a0), std::pow(0.95, 3));
}
