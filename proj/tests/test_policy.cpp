#include <gtest/gtest.h>

#include <cmath>

#include "forage/datagen.hpp"
#include "forage/env.hpp"
#include "forage/policy.hpp"
#include "forage/rng.hpp"
#include "forage/text.hpp"
#include "oracles.hpp"

using namespace forage;

namespace {

struct World {
  Dataset ds;
  Corpus corpus;
};

const World& world() {
  static const World w = [] {
    GenConfig cfg;
    cfg.n_tasks = 20;
    World out{generate_dataset(cfg), {}};
    out.corpus = Corpus::build(out.ds.documents);
    return out;
  }();
  return w;
}

// A state one oracle search in, so discovered claims are nonempty.
EnvState mid_state(const EnvConfig& cfg) {
  const Task& task = world().ds.tasks[3];
  auto s = reset(task, world().corpus, cfg);
  const auto& c = task.hop_chain().claims[0];
  step(s, Action::search(*relation_index(c.relation), c.subject), world().corpus, cfg);
  return s;
}

std::set<std::string> content(const std::string& s) {
  std::set<std::string> out;
  for (const auto& w : oracle::words(s)) {
    if (!is_stopword(w)) out.insert(w);
  }
  return out;
}

double overlap_fraction(const std::set<std::string>& tokens, const std::set<std::string>& pool) {
  if (tokens.empty()) return 0.0;
  double hit = 0;
  for (const auto& t : tokens) hit += pool.count(t) ? 1 : 0;
  return hit / static_cast<double>(tokens.size());
}

}  // namespace

TEST(Features, FreshStateSearch) {
  const EnvConfig cfg;
  const auto s = reset(world().ds.tasks[0], world().corpus, cfg);
  const auto acts = legal_actions(s, cfg);
  const auto f = featurize(s, acts.front(), cfg);
  EXPECT_EQ(f[0], 1.0);
  EXPECT_EQ(f[1], 1.0);
  EXPECT_EQ(f[5], 0.0);
  EXPECT_EQ(f[7], 0.0);
  const auto g = featurize(s, acts.back(), cfg);
  EXPECT_EQ(acts.back().kind, ActionKind::Answer);
  EXPECT_EQ(g[1], 0.0);
}

TEST(Features, OverlapMatchesBruteForce) {
  const EnvConfig cfg;
  const auto s = mid_state(cfg);
  std::set<std::string> claim_tokens;
  for (const auto& c : s.discovered_claims) {
    for (const auto& t : content(c.subject + " " + c.relation + " " + c.object)) claim_tokens.insert(t);
  }
  const auto q = content(s.question);
  for (const auto& a : legal_actions(s, cfg)) {
    const auto f = featurize(s, a, cfg);
    const auto toks = content(a.kind == ActionKind::Search ? a.query() : a.entity);
    EXPECT_DOUBLE_EQ(f[2], overlap_fraction(toks, q)) << a.describe();
    EXPECT_DOUBLE_EQ(f[3], overlap_fraction(toks, claim_tokens)) << a.describe();
    for (double x : f) EXPECT_TRUE(std::isfinite(x));
    if (a.kind == ActionKind::Search) {
      EXPECT_EQ(f[5], 0.0);
      EXPECT_EQ(f[6], 0.0);
      EXPECT_EQ(f[7], 0.0);
    } else {
      EXPECT_DOUBLE_EQ(f[5], 1.0 / static_cast<double>(cfg.max_steps));
      EXPECT_DOUBLE_EQ(f[7], s.coverage());
      EXPECT_EQ(f[6], a.entity == s.frontier() ? 1.0 : 0.0);
    }
    EXPECT_EQ(featurize(s, a, cfg), f);
  }
}

TEST(Distribution, ZeroThetaIsUniform) {
  const EnvConfig cfg;
  const auto s = mid_state(cfg);
  const auto legal = legal_actions(s, cfg);
  const auto d = action_distribution(PolicyParams{}, s, legal, cfg);
  for (double p : d.probs) EXPECT_NEAR(p, 1.0 / static_cast<double>(legal.size()), 1e-15);
}

TEST(Distribution, MatchesDirectSoftmaxAndShift) {
  const EnvConfig cfg;
  const auto s = mid_state(cfg);
  const auto legal = legal_actions(s, cfg);
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    PolicyParams p;
    for (auto& t : p.theta) t = (rng.uniform() - 0.5) * 6;
    const auto d = action_distribution(p, s, legal, cfg);
    long double z = 0;
    std::vector<long double> e;
    for (const auto& a : legal) {
      e.push_back(std::exp(static_cast<long double>(dot(p.theta, featurize(s, a, cfg)))));
      z += e.back();
    }
    double sum = 0;
    for (std::size_t i = 0; i < legal.size(); ++i) {
      EXPECT_NEAR(d.probs[i], static_cast<double>(e[i] / z), 1e-12);
      EXPECT_NEAR(d.log_probs[i], std::log(d.probs[i]), 1e-12);
      EXPECT_GT(d.probs[i], 0.0);
      sum += d.probs[i];
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    // bias shifts every score equally
    PolicyParams shifted = p;
    shifted.theta[0] += 17.0;
    const auto d2 = action_distribution(shifted, s, legal, cfg);
    for (std::size_t i = 0; i < legal.size(); ++i) EXPECT_NEAR(d2.probs[i], d.probs[i], 1e-12);
  }
}

TEST(Sampling, SingleActionAndReproducible) {
  ActionDistribution one{{Action::answer("x")}, {1.0}, {0.0}};
  Rng rng(1);
  const auto s = sample_action(one, rng);
  EXPECT_EQ(s.index, 0u);
  EXPECT_EQ(s.log_prob, 0.0);

  ActionDistribution d{{Action::answer("a"), Action::answer("b"), Action::answer("c")},
                       {0.2, 0.5, 0.3},
                       {std::log(0.2), std::log(0.5), std::log(0.3)}};
  Rng r1(9), r2(9);
  for (int i = 0; i < 100; ++i) {
    const auto a = sample_action(d, r1);
    EXPECT_EQ(a.index, sample_action(d, r2).index);
    EXPECT_EQ(a.log_prob, d.log_probs[a.index]);
  }
}

TEST(Sampling, FrequenciesWithinThreeSigma) {
  const std::vector<double> p{0.1, 0.25, 0.05, 0.6};
  ActionDistribution d;
  for (std::size_t i = 0; i < p.size(); ++i) {
    d.actions.push_back(Action::answer(std::string(1, static_cast<char>('a' + i))));
    d.probs.push_back(p[i]);
    d.log_probs.push_back(std::log(p[i]));
  }
  Rng rng(2024);
  const int n = 100000;
  std::vector<int> counts(p.size(), 0);
  for (int i = 0; i < n; ++i) counts[sample_action(d, rng).index]++;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double sigma = std::sqrt(n * p[i] * (1 - p[i]));
    EXPECT_LE(std::abs(counts[i] - n * p[i]), 3 * sigma) << i;
  }
}

TEST(Value, LinearInW) {
  const EnvConfig cfg;
  const auto s = mid_state(cfg);
  EXPECT_EQ(value_estimate(PolicyParams{}, s, cfg), 0.0);
  PolicyParams a, b, ab;
  a.w = {0.3, -1.0, 2.0, 0.5};
  b.w = {-0.7, 0.25, 1.5, -2.0};
  for (std::size_t i = 0; i < kValueDim; ++i) ab.w[i] = a.w[i] + b.w[i];
  EXPECT_NEAR(value_estimate(ab, s, cfg), value_estimate(a, s, cfg) + value_estimate(b, s, cfg), 1e-12);
  const auto psi = value_features(s, cfg);
  EXPECT_EQ(psi[0], 1.0);
  EXPECT_DOUBLE_EQ(psi[1], 1.0 / static_cast<double>(cfg.max_steps));
  EXPECT_DOUBLE_EQ(psi[2], s.coverage());
  EXPECT_DOUBLE_EQ(psi[3], static_cast<double>(s.discovered_entities.size()) / static_cast<double>(cfg.max_steps + 1));
  long double direct = 0;
  for (std::size_t i = 0; i < kValueDim; ++i) direct += static_cast<long double>(a.w[i]) * psi[i];
  EXPECT_NEAR(value_estimate(a, s, cfg), static_cast<double>(direct), 1e-12);
}

TEST(Gradient, LogProbMatchesFiniteDifference) {
  const EnvConfig cfg;
  const auto s = mid_state(cfg);
  const auto legal = legal_actions(s, cfg);
  const auto feats = featurize_all(s, legal, cfg);
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    FeatureVector theta;
    for (auto& t : theta) t = rng.uniform() - 0.5;
    const std::size_t chosen = rng.below(legal.size());
    const auto g = grad_log_prob(theta, feats, chosen);
    for (std::size_t i = 0; i < kFeatureDim; ++i) {
      const double h = 1e-6;
      auto up = theta, down = theta;
      up[i] += h;
      down[i] -= h;
      const double fd = (log_softmax(up, feats)[chosen] - log_softmax(down, feats)[chosen]) / (2 * h);
      EXPECT_LE(std::abs(fd - g[i]), 1e-6 * std::max(1.0, std::abs(g[i]))) << i;
    }
  }
}
