#include "forage/policy.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "forage/error.hpp"
#include "forage/text.hpp"

namespace forage {

namespace {

double overlap_fraction(const std::set<std::string>& tokens, const std::set<std::string>& against) {
  if (tokens.empty()) return 0.0;
  std::size_t hit = 0;
  for (const auto& t : tokens) hit += against.count(t);
  return static_cast<double>(hit) / static_cast<double>(tokens.size());
}

struct StateContext {
  std::set<std::string> question_tokens;
  std::set<std::string> claim_tokens;
  std::string frontier;
  double step_fraction = 0.0;
  double coverage = 0.0;
};

StateContext context_of(const EnvState& state, const EnvConfig& cfg) {
  StateContext ctx;
  ctx.question_tokens = content_tokens(state.question);
  for (const auto& c : state.discovered_claims) {
    for (auto& t : content_tokens(c.subject + " " + c.relation + " " + c.object)) {
      ctx.claim_tokens.insert(std::move(t));
    }
  }
  ctx.frontier = state.frontier();
  ctx.step_fraction = static_cast<double>(state.searches()) / static_cast<double>(cfg.max_steps);
  ctx.coverage = state.coverage();
  return ctx;
}

FeatureVector featurize_with(const StateContext& ctx, const EnvState& state, const Action& action) {
  const bool search = action.kind == ActionKind::Search;
  const auto tokens = content_tokens(search ? action.query() : action.entity);
  FeatureVector f{};
  f[0] = 1.0;
  f[1] = search ? 1.0 : 0.0;
  f[2] = overlap_fraction(tokens, ctx.question_tokens);
  f[3] = overlap_fraction(tokens, ctx.claim_tokens);
  f[4] = (state.discovered_entities.count(action.entity) && !state.queried_entities.count(action.entity)) ? 1.0 : 0.0;
  if (!search) {
    f[5] = ctx.step_fraction;
    f[6] = action.entity == ctx.frontier ? 1.0 : 0.0;
    f[7] = ctx.coverage;
  }
  return f;
}

}  // namespace

FeatureVector featurize(const EnvState& state, const Action& action, const EnvConfig& cfg) {
  return featurize_with(context_of(state, cfg), state, action);
}

std::vector<FeatureVector> featurize_all(const EnvState& state, std::span<const Action> actions,
                                         const EnvConfig& cfg) {
  const StateContext ctx = context_of(state, cfg);
  std::vector<FeatureVector> out;
  out.reserve(actions.size());
  for (const auto& a : actions) out.push_back(featurize_with(ctx, state, a));
  return out;
}

ValueFeatures value_features(const EnvState& state, const EnvConfig& cfg) {
  return ValueFeatures{
      1.0,
      static_cast<double>(state.searches()) / static_cast<double>(cfg.max_steps),
      state.coverage(),
      static_cast<double>(state.discovered_entities.size()) / static_cast<double>(cfg.max_steps + 1),
  };
}

std::size_t ActionDistribution::argmax() const {
  return static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

std::vector<double> log_softmax(const FeatureVector& theta, std::span<const FeatureVector> features) {
  require(!features.empty(), ErrorCode::kContract, "softmax over an empty action set");
  std::vector<double> scores(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) scores[i] = dot(theta, features[i]);
  const double m = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  for (double s : scores) z += std::exp(s - m);
  const double lse = m + std::log(z);
  for (double& s : scores) s -= lse;
  return scores;
}

ActionDistribution action_distribution(const PolicyParams& params, const EnvState& state,
                                       const std::vector<Action>& legal, const EnvConfig& cfg) {
  require(!legal.empty(), ErrorCode::kContract, "action_distribution needs legal actions");
  ActionDistribution d;
  d.actions = legal;
  const auto feats = featurize_all(state, legal, cfg);
  d.log_probs = log_softmax(params.theta, feats);
  d.probs.resize(d.log_probs.size());
  for (std::size_t i = 0; i < d.probs.size(); ++i) d.probs[i] = std::exp(d.log_probs[i]);
  return d;
}

SampledAction sample_action(const ActionDistribution& dist, Rng& rng) {
  require(!dist.probs.empty(), ErrorCode::kContract, "sampling from an empty distribution");
  const double u = rng.uniform();
  double cum = 0.0;
  std::size_t pick = dist.probs.size() - 1;
  for (std::size_t i = 0; i < dist.probs.size(); ++i) {
    cum += dist.probs[i];
    if (u < cum) {
      pick = i;
      break;
    }
  }
  return SampledAction{pick, dist.actions[pick], dist.log_probs[pick]};
}

double value_estimate(const PolicyParams& params, const EnvState& state, const EnvConfig& cfg) {
  return dot(params.w, value_features(state, cfg));
}

FeatureVector grad_log_prob(const FeatureVector& theta, std::span<const FeatureVector> features,
                            std::size_t chosen) {
  const auto logp = log_softmax(theta, features);
  FeatureVector g = features[chosen];
  for (std::size_t b = 0; b < features.size(); ++b) {
    const double p = std::exp(logp[b]);
    for (std::size_t i = 0; i < kFeatureDim; ++i) g[i] -= p * features[b][i];
  }
  return g;
}

}  // namespace forage
