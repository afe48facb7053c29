#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "forage/env.hpp"
#include "forage/rng.hpp"

namespace forage {

inline constexpr std::size_t kFeatureDim = 8;
inline constexpr std::size_t kValueDim = 4;
inline constexpr int kFeatureVersion = 1;

// Action features, in order:
//   0 bias
//   1 action type (search = 1, answer = 0)
//   2 fraction of the action's content tokens that occur in the question
//   3 fraction of the action's content tokens that occur in discovered claims
//   4 argument entity discovered but not yet queried
//   5 searches / max_steps            (answer actions only, else 0)
//   6 answer equals the frontier entity (answer actions only)
//   7 cumulative coverage             (answer actions only, else 0)
// State-level quantities are attached to answer actions only: a feature that
// is identical for every action cancels out of the softmax.
using FeatureVector = std::array<double, kFeatureDim>;

// Value features: bias, searches / max_steps, coverage,
// |discovered entities| / (max_steps + 1).
using ValueFeatures = std::array<double, kValueDim>;

struct PolicyParams {
  FeatureVector theta{};
  ValueFeatures w{};

  bool operator==(const PolicyParams&) const = default;
};

FeatureVector featurize(const EnvState& state, const Action& action, const EnvConfig& cfg);
std::vector<FeatureVector> featurize_all(const EnvState& state, std::span<const Action> actions,
                                         const EnvConfig& cfg);
ValueFeatures value_features(const EnvState& state, const EnvConfig& cfg);

struct ActionDistribution {
  std::vector<Action> actions;
  std::vector<double> probs;
  std::vector<double> log_probs;

  std::size_t argmax() const;
};

template <std::size_t N>
double dot(const std::array<double, N>& a, const std::array<double, N>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < N; ++i) s += a[i] * b[i];
  return s;
}

// Log-softmax of theta . phi over the rows, stabilized by subtracting the max.
std::vector<double> log_softmax(const FeatureVector& theta, std::span<const FeatureVector> features);

ActionDistribution action_distribution(const PolicyParams& params, const EnvState& state,
                                       const std::vector<Action>& legal, const EnvConfig& cfg);

struct SampledAction {
  std::size_t index = 0;
  Action action;
  double log_prob = 0.0;
};

// Inverse-CDF draw in action order.
SampledAction sample_action(const ActionDistribution& dist, Rng& rng);

double value_estimate(const PolicyParams& params, const EnvState& state, const EnvConfig& cfg);

// d/dtheta log pi(chosen) = phi(chosen) - sum_b pi(b) phi(b)
FeatureVector grad_log_prob(const FeatureVector& theta, std::span<const FeatureVector> features,
                            std::size_t chosen);

}  // namespace forage
