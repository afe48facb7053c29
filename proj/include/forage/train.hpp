#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "forage/env.hpp"
#include "forage/policy.hpp"

namespace forage {

enum class RewardMode { TerminalOnly, ShapedGain };

struct TrainConfig {
  double gamma = 1.0;
  double lam = 0.95;
  double clip_eps = 0.2;
  double lr_policy = 0.05;
  double lr_value = 0.1;
  double lr_bc = 2.0;
  std::size_t iters = 300;
  std::size_t episodes_per_iter = 16;
  std::size_t bc_episodes = 50;  // expert episodes in the warm-start set
  std::size_t bc_steps = 50;     // full-batch behavior-cloning steps
  bool warm_start = true;
  std::size_t heldout = 50;      // trailing tasks kept out of training
  double value_coef = 0.5;
  double entropy_coef = 0.0;
  std::uint64_t seed = 42;
  RewardMode reward_mode = RewardMode::TerminalOnly;
  EnvConfig env;
};

void validate(const TrainConfig& cfg);

// One policy decision. Only model-chosen actions become samples; retrieved
// text never does.
struct StepSample {
  std::vector<FeatureVector> legal;  // features of every legal action
  std::size_t chosen = 0;
  double old_log_prob = 0.0;
  ValueFeatures value_features{};
  double value = 0.0;
  double reward = 0.0;
  double advantage = 0.0;
  double ret = 0.0;

  const FeatureVector& features() const { return legal[chosen]; }
};

struct TrainingEpisode {
  EpisodeRecord record;
  std::vector<StepSample> samples;
};

// Rolls out the log-linear policy, sampling when `rng` is given and acting
// greedily otherwise.
TrainingEpisode collect_episode(const Task& task, const Corpus& corpus, const PolicyParams& params,
                                const EnvConfig& cfg, Rng* rng);

// Per-step rewards. TerminalOnly puts R on the final step; ShapedGain pays
// alpha * efficiency * coverage gain on each search and takes the same amount
// off the final step, so both modes sum to R.
std::vector<double> assign_step_rewards(const EpisodeRecord& episode, RewardMode mode, const RewardConfig& cfg);

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// delta_t = r_t + gamma v_{t+1} - v_t with v_L = 0; A_t = sum (gamma lam)^l delta_{t+l}.
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values, double gamma, double lam);

struct LossAndGrad {
  double loss = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  FeatureVector grad_theta{};
  ValueFeatures grad_w{};
};

// Clipped-surrogate loss with per-batch advantage normalization, squared
// value error and an entropy bonus, plus analytic gradients.
LossAndGrad ppo_loss_and_grad(std::span<const StepSample> batch, const PolicyParams& params, const TrainConfig& cfg);

struct UpdateResult {
  PolicyParams params;
  LossAndGrad stats;  // evaluated at the pre-update params
};

// Assigns rewards, runs GAE and takes one gradient step.
UpdateResult ppo_update(const PolicyParams& params, std::vector<TrainingEpisode>& episodes, const TrainConfig& cfg);

struct BcSample {
  std::vector<FeatureVector> legal;
  std::size_t chosen = 0;
};

std::vector<BcSample> expert_samples(const std::vector<Task>& tasks, const Corpus& corpus, const EnvConfig& cfg);
double bc_nll(const PolicyParams& params, std::span<const BcSample> samples);
FeatureVector bc_grad(const PolicyParams& params, std::span<const BcSample> samples);
PolicyParams bc_update(const PolicyParams& params, std::span<const BcSample> samples, double lr);

struct TrainRow {
  std::size_t iter = 0;
  double mean_reward = 0.0;
  double mean_outcome = 0.0;
  double mean_gain = 0.0;
  double mean_T = 0.0;
  double heldout_em = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
};

struct TrainReport {
  double initial_heldout_em = 0.0;  // greedy, after warm start, before any update
  std::vector<TrainRow> rows;

  std::string to_csv() const;
  // First iteration whose held-out EM reaches `threshold`; 0 when the
  // starting policy already does.
  std::optional<std::size_t> first_iter_reaching(double threshold) const;
};

struct TrainResult {
  PolicyParams params;
  PolicyParams warm_start;
  TrainReport report;
};

// The trailing cfg.heldout tasks are held out; the rest are trained on.
std::pair<std::vector<Task>, std::vector<Task>> split_tasks(const std::vector<Task>& tasks, std::size_t heldout);

TrainResult train_loop(const std::vector<Task>& tasks, const Corpus& corpus, const TrainConfig& cfg,
                       const std::optional<std::vector<BcSample>>& warm_start = std::nullopt);

}  // namespace forage
