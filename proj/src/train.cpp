#include "forage/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "forage/error.hpp"

namespace forage {

namespace {

template <std::size_t N>
bool all_finite(const std::array<double, N>& a) {
  return std::all_of(a.begin(), a.end(), [](double x) { return std::isfinite(x); });
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

void validate(const TrainConfig& cfg) {
  require(cfg.gamma > 0.0 && cfg.gamma <= 1.0, ErrorCode::kInvalidArgument, "gamma must lie in (0, 1]");
  require(cfg.lam >= 0.0 && cfg.lam <= 1.0, ErrorCode::kInvalidArgument, "lambda must lie in [0, 1]");
  require(cfg.clip_eps > 0.0 && cfg.clip_eps < 1.0, ErrorCode::kInvalidArgument, "clip_eps must lie in (0, 1)");
  require(cfg.episodes_per_iter > 0, ErrorCode::kInvalidArgument, "episodes_per_iter must be positive");
  require(cfg.lr_policy >= 0.0 && cfg.lr_value >= 0.0 && cfg.lr_bc >= 0.0, ErrorCode::kInvalidArgument,
          "learning rates must be non-negative");
  validate(cfg.env);
}

TrainingEpisode collect_episode(const Task& task, const Corpus& corpus, const PolicyParams& params,
                                const EnvConfig& cfg, Rng* rng) {
  TrainingEpisode out;
  Actor actor = [&](const EnvState& state, const std::vector<Action>& actions) {
    StepSample s;
    s.legal = featurize_all(state, actions, cfg);
    const auto logp = log_softmax(params.theta, s.legal);
    if (rng) {
      const double u = rng->uniform();
      double cum = 0.0;
      s.chosen = logp.size() - 1;
      for (std::size_t i = 0; i < logp.size(); ++i) {
        cum += std::exp(logp[i]);
        if (u < cum) {
          s.chosen = i;
          break;
        }
      }
    } else {
      s.chosen = static_cast<std::size_t>(std::max_element(logp.begin(), logp.end()) - logp.begin());
    }
    s.old_log_prob = logp[s.chosen];
    s.value_features = value_features(state, cfg);
    s.value = dot(params.w, s.value_features);
    Decision d{s.chosen, s.old_log_prob, s.value};
    out.samples.push_back(std::move(s));
    return d;
  };
  out.record = run_episode(task, corpus, cfg, actor);
  return out;
}

std::vector<double> assign_step_rewards(const EpisodeRecord& episode, RewardMode mode, const RewardConfig& cfg) {
  const std::size_t n = episode.steps.empty() ? episode.reward.steps_T : episode.steps.size();
  require(n >= 1, ErrorCode::kContract, "episode without steps");
  std::vector<double> r(n, 0.0);
  if (mode == RewardMode::TerminalOnly) {
    r.back() = episode.reward.total;
    return r;
  }
  const auto& curve = episode.reward.curve.values;
  double shaped = 0.0;
  double prev = 0.0;
  for (std::size_t t = 0; t < curve.size() && t + 1 < n; ++t) {
    r[t] = cfg.alpha * episode.reward.efficiency * (curve[t] - prev);
    shaped += r[t];
    prev = curve[t];
  }
  r.back() = episode.reward.total - shaped;
  return r;
}

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values, double gamma, double lam) {
  require(rewards.size() == values.size(), ErrorCode::kContract,
          "compute_gae: " + std::to_string(rewards.size()) + " rewards vs " + std::to_string(values.size()) +
              " values");
  const std::size_t n = rewards.size();
  GaeResult g;
  g.advantages.assign(n, 0.0);
  g.returns.assign(n, 0.0);
  double running = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const double next_v = t + 1 < n ? values[t + 1] : 0.0;
    const double delta = rewards[t] + gamma * next_v - values[t];
    running = delta + gamma * lam * running;
    g.advantages[t] = running;
    g.returns[t] = running + values[t];
  }
  return g;
}

LossAndGrad ppo_loss_and_grad(std::span<const StepSample> batch, const PolicyParams& params, const TrainConfig& cfg) {
  require(!batch.empty(), ErrorCode::kContract, "ppo_loss_and_grad on an empty batch");
  const double n = static_cast<double>(batch.size());

  double adv_mean = 0.0;
  for (const auto& s : batch) adv_mean += s.advantage;
  adv_mean /= n;
  double adv_var = 0.0;
  for (const auto& s : batch) adv_var += (s.advantage - adv_mean) * (s.advantage - adv_mean);
  const double adv_std = std::max(std::sqrt(adv_var / n), 1e-8);

  LossAndGrad out;
  FeatureVector g_obj{}, g_ent{};
  ValueFeatures g_val{};
  double obj_sum = 0.0, val_sum = 0.0, ent_sum = 0.0;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const StepSample& s = batch[k];
    const double adv = (s.advantage - adv_mean) / adv_std;
    const auto logp = log_softmax(params.theta, s.legal);

    FeatureVector mean_phi{};
    double entropy = 0.0;
    for (std::size_t b = 0; b < s.legal.size(); ++b) {
      const double p = std::exp(logp[b]);
      entropy -= p * logp[b];
      for (std::size_t i = 0; i < kFeatureDim; ++i) mean_phi[i] += p * s.legal[b][i];
    }
    FeatureVector dent{};
    for (std::size_t b = 0; b < s.legal.size(); ++b) {
      const double p = std::exp(logp[b]);
      for (std::size_t i = 0; i < kFeatureDim; ++i) dent[i] -= p * (s.legal[b][i] - mean_phi[i]) * logp[b];
    }

    const double ratio = std::exp(logp[s.chosen] - s.old_log_prob);
    const double clipped = std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
    const double surr1 = ratio * adv;
    const double surr2 = clipped * adv;
    const double v = dot(params.w, s.value_features);
    const double verr = v - s.ret;

    if (!std::isfinite(ratio) || !std::isfinite(surr1) || !std::isfinite(v) || !std::isfinite(entropy)) {
      fail(ErrorCode::kNumerical, "non-finite loss term at sample " + std::to_string(k));
    }

    obj_sum += std::min(surr1, surr2);
    if (surr1 <= surr2) {
      for (std::size_t i = 0; i < kFeatureDim; ++i) {
        g_obj[i] += adv * ratio * (s.legal[s.chosen][i] - mean_phi[i]);
      }
    }
    ent_sum += entropy;
    for (std::size_t i = 0; i < kFeatureDim; ++i) g_ent[i] += dent[i];
    val_sum += verr * verr;
    for (std::size_t i = 0; i < kValueDim; ++i) g_val[i] += 2.0 * verr * s.value_features[i];
  }

  out.policy_loss = -obj_sum / n;
  out.value_loss = val_sum / n;
  out.entropy = ent_sum / n;
  out.loss = out.policy_loss + cfg.value_coef * out.value_loss - cfg.entropy_coef * out.entropy;
  for (std::size_t i = 0; i < kFeatureDim; ++i) {
    out.grad_theta[i] = -g_obj[i] / n - cfg.entropy_coef * g_ent[i] / n;
  }
  for (std::size_t i = 0; i < kValueDim; ++i) out.grad_w[i] = cfg.value_coef * g_val[i] / n;
  if (!std::isfinite(out.loss) || !all_finite(out.grad_theta) || !all_finite(out.grad_w)) {
    fail(ErrorCode::kNumerical, "non-finite PPO loss or gradient");
  }
  return out;
}

UpdateResult ppo_update(const PolicyParams& params, std::vector<TrainingEpisode>& episodes, const TrainConfig& cfg) {
  require(!episodes.empty(), ErrorCode::kContract, "ppo_update on an empty episode batch");
  std::vector<StepSample> batch;
  for (auto& ep : episodes) {
    const auto rewards = assign_step_rewards(ep.record, cfg.reward_mode, cfg.env.reward);
    require(rewards.size() == ep.samples.size(), ErrorCode::kContract, "episode samples and rewards disagree");
    std::vector<double> values;
    for (const auto& s : ep.samples) values.push_back(s.value);
    const GaeResult g = compute_gae(rewards, values, cfg.gamma, cfg.lam);
    for (std::size_t t = 0; t < ep.samples.size(); ++t) {
      ep.samples[t].reward = rewards[t];
      ep.samples[t].advantage = g.advantages[t];
      ep.samples[t].ret = g.returns[t];
      batch.push_back(ep.samples[t]);
    }
  }
  UpdateResult out;
  out.stats = ppo_loss_and_grad(batch, params, cfg);
  out.params = params;
  for (std::size_t i = 0; i < kFeatureDim; ++i) out.params.theta[i] -= cfg.lr_policy * out.stats.grad_theta[i];
  for (std::size_t i = 0; i < kValueDim; ++i) out.params.w[i] -= cfg.lr_value * out.stats.grad_w[i];
  return out;
}

std::vector<BcSample> expert_samples(const std::vector<Task>& tasks, const Corpus& corpus, const EnvConfig& cfg) {
  std::vector<BcSample> out;
  for (const auto& task : tasks) {
    Actor actor = [&](const EnvState& state, const std::vector<Action>& actions) {
      BcSample s;
      s.legal = featurize_all(state, actions, cfg);
      s.chosen = oracle_choice(task, state, actions);
      out.push_back(std::move(s));
      return Decision{out.back().chosen, 0.0, 0.0};
    };
    run_episode(task, corpus, cfg, actor);
  }
  return out;
}

double bc_nll(const PolicyParams& params, std::span<const BcSample> samples) {
  require(!samples.empty(), ErrorCode::kContract, "bc_nll on an empty expert set");
  double nll = 0.0;
  for (const auto& s : samples) nll -= log_softmax(params.theta, s.legal)[s.chosen];
  return nll / static_cast<double>(samples.size());
}

FeatureVector bc_grad(const PolicyParams& params, std::span<const BcSample> samples) {
  require(!samples.empty(), ErrorCode::kContract, "bc_grad on an empty expert set");
  FeatureVector g{};
  for (const auto& s : samples) {
    const auto gl = grad_log_prob(params.theta, s.legal, s.chosen);
    for (std::size_t i = 0; i < kFeatureDim; ++i) g[i] -= gl[i];
  }
  for (double& x : g) x /= static_cast<double>(samples.size());
  return g;
}

PolicyParams bc_update(const PolicyParams& params, std::span<const BcSample> samples, double lr) {
  PolicyParams out = params;
  if (lr == 0.0) return out;
  const auto g = bc_grad(params, samples);
  for (std::size_t i = 0; i < kFeatureDim; ++i) out.theta[i] -= lr * g[i];
  return out;
}

namespace {

// Values that print as zero at 6 decimals print without a sign.
double round6(double x) { return std::abs(x) < 5e-7 ? 0.0 : x; }

}  // namespace

std::string TrainReport::to_csv() const {
  std::string out = "iter,mean_reward,mean_outcome,mean_gain,mean_T,heldout_em,policy_loss,value_loss\n";
  char buf[256];
  // iteration 0 has no batch, only the held-out score of the starting policy
  std::snprintf(buf, sizeof buf, "0,,,,,%.6f,,\n", initial_heldout_em);
  out += buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", r.iter, round6(r.mean_reward),
                  round6(r.mean_outcome), round6(r.mean_gain), round6(r.mean_T), round6(r.heldout_em),
                  round6(r.policy_loss), round6(r.value_loss));
    out += buf;
  }
  return out;
}

std::optional<std::size_t> TrainReport::first_iter_reaching(double threshold) const {
  if (initial_heldout_em >= threshold) return 0;
  for (const auto& r : rows) {
    if (r.heldout_em >= threshold) return r.iter;
  }
  return std::nullopt;
}

std::pair<std::vector<Task>, std::vector<Task>> split_tasks(const std::vector<Task>& tasks, std::size_t heldout) {
  require(heldout < tasks.size(), ErrorCode::kInvalidArgument,
          "held-out split of " + std::to_string(heldout) + " leaves no training tasks out of " +
              std::to_string(tasks.size()));
  const auto cut = tasks.end() - static_cast<std::ptrdiff_t>(heldout);
  return {std::vector<Task>(tasks.begin(), cut), std::vector<Task>(cut, tasks.end())};
}

namespace {

double heldout_em(const std::vector<Task>& heldout, const Corpus& corpus, const PolicyParams& params,
                  const EnvConfig& env) {
  if (heldout.empty()) return 0.0;
  double em = 0.0;
  for (const auto& task : heldout) {
    const auto ep = collect_episode(task, corpus, params, env, nullptr);
    em += exact_match(ep.record.answer, task.gold_answers);
  }
  return em / static_cast<double>(heldout.size());
}

}  // namespace

TrainResult train_loop(const std::vector<Task>& tasks, const Corpus& corpus, const TrainConfig& cfg,
                       const std::optional<std::vector<BcSample>>& warm_start) {
  validate(cfg);
  const auto [train, heldout] = split_tasks(tasks, cfg.heldout);
  Rng rng(cfg.seed);
  TrainResult result;

  if (cfg.warm_start && cfg.bc_steps > 0) {
    std::vector<BcSample> experts;
    if (warm_start) {
      experts = *warm_start;
    } else {
      std::vector<Task> chosen(train.begin(),
                               train.begin() + static_cast<std::ptrdiff_t>(std::min(cfg.bc_episodes, train.size())));
      experts = expert_samples(chosen, corpus, cfg.env);
    }
    for (std::size_t i = 0; i < cfg.bc_steps && !experts.empty(); ++i) {
      result.params = bc_update(result.params, experts, cfg.lr_bc);
    }
  }
  result.warm_start = result.params;
  result.report.initial_heldout_em = heldout_em(heldout, corpus, result.params, cfg.env);

  for (std::size_t iter = 1; iter <= cfg.iters; ++iter) {
    Rng iter_rng = rng.fork(iter);
    std::vector<TrainingEpisode> batch;
    std::vector<double> rewards, outcomes, gains, steps;
    for (std::size_t e = 0; e < cfg.episodes_per_iter; ++e) {
      const Task& task = train[iter_rng.below(train.size())];
      batch.push_back(collect_episode(task, corpus, result.params, cfg.env, &iter_rng));
      const auto& r = batch.back().record.reward;
      rewards.push_back(r.total);
      outcomes.push_back(r.outcome);
      gains.push_back(r.gain);
      steps.push_back(static_cast<double>(r.steps_T));
    }
    const UpdateResult upd = ppo_update(result.params, batch, cfg);
    result.params = upd.params;

    const double em = heldout_em(heldout, corpus, result.params, cfg.env);

    result.report.rows.push_back(TrainRow{iter, mean_of(rewards), mean_of(outcomes), mean_of(gains),
                                          mean_of(steps), em, upd.stats.policy_loss, upd.stats.value_loss});
  }
  return result;
}

}  // namespace forage
