#include "forage/reward.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "forage/error.hpp"
#include "forage/text.hpp"

namespace forage {

void validate(const RewardConfig& cfg) {
  require(cfg.alpha >= 0.0 && cfg.alpha < 1.0, ErrorCode::kInvalidArgument, "alpha must lie in [0, 1)");
  require(cfg.beta > 0.0 && cfg.beta <= 1.0, ErrorCode::kInvalidArgument, "beta must lie in (0, 1]");
}

double exact_match(std::string_view pred, const std::vector<std::string>& golds) {
  require(!golds.empty(), ErrorCode::kContract, "exact_match needs at least one gold answer");
  const std::string p = normalize_answer(pred);
  for (const auto& g : golds) {
    if (normalize_answer(g) == p) return 1.0;
  }
  return 0.0;
}

double token_f1(std::string_view pred, const std::vector<std::string>& golds) {
  require(!golds.empty(), ErrorCode::kContract, "token_f1 needs at least one gold answer");
  const auto ptoks = split_whitespace(normalize_answer(pred));
  double best = 0.0;
  for (const auto& g : golds) {
    const auto gtoks = split_whitespace(normalize_answer(g));
    if (ptoks.empty() && gtoks.empty()) return 1.0;
    if (ptoks.empty() || gtoks.empty()) continue;
    std::map<std::string, int> counts;
    for (const auto& t : gtoks) ++counts[t];
    int common = 0;
    for (const auto& t : ptoks) {
      auto it = counts.find(t);
      if (it != counts.end() && it->second > 0) {
        --it->second;
        ++common;
      }
    }
    if (common == 0) continue;
    const double precision = static_cast<double>(common) / static_cast<double>(ptoks.size());
    const double recall = static_cast<double>(common) / static_cast<double>(gtoks.size());
    best = std::max(best, 2.0 * precision * recall / (precision + recall));
  }
  return best;
}

double outcome_reward(std::string_view pred, const std::vector<std::string>& golds, const RewardConfig& cfg) {
  return cfg.outcome_metric == OutcomeMetric::ExactMatch ? exact_match(pred, golds) : token_f1(pred, golds);
}

double information_gain_reward(const CoverageCurve& curve) {
  double best = 0.0;
  for (std::size_t i = 0; i < curve.values.size(); ++i) {
    const double v = curve.values[i];
    require(v >= 0.0 && v <= 1.0, ErrorCode::kContract, "coverage value outside [0, 1]");
    if (i > 0 && v < curve.values[i - 1]) {
      fail(ErrorCode::kContract, "coverage curve decreases at step " + std::to_string(i + 1));
    }
    best = std::max(best, v);
  }
  return best;
}

double efficiency_penalty(std::size_t steps_T, double beta) {
  require(steps_T >= 1, ErrorCode::kContract, "T must be at least 1");
  const std::size_t exponent = steps_T > 2 ? steps_T - 2 : 0;
  return std::pow(beta, static_cast<double>(exponent));
}

RewardBreakdown total_reward(double outcome, double gain, std::size_t steps_T, const RewardConfig& cfg) {
  RewardBreakdown r;
  r.outcome = outcome;
  r.gain = gain;
  r.steps_T = steps_T;
  r.efficiency = efficiency_penalty(steps_T, cfg.beta);
  r.total = r.efficiency * (outcome + cfg.alpha * gain);
  return r;
}

double foraging_objective(double outcome, double final_coverage, std::size_t steps_T, const RewardConfig& cfg) {
  return (outcome + cfg.alpha * final_coverage) * std::pow(cfg.beta, static_cast<double>(steps_T));
}

}  // namespace forage
