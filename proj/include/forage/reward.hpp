#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace forage {

enum class OutcomeMetric { ExactMatch, TokenF1 };

struct RewardConfig {
  double alpha = 0.2;  // weight of the information-gain term
  double beta = 0.95;  // per-step efficiency decay
  OutcomeMetric outcome_metric = OutcomeMetric::ExactMatch;
};

// alpha in [0, 1), beta in (0, 1]. The closed ends are the ablation settings
// (alpha = 0 drops the gain term, beta = 1 drops the length penalty).
void validate(const RewardConfig& cfg);

// Cumulative coverage after each retrieval step.
struct CoverageCurve {
  std::vector<double> values;
};

struct RewardBreakdown {
  double outcome = 0.0;
  double gain = 0.0;
  double efficiency = 1.0;
  double total = 0.0;
  std::size_t steps_T = 1;
  CoverageCurve curve;
};

double exact_match(std::string_view pred, const std::vector<std::string>& golds);
double token_f1(std::string_view pred, const std::vector<std::string>& golds);
double outcome_reward(std::string_view pred, const std::vector<std::string>& golds, const RewardConfig& cfg);

// Maximum coverage over the curve, 0 for an empty curve. Throws if the curve
// ever decreases.
double information_gain_reward(const CoverageCurve& curve);

// beta^max(0, T - 2)
double efficiency_penalty(std::size_t steps_T, double beta);

// efficiency * (outcome + alpha * gain)
RewardBreakdown total_reward(double outcome, double gain, std::size_t steps_T, const RewardConfig& cfg);

// (outcome + alpha * coverage) * beta^T. Reporting only; training uses
// total_reward.
double foraging_objective(double outcome, double final_coverage, std::size_t steps_T, const RewardConfig& cfg);

}  // namespace forage
