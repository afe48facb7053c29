#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "forage/corpus.hpp"
#include "forage/datagen.hpp"
#include "forage/env.hpp"
#include "forage/policy.hpp"
#include "forage/protocol.hpp"

namespace forage {

enum class BaselineKind { OneShotRAG, Oracle, Random };

const char* to_string(BaselineKind kind);

struct EvalRow {
  std::string task_id;
  double em = 0.0;
  double f1 = 0.0;
  std::size_t steps_T = 0;
  double final_coverage = 0.0;
  double total_reward = 0.0;
  bool failed = false;
  std::string error;  // set when failed
};

struct EvalReport {
  std::string policy;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<EvalRow> rows;  // ordered by task_id
  // Means over rows that did not fail.
  double em = 0.0;
  double f1 = 0.0;
  double mean_T = 0.0;
  double mean_coverage = 0.0;
  std::size_t failed = 0;

  void aggregate();
};

// One episode per task. Failures are reported as Error and turned into failed
// rows by run_policy_eval.
struct EvalPolicy {
  std::string label;
  std::function<EpisodeRecord(const Task&, const Corpus&, const EnvConfig&)> run;
};

// Random draws from a per-task stream derived from `seed` and the task id.
EvalPolicy baseline_policy(BaselineKind kind, std::uint64_t seed = 0);
// Greedy decoding.
EvalPolicy learned_policy(const PolicyParams& params);
EvalPolicy external_policy(std::shared_ptr<ExternalPolicy> policy);

EvalReport run_policy_eval(const EvalPolicy& policy, const std::vector<Task>& tasks, const Corpus& corpus,
                           const EnvConfig& cfg);

// Entities named in the top-k documents for the raw question, minus the
// question's own entities, ranked by overlap with the question's relation
// terms and then by name. Empty when nothing is retrieved.
std::string one_shot_rag_answer(const Task& task, const Corpus& corpus, std::size_t k);
EpisodeRecord one_shot_rag_episode(const Task& task, const Corpus& corpus, const EnvConfig& cfg);

// "table" or "csv"; numbers at 4 decimals.
std::string render_report(const EvalReport& report, std::string_view format);

}  // namespace forage
