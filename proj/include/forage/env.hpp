#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "forage/corpus.hpp"
#include "forage/datagen.hpp"
#include "forage/reward.hpp"
#include "forage/trajectory.hpp"

namespace forage {

struct EnvConfig {
  std::size_t max_steps = 6;  // bounds the number of searches
  std::size_t top_k = kDefaultTopK;
  std::size_t n_templates = 8;  // query templates offered, a prefix of relation_vocabulary()
  RewardConfig reward;
  TrajectoryFormat format;
};

void validate(const EnvConfig& cfg);

enum class ActionKind { Search, Answer };

struct Action {
  ActionKind kind = ActionKind::Answer;
  std::size_t template_id = 0;  // Search only
  std::string entity;           // query argument, or the answer

  static Action search(std::size_t template_id, std::string entity);
  static Action answer(std::string entity);

  std::string query() const;
  std::string describe() const;

  bool operator==(const Action&) const = default;
};

struct EnvState {
  std::string task_id;
  std::string question;
  std::vector<std::string> question_entities;
  std::vector<Claim> discovered_claims;  // in discovery order
  std::set<std::string> discovered_entities;
  std::set<std::string> issued_queries;
  std::set<std::string> queried_entities;
  std::vector<std::vector<std::string>> retrieved_ids;  // K_1 .. K_t
  std::vector<Block> blocks;
  std::size_t step = 0;  // actions taken
  bool done = false;
  std::string answer;

  // Hidden task data the environment scores against.
  std::set<std::string> golden;
  std::map<std::string, Claim> evidence;
  std::vector<std::string> gold_answers;

  std::size_t searches() const { return retrieved_ids.size(); }
  std::set<std::string> retrieved_union() const;
  double coverage() const;
  CoverageCurve coverage_curve() const;
  // Entity at the end of the longest discovered claim path from a question
  // entity; ties go to the lexicographically smaller name.
  std::string frontier() const;
  Trajectory trajectory() const;
  std::string digest() const;
};

EnvState reset(const Task& task, const Corpus& corpus, const EnvConfig& cfg);

// Searches ordered by (template id, entity), then one Answer per discovered
// entity. Searches disappear once the search budget is spent.
std::vector<Action> legal_actions(const EnvState& state, const EnvConfig& cfg);

struct StepResult {
  Block observation;  // Info block for searches, the Answer block otherwise
  bool done = false;
};

StepResult step(EnvState& state, const Action& action, const Corpus& corpus, const EnvConfig& cfg);

struct EpisodeStep {
  std::string digest;
  Action action;
  double log_prob = 0.0;
  double value = 0.0;
};

struct EpisodeRecord {
  std::string task_id;
  std::vector<EpisodeStep> steps;
  Trajectory trajectory;
  RewardBreakdown reward;
  std::vector<std::vector<std::string>> retrieved_ids;
  std::string answer;
};

EpisodeRecord finalize_episode(const EnvState& state, std::vector<EpisodeStep> steps, const EnvConfig& cfg);

struct Decision {
  std::size_t index = 0;
  double log_prob = 0.0;
  double value = 0.0;
};

using Actor = std::function<Decision(const EnvState&, const std::vector<Action>&)>;

// Runs reset/legal_actions/step until the actor answers.
EpisodeRecord run_episode(const Task& task, const Corpus& corpus, const EnvConfig& cfg, const Actor& actor);

// Expert rollout: one templated search per hop with the matching relation and
// the current bridge entity, then the gold answer. Throws if retrieval misses
// a golden document.
EpisodeRecord oracle_episode(const Task& task, const Corpus& corpus, const EnvConfig& cfg);

// The oracle's choice for `state`, as an index into `actions`.
std::size_t oracle_choice(const Task& task, const EnvState& state, const std::vector<Action>& actions);

}  // namespace forage
