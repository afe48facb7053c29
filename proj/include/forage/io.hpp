#pragma once

#include <string>
#include <vector>

#include "forage/corpus.hpp"
#include "forage/datagen.hpp"
#include "forage/env.hpp"
#include "forage/policy.hpp"
#include "forage/trajectory.hpp"
#include "json.hpp"

namespace forage {

// JSON-lines records and file helpers. Object keys are emitted in sorted
// order, so output bytes depend only on content.

nlohmann::json to_json(const Document& doc);
Document document_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Task& task);
Task task_from_json(const nlohmann::json& j);

nlohmann::json to_json(const PolicyParams& params);
PolicyParams params_from_json(const nlohmann::json& j);

// {question, blocks:[{kind, text, doc_ids}], mask_spans:[{start, end, origin}]}
nlohmann::json trajectory_record(const Trajectory& traj, const TrajectoryFormat& fmt = {});
Trajectory trajectory_from_record(const nlohmann::json& j);

// {task_id, outcome, gain, efficiency, total, steps_T, curve}
nlohmann::json reward_record(const std::string& task_id, const RewardBreakdown& r);
RewardBreakdown reward_from_record(const nlohmann::json& j);

nlohmann::json to_json(const Action& action);
Action action_from_json(const nlohmann::json& j);

// {task_id, trajectory, actions, log_probs, values, reward}
nlohmann::json episode_record(const EpisodeRecord& ep, const TrajectoryFormat& fmt = {});

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
std::vector<nlohmann::json> read_jsonl(const std::string& path);

std::string corpus_jsonl(const std::vector<Document>& docs);
std::string tasks_jsonl(const std::vector<Task>& tasks);
std::vector<Document> load_corpus_file(const std::string& path);
std::vector<Task> load_tasks_file(const std::string& path);

// Writes <dir>/corpus.jsonl and <dir>/tasks.jsonl.
void export_dataset(const std::vector<Task>& tasks, const std::vector<Document>& docs, const std::string& dir);

PolicyParams load_params_file(const std::string& path);
void save_params_file(const PolicyParams& params, const std::string& path);

}  // namespace forage
