#include "forage/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "forage/error.hpp"

namespace forage {

using nlohmann::json;

namespace {

template <typename F>
auto guarded(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, what + ": " + e.what());
  }
}

}  // namespace

json to_json(const Document& doc) {
  return json{{"doc_id", doc.doc_id}, {"title", doc.title}, {"body", doc.body}, {"is_distractor", doc.is_distractor}};
}

Document document_from_json(const json& j) {
  return guarded("document record", [&] {
    return Document{j.at("doc_id").get<std::string>(), j.value("title", std::string()),
                    j.at("body").get<std::string>(), j.value("is_distractor", false)};
  });
}

json to_json(const Task& task) {
  json hops = json::array();
  for (std::size_t c = 0; c < task.chains.size(); ++c) {
    const auto& chain = task.chains[c];
    for (std::size_t i = 0; i < chain.claims.size(); ++i) {
      hops.push_back(json{{"chain", c},
                          {"subject", chain.claims[i].subject},
                          {"relation", chain.claims[i].relation},
                          {"object", chain.claims[i].object},
                          {"doc_id", i < chain.doc_ids.size() ? chain.doc_ids[i] : std::string()}});
    }
  }
  return json{{"task_id", task.task_id},
              {"question", task.question},
              {"gold_answers", task.gold_answers},
              {"golden_doc_ids", std::vector<std::string>(task.golden_doc_ids.begin(), task.golden_doc_ids.end())},
              {"hops", hops},
              {"seed", task.created_seed}};
}

Task task_from_json(const json& j) {
  return guarded("task record", [&] {
    Task t;
    t.task_id = j.at("task_id").get<std::string>();
    t.question = j.at("question").get<std::string>();
    t.gold_answers = j.at("gold_answers").get<std::vector<std::string>>();
    require(!t.gold_answers.empty(), ErrorCode::kParse, "task " + t.task_id + " has no gold answers");
    for (const auto& id : j.at("golden_doc_ids")) t.golden_doc_ids.insert(id.get<std::string>());
    for (const auto& h : j.at("hops")) {
      const std::size_t c = h.value("chain", std::size_t{0});
      if (t.chains.size() <= c) t.chains.resize(c + 1);
      t.chains[c].claims.push_back(
          Claim{h.at("subject").get<std::string>(), h.at("relation").get<std::string>(), h.at("object").get<std::string>()});
      t.chains[c].doc_ids.push_back(h.at("doc_id").get<std::string>());
    }
    require(!t.chains.empty(), ErrorCode::kParse, "task " + t.task_id + " has no hops");
    t.created_seed = j.value("seed", std::uint64_t{0});
    return t;
  });
}

json to_json(const PolicyParams& params) {
  return json{{"theta", params.theta}, {"w", params.w}, {"feature_version", kFeatureVersion}};
}

PolicyParams params_from_json(const json& j) {
  return guarded("params file", [&] {
    const int version = j.at("feature_version").get<int>();
    require(version == kFeatureVersion, ErrorCode::kParse,
            "params feature_version " + std::to_string(version) + " does not match " + std::to_string(kFeatureVersion));
    const auto theta = j.at("theta").get<std::vector<double>>();
    const auto w = j.at("w").get<std::vector<double>>();
    require(theta.size() == kFeatureDim && w.size() == kValueDim, ErrorCode::kParse, "params have the wrong dimension");
    PolicyParams p;
    std::copy(theta.begin(), theta.end(), p.theta.begin());
    std::copy(w.begin(), w.end(), p.w.begin());
    return p;
  });
}

json trajectory_record(const Trajectory& traj, const TrajectoryFormat& fmt) {
  json blocks = json::array();
  for (const auto& b : traj.blocks) {
    blocks.push_back(json{{"kind", to_string(b.kind)}, {"text", b.text}, {"doc_ids", b.doc_ids}});
  }
  json spans = json::array();
  for (const auto& s : compute_loss_mask(traj, fmt)) {
    spans.push_back(json{{"start", s.start}, {"end", s.end}, {"origin", to_string(s.origin)}});
  }
  return json{{"question", traj.question}, {"blocks", blocks}, {"mask_spans", spans}};
}

Trajectory trajectory_from_record(const json& j) {
  return guarded("trajectory record", [&] {
    Trajectory t;
    t.question = j.value("question", std::string());
    for (const auto& b : j.at("blocks")) {
      const auto kind = block_kind_from_string(b.at("kind").get<std::string>());
      require(kind.has_value(), ErrorCode::kParse, "unknown block kind " + b.at("kind").dump());
      t.blocks.push_back(Block{*kind, b.at("text").get<std::string>(),
                               b.value("doc_ids", std::vector<std::string>{})});
    }
    validate_trajectory(t);
    return t;
  });
}

json reward_record(const std::string& task_id, const RewardBreakdown& r) {
  return json{{"task_id", task_id}, {"outcome", r.outcome},       {"gain", r.gain},
              {"efficiency", r.efficiency}, {"total", r.total}, {"steps_T", r.steps_T},
              {"curve", r.curve.values}};
}

RewardBreakdown reward_from_record(const json& j) {
  return guarded("reward record", [&] {
    RewardBreakdown r;
    r.outcome = j.at("outcome").get<double>();
    r.gain = j.at("gain").get<double>();
    r.efficiency = j.at("efficiency").get<double>();
    r.total = j.at("total").get<double>();
    r.steps_T = j.at("steps_T").get<std::size_t>();
    r.curve.values = j.at("curve").get<std::vector<double>>();
    return r;
  });
}

json to_json(const Action& a) {
  if (a.kind == ActionKind::Search) {
    return json{{"kind", "search"},
                {"payload", {{"template_id", a.template_id}, {"entity", a.entity}, {"query", a.query()}}}};
  }
  return json{{"kind", "answer"}, {"payload", a.entity}};
}

Action action_from_json(const json& j) {
  return guarded("action", [&] {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "search") {
      const auto& p = j.at("payload");
      return Action::search(p.at("template_id").get<std::size_t>(), p.at("entity").get<std::string>());
    }
    require(kind == "answer", ErrorCode::kParse, "unknown action kind '" + kind + "'");
    return Action::answer(j.at("payload").get<std::string>());
  });
}

json episode_record(const EpisodeRecord& ep, const TrajectoryFormat& fmt) {
  json actions = json::array();
  std::vector<double> log_probs, values;
  for (const auto& s : ep.steps) {
    actions.push_back(to_json(s.action));
    log_probs.push_back(s.log_prob);
    values.push_back(s.value);
  }
  json reward = reward_record(ep.task_id, ep.reward);
  reward.erase("task_id");
  return json{{"task_id", ep.task_id},
              {"trajectory", serialize_trajectory(ep.trajectory, fmt)},
              {"question", ep.trajectory.question},
              {"actions", actions},
              {"log_probs", log_probs},
              {"values", values},
              {"reward", reward}};
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot open '" + path + "' for writing");
  out << content;
  if (!out) fail(ErrorCode::kIo, "write to '" + path + "' failed");
}

std::vector<json> read_jsonl(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::vector<json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      fail(ErrorCode::kParse, path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::string corpus_jsonl(const std::vector<Document>& docs) {
  std::string out;
  for (const auto& d : docs) out += to_json(d).dump() + "\n";
  return out;
}

std::string tasks_jsonl(const std::vector<Task>& tasks) {
  std::string out;
  for (const auto& t : tasks) out += to_json(t).dump() + "\n";
  return out;
}

std::vector<Document> load_corpus_file(const std::string& path) {
  std::vector<Document> docs;
  for (const auto& j : read_jsonl(path)) docs.push_back(document_from_json(j));
  return docs;
}

std::vector<Task> load_tasks_file(const std::string& path) {
  std::vector<Task> tasks;
  for (const auto& j : read_jsonl(path)) tasks.push_back(task_from_json(j));
  return tasks;
}

void export_dataset(const std::vector<Task>& tasks, const std::vector<Document>& docs, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create '" + dir + "': " + ec.message());
  std::vector<Document> sorted = docs;
  std::sort(sorted.begin(), sorted.end(), [](const Document& a, const Document& b) { return a.doc_id < b.doc_id; });
  std::vector<Task> tsorted = tasks;
  std::sort(tsorted.begin(), tsorted.end(), [](const Task& a, const Task& b) { return a.task_id < b.task_id; });
  write_text_file((std::filesystem::path(dir) / "corpus.jsonl").string(), corpus_jsonl(sorted));
  write_text_file((std::filesystem::path(dir) / "tasks.jsonl").string(), tasks_jsonl(tsorted));
}

PolicyParams load_params_file(const std::string& path) {
  return guarded("params file " + path, [&] { return params_from_json(json::parse(read_text_file(path))); });
}

void save_params_file(const PolicyParams& params, const std::string& path) {
  write_text_file(path, to_json(params).dump(2) + "\n");
}

}  // namespace forage
