#include "forage/forage.h"

#include <cstring>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "forage/error.hpp"
#include "forage/eval.hpp"
#include "forage/io.hpp"
#include "forage/protocol.hpp"
#include "forage/train.hpp"

struct forage_corpus {
  forage::Corpus corpus;
};

struct forage_tasks {
  std::vector<forage::Task> tasks;
};

struct forage_params {
  forage::PolicyParams params;
};

namespace {

thread_local std::string g_last_error;

forage_status set_error(forage_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <typename F>
forage_status guard(F&& f) {
  try {
    f();
    g_last_error.clear();
    return FORAGE_OK;
  } catch (const forage::Error& e) {
    return set_error(static_cast<forage_status>(static_cast<int>(e.code())), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(FORAGE_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(FORAGE_E_INTERNAL, e.what());
  } catch (...) {
    return set_error(FORAGE_E_INTERNAL, "unknown failure");
  }
}

void need(const void* p, const char* what) {
  if (!p) forage::fail(forage::ErrorCode::kInvalidArgument, std::string(what) + " is NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

forage::EnvConfig env_config(const forage_env_options* opts) {
  forage_env_options defaults;
  forage_env_options_init(&defaults);
  const forage_env_options& o = opts ? *opts : defaults;
  forage::EnvConfig cfg;
  cfg.reward.alpha = o.alpha;
  cfg.reward.beta = o.beta;
  cfg.reward.outcome_metric = o.f1_outcome ? forage::OutcomeMetric::TokenF1 : forage::OutcomeMetric::ExactMatch;
  cfg.top_k = o.top_k;
  cfg.max_steps = o.max_steps;
  forage::validate(cfg);
  return cfg;
}

forage::EvalPolicy make_policy(const forage_policy_spec* spec) {
  need(spec, "policy");
  const std::chrono::milliseconds timeout =
      spec->timeout_ms > 0 ? std::chrono::milliseconds(spec->timeout_ms) : forage::kDefaultPolicyTimeout;
  switch (spec->kind) {
    case FORAGE_POLICY_ORACLE:
      return forage::baseline_policy(forage::BaselineKind::Oracle);
    case FORAGE_POLICY_RAG:
      return forage::baseline_policy(forage::BaselineKind::OneShotRAG);
    case FORAGE_POLICY_RANDOM:
      return forage::baseline_policy(forage::BaselineKind::Random, spec->seed);
    case FORAGE_POLICY_PARAMS:
      need(spec->params, "policy params");
      return forage::learned_policy(spec->params->params);
    case FORAGE_POLICY_EXTERNAL:
      need(spec->target, "policy command");
      return forage::external_policy(
          std::make_shared<forage::ExternalPolicy>(forage::spawn_process_channel(spec->target), timeout));
    case FORAGE_POLICY_TCP:
      need(spec->target, "policy address");
      return forage::external_policy(
          std::make_shared<forage::ExternalPolicy>(forage::connect_tcp_channel(spec->target), timeout));
  }
  forage::fail(forage::ErrorCode::kInvalidArgument, "unknown policy kind " + std::to_string(spec->kind));
}

std::string fmt(double v, const char* spec = "%.4f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string inspect_trajectory(const forage::Trajectory& traj, const forage::TrajectoryFormat& format) {
  std::ostringstream out;
  const std::string text = forage::serialize_partial(traj.blocks, format);
  const auto spans = forage::compute_loss_mask(traj, format);
  if (!traj.question.empty()) out << "question: " << traj.question << "\n";
  out << "blocks:\n";
  std::size_t pos = 0;
  for (std::size_t i = 0; i < traj.blocks.size(); ++i) {
    const auto& b = traj.blocks[i];
    const std::size_t len = forage::serialize_partial({b}, format).size() + (i ? 1 : 0);
    const std::size_t start = pos;
    pos += len;
    std::string origin = "mixed";
    for (const auto& s : spans) {
      if (s.start <= start && pos <= s.end) origin = forage::to_string(s.origin);
    }
    out << "  " << i << "  " << forage::to_string(b.kind) << "  [" << start << ", " << pos << ")  " << origin;
    if (b.kind == forage::BlockKind::Info) {
      out << "\n";
      const auto passages = b.passages();
      for (std::size_t d = 0; d < b.doc_ids.size(); ++d) {
        out << "      [" << b.doc_ids[d] << "] " << (d < passages.size() ? passages[d] : std::string()) << "\n";
      }
    } else {
      out << "  " << b.text << "\n";
    }
  }
  out << "mask:\n";
  std::size_t injected = 0;
  for (const auto& s : spans) {
    out << "  [" << s.start << ", " << s.end << ")  " << forage::to_string(s.origin) << "\n";
    if (s.origin == forage::MaskOrigin::Injected) injected += s.end - s.start;
  }
  out << "  length " << text.size() << ", injected " << injected << "\n";
  out << "searches: " << traj.search_count() << "  T: " << forage::search_step_count(traj) << "\n";
  return out.str();
}

std::string inspect_reward(const forage::RewardBreakdown& r) {
  std::ostringstream out;
  out << "reward:\n";
  out << "  outcome     " << fmt(r.outcome) << "\n";
  out << "  gain        " << fmt(r.gain) << "\n";
  out << "  efficiency  " << fmt(r.efficiency) << "\n";
  out << "  steps_T     " << r.steps_T << "\n";
  out << "  total       " << fmt(r.total) << "\n";
  out << "  coverage   ";
  for (double v : r.curve.values) out << " " << fmt(v);
  out << "\n";
  return out.str();
}

std::string inspect_record(const nlohmann::json& j) {
  std::ostringstream out;
  forage::TrajectoryFormat format;
  format.accept_evidence = true;
  if (j.contains("task_id")) out << "task: " << j.at("task_id").get<std::string>() << "\n";
  forage::Trajectory traj;
  if (j.contains("blocks")) {
    traj = forage::trajectory_from_record(j);
  } else if (j.contains("trajectory")) {
    traj = forage::parse_trajectory(j.at("trajectory").get<std::string>(), format);
  } else {
    forage::fail(forage::ErrorCode::kParse, "record has neither blocks nor trajectory");
  }
  if (traj.question.empty()) traj.question = j.value("question", std::string());
  out << inspect_trajectory(traj, format);
  if (j.contains("reward")) out << inspect_reward(forage::reward_from_record(j.at("reward")));
  return out.str();
}

}  // namespace

extern "C" {

const char* forage_version(void) { return "0.1.0"; }

const char* forage_status_name(forage_status status) {
  if (status == FORAGE_OK) return "ok";
  if (status == FORAGE_E_INTERNAL) return "internal";
  if (status >= FORAGE_E_INVALID_ARGUMENT && status <= FORAGE_E_IO) {
    return forage::to_string(static_cast<forage::ErrorCode>(static_cast<int>(status)));
  }
  return "unknown";
}

const char* forage_last_error(void) { return g_last_error.c_str(); }

void forage_string_free(char* s) { std::free(s); }

void forage_env_options_init(forage_env_options* opts) {
  if (!opts) return;
  const forage::EnvConfig d;
  *opts = forage_env_options{d.reward.alpha, d.reward.beta, d.top_k, d.max_steps, 0};
}

void forage_gen_options_init(forage_gen_options* opts) {
  if (!opts) return;
  const forage::GenConfig d;
  *opts = forage_gen_options{d.n_tasks, d.hops, d.distractors_per_task, d.n_entities, d.n_relations, d.seed,
                             d.conjunctive ? 1 : 0};
}

void forage_train_options_init(forage_train_options* opts) {
  if (!opts) return;
  const forage::TrainConfig d;
  forage_env_options_init(&opts->env);
  opts->iters = d.iters;
  opts->episodes_per_iter = d.episodes_per_iter;
  opts->bc_episodes = d.bc_episodes;
  opts->bc_steps = d.bc_steps;
  opts->heldout = d.heldout;
  opts->warm_start = d.warm_start ? 1 : 0;
  opts->shaped_reward = d.reward_mode == forage::RewardMode::ShapedGain ? 1 : 0;
  opts->lr_policy = d.lr_policy;
  opts->lr_value = d.lr_value;
  opts->lr_bc = d.lr_bc;
  opts->gamma = d.gamma;
  opts->lam = d.lam;
  opts->clip_eps = d.clip_eps;
  opts->value_coef = d.value_coef;
  opts->entropy_coef = d.entropy_coef;
  opts->seed = d.seed;
}

void forage_policy_spec_init(forage_policy_spec* spec) {
  if (!spec) return;
  *spec = forage_policy_spec{FORAGE_POLICY_ORACLE, nullptr, nullptr, 0, 0};
}

forage_status forage_generate(const forage_gen_options* gen, const forage_env_options* env, const char* out_dir) {
  return guard([&] {
    need(gen, "generation options");
    need(out_dir, "output directory");
    forage::GenConfig cfg;
    cfg.n_tasks = gen->n_tasks;
    cfg.hops = gen->hops;
    cfg.distractors_per_task = gen->distractors_per_task;
    cfg.n_entities = gen->n_entities;
    cfg.n_relations = gen->n_relations;
    cfg.seed = gen->seed;
    cfg.conjunctive = gen->conjunctive != 0;
    const forage::EnvConfig ecfg = env_config(env);
    const forage::Dataset ds = forage::generate_dataset(cfg);
    const forage::Corpus corpus = forage::Corpus::build(ds.documents);
    for (const auto& task : ds.tasks) {
      const auto ep = forage::oracle_episode(task, corpus, ecfg);
      if (ep.reward.outcome < 1.0) {
        forage::fail(forage::ErrorCode::kGeneration, "oracle does not solve " + task.task_id);
      }
    }
    forage::export_dataset(ds.tasks, ds.documents, out_dir);
  });
}

forage_status forage_corpus_load(const char* path, forage_corpus** out) {
  return guard([&] {
    need(path, "path");
    need(out, "output handle");
    *out = nullptr;
    auto c = std::make_unique<forage_corpus>();
    c->corpus = forage::Corpus::build(forage::load_corpus_file(path));
    *out = c.release();
  });
}

void forage_corpus_free(forage_corpus* corpus) { delete corpus; }

size_t forage_corpus_size(const forage_corpus* corpus) { return corpus ? corpus->corpus.size() : 0; }

forage_status forage_corpus_retrieve(const forage_corpus* corpus, const char* query, size_t k, char** out_json) {
  return guard([&] {
    need(corpus, "corpus");
    need(query, "query");
    need(out_json, "output string");
    *out_json = nullptr;
    const auto r = corpus->corpus.retrieve(query, k);
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& sd : r.ranked) arr.push_back({{"doc_id", sd.doc_id}, {"score", sd.score}});
    *out_json = dup_string(arr.dump());
  });
}

forage_status forage_tasks_load(const char* path, forage_tasks** out) {
  return guard([&] {
    need(path, "path");
    need(out, "output handle");
    *out = nullptr;
    auto t = std::make_unique<forage_tasks>();
    t->tasks = forage::load_tasks_file(path);
    *out = t.release();
  });
}

void forage_tasks_free(forage_tasks* tasks) { delete tasks; }

size_t forage_tasks_size(const forage_tasks* tasks) { return tasks ? tasks->tasks.size() : 0; }

forage_status forage_params_load(const char* path, forage_params** out) {
  return guard([&] {
    need(path, "path");
    need(out, "output handle");
    *out = nullptr;
    auto p = std::make_unique<forage_params>();
    p->params = forage::load_params_file(path);
    *out = p.release();
  });
}

forage_status forage_params_save(const forage_params* params, const char* path) {
  return guard([&] {
    need(params, "params");
    need(path, "path");
    forage::save_params_file(params->params, path);
  });
}

void forage_params_free(forage_params* params) { delete params; }

forage_status forage_train(const forage_tasks* tasks, const forage_corpus* corpus, const forage_train_options* opts,
                           forage_params** out_params, char** out_report_csv) {
  return guard([&] {
    need(tasks, "tasks");
    need(corpus, "corpus");
    need(opts, "training options");
    need(out_params, "output handle");
    *out_params = nullptr;
    if (out_report_csv) *out_report_csv = nullptr;
    forage::TrainConfig cfg;
    cfg.env = env_config(&opts->env);
    cfg.iters = opts->iters;
    cfg.episodes_per_iter = opts->episodes_per_iter;
    cfg.bc_episodes = opts->bc_episodes;
    cfg.bc_steps = opts->bc_steps;
    cfg.heldout = opts->heldout;
    cfg.warm_start = opts->warm_start != 0;
    cfg.reward_mode = opts->shaped_reward ? forage::RewardMode::ShapedGain : forage::RewardMode::TerminalOnly;
    cfg.lr_policy = opts->lr_policy;
    cfg.lr_value = opts->lr_value;
    cfg.lr_bc = opts->lr_bc;
    cfg.gamma = opts->gamma;
    cfg.lam = opts->lam;
    cfg.clip_eps = opts->clip_eps;
    cfg.value_coef = opts->value_coef;
    cfg.entropy_coef = opts->entropy_coef;
    cfg.seed = opts->seed;
    const auto result = forage::train_loop(tasks->tasks, corpus->corpus, cfg);
    auto p = std::make_unique<forage_params>();
    p->params = result.params;
    if (out_report_csv) *out_report_csv = dup_string(result.report.to_csv());
    *out_params = p.release();
  });
}

forage_status forage_eval(const forage_tasks* tasks, const forage_corpus* corpus, const forage_env_options* env,
                          const forage_policy_spec* policy, const char* format, char** out_report) {
  return guard([&] {
    need(tasks, "tasks");
    need(corpus, "corpus");
    need(out_report, "output string");
    *out_report = nullptr;
    const std::string fmt_name = format ? format : "table";
    if (fmt_name != "table" && fmt_name != "csv") {
      forage::fail(forage::ErrorCode::kInvalidArgument, "unknown report format '" + fmt_name + "'");
    }
    const auto cfg = env_config(env);
    const auto report = forage::run_policy_eval(make_policy(policy), tasks->tasks, corpus->corpus, cfg);
    *out_report = dup_string(forage::render_report(report, fmt_name));
  });
}

forage_status forage_rollout(const forage_tasks* tasks, const forage_corpus* corpus, const forage_env_options* env,
                             const forage_policy_spec* policy, const char* task_id, char** out_jsonl) {
  return guard([&] {
    need(tasks, "tasks");
    need(corpus, "corpus");
    need(out_jsonl, "output string");
    *out_jsonl = nullptr;
    const auto cfg = env_config(env);
    const auto p = make_policy(policy);
    std::string out;
    bool found = false;
    for (const auto& task : tasks->tasks) {
      if (task_id && task.task_id != task_id) continue;
      found = true;
      const auto ep = p.run(task, corpus->corpus, cfg);
      auto rec = forage::episode_record(ep, cfg.format);
      const auto sidecar = forage::trajectory_record(ep.trajectory, cfg.format);
      rec["blocks"] = sidecar.at("blocks");
      rec["mask_spans"] = sidecar.at("mask_spans");
      out += rec.dump() + "\n";
    }
    if (task_id && !found) forage::fail(forage::ErrorCode::kLookup, std::string("no task '") + task_id + "'");
    *out_jsonl = dup_string(out);
  });
}

forage_status forage_inspect(const char* input, char** out_text) {
  return guard([&] {
    need(input, "input");
    need(out_text, "output string");
    *out_text = nullptr;
    const std::string text = input;
    const auto first = text.find_first_not_of(" \t\r\n");
    std::string out;
    if (first != std::string::npos && text[first] == '{') {
      std::istringstream lines(text);
      std::string line;
      std::size_t n = 0;
      while (std::getline(lines, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
          j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
          forage::fail(forage::ErrorCode::kParse, "line " + std::to_string(n + 1) + ": " + e.what());
        }
        if (n++) out += "\n";
        out += inspect_record(j);
      }
    } else {
      forage::TrajectoryFormat format;
      format.accept_evidence = true;
      out = inspect_trajectory(forage::parse_trajectory(text, format), format);
    }
    *out_text = dup_string(out);
  });
}

}  // extern "C"
