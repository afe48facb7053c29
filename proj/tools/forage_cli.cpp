// forage command-line tool. Talks to the library through the C interface only.
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "forage/forage.h"

namespace {

struct RuntimeFailure {
  std::string message;
};

void check(forage_status st, const std::string& what) {
  if (st != FORAGE_OK) {
    throw RuntimeFailure{what + ": " + forage_status_name(st) + ": " + forage_last_error()};
  }
}

struct OwnedString {
  char* s = nullptr;
  ~OwnedString() { forage_string_free(s); }
  std::string str() const { return s ? s : ""; }
};

using CorpusPtr = std::unique_ptr<forage_corpus, decltype(&forage_corpus_free)>;
using TasksPtr = std::unique_ptr<forage_tasks, decltype(&forage_tasks_free)>;
using ParamsPtr = std::unique_ptr<forage_params, decltype(&forage_params_free)>;

struct DataPaths {
  std::string dir = ".";
  std::string corpus;
  std::string tasks;

  std::string corpus_path() const { return corpus.empty() ? dir + "/corpus.jsonl" : corpus; }
  std::string tasks_path() const { return tasks.empty() ? dir + "/tasks.jsonl" : tasks; }

  void add_to(CLI::App* app) {
    app->add_option("--data", dir, "Directory holding corpus.jsonl and tasks.jsonl");
    app->add_option("--corpus", corpus, "Corpus JSONL file (overrides --data)");
    app->add_option("--tasks", tasks, "Tasks JSONL file (overrides --data)");
  }

  CorpusPtr load_corpus() const {
    forage_corpus* c = nullptr;
    check(forage_corpus_load(corpus_path().c_str(), &c), "loading corpus");
    return {c, &forage_corpus_free};
  }

  TasksPtr load_tasks() const {
    forage_tasks* t = nullptr;
    check(forage_tasks_load(tasks_path().c_str(), &t), "loading tasks");
    return {t, &forage_tasks_free};
  }
};

struct PolicyOptions {
  std::string kind = "oracle";
  std::string params_file;
  std::string command;
  std::string address;
  int timeout_ms = 30000;

  void add_to(CLI::App* app) {
    app->add_option("--policy", kind, "oracle, rag (alias baseline), random, params, external or tcp")
        ->check(CLI::IsMember({"oracle", "rag", "baseline", "random", "params", "external", "tcp"}));
    app->add_option("--params", params_file, "Params file for --policy params");
    app->add_option("--command", command, "Shell command for --policy external");
    app->add_option("--address", address, "host:port for --policy tcp");
    app->add_option("--timeout-ms", timeout_ms, "Per-request timeout for external policies");
  }
};

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure{"cannot open '" + path + "' for writing"};
  out << content;
  if (!out) throw RuntimeFailure{"write to '" + path + "' failed"};
}

std::string read_input(const std::string& path) {
  if (path == "-") return {std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeFailure{"cannot open '" + path + "'"};
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic multi-hop search environment: data generation, training and evaluation"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  forage_env_options env;
  forage_env_options_init(&env);
  std::uint64_t seed = 42;
  app.add_option("--seed", seed, "Random seed (FORAGE_SEED overrides)")->capture_default_str();
  app.add_option("--alpha", env.alpha, "Information-gain weight")->capture_default_str();
  app.add_option("--beta", env.beta, "Per-step efficiency decay")->capture_default_str();
  app.add_option("--top-k", env.top_k, "Documents returned per search")->capture_default_str();
  app.add_option("--max-steps", env.max_steps, "Search budget per episode")->capture_default_str();
  bool f1 = false;
  app.add_flag("--f1", f1, "Score answers by token F1 instead of exact match");

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a dataset (corpus.jsonl, tasks.jsonl)");
  forage_gen_options gopts;
  forage_gen_options_init(&gopts);
  std::string gen_out;
  bool conjunctive = false;
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--tasks,--n-tasks", gopts.n_tasks, "Number of tasks")->capture_default_str();
  gen->add_option("--hops", gopts.hops, "Hops per question")->capture_default_str();
  gen->add_option("--distractors", gopts.distractors_per_task, "Distractor documents per task")
      ->capture_default_str();
  gen->add_option("--entities", gopts.n_entities, "Entity count (0 sizes it automatically)")
      ->capture_default_str();
  gen->add_option("--relations", gopts.n_relations, "Relation templates in use")->capture_default_str();
  gen->add_flag("--conjunctive", conjunctive, "Two chains meeting at the answer");

  // train
  auto* train = app.add_subcommand("train", "Behavior cloning warm start followed by PPO");
  DataPaths train_data;
  train_data.add_to(train);
  forage_train_options topts;
  forage_train_options_init(&topts);
  std::string params_out = "params.json";
  std::string report_out;
  bool no_warm = false;
  std::string reward_mode = "terminal";
  train->add_option("--out", params_out, "Where to write the trained params")->capture_default_str();
  train->add_option("--report", report_out, "Where to write the per-iteration CSV ('-' for stdout)");
  train->add_option("--iters", topts.iters, "PPO iterations")->capture_default_str();
  train->add_option("--episodes", topts.episodes_per_iter, "Episodes per iteration")->capture_default_str();
  train->add_option("--bc-episodes", topts.bc_episodes, "Expert episodes for the warm start")->capture_default_str();
  train->add_option("--bc-steps", topts.bc_steps, "Warm-start gradient steps")->capture_default_str();
  train->add_option("--heldout", topts.heldout, "Trailing tasks held out")->capture_default_str();
  train->add_option("--lr-policy", topts.lr_policy, "Policy step size")->capture_default_str();
  train->add_option("--lr-value", topts.lr_value, "Value step size")->capture_default_str();
  train->add_option("--lr-bc", topts.lr_bc, "Warm-start step size")->capture_default_str();
  train->add_option("--clip", topts.clip_eps, "PPO clip range")->capture_default_str();
  train->add_option("--lambda", topts.lam, "GAE lambda")->capture_default_str();
  train->add_option("--gamma", topts.gamma, "Discount")->capture_default_str();
  train->add_option("--entropy", topts.entropy_coef, "Entropy bonus weight")->capture_default_str();
  train->add_flag("--no-warm-start", no_warm, "Skip behavior cloning");
  train->add_option("--reward-mode", reward_mode, "terminal, or shaped to pay the gain term per search step")
      ->check(CLI::IsMember({"terminal", "shaped"}))
      ->capture_default_str();

  // rollout
  auto* rollout = app.add_subcommand("rollout", "Run episodes and print JSONL episode logs");
  DataPaths rollout_data;
  rollout_data.add_to(rollout);
  PolicyOptions rollout_policy;
  rollout_policy.add_to(rollout);
  std::string rollout_task, rollout_out;
  rollout->add_option("--task", rollout_task, "Only this task id");
  rollout->add_option("--out", rollout_out, "Output file (default stdout)");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a policy and print a report");
  DataPaths eval_data;
  eval_data.add_to(eval);
  PolicyOptions eval_policy;
  eval_policy.add_to(eval);
  std::string eval_format = "table", eval_out;
  eval->add_option("--format", eval_format, "table or csv")->check(CLI::IsMember({"table", "csv"}));
  eval->add_option("--out", eval_out, "Output file (default stdout)");

  // inspect
  auto* inspect = app.add_subcommand("inspect", "Show blocks, mask origins and reward of a trajectory");
  std::string inspect_in = "-";
  inspect->add_option("input", inspect_in, "Rollout JSONL, trajectory record, or tagged text ('-' for stdin)");

  if (argc <= 1) {
    std::cerr << app.help();
    return 1;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 1;
  }

  if (const char* s = std::getenv("FORAGE_SEED"); s && *s) {
    try {
      seed = std::stoull(s);
    } catch (const std::exception&) {
      std::cerr << "FORAGE_SEED must be a non-negative integer\n";
      return 1;
    }
  }
  env.f1_outcome = f1 ? 1 : 0;

  auto policy_spec = [&](const PolicyOptions& p, ParamsPtr& holder) {
    forage_policy_spec spec;
    forage_policy_spec_init(&spec);
    spec.seed = seed;
    spec.timeout_ms = p.timeout_ms;
    if (p.kind == "oracle") spec.kind = FORAGE_POLICY_ORACLE;
    if (p.kind == "rag" || p.kind == "baseline") spec.kind = FORAGE_POLICY_RAG;
    if (p.kind == "random") spec.kind = FORAGE_POLICY_RANDOM;
    if (p.kind == "params") {
      if (p.params_file.empty()) throw CLI::RequiredError("--params");
      forage_params* raw = nullptr;
      check(forage_params_load(p.params_file.c_str(), &raw), "loading params");
      holder.reset(raw);
      spec.kind = FORAGE_POLICY_PARAMS;
      spec.params = raw;
    }
    if (p.kind == "external") {
      if (p.command.empty()) throw CLI::RequiredError("--command");
      spec.kind = FORAGE_POLICY_EXTERNAL;
      spec.target = p.command.c_str();
    }
    if (p.kind == "tcp") {
      if (p.address.empty()) throw CLI::RequiredError("--address");
      spec.kind = FORAGE_POLICY_TCP;
      spec.target = p.address.c_str();
    }
    return spec;
  };

  try {
    if (gen->parsed()) {
      gopts.seed = seed;
      gopts.conjunctive = conjunctive ? 1 : 0;
      check(forage_generate(&gopts, &env, gen_out.c_str()), "gen");
      std::cerr << "wrote " << gen_out << "/corpus.jsonl and " << gen_out << "/tasks.jsonl\n";
    } else if (train->parsed()) {
      topts.env = env;
      topts.seed = seed;
      topts.warm_start = no_warm ? 0 : 1;
      topts.shaped_reward = reward_mode == "shaped" ? 1 : 0;
      auto corpus = train_data.load_corpus();
      auto tasks = train_data.load_tasks();
      forage_params* raw = nullptr;
      OwnedString csv;
      check(forage_train(tasks.get(), corpus.get(), &topts, &raw, &csv.s), "train");
      ParamsPtr params(raw, &forage_params_free);
      check(forage_params_save(params.get(), params_out.c_str()), "saving params");
      if (!report_out.empty()) write_output(report_out, csv.str());
      std::cerr << "wrote " << params_out << "\n";
    } else if (rollout->parsed()) {
      auto corpus = rollout_data.load_corpus();
      auto tasks = rollout_data.load_tasks();
      ParamsPtr holder(nullptr, &forage_params_free);
      const auto spec = policy_spec(rollout_policy, holder);
      OwnedString out;
      check(forage_rollout(tasks.get(), corpus.get(), &env, &spec,
                           rollout_task.empty() ? nullptr : rollout_task.c_str(), &out.s),
            "rollout");
      write_output(rollout_out, out.str());
    } else if (eval->parsed()) {
      auto corpus = eval_data.load_corpus();
      auto tasks = eval_data.load_tasks();
      ParamsPtr holder(nullptr, &forage_params_free);
      const auto spec = policy_spec(eval_policy, holder);
      OwnedString out;
      check(forage_eval(tasks.get(), corpus.get(), &env, &spec, eval_format.c_str(), &out.s), "eval");
      write_output(eval_out, out.str());
    } else if (inspect->parsed()) {
      const std::string input = read_input(inspect_in);
      OwnedString out;
      check(forage_inspect(input.c_str(), &out.s), "inspect");
      std::cout << out.str();
    }
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n" << app.help();
    return 1;
  } catch (const RuntimeFailure& e) {
    std::cerr << "error: " << e.message << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
