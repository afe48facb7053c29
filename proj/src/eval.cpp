#include "forage/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "forage/error.hpp"
#include "forage/rng.hpp"
#include "forage/text.hpp"
#include "forage/train.hpp"

namespace forage {

const char* to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::OneShotRAG: return "rag";
    case BaselineKind::Oracle: return "oracle";
    case BaselineKind::Random: return "random";
  }
  return "?";
}

void EvalReport::aggregate() {
  em = f1 = mean_T = mean_coverage = 0.0;
  failed = 0;
  std::size_t n = 0;
  for (const auto& r : rows) {
    if (r.failed) {
      ++failed;
      continue;
    }
    ++n;
    em += r.em;
    f1 += r.f1;
    mean_T += static_cast<double>(r.steps_T);
    mean_coverage += r.final_coverage;
  }
  if (n == 0) return;
  const double d = static_cast<double>(n);
  em /= d;
  f1 /= d;
  mean_T /= d;
  mean_coverage /= d;
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

bool is_capitalized(std::string_view w) {
  return !w.empty() && std::isupper(static_cast<unsigned char>(w[0]));
}

// Capitalized words in `body` that do not open a sentence, plus the title.
std::set<std::string> named_entities(const Document& doc) {
  std::set<std::string> out;
  if (!doc.title.empty()) out.insert(doc.title);
  bool sentence_start = true;
  for (const auto& raw : split_whitespace(doc.body)) {
    std::string w = raw;
    const bool ends = !w.empty() && (w.back() == '.' || w.back() == '?' || w.back() == '!');
    while (!w.empty() && std::ispunct(static_cast<unsigned char>(w.back()))) w.pop_back();
    if (!sentence_start && is_capitalized(w)) out.insert(w);
    sentence_start = ends;
  }
  return out;
}

}  // namespace

std::string one_shot_rag_answer(const Task& task, const Corpus& corpus, std::size_t k) {
  require(k >= 1, ErrorCode::kInvalidArgument, "top-k must be at least 1");
  const RetrievalResult r = corpus.retrieve(task.question, std::min(k, std::max<std::size_t>(corpus.size(), 1)));
  if (r.ranked.empty()) return {};

  std::set<std::string> question_words;
  std::set<std::string> relation_terms;
  for (const auto& raw : split_whitespace(task.question)) {
    std::string w = raw;
    while (!w.empty() && std::ispunct(static_cast<unsigned char>(w.back()))) w.pop_back();
    for (const auto& t : tokenize(w)) question_words.insert(t);
    if (!is_capitalized(w)) {
      for (const auto& t : content_tokens(w)) relation_terms.insert(t);
    }
  }

  std::map<std::string, std::size_t> overlap;
  for (const auto& sd : r.ranked) {
    const Document& doc = corpus.at(sd.doc_id);
    std::size_t score = 0;
    for (const auto& t : token_set(doc.title + " " + doc.body)) score += relation_terms.count(t);
    for (const auto& e : named_entities(doc)) {
      bool in_question = false;
      for (const auto& t : tokenize(e)) in_question = in_question || question_words.count(t) > 0;
      if (in_question) continue;
      overlap[e] += score;
    }
  }
  if (overlap.empty()) return {};
  std::string best;
  std::size_t best_score = 0;
  for (const auto& [e, s] : overlap) {
    if (best.empty() || s > best_score) {
      best = e;
      best_score = s;
    }
  }
  return best;
}

EpisodeRecord one_shot_rag_episode(const Task& task, const Corpus& corpus, const EnvConfig& cfg) {
  EnvState state = reset(task, corpus, cfg);
  const RetrievalResult r = corpus.retrieve(task.question, std::min(cfg.top_k, std::max<std::size_t>(corpus.size(), 1)));
  std::vector<std::string> ids = r.ids();
  std::vector<std::string> passages;
  for (const auto& id : ids) passages.push_back(corpus.at(id).body);
  state.retrieved_ids.push_back(ids);
  state.issued_queries.insert(task.question);
  state.blocks.push_back(Block::search(trim(task.question)));
  state.blocks.push_back(Block::info(ids, passages));
  state.answer = one_shot_rag_answer(task, corpus, cfg.top_k);
  state.blocks.push_back(Block::answer(state.answer));
  state.done = true;
  state.step = 2;
  return finalize_episode(state, {}, cfg);
}

EvalPolicy baseline_policy(BaselineKind kind, std::uint64_t seed) {
  switch (kind) {
    case BaselineKind::Oracle:
      return {"oracle", [](const Task& t, const Corpus& c, const EnvConfig& cfg) { return oracle_episode(t, c, cfg); }};
    case BaselineKind::OneShotRAG:
      return {"rag", [](const Task& t, const Corpus& c, const EnvConfig& cfg) { return one_shot_rag_episode(t, c, cfg); }};
    case BaselineKind::Random:
      return {"random", [seed](const Task& t, const Corpus& c, const EnvConfig& cfg) {
                Rng rng = Rng(seed).fork(fnv1a(t.task_id));
                return run_episode(t, c, cfg, [&](const EnvState&, const std::vector<Action>& actions) {
                  const double n = static_cast<double>(actions.size());
                  return Decision{rng.below(actions.size()), -std::log(n), 0.0};
                });
              }};
  }
  fail(ErrorCode::kInvalidArgument, "unknown baseline");
}

EvalPolicy learned_policy(const PolicyParams& params) {
  return {"params", [params](const Task& t, const Corpus& c, const EnvConfig& cfg) {
            return collect_episode(t, c, params, cfg, nullptr).record;
          }};
}

EvalPolicy external_policy(std::shared_ptr<ExternalPolicy> policy) {
  return {"external", [policy](const Task& t, const Corpus& c, const EnvConfig& cfg) {
            policy->begin_episode(t.task_id);
            return run_episode(t, c, cfg, [&](const EnvState& s, const std::vector<Action>& actions) {
              return policy->choose(s, actions, cfg);
            });
          }};
}

EvalReport run_policy_eval(const EvalPolicy& policy, const std::vector<Task>& tasks, const Corpus& corpus,
                           const EnvConfig& cfg) {
  validate(cfg);
  EvalReport report;
  report.policy = policy.label;
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return std::string(buf);
  };
  report.config = {{"alpha", num(cfg.reward.alpha)},
                   {"beta", num(cfg.reward.beta)},
                   {"top_k", std::to_string(cfg.top_k)},
                   {"max_steps", std::to_string(cfg.max_steps)},
                   {"metric", std::string(cfg.reward.outcome_metric == OutcomeMetric::ExactMatch ? "em" : "f1")}};

  std::vector<const Task*> order;
  for (const auto& t : tasks) order.push_back(&t);
  std::stable_sort(order.begin(), order.end(), [](const Task* a, const Task* b) { return a->task_id < b->task_id; });

  for (const Task* t : order) {
    EvalRow row;
    row.task_id = t->task_id;
    try {
      const EpisodeRecord ep = policy.run(*t, corpus, cfg);
      row.em = exact_match(ep.answer, t->gold_answers);
      row.f1 = token_f1(ep.answer, t->gold_answers);
      row.steps_T = ep.reward.steps_T;
      row.final_coverage = ep.reward.curve.values.empty() ? 0.0 : ep.reward.curve.values.back();
      row.total_reward = ep.reward.total;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kProtocol) throw;
      row.failed = true;
      row.error = e.what();
    }
    report.rows.push_back(std::move(row));
  }
  report.aggregate();
  return report;
}

namespace {

std::string fmt4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::vector<std::string> row_cells(const EvalRow& r) {
  if (r.failed) return {r.task_id, "", "", "", "", "", "failed"};
  return {r.task_id, fmt4(r.em), fmt4(r.f1), std::to_string(r.steps_T), fmt4(r.final_coverage), fmt4(r.total_reward),
          "ok"};
}

const std::vector<std::string> kColumns = {"task_id", "em", "f1", "steps_T", "final_coverage", "total_reward", "status"};

}  // namespace

std::string render_report(const EvalReport& report, std::string_view format) {
  if (format == "csv") {
    std::string out;
    for (std::size_t i = 0; i < kColumns.size(); ++i) out += (i ? "," : "") + kColumns[i];
    out += "\n";
    for (const auto& r : report.rows) {
      const auto cells = row_cells(r);
      for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
      out += "\n";
    }
    return out;
  }
  require(format == "table", ErrorCode::kInvalidArgument, "unknown report format '" + std::string(format) + "'");

  std::vector<std::vector<std::string>> grid{kColumns};
  for (const auto& r : report.rows) grid.push_back(row_cells(r));
  std::vector<std::size_t> width(kColumns.size(), 0);
  for (const auto& row : grid)
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());

  std::string out;
  for (const auto& row : grid) {
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) line += "  ";
      if (i == 0 || i + 1 == row.size()) {
        line += row[i] + std::string(width[i] - row[i].size(), ' ');
      } else {
        line += std::string(width[i] - row[i].size(), ' ') + row[i];
      }
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  if (report.rows.empty()) return out;

  out += "\npolicy " + report.policy + "\n";
  for (const auto& [k, v] : report.config) out += k + " " + v + "\n";
  out += "EM " + fmt4(report.em) + "  F1 " + fmt4(report.f1) + "  mean_T " + fmt4(report.mean_T) +
         "  mean_coverage " + fmt4(report.mean_coverage) + "  failed " + std::to_string(report.failed) + "/" +
         std::to_string(report.rows.size()) + "\n";
  return out;
}

}  // namespace forage
