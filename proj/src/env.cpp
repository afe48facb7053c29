#include "forage/env.hpp"

#include <algorithm>
#include <cstdio>

#include "forage/error.hpp"

namespace forage {

void validate(const EnvConfig& cfg) {
  require(cfg.max_steps >= 1, ErrorCode::kInvalidArgument, "max_steps must be at least 1");
  require(cfg.top_k >= 1, ErrorCode::kInvalidArgument, "top_k must be at least 1");
  require(cfg.n_templates >= 1 && cfg.n_templates <= relation_vocabulary().size(),
          ErrorCode::kInvalidArgument, "n_templates out of range");
  validate(cfg.reward);
}

Action Action::search(std::size_t template_id, std::string entity) {
  return Action{ActionKind::Search, template_id, std::move(entity)};
}

Action Action::answer(std::string entity) { return Action{ActionKind::Answer, 0, std::move(entity)}; }

std::string Action::query() const {
  require(kind == ActionKind::Search, ErrorCode::kContract, "answer actions have no query");
  return template_query(template_id, entity);
}

std::string Action::describe() const {
  return kind == ActionKind::Search ? "search(" + query() + ")" : "answer(" + entity + ")";
}

std::set<std::string> EnvState::retrieved_union() const {
  std::set<std::string> out;
  for (const auto& k : retrieved_ids) out.insert(k.begin(), k.end());
  return out;
}

double EnvState::coverage() const { return forage::coverage(retrieved_union(), golden); }

CoverageCurve EnvState::coverage_curve() const {
  CoverageCurve curve;
  std::set<std::string> acc;
  for (const auto& k : retrieved_ids) {
    acc.insert(k.begin(), k.end());
    curve.values.push_back(forage::coverage(acc, golden));
  }
  return curve;
}

std::string EnvState::frontier() const {
  std::map<std::string, std::size_t> depth;
  std::vector<std::string> queue;
  for (const auto& e : question_entities) {
    if (depth.emplace(e, 0).second) queue.push_back(e);
  }
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const std::string e = queue[head];
    for (const auto& c : discovered_claims) {
      if (c.subject == e && !depth.count(c.object)) {
        depth[c.object] = depth[e] + 1;
        queue.push_back(c.object);
      }
    }
  }
  std::string best;
  std::size_t best_depth = 0;
  for (const auto& [e, d] : depth) {
    if (best.empty() || d > best_depth) {
      best = e;
      best_depth = d;
    }
  }
  return best;
}

Trajectory EnvState::trajectory() const { return Trajectory{question, blocks}; }

std::string EnvState::digest() const {
  std::string canon = std::to_string(step) + "|";
  for (const auto& e : discovered_entities) canon += e + ",";
  canon += "|";
  for (const auto& q : issued_queries) canon += q + ",";
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

EnvState reset(const Task& task, const Corpus& corpus, const EnvConfig& cfg) {
  validate(cfg);
  for (const auto& id : task.golden_doc_ids) {
    if (!corpus.find(id)) {
      fail(ErrorCode::kLookup, "task " + task.task_id + ": golden doc '" + id + "' missing from corpus");
    }
  }
  EnvState s;
  s.task_id = task.task_id;
  s.question = task.question;
  s.question_entities = task.question_entities();
  s.discovered_entities.insert(s.question_entities.begin(), s.question_entities.end());
  s.golden = task.golden_doc_ids;
  s.evidence = task.evidence();
  s.gold_answers = task.gold_answers;
  return s;
}

std::vector<Action> legal_actions(const EnvState& state, const EnvConfig& cfg) {
  require(!state.done, ErrorCode::kContract, "legal_actions on a finished episode");
  std::vector<Action> out;
  if (state.searches() < cfg.max_steps) {
    for (std::size_t t = 0; t < cfg.n_templates; ++t) {
      for (const auto& e : state.discovered_entities) {
        Action a = Action::search(t, e);
        if (!state.issued_queries.count(a.query())) out.push_back(std::move(a));
      }
    }
  }
  for (const auto& e : state.discovered_entities) out.push_back(Action::answer(e));
  return out;
}

StepResult step(EnvState& state, const Action& action, const Corpus& corpus, const EnvConfig& cfg) {
  require(!state.done, ErrorCode::kContract, "step on a finished episode");
  require(state.discovered_entities.count(action.entity) > 0, ErrorCode::kContract,
          "illegal action " + action.describe() + ": entity not discovered");
  StepResult out;
  if (action.kind == ActionKind::Answer) {
    state.blocks.push_back(Block::answer(action.entity));
    state.answer = action.entity;
    state.done = true;
    ++state.step;
    out.observation = state.blocks.back();
    out.done = true;
    return out;
  }

  require(action.template_id < cfg.n_templates, ErrorCode::kContract,
          "illegal action: template " + std::to_string(action.template_id) + " not offered");
  require(state.searches() < cfg.max_steps, ErrorCode::kContract, "illegal action: search budget spent");
  const std::string query = action.query();
  require(!state.issued_queries.count(query), ErrorCode::kContract, "illegal action: repeated query '" + query + "'");

  const RetrievalResult r = corpus.retrieve(query, cfg.top_k);
  std::vector<std::string> ids = r.ids();
  std::vector<std::string> passages;
  for (const auto& id : ids) {
    passages.push_back(corpus.at(id).body);
    auto ev = state.evidence.find(id);
    if (ev == state.evidence.end()) continue;
    if (std::find(state.discovered_claims.begin(), state.discovered_claims.end(), ev->second) ==
        state.discovered_claims.end()) {
      state.discovered_claims.push_back(ev->second);
      state.discovered_entities.insert(ev->second.subject);
      state.discovered_entities.insert(ev->second.object);
    }
  }
  state.issued_queries.insert(query);
  state.queried_entities.insert(action.entity);
  state.retrieved_ids.push_back(ids);
  state.blocks.push_back(Block::search(query));
  state.blocks.push_back(Block::info(ids, passages));
  ++state.step;
  out.observation = state.blocks.back();
  return out;
}

EpisodeRecord finalize_episode(const EnvState& state, std::vector<EpisodeStep> steps, const EnvConfig& cfg) {
  require(state.done, ErrorCode::kContract, "finalize_episode on an unfinished episode");
  EpisodeRecord rec;
  rec.task_id = state.task_id;
  rec.steps = std::move(steps);
  rec.trajectory = state.trajectory();
  rec.retrieved_ids = state.retrieved_ids;
  rec.answer = state.answer;

  const CoverageCurve curve = state.coverage_curve();
  const double outcome = outcome_reward(state.answer, state.gold_answers, cfg.reward);
  const double gain = information_gain_reward(curve);
  rec.reward = total_reward(outcome, gain, search_step_count(rec.trajectory), cfg.reward);
  rec.reward.curve = curve;
  return rec;
}

EpisodeRecord run_episode(const Task& task, const Corpus& corpus, const EnvConfig& cfg, const Actor& actor) {
  EnvState state = reset(task, corpus, cfg);
  std::vector<EpisodeStep> steps;
  while (!state.done) {
    const auto actions = legal_actions(state, cfg);
    const Decision d = actor(state, actions);
    require(d.index < actions.size(), ErrorCode::kContract, "actor chose an out-of-range action");
    steps.push_back(EpisodeStep{state.digest(), actions[d.index], d.log_prob, d.value});
    step(state, actions[d.index], corpus, cfg);
  }
  return finalize_episode(state, std::move(steps), cfg);
}

std::size_t oracle_choice(const Task& task, const EnvState& state, const std::vector<Action>& actions) {
  const auto have = state.retrieved_union();
  std::optional<Action> want;
  for (const auto& chain : task.chains) {
    for (std::size_t i = 0; i < chain.claims.size() && !want; ++i) {
      if (have.count(chain.doc_ids.at(i))) continue;
      const auto rel = relation_index(chain.claims[i].relation);
      require(rel.has_value(), ErrorCode::kContract, "unknown relation " + chain.claims[i].relation);
      want = Action::search(*rel, chain.claims[i].subject);
    }
  }
  if (!want) want = Action::answer(task.gold_answers.front());
  auto it = std::find(actions.begin(), actions.end(), *want);
  if (it == actions.end()) {
    fail(ErrorCode::kContract, "oracle infeasible for " + task.task_id + ": " + want->describe() + " is not legal");
  }
  return static_cast<std::size_t>(it - actions.begin());
}

EpisodeRecord oracle_episode(const Task& task, const Corpus& corpus, const EnvConfig& cfg) {
  EnvState state = reset(task, corpus, cfg);
  std::vector<EpisodeStep> steps;
  while (!state.done) {
    const auto actions = legal_actions(state, cfg);
    const std::size_t pick = oracle_choice(task, state, actions);
    const double before = state.coverage();
    steps.push_back(EpisodeStep{state.digest(), actions[pick], 0.0, 0.0});
    step(state, actions[pick], corpus, cfg);
    if (actions[pick].kind == ActionKind::Search && !(state.coverage() > before)) {
      fail(ErrorCode::kContract, "oracle infeasible for " + task.task_id + ": '" + actions[pick].query() +
                                     "' missed its golden document");
    }
  }
  return finalize_episode(state, std::move(steps), cfg);
}

}  // namespace forage
