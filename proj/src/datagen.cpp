#include "forage/datagen.hpp"

#include <algorithm>
#include <array>
#include <cstdio>

#include "forage/error.hpp"
#include "forage/text.hpp"

namespace forage {

namespace {

constexpr std::array<std::string_view, 8> kFillers = {
    "Archival ledgers mention this briefly.",
    "Regional chronicles recount similar events.",
    "Several surveys confirmed these reports.",
    "Historians continue debating specifics.",
    "Contemporary accounts remain sparse.",
    "Museum catalogues list related artifacts.",
    "Oral traditions preserve fragments.",
    "Municipal registers note matching dates.",
};

constexpr std::array<std::string_view, 2> kQuestionOpeners = {"Which entity is", "What is"};

constexpr std::string_view kConsonants = "bdfgklmnprstvz";
constexpr std::string_view kVowels = "aeiou";

std::set<std::string> reserved_tokens() {
  std::set<std::string> out;
  for (const auto& r : relation_vocabulary()) {
    for (auto& t : tokenize(r.label)) out.insert(t);
    for (auto& t : tokenize(r.verb)) out.insert(t);
  }
  for (auto f : kFillers) {
    for (auto& t : tokenize(f)) out.insert(t);
  }
  for (auto q : kQuestionOpeners) {
    for (auto& t : tokenize(q)) out.insert(t);
  }
  for (auto t : {"the", "of", "and"}) out.insert(t);
  return out;
}

std::string make_name(Rng& rng) {
  const std::size_t syllables = 3 + rng.below(2);
  std::string name;
  for (std::size_t i = 0; i < syllables; ++i) {
    name.push_back(kConsonants[rng.below(kConsonants.size())]);
    name.push_back(kVowels[rng.below(kVowels.size())]);
  }
  name[0] = static_cast<char>(name[0] - 'a' + 'A');
  return name;
}

std::string claim_sentence(const Claim& c) {
  const auto idx = relation_index(c.relation);
  require(idx.has_value(), ErrorCode::kGeneration, "unknown relation '" + c.relation + "'");
  return c.subject + " " + relation_vocabulary()[*idx].verb + " " + c.object + ".";
}

Document render_claim(const Claim& c, bool distractor, Rng& rng) {
  std::vector<std::string> sentences{claim_sentence(c)};
  std::vector<std::size_t> fill(kFillers.size());
  for (std::size_t i = 0; i < fill.size(); ++i) fill[i] = i;
  rng.shuffle(fill);
  const std::size_t n_fill = 1 + rng.below(3);
  for (std::size_t i = 0; i < n_fill; ++i) sentences.emplace_back(kFillers[fill[i]]);
  rng.shuffle(sentences);
  std::string body;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (i) body.push_back(' ');
    body += sentences[i];
  }
  return Document{"", c.subject, body, distractor};
}

// Relations (by vocabulary index) used by the chain(s) of one candidate.
std::vector<std::size_t> sample_distinct(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  rng.shuffle(idx);
  idx.resize(k);
  return idx;
}

bool derivable(const std::vector<Claim>& claims, const std::vector<std::string>& starts,
               const std::vector<std::string>& question_entities, const std::string& answer) {
  if (std::find(question_entities.begin(), question_entities.end(), answer) != question_entities.end()) {
    return true;
  }
  for (const auto& start : starts) {
    std::set<std::string> reached{start};
    std::vector<std::string> frontier{start};
    while (!frontier.empty()) {
      std::string e = frontier.back();
      frontier.pop_back();
      for (const auto& c : claims) {
        if (c.subject == e && reached.insert(c.object).second) frontier.push_back(c.object);
      }
    }
    if (!reached.count(answer)) return false;
  }
  return true;
}

}  // namespace

const std::vector<RelationTemplate>& relation_vocabulary() {
  static const std::vector<RelationTemplate> kVocab = {
      {"mentor", "apprenticed under"},  {"employer", "salaried at"},
      {"founder", "launched via"},      {"rival", "competed against"},
      {"sibling", "grew alongside"},    {"neighbor", "resided beside"},
      {"partner", "collaborated with"}, {"successor", "replaced later"},
      {"patron", "funded generously"},  {"editor", "revised thoroughly"},
  };
  return kVocab;
}

std::optional<std::size_t> relation_index(std::string_view label) {
  const auto& v = relation_vocabulary();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i].label == label) return i;
  }
  return std::nullopt;
}

std::string template_query(std::size_t template_id, std::string_view entity) {
  const auto& r = relation_vocabulary().at(template_id);
  return std::string(entity) + " " + r.label + " " + r.verb;
}

std::vector<std::string> HopChain::entities() const {
  std::vector<std::string> out;
  if (claims.empty()) return out;
  out.push_back(claims.front().subject);
  for (const auto& c : claims) out.push_back(c.object);
  return out;
}

std::size_t GenConfig::resolved_entities() const {
  return n_entities ? n_entities : n_tasks * (entities_per_task() + 2);
}

void validate(const GenConfig& cfg) {
  require(cfg.n_tasks > 0 && cfg.n_relations > 0 && cfg.distractors_per_task > 0,
          ErrorCode::kInvalidArgument, "generation counts must be positive");
  require(cfg.hops >= 3, ErrorCode::kInvalidArgument, "hop count must be at least 3");
  require(cfg.n_relations <= relation_vocabulary().size(), ErrorCode::kGeneration,
          "template vocabulary exhausted: at most " + std::to_string(relation_vocabulary().size()) +
              " relations");
  require(cfg.n_relations > cfg.hops, ErrorCode::kGeneration,
          "template vocabulary exhausted: need more relations than hops for off-chain claims");
}

std::size_t Task::hops() const {
  std::size_t n = 0;
  for (const auto& c : chains) n += c.claims.size();
  return n;
}

std::vector<std::string> Task::question_entities() const {
  std::vector<std::string> out;
  for (const auto& c : chains) {
    if (std::find(out.begin(), out.end(), c.start_entity()) == out.end()) out.push_back(c.start_entity());
  }
  const auto qtoks = token_set(question);
  for (const auto& c : chains) {
    for (const auto& e : c.entities()) {
      if (std::find(out.begin(), out.end(), e) != out.end()) continue;
      auto etoks = tokenize(e);
      if (!etoks.empty() && std::all_of(etoks.begin(), etoks.end(),
                                        [&](const std::string& t) { return qtoks.count(t) > 0; })) {
        out.push_back(e);
      }
    }
  }
  return out;
}

std::map<std::string, Claim> Task::evidence() const {
  std::map<std::string, Claim> out;
  for (const auto& c : chains) {
    for (std::size_t i = 0; i < c.claims.size() && i < c.doc_ids.size(); ++i) {
      out.emplace(c.doc_ids[i], c.claims[i]);
    }
  }
  return out;
}

ClaimGraph build_claim_graph(const GenConfig& cfg, Rng& rng) {
  validate(cfg);
  const std::size_t per_task = cfg.entities_per_task();
  const std::size_t n_entities = cfg.resolved_entities();
  if (n_entities < cfg.n_tasks * per_task) {
    fail(ErrorCode::kGeneration, "infeasible configuration: " + std::to_string(n_entities) +
                                     " entities cannot hold " + std::to_string(cfg.n_tasks) +
                                     " disjoint chains of " + std::to_string(cfg.hops) + " hops");
  }

  ClaimGraph g;
  const auto reserved = reserved_tokens();
  std::set<std::string> seen;
  while (g.entities.size() < n_entities) {
    std::string name = make_name(rng);
    std::string lowered = tokenize(name).front();
    if (reserved.count(lowered) || !seen.insert(lowered).second) continue;
    g.entities.push_back(std::move(name));
  }

  auto add_claim = [&](Claim c) {
    g.claims.push_back(std::move(c));
    return g.claims.size() - 1;
  };
  auto plant = [&](const std::vector<std::string>& ents, const std::vector<std::size_t>& rels) {
    std::vector<std::size_t> chain;
    for (std::size_t i = 0; i < rels.size(); ++i) {
      chain.push_back(add_claim(Claim{ents[i], relation_vocabulary()[rels[i]].label, ents[i + 1]}));
    }
    return chain;
  };

  const std::vector<std::string> pool(g.entities.begin() + static_cast<std::ptrdiff_t>(cfg.n_tasks * per_task),
                                      g.entities.end());
  for (std::size_t t = 0; t < cfg.n_tasks; ++t) {
    const auto base = g.entities.begin() + static_cast<std::ptrdiff_t>(t * per_task);
    std::vector<std::string> ents(base, base + static_cast<std::ptrdiff_t>(cfg.hops + 1));
    std::vector<std::size_t> rels = sample_distinct(cfg.n_relations, cfg.hops, rng);
    std::set<std::size_t> used_rels(rels.begin(), rels.end());
    std::vector<std::string> anchors(ents.begin(), ents.end() - 1);

    const std::size_t first = g.candidate_chains.size();
    g.candidate_chains.push_back(plant(ents, rels));
    g.partner.emplace_back();
    if (cfg.conjunctive) {
      std::vector<std::string> other(base + static_cast<std::ptrdiff_t>(cfg.hops + 1),
                                     base + static_cast<std::ptrdiff_t>(per_task));
      other.push_back(ents.back());
      std::vector<std::size_t> rels2 = sample_distinct(cfg.n_relations, cfg.hops, rng);
      used_rels.insert(rels2.begin(), rels2.end());
      anchors.insert(anchors.end(), other.begin(), other.end() - 1);
      g.candidate_chains.push_back(plant(other, rels2));
      g.partner.back() = first + 1;
      g.partner.emplace_back(first);
    }

    std::vector<std::size_t> free_rels;
    for (std::size_t r = 0; r < cfg.n_relations; ++r) {
      if (!used_rels.count(r)) free_rels.push_back(r);
    }
    // Distractors hang off the non-answer chain entities, bridges first, so a
    // bridge entity is named in more documents than top-k holds and the query
    // template decides which of them come back.
    std::vector<std::size_t> off;
    if (!pool.empty() && !free_rels.empty()) {
      for (std::size_t j = 0; j < cfg.distractors_per_task; ++j) {
        const std::string& rel = relation_vocabulary()[free_rels[rng.below(free_rels.size())]].label;
        const std::string& anchor = anchors[(j + 1) % anchors.size()];
        off.push_back(add_claim(Claim{anchor, rel, pool[rng.below(pool.size())]}));
      }
    }
    g.chain_distractors.push_back(off);
    if (cfg.conjunctive) g.chain_distractors.push_back(off);
  }

  for (std::size_t i = 0; i < g.claims.size(); ++i) g.adjacency[g.claims[i].subject].push_back(i);
  return g;
}

HopChain sample_hop_chain(const ClaimGraph& graph, std::size_t hops, Rng& rng,
                          std::set<std::size_t>& used) {
  require(hops >= 3, ErrorCode::kInvalidArgument, "hop count must be at least 3");
  std::vector<std::size_t> open;
  for (std::size_t i = 0; i < graph.candidate_chains.size(); ++i) {
    const auto& chain = graph.candidate_chains[i];
    if (chain.size() != hops) continue;
    if (std::none_of(chain.begin(), chain.end(), [&](std::size_t c) { return used.count(c) > 0; })) {
      open.push_back(i);
    }
  }
  if (open.empty()) fail(ErrorCode::kGeneration, "claim graph exhausted: no unused " +
                                                     std::to_string(hops) + "-hop chain left");
  const std::size_t pick = open[rng.below(open.size())];
  HopChain chain;
  chain.candidate = pick;
  for (std::size_t c : graph.candidate_chains[pick]) {
    used.insert(c);
    chain.claims.push_back(graph.claims[c]);
  }
  return chain;
}

std::vector<Document> render_documents(const ClaimGraph& graph, std::vector<HopChain>& chains,
                                       const GenConfig& cfg, Rng& rng) {
  require(!chains.empty(), ErrorCode::kInvalidArgument, "render_documents needs a chain");
  std::vector<Document> docs;
  std::size_t serial = 0;
  auto next_id = [&] {
    char buf[32];
    std::snprintf(buf, sizeof buf, "tmp-%04zu", serial++);
    return std::string(buf);
  };
  for (auto& chain : chains) {
    chain.doc_ids.clear();
    for (const auto& claim : chain.claims) {
      Document d = render_claim(claim, false, rng);
      d.doc_id = next_id();
      chain.doc_ids.push_back(d.doc_id);
      docs.push_back(std::move(d));
    }
  }
  const auto& pool = graph.chain_distractors.at(chains.front().candidate);
  if (pool.size() < cfg.distractors_per_task) {
    fail(ErrorCode::kGeneration, "only " + std::to_string(pool.size()) + " off-chain claims for " +
                                     std::to_string(cfg.distractors_per_task) + " distractors");
  }
  for (std::size_t j = 0; j < cfg.distractors_per_task; ++j) {
    Document d = render_claim(graph.claims[pool[j]], true, rng);
    d.doc_id = next_id();
    docs.push_back(std::move(d));
  }
  return docs;
}

Task synthesize_task(std::vector<HopChain> chains, Rng& rng) {
  require(!chains.empty(), ErrorCode::kInvalidArgument, "synthesize_task needs a chain");
  std::string q(kQuestionOpeners[rng.below(kQuestionOpeners.size())]);
  for (std::size_t k = 0; k < chains.size(); ++k) {
    if (k) q += " and";
    const auto& claims = chains[k].claims;
    for (std::size_t i = claims.size(); i-- > 0;) q += " the " + claims[i].relation + " of";
    q += " " + chains[k].start_entity();
  }
  q += "?";

  Task task;
  task.question = std::move(q);
  task.gold_answers = {chains.front().answer_entity()};
  for (const auto& c : chains) task.golden_doc_ids.insert(c.doc_ids.begin(), c.doc_ids.end());
  task.chains = std::move(chains);
  return task;
}

HopVerification verify_min_hops_detailed(const Task& task, const Corpus& corpus) {
  std::vector<std::string> golden(task.golden_doc_ids.begin(), task.golden_doc_ids.end());
  require(golden.size() < 24, ErrorCode::kContract, "too many golden documents to enumerate");
  const auto evidence = task.evidence();
  for (const auto& id : golden) {
    const Document* d = corpus.find(id);
    if (!d) fail(ErrorCode::kLookup, "verification: golden doc '" + id + "' missing from corpus");
    auto ev = evidence.find(id);
    if (ev == evidence.end()) fail(ErrorCode::kLookup, "verification: no claim recorded for '" + id + "'");
    if (d->body.find(ev->second.subject) == std::string::npos ||
        d->body.find(ev->second.object) == std::string::npos) {
      fail(ErrorCode::kContract, "verification: golden doc '" + id + "' does not state its claim");
    }
  }

  std::vector<std::string> starts;
  for (const auto& c : task.chains) starts.push_back(c.start_entity());
  const auto qents = task.question_entities();
  const std::string& answer = task.hop_chain().answer_entity();

  HopVerification out;
  out.minimal = true;
  const std::size_t full = (std::size_t{1} << golden.size()) - 1;
  for (std::size_t mask = 0; mask < full; ++mask) {
    std::vector<Claim> subset;
    for (std::size_t i = 0; i < golden.size(); ++i) {
      if (mask & (std::size_t{1} << i)) subset.push_back(evidence.at(golden[i]));
    }
    ++out.checks;
    if (derivable(subset, starts, qents, answer)) out.minimal = false;
  }
  std::vector<Claim> all;
  for (const auto& id : golden) all.push_back(evidence.at(id));
  out.complete = derivable(all, starts, qents, answer);
  return out;
}

bool verify_min_hops(const Task& task, const Corpus& corpus) {
  return verify_min_hops_detailed(task, corpus).minimal;
}

Dataset generate_dataset(const GenConfig& cfg) {
  validate(cfg);
  Rng rng(cfg.seed);
  Dataset ds;
  ds.graph = build_claim_graph(cfg, rng);

  std::set<std::size_t> used;
  std::vector<Document> docs;
  for (std::size_t t = 0; t < cfg.n_tasks; ++t) {
    Rng task_rng = rng.fork(t);
    std::vector<HopChain> chains{sample_hop_chain(ds.graph, cfg.hops, task_rng, used)};
    if (cfg.conjunctive) {
      const auto partner = ds.graph.partner.at(chains.front().candidate);
      require(partner.has_value(), ErrorCode::kGeneration, "conjunctive candidate without partner");
      HopChain second;
      second.candidate = *partner;
      for (std::size_t c : ds.graph.candidate_chains[*partner]) {
        require(used.insert(c).second, ErrorCode::kGeneration, "conjunctive partner already used");
        second.claims.push_back(ds.graph.claims[c]);
      }
      chains.push_back(std::move(second));
    }
    auto task_docs = render_documents(ds.graph, chains, cfg, task_rng);
    char prefix[32];
    std::snprintf(prefix, sizeof prefix, "t%04zu-", t);
    for (auto& d : task_docs) d.doc_id = prefix + d.doc_id;
    for (auto& c : chains) {
      for (auto& id : c.doc_ids) id = prefix + id;
    }
    Task task = synthesize_task(std::move(chains), task_rng);
    char tid[32];
    std::snprintf(tid, sizeof tid, "task-%04zu", t);
    task.task_id = tid;
    task.created_seed = cfg.seed;
    ds.tasks.push_back(std::move(task));
    for (auto& d : task_docs) docs.push_back(std::move(d));
  }

  // Neutral ids so a doc id says nothing about its role.
  std::vector<std::size_t> order(docs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::map<std::string, std::string> rename;
  for (std::size_t i = 0; i < order.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "doc-%05zu", i);
    rename[docs[order[i]].doc_id] = buf;
  }
  for (auto& d : docs) d.doc_id = rename.at(d.doc_id);
  for (auto& task : ds.tasks) {
    std::set<std::string> ids;
    for (auto& c : task.chains) {
      for (auto& id : c.doc_ids) {
        id = rename.at(id);
        ids.insert(id);
      }
    }
    task.golden_doc_ids = std::move(ids);
  }
  std::sort(docs.begin(), docs.end(), [](const Document& a, const Document& b) { return a.doc_id < b.doc_id; });
  ds.documents = std::move(docs);

  const Corpus corpus = Corpus::build(ds.documents);
  for (const auto& task : ds.tasks) {
    const auto v = verify_min_hops_detailed(task, corpus);
    if (!v.minimal || !v.complete) {
      fail(ErrorCode::kGeneration, "task " + task.task_id + " failed hop verification");
    }
  }
  return ds;
}

}  // namespace forage
