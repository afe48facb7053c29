#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "forage/corpus.hpp"
#include "forage/rng.hpp"

namespace forage {

struct Claim {
  std::string subject;
  std::string relation;  // relation label
  std::string object;

  bool operator==(const Claim&) const = default;
  auto operator<=>(const Claim&) const = default;
};

// A relation has a label used in questions and a verb phrase used in
// documents. The two vocabularies never share a token, which is what keeps
// the final-hop evidence lexically invisible to the question.
struct RelationTemplate {
  std::string label;
  std::string verb;
};

const std::vector<RelationTemplate>& relation_vocabulary();
std::optional<std::size_t> relation_index(std::string_view label);

// Search query for (template, entity): "<entity> <label> <verb>".
std::string template_query(std::size_t template_id, std::string_view entity);

struct ClaimGraph {
  std::vector<std::string> entities;
  std::vector<Claim> claims;
  std::map<std::string, std::vector<std::size_t>> adjacency;  // entity -> outgoing claim indices
  // Planted hop chains (claim indices), pairwise vertex-disjoint except for
  // the shared answer entity of a conjunctive pair.
  std::vector<std::vector<std::size_t>> candidate_chains;
  // Off-chain claims reserved as distractor material for each candidate.
  std::vector<std::vector<std::size_t>> chain_distractors;
  // In conjunctive mode, candidate i and partner[i] share their answer.
  std::vector<std::optional<std::size_t>> partner;
};

struct HopChain {
  std::vector<Claim> claims;
  std::vector<std::string> doc_ids;  // golden doc per claim, filled by rendering
  std::size_t candidate = 0;         // index into ClaimGraph::candidate_chains

  const std::string& answer_entity() const { return claims.back().object; }
  const std::string& start_entity() const { return claims.front().subject; }
  std::vector<std::string> entities() const;
};

struct GenConfig {
  std::size_t n_entities = 0;  // 0 selects n_tasks * (entities per task + 2)
  std::size_t n_relations = 8;
  std::size_t hops = 3;
  std::size_t distractors_per_task = 5;
  std::size_t n_tasks = 200;
  std::uint64_t seed = 42;
  // Each task ANDs two chains that end in the same answer entity.
  bool conjunctive = false;

  std::size_t entities_per_task() const { return conjunctive ? 2 * hops + 1 : hops + 1; }
  std::size_t resolved_entities() const;
};

void validate(const GenConfig& cfg);

struct Task {
  std::string task_id;
  std::string question;
  std::vector<std::string> gold_answers;
  std::set<std::string> golden_doc_ids;
  std::vector<HopChain> chains;  // one, or two in conjunctive mode
  std::uint64_t created_seed = 0;

  const HopChain& hop_chain() const { return chains.front(); }
  std::size_t hops() const;
  // Start entities plus any chain entity whose name appears in the question.
  std::vector<std::string> question_entities() const;
  // Golden doc id -> the claim it verbalizes.
  std::map<std::string, Claim> evidence() const;
};

ClaimGraph build_claim_graph(const GenConfig& cfg, Rng& rng);

// Draws an unused planted chain; claims already in `used` are never reused.
HopChain sample_hop_chain(const ClaimGraph& graph, std::size_t hops, Rng& rng,
                          std::set<std::size_t>& used);

// Golden documents (one per chain claim) followed by the distractors.
// Golden doc ids are written back into the chains.
std::vector<Document> render_documents(const ClaimGraph& graph, std::vector<HopChain>& chains,
                                       const GenConfig& cfg, Rng& rng);

Task synthesize_task(std::vector<HopChain> chains, Rng& rng);

struct HopVerification {
  bool minimal = false;   // no proper subset of the golden docs yields the answer
  bool complete = false;  // the full golden set yields the answer
  std::size_t checks = 0;
};

HopVerification verify_min_hops_detailed(const Task& task, const Corpus& corpus);
bool verify_min_hops(const Task& task, const Corpus& corpus);

struct Dataset {
  ClaimGraph graph;
  std::vector<Task> tasks;      // sorted by task_id
  std::vector<Document> documents;  // sorted by doc_id
};

// Full pipeline: graph, chains, documents, questions, then a global doc-id
// relabeling. Every task is checked with verify_min_hops.
Dataset generate_dataset(const GenConfig& cfg);

}  // namespace forage
