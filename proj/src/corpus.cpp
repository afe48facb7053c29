#include "forage/corpus.hpp"

#include <algorithm>
#include <cmath>

#include "forage/error.hpp"
#include "forage/text.hpp"

namespace forage {

std::vector<std::string> RetrievalResult::ids() const {
  std::vector<std::string> out;
  out.reserve(ranked.size());
  for (const auto& r : ranked) out.push_back(r.doc_id);
  return out;
}

Corpus Corpus::build(std::vector<Document> docs, Bm25Params params) {
  std::sort(docs.begin(), docs.end(),
            [](const Document& a, const Document& b) { return a.doc_id < b.doc_id; });
  for (std::size_t i = 1; i < docs.size(); ++i) {
    if (docs[i].doc_id == docs[i - 1].doc_id) {
      fail(ErrorCode::kInvalidArgument, "duplicate doc_id '" + docs[i].doc_id + "'");
    }
  }

  Corpus c;
  c.params_ = params;
  c.docs_ = std::move(docs);
  c.lengths_.resize(c.docs_.size());
  double total = 0.0;
  for (std::size_t i = 0; i < c.docs_.size(); ++i) {
    const Document& d = c.docs_[i];
    auto toks = tokenize(d.title + " " + d.body);
    c.lengths_[i] = toks.size();
    total += static_cast<double>(toks.size());
    std::map<std::string, std::uint32_t> tf;
    for (auto& t : toks) ++tf[t];
    for (auto& [term, count] : tf) {
      c.index_[term].push_back(Posting{static_cast<std::uint32_t>(i), count});
    }
  }
  c.avg_len_ = c.docs_.empty() ? 0.0 : total / static_cast<double>(c.docs_.size());
  return c;
}

std::size_t Corpus::position(std::string_view doc_id) const {
  auto it = std::lower_bound(docs_.begin(), docs_.end(), doc_id,
                             [](const Document& d, std::string_view id) { return d.doc_id < id; });
  if (it == docs_.end() || it->doc_id != doc_id) {
    fail(ErrorCode::kLookup, "unknown doc_id '" + std::string(doc_id) + "'");
  }
  return static_cast<std::size_t>(it - docs_.begin());
}

const Document* Corpus::find(std::string_view doc_id) const {
  auto it = std::lower_bound(docs_.begin(), docs_.end(), doc_id,
                             [](const Document& d, std::string_view id) { return d.doc_id < id; });
  if (it == docs_.end() || it->doc_id != doc_id) return nullptr;
  return &*it;
}

const Document& Corpus::at(std::string_view doc_id) const { return docs_[position(doc_id)]; }

std::size_t Corpus::doc_length(std::string_view doc_id) const { return lengths_[position(doc_id)]; }

double Corpus::idf(std::string_view term) const {
  auto it = index_.find(term);
  const double n_t = it == index_.end() ? 0.0 : static_cast<double>(it->second.size());
  const double n = static_cast<double>(docs_.size());
  return std::log((n - n_t + 0.5) / (n_t + 0.5) + 1.0);
}

double Corpus::term_score(double idf, std::uint32_t tf, std::size_t doc) const {
  const double f = static_cast<double>(tf);
  const double norm = 1.0 - params_.b + params_.b * static_cast<double>(lengths_[doc]) / avg_len_;
  return idf * f * (params_.k1 + 1.0) / (f + params_.k1 * norm);
}

double Corpus::bm25_score(std::string_view query, std::string_view doc_id) const {
  const std::size_t doc = position(doc_id);
  double score = 0.0;
  for (const auto& term : token_set(query)) {
    auto it = index_.find(term);
    if (it == index_.end()) continue;
    const auto& plist = it->second;
    auto p = std::lower_bound(plist.begin(), plist.end(), doc,
                              [](const Posting& x, std::size_t d) { return x.doc < d; });
    if (p == plist.end() || p->doc != doc) continue;
    score += term_score(idf(term), p->tf, doc);
  }
  return score;
}

RetrievalResult Corpus::retrieve(std::string_view query, std::size_t k) const {
  require(k >= 1, ErrorCode::kContract, "retrieve needs k >= 1");
  RetrievalResult result{std::string(query), k, {}};
  const auto terms = token_set(query);
  if (terms.empty() || docs_.empty()) return result;

  std::vector<double> scores(docs_.size(), 0.0);
  std::vector<std::size_t> touched;
  for (const auto& term : terms) {
    auto it = index_.find(term);
    if (it == index_.end()) continue;
    const double w = idf(term);
    for (const Posting& p : it->second) {
      if (scores[p.doc] == 0.0) touched.push_back(p.doc);
      scores[p.doc] += term_score(w, p.tf, p.doc);
    }
  }
  std::sort(touched.begin(), touched.end());
  touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
  std::erase_if(touched, [&](std::size_t d) { return !(scores[d] > 0.0); });

  // Positions follow doc_id order, so comparing positions breaks ties by id.
  auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  const std::size_t take = std::min(k, touched.size());
  std::partial_sort(touched.begin(), touched.begin() + static_cast<std::ptrdiff_t>(take),
                    touched.end(), better);
  for (std::size_t i = 0; i < take; ++i) {
    result.ranked.push_back(ScoredDoc{docs_[touched[i]].doc_id, scores[touched[i]]});
  }
  return result;
}

double coverage(const std::set<std::string>& retrieved, const std::set<std::string>& golden) {
  require(!golden.empty(), ErrorCode::kContract, "coverage needs a nonempty golden set");
  std::size_t hit = 0;
  for (const auto& g : golden) hit += retrieved.count(g);
  return static_cast<double>(hit) / static_cast<double>(golden.size());
}

}  // namespace forage
