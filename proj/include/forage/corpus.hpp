#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace forage {

struct Document {
  std::string doc_id;
  std::string title;
  std::string body;
  bool is_distractor = false;

  bool operator==(const Document&) const = default;
};

struct Posting {
  std::uint32_t doc = 0;  // position in Corpus::documents()
  std::uint32_t tf = 0;

  bool operator==(const Posting&) const = default;
};

struct ScoredDoc {
  std::string doc_id;
  double score = 0.0;
};

struct RetrievalResult {
  std::string query;
  std::size_t k = 0;
  std::vector<ScoredDoc> ranked;

  std::vector<std::string> ids() const;
};

inline constexpr std::size_t kDefaultTopK = 3;

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

// Anything that can stand in for the lexical retriever.
class Retriever {
 public:
  virtual ~Retriever() = default;
  virtual RetrievalResult retrieve(std::string_view query, std::size_t k = kDefaultTopK) const = 0;
};

// Immutable document store with BM25 statistics. Documents are kept sorted by
// doc_id so build order never affects the index.
class Corpus : public Retriever {
 public:
  Corpus() = default;

  static Corpus build(std::vector<Document> docs, Bm25Params params = {});

  std::size_t size() const { return docs_.size(); }
  const std::vector<Document>& documents() const { return docs_; }
  const Document* find(std::string_view doc_id) const;
  const Document& at(std::string_view doc_id) const;

  double avg_doc_length() const { return avg_len_; }
  std::size_t doc_length(std::string_view doc_id) const;
  const std::map<std::string, std::vector<Posting>, std::less<>>& index() const { return index_; }
  const Bm25Params& params() const { return params_; }

  double idf(std::string_view term) const;
  double bm25_score(std::string_view query, std::string_view doc_id) const;

  // Top-k documents with positive score, ordered by score descending and then
  // doc_id ascending. A query with no tokens returns an empty result.
  RetrievalResult retrieve(std::string_view query, std::size_t k = kDefaultTopK) const override;

 private:
  std::size_t position(std::string_view doc_id) const;
  double term_score(double idf, std::uint32_t tf, std::size_t doc) const;

  std::vector<Document> docs_;
  std::vector<std::size_t> lengths_;
  std::map<std::string, std::vector<Posting>, std::less<>> index_;
  double avg_len_ = 0.0;
  Bm25Params params_;
};

// Recall of the retrieved union against the golden set.
double coverage(const std::set<std::string>& retrieved, const std::set<std::string>& golden);

}  // namespace forage
