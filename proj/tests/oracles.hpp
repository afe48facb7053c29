#pragma once

// Reference implementations used only by tests. They are written directly
// from the formulas and share no code with the library.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

inline std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : s) {
    if (c < 128 && std::isalnum(c)) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

struct Doc {
  std::string id;
  std::string text;  // title and body as the index sees them
};

// Okapi BM25 straight from the definition, over documents tokenized once.
class Bm25 {
 public:
  explicit Bm25(const std::vector<Doc>& docs, double k1 = 1.2, double b = 0.75) : k1_(k1), b_(b) {
    double total = 0;
    for (const auto& d : docs) {
      ids_.push_back(d.id);
      words_.push_back(words(d.text));
      total += static_cast<double>(words_.back().size());
    }
    avg_ = docs.empty() ? 0.0 : total / static_cast<double>(docs.size());
  }

  double score(const std::string& query, std::size_t doc) const {
    const auto q = words(query);
    const std::set<std::string> unique(q.begin(), q.end());
    const double n_docs = static_cast<double>(ids_.size());
    double s = 0;
    for (const auto& t : unique) {
      double containing = 0;
      for (const auto& w : words_) {
        if (std::find(w.begin(), w.end(), t) != w.end()) containing += 1;
      }
      const double tf = static_cast<double>(std::count(words_[doc].begin(), words_[doc].end(), t));
      if (tf == 0) continue;
      const double idf = std::log((n_docs - containing + 0.5) / (containing + 0.5) + 1.0);
      const double len = static_cast<double>(words_[doc].size());
      s += idf * tf * (k1_ + 1) / (tf + k1_ * (1 - b_ + b_ * len / avg_));
    }
    return s;
  }

  double score(const std::string& query, const std::string& id) const {
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      if (ids_[i] == id) return score(query, i);
    }
    return -1;
  }

  // Every positive score, descending, ties by ascending id.
  std::vector<std::pair<std::string, double>> ranking(const std::string& query) const {
    std::vector<std::pair<std::string, double>> all;
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      const double s = score(query, i);
      if (s > 0) all.emplace_back(ids_[i], s);
    }
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    return all;
  }

 private:
  double k1_, b_;
  double avg_ = 0;
  std::vector<std::string> ids_;
  std::vector<std::vector<std::string>> words_;
};

// A_t = sum_l (gamma lam)^l delta_{t+l}, delta with v_L = 0.
inline std::vector<double> gae_double_sum(const std::vector<double>& r, const std::vector<double>& v,
                                          double gamma, double lam) {
  const std::size_t n = r.size();
  std::vector<double> delta(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double next = t + 1 < n ? v[t + 1] : 0.0;
    delta[t] = r[t] + gamma * next - v[t];
  }
  std::vector<double> adv(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t l = 0; t + l < n; ++l) adv[t] += std::pow(gamma * lam, static_cast<double>(l)) * delta[t + l];
  }
  return adv;
}

}  // namespace oracle
