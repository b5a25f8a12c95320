#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "rgs/common.hpp"

namespace rgs {

using DocId = std::string;

/// Inner product of two equal-dimension vectors. This is the one similarity
/// function in the engine; cosine is obtained by normalizing embeddings at
/// ingestion.
inline double similarity(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw InvalidInputError("similarity: dimension mismatch (" + std::to_string(a.size()) +
                            " vs " + std::to_string(b.size()) + ")");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += static_cast<double>(a[i]) * b[i];
  return acc;
}

/// Euclidean distance between two equal-dimension vectors. Graph construction
/// (pruning, KNN selection, medoid) works in this metric; on unit-norm
/// embeddings its ordering agrees with descending inner product.
inline double l2_distance(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw InvalidInputError("l2_distance: dimension mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

struct Embedding {
  std::vector<float> values;

  std::size_t dim() const { return values.size(); }
  std::span<const float> span() const { return {values.data(), values.size()}; }

  void validate() const {
    if (values.empty()) throw InvalidInputError("embedding: empty vector");
    for (float v : values) {
      if (!std::isfinite(v)) throw InvalidInputError("embedding: non-finite value");
    }
  }

  void normalize() {
    double norm = 0.0;
    for (float v : values) norm += static_cast<double>(v) * v;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
      for (float& v : values) v = static_cast<float>(v / norm);
    }
  }
};

/// Document collection: unique string ids mapped to fixed-dimension float
/// embeddings plus optional text payloads. Iteration order is insertion order
/// and indices are stable, so algorithms address documents by index.
class Corpus {
 public:
  void add(DocId id, std::vector<float> values, std::string text = {}) {
    Embedding e{std::move(values)};
    e.validate();
    if (dim_ == 0) {
      dim_ = static_cast<std::uint32_t>(e.dim());
    } else if (e.dim() != dim_) {
      throw InvalidInputError("corpus: dimension mismatch for doc '" + id + "': expected " +
                              std::to_string(dim_) + ", got " + std::to_string(e.dim()));
    }
    if (index_.contains(id)) {
      throw InvalidInputError("corpus: duplicate doc id '" + id + "'");
    }
    index_.emplace(id, static_cast<std::uint32_t>(ids_.size()));
    ids_.push_back(std::move(id));
    texts_.push_back(std::move(text));
    data_.insert(data_.end(), e.values.begin(), e.values.end());
  }

  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  std::uint32_t dim() const { return dim_; }

  std::span<const float> embedding(std::uint32_t idx) const {
    return {data_.data() + static_cast<std::size_t>(idx) * dim_, dim_};
  }

  const DocId& id(std::uint32_t idx) const { return ids_[idx]; }
  const std::string& text(std::uint32_t idx) const { return texts_[idx]; }
  bool has_text(std::uint32_t idx) const { return !texts_[idx].empty(); }

  std::optional<std::uint32_t> find(const DocId& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::uint32_t require(const DocId& id) const {
    auto idx = find(id);
    if (!idx) throw InvalidInputError("corpus: unknown doc id '" + id + "'");
    return *idx;
  }

  void normalize_all() {
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      float* row = data_.data() + i * dim_;
      double norm = 0.0;
      for (std::uint32_t d = 0; d < dim_; ++d) norm += static_cast<double>(row[d]) * row[d];
      norm = std::sqrt(norm);
      if (norm > 0.0) {
        for (std::uint32_t d = 0; d < dim_; ++d) row[d] = static_cast<float>(row[d] / norm);
      }
    }
  }

  double max_embedding_norm() const {
    double best = 0.0;
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      const float* row = data_.data() + i * dim_;
      double norm = 0.0;
      for (std::uint32_t d = 0; d < dim_; ++d) norm += static_cast<double>(row[d]) * row[d];
      best = std::max(best, norm);
    }
    return std::sqrt(best);
  }

 private:
  std::uint32_t dim_ = 0;
  std::vector<float> data_;
  std::vector<DocId> ids_;
  std::vector<std::string> texts_;
  std::unordered_map<DocId, std::uint32_t> index_;
};

struct QueryRecord {
  std::string qid;
  Embedding embedding;
  std::string text;
};

/// Graded relevance judgments. Absent pairs have grade 0; explicit grade-0
/// lines are kept but never contribute to ideal gains.
class RelevanceJudgments {
 public:
  void set(const std::string& qid, const DocId& doc, int grade) {
    if (grade < 0) throw InvalidInputError("qrels: negative grade");
    grades_[qid][doc] = grade;
  }

  int grade(const std::string& qid, const DocId& doc) const {
    auto q = grades_.find(qid);
    if (q == grades_.end()) return 0;
    auto d = q->second.find(doc);
    if (d == q->second.end()) return 0;
    return d->second;
  }

  /// Judged docs with grade > 0 for a query, sorted by doc id.
  std::vector<std::pair<DocId, int>> positives(const std::string& qid) const {
    std::vector<std::pair<DocId, int>> out;
    auto q = grades_.find(qid);
    if (q == grades_.end()) return out;
    for (const auto& [doc, g] : q->second) {
      if (g > 0) out.emplace_back(doc, g);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  std::size_t query_count() const { return grades_.size(); }
  std::size_t dropped() const { return dropped_; }
  void note_dropped(std::size_t n) { dropped_ += n; }

 private:
  std::map<std::string, std::unordered_map<DocId, int>> grades_;
  std::size_t dropped_ = 0;
};

struct RankedList {
  std::string qid;
  std::vector<DocId> entries;  // no duplicates
};

/// Per-query budget accounting. A document is charged the first time it
/// enters any reranker window; re-reranking it later is free against
/// budget_k but still counts in doc_views/calls/tokens.
class BudgetLedger {
 public:
  explicit BudgetLedger(int budget_k) : budget_k_(budget_k) {
    if (budget_k <= 0) throw InvalidInputError("budget_k must be positive");
  }

  int budget() const { return budget_k_; }
  std::size_t scanned_count() const { return scanned_.size(); }
  bool scanned(const DocId& id) const { return scanned_.contains(id); }
  bool full() const { return scanned_.size() >= static_cast<std::size_t>(budget_k_); }
  std::size_t remaining() const { return static_cast<std::size_t>(budget_k_) - scanned_.size(); }

  /// All-or-nothing charge: either every unscanned doc in `docs` fits under
  /// budget_k and all are recorded, or nothing changes and false is returned.
  /// Repeated ids inside one window count once.
  bool try_charge(std::span<const DocId> docs) {
    std::unordered_set<std::string_view> fresh;
    for (const DocId& d : docs) {
      if (!scanned_.contains(d)) fresh.insert(d);
    }
    if (scanned_.size() + fresh.size() > static_cast<std::size_t>(budget_k_)) return false;
    for (const DocId& d : docs) scanned_.insert(d);
    return true;
  }

  void add_views(std::size_t n) { doc_views_ += n; }
  void add_call() { ++calls_; }
  void add_tokens(std::int64_t in, std::int64_t out) {
    tokens_in_ += in;
    tokens_out_ += out;
  }

  std::size_t doc_views() const { return doc_views_; }
  std::size_t calls() const { return calls_; }
  std::int64_t tokens_in() const { return tokens_in_; }
  std::int64_t tokens_out() const { return tokens_out_; }

  /// Scanned ids in sorted order (for traces and reports).
  std::vector<DocId> scanned_sorted() const {
    std::vector<DocId> out(scanned_.begin(), scanned_.end());
    std::sort(out.begin(), out.end());
    return out;
  }

  const std::unordered_set<DocId>& scanned_set() const { return scanned_; }

 private:
  int budget_k_;
  std::unordered_set<DocId> scanned_;
  std::size_t doc_views_ = 0;
  std::size_t calls_ = 0;
  std::int64_t tokens_in_ = 0;
  std::int64_t tokens_out_ = 0;
};

/// One listwise rerank request: a query plus an ordered window of candidate
/// documents (corpus indices). Backends must answer with a permutation of
/// the candidate positions.
struct RerankerWindowRequest {
  std::string qid;
  Embedding query_embedding;
  std::string query_text;
  std::vector<std::uint32_t> candidates;
};

struct RerankerWindowResponse {
  bool ok = true;
  std::string error;
  std::vector<std::uint32_t> order;  // positions into request.candidates
  std::int64_t tokens_in = 0;
  std::int64_t tokens_out = 0;
};

/// True iff `order` is a permutation of 0..n-1.
inline bool is_permutation_of(std::span<const std::uint32_t> order, std::size_t n) {
  if (order.size() != n) return false;
  std::vector<bool> seen(n, false);
  for (std::uint32_t p : order) {
    if (p >= n || seen[p]) return false;
    seen[p] = true;
  }
  return true;
}

}  // namespace rgs
