#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rgs/core.hpp"

namespace rgs {

/// Listwise window reorder contract: given a query and an ordered window of
/// candidate docs, answer with a permutation of the window positions.
class RerankerBackend {
 public:
  virtual ~RerankerBackend() = default;
  virtual std::string name() const = 0;
  virtual RerankerWindowResponse rerank(const RerankerWindowRequest& request) = 0;
};

inline double oracle_score(int grade, double sim, double large) {
  return static_cast<double>(grade) * large + sim;
}

namespace detail {

// Sorts window positions by (score desc, doc id asc) into a permutation.
inline std::vector<std::uint32_t> order_by_score(std::span<const double> scores,
                                                 std::span<const std::uint32_t> candidates,
                                                 const Corpus& corpus) {
  std::vector<std::uint32_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return corpus.id(candidates[a]) < corpus.id(candidates[b]);
  });
  return order;
}

// Deterministic standard normal keyed by (seed, qid, doc id); independent of
// call order, consistent across windows.
inline double keyed_gaussian(std::uint64_t seed, const std::string& qid, const std::string& doc) {
  std::uint64_t s = mix64(seed ^ mix64(hash_str(qid)) ^ mix64(hash_str(doc) * 0x9e3779b97f4a7c15ULL));
  // Box-Muller on two fixed uniforms, pinned here rather than delegated to
  // std::normal_distribution (whose algorithm varies by implementation).
  const std::uint64_t a = mix64(s);
  const std::uint64_t b = mix64(a);
  const double u1 = (static_cast<double>(a >> 11) + 0.5) / 9007199254740992.0;  // (0,1)
  const double u2 = static_cast<double>(b >> 11) / 9007199254740992.0;          // [0,1)
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793 * u2);
}

}  // namespace detail

/// Ground-truth stand-in for an LLM reranker at desk scale: orders a window
/// by grade first (any positive grade dominates every similarity), then by
/// query-document similarity, then by doc id.
class OracleReranker : public RerankerBackend {
 public:
  OracleReranker(const Corpus& corpus, const RelevanceJudgments& qrels)
      : corpus_(corpus), qrels_(qrels) {}

  std::string name() const override { return "oracle"; }

  RerankerWindowResponse rerank(const RerankerWindowRequest& request) override {
    const double large = grade_dominance_bound(request);
    std::vector<double> scores(request.candidates.size());
    for (std::size_t i = 0; i < request.candidates.size(); ++i) {
      const std::uint32_t doc = request.candidates[i];
      const int grade = qrels_.grade(request.qid, corpus_.id(doc));
      const double sim = similarity(request.query_embedding.span(), corpus_.embedding(doc));
      scores[i] = oracle_score(grade, sim, large);
    }
    RerankerWindowResponse resp;
    resp.order = detail::order_by_score(scores, request.candidates, corpus_);
    return resp;
  }

  /// 2 * max |sim(q, d)| over the corpus + 1; any grade step outweighs every
  /// similarity difference. Cached per qid.
  double grade_dominance_bound(const RerankerWindowRequest& request) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = large_cache_.find(request.qid);
    if (it != large_cache_.end()) return it->second;
    double max_abs = 0.0;
    for (std::uint32_t d = 0; d < corpus_.size(); ++d) {
      max_abs = std::max(max_abs,
                         std::abs(similarity(request.query_embedding.span(), corpus_.embedding(d))));
    }
    const double large = 2.0 * max_abs + 1.0;
    large_cache_.emplace(request.qid, large);
    return large;
  }

 protected:
  const Corpus& corpus_;
  const RelevanceJudgments& qrels_;

 private:
  std::mutex mu_;
  std::unordered_map<std::string, double> large_cache_;
};

struct NoiseConfig {
  double score_noise_sigma = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (score_noise_sigma < 0.0) throw InvalidInputError("noise sigma must be >= 0");
  }
};

/// Oracle scores plus per-(query, doc) Gaussian noise. The noise is a pure
/// function of (seed, qid, doc id), so a given run is reproducible and a doc
/// keeps the same perturbed score across windows.
class NoisyOracleReranker : public OracleReranker {
 public:
  NoisyOracleReranker(const Corpus& corpus, const RelevanceJudgments& qrels, NoiseConfig noise)
      : OracleReranker(corpus, qrels), noise_(noise) {
    noise_.validate();
  }

  std::string name() const override { return "noisy_oracle"; }

  RerankerWindowResponse rerank(const RerankerWindowRequest& request) override {
    const double large = grade_dominance_bound(request);
    std::vector<double> scores(request.candidates.size());
    for (std::size_t i = 0; i < request.candidates.size(); ++i) {
      const std::uint32_t doc = request.candidates[i];
      const DocId& id = corpus_.id(doc);
      const int grade = qrels_.grade(request.qid, id);
      const double sim = similarity(request.query_embedding.span(), corpus_.embedding(doc));
      scores[i] = oracle_score(grade, sim, large) +
                  noise_.score_noise_sigma * detail::keyed_gaussian(noise_.seed, request.qid, id);
    }
    RerankerWindowResponse resp;
    resp.order = detail::order_by_score(scores, request.candidates, corpus_);
    return resp;
  }

 private:
  NoiseConfig noise_;
};

/// Fixed scoring function behind the window contract. `similarity` reorders
/// by query-document inner product (a no-op relative to ANN order);
/// `grade` reads qrels only and never touches the query embedding.
class StaticScoreReranker : public RerankerBackend {
 public:
  enum class Source { similarity, grade };

  StaticScoreReranker(const Corpus& corpus, Source source,
                      const RelevanceJudgments* qrels = nullptr)
      : corpus_(corpus), source_(source), qrels_(qrels) {
    if (source_ == Source::grade && qrels_ == nullptr) {
      throw InvalidInputError("static_score(grade) requires qrels");
    }
  }

  std::string name() const override {
    return source_ == Source::similarity ? "static_score:similarity" : "static_score:grade";
  }

  RerankerWindowResponse rerank(const RerankerWindowRequest& request) override {
    std::vector<double> scores(request.candidates.size());
    for (std::size_t i = 0; i < request.candidates.size(); ++i) {
      const std::uint32_t doc = request.candidates[i];
      scores[i] = source_ == Source::similarity
                      ? similarity(request.query_embedding.span(), corpus_.embedding(doc))
                      : static_cast<double>(qrels_->grade(request.qid, corpus_.id(doc)));
    }
    RerankerWindowResponse resp;
    resp.order = detail::order_by_score(scores, request.candidates, corpus_);
    return resp;
  }

 private:
  const Corpus& corpus_;
  Source source_;
  const RelevanceJudgments* qrels_;
};

enum class GateKind { admit_full, admit_truncated, reject };

struct GateDecision {
  GateKind kind;
  std::size_t prefix_len;  // how many window docs may be reranked
};

/// Decides how much of a window the budget admits. Already-scanned docs are
/// free; unscanned docs must fit under budget_k. When only part fits, the
/// longest window prefix whose unscanned docs fit is admitted; when no new
/// doc fits, the window is rejected and the search must return.
inline GateDecision budget_gate(const BudgetLedger& ledger, std::span<const std::uint32_t> window,
                                const Corpus& corpus) {
  std::size_t fresh_total = 0;
  for (std::uint32_t d : window) {
    if (!ledger.scanned(corpus.id(d))) ++fresh_total;
  }
  if (fresh_total == 0) return {GateKind::admit_full, window.size()};
  const std::size_t remaining = ledger.remaining();
  if (remaining == 0) return {GateKind::reject, 0};
  if (fresh_total <= remaining) return {GateKind::admit_full, window.size()};
  std::size_t fresh = 0;
  std::size_t prefix = 0;
  for (std::size_t i = 0; i < window.size(); ++i) {
    if (!ledger.scanned(corpus.id(window[i]))) {
      if (fresh == remaining) break;
      ++fresh;
    }
    prefix = i + 1;
  }
  return {GateKind::admit_truncated, prefix};
}

struct WindowOutcome {
  std::vector<std::uint32_t> reordered;  // window docs in reranked order
  bool backend_failed = false;
};

/// Charges the window against the ledger, asks the backend for an order, and
/// validates it. Any backend failure or non-permutation answer falls back to
/// the original order, flagged; budget accounting is identical either way
/// (the docs were shown to the reranker).
inline WindowOutcome rerank_window(RerankerBackend& backend, const QueryRecord& query,
                                   std::span<const std::uint32_t> window, const Corpus& corpus,
                                   BudgetLedger& ledger) {
  if (window.empty()) throw InvalidInputError("rerank_window: empty window");
  std::vector<DocId> ids;
  ids.reserve(window.size());
  for (std::uint32_t d : window) ids.push_back(corpus.id(d));
  if (!ledger.try_charge(ids)) {
    throw InvalidInputError("rerank_window: window exceeds budget (caller must gate)");
  }
  ledger.add_views(window.size());
  ledger.add_call();

  RerankerWindowRequest request;
  request.qid = query.qid;
  request.query_embedding = query.embedding;
  request.query_text = query.text;
  request.candidates.assign(window.begin(), window.end());

  WindowOutcome out;
  RerankerWindowResponse resp;
  try {
    resp = backend.rerank(request);
  } catch (const std::exception& e) {
    resp.ok = false;
    resp.error = e.what();
  }
  ledger.add_tokens(resp.tokens_in, resp.tokens_out);
  if (!resp.ok || !is_permutation_of(resp.order, window.size())) {
    out.backend_failed = true;
    out.reordered.assign(window.begin(), window.end());
    return out;
  }
  out.reordered.reserve(window.size());
  for (std::uint32_t pos : resp.order) out.reordered.push_back(window[pos]);
  return out;
}

}  // namespace rgs
