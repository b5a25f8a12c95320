#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "rgs/core.hpp"
#include "rgs/graph.hpp"
#include "rgs/reranker.hpp"

namespace rgs {

enum class StartStrategy { exact, noisy, index_default };

inline const char* to_string(StartStrategy s) {
  switch (s) {
    case StartStrategy::exact: return "exact";
    case StartStrategy::noisy: return "noisy";
    case StartStrategy::index_default: return "index_default";
  }
  return "?";
}

inline StartStrategy start_strategy_from_string(const std::string& s) {
  if (s == "exact") return StartStrategy::exact;
  if (s == "noisy") return StartStrategy::noisy;
  if (s == "index_default") return StartStrategy::index_default;
  throw InvalidInputError("unknown start strategy: " + s);
}

struct RgsParams {
  int budget_k = 100;
  int ls = 0;    // 0 -> default for this budget
  int w = 10;
  int seeds = 0;  // 0 -> max(1, budget_k / 5)
  StartStrategy start = StartStrategy::exact;
  int noisy_rank = 1000;          // 1-based rank of the first noisy start doc
  std::uint32_t stage1_beam = 0;  // 0 -> max(64, seeds)
  bool partial_pass = false;      // stop each pass once the appended tail is re-covered

  /// Search list sizes tuned per budget (20/30/50 at 100/300/500); other
  /// budgets fall back to max(w, budget/10).
  static int default_ls(int budget, int w) {
    if (budget == 100) return 20;
    if (budget == 300) return 30;
    if (budget == 500) return 50;
    return std::max(w, budget / 10);
  }

  RgsParams resolved() const {
    RgsParams p = *this;
    if (p.seeds == 0) p.seeds = std::max(1, p.budget_k / 5);
    if (p.ls == 0) p.ls = default_ls(p.budget_k, p.w);
    if (p.stage1_beam == 0) p.stage1_beam = std::max<std::uint32_t>(64, p.seeds);
    return p;
  }

  void validate() const {
    if (budget_k < 1) throw InvalidInputError("rgs params: budget_k must be >= 1");
    if (w < 1) throw InvalidInputError("rgs params: w must be >= 1");
    if (ls < (w + 1) / 2) throw InvalidInputError("rgs params: Ls must be >= w/2");
    if (seeds < 1) throw InvalidInputError("rgs params: seeds must be >= 1");
    const int effective_seeds = start == StartStrategy::index_default ? 1 : seeds;
    if (budget_k < effective_seeds) {
      throw InvalidInputError("rgs params: budget must be >= number of start points");
    }
  }
};

struct WindowCallRecord {
  std::vector<DocId> window;  // docs actually sent, in pre-rerank order
  bool truncated = false;     // gate admitted only a prefix of the proposed window
  bool failed = false;        // backend fell back to original order
};

struct TraceStep {
  DocId expanded;              // vertex whose neighbors were appended; empty for seed/shortlist steps
  std::vector<DocId> appended;
  std::vector<WindowCallRecord> windows;
  std::size_t truncated_to = 0;  // list length after Ls truncation; 0 when not truncated
};

struct SearchTrace {
  std::string qid;
  std::string method;
  int budget_k = 0;
  std::vector<TraceStep> steps;
  std::vector<DocId> seen;  // == ledger scanned set, sorted
  RankedList final_list;
  bool budget_exhausted = false;
  std::size_t scanned = 0;
  std::size_t doc_views = 0;
  std::size_t calls = 0;
  std::int64_t tokens_in = 0;
  std::int64_t tokens_out = 0;
};

struct SearchResult {
  RankedList top10;
  SearchTrace trace;
  BudgetLedger ledger;
};

enum class PassStatus { completed, budget_stopped };

/// Overlapping sliding-window rerank from `from_index` toward the front of A:
/// windows of size w stepping back w/2, so a document placed at a window's
/// head is re-examined by the next window and can keep bubbling forward.
/// Honors budget_gate decisions: truncated windows rerank their admitted
/// prefix; a rejected window stops the pass.
inline PassStatus sliding_window_pass(std::vector<std::uint32_t>& a, std::size_t from_index,
                                      int w, RerankerBackend& backend, const QueryRecord& query,
                                      const Corpus& corpus, BudgetLedger& ledger,
                                      std::vector<WindowCallRecord>& records,
                                      std::size_t stop_lo = 0) {
  if (from_index > a.size()) throw InvalidInputError("sliding_window_pass: from_index out of range");
  if (from_index == 0) return PassStatus::completed;
  const std::size_t step = std::max(1, w / 2);
  std::size_t i = from_index;
  while (true) {
    const std::size_t lo = i > static_cast<std::size_t>(w) ? i - w : 0;
    std::span<const std::uint32_t> window(a.data() + lo, i - lo);
    const GateDecision gate = budget_gate(ledger, window, corpus);
    if (gate.kind == GateKind::reject) return PassStatus::budget_stopped;
    std::span<const std::uint32_t> admitted = window.subspan(0, gate.prefix_len);
    WindowOutcome outcome = rerank_window(backend, query, admitted, corpus, ledger);
    std::copy(outcome.reordered.begin(), outcome.reordered.end(), a.begin() + lo);
    WindowCallRecord rec;
    rec.window.reserve(admitted.size());
    for (std::uint32_t d : admitted) rec.window.push_back(corpus.id(d));
    rec.truncated = gate.kind == GateKind::admit_truncated;
    rec.failed = outcome.backend_failed;
    records.push_back(std::move(rec));
    if (lo <= stop_lo) return PassStatus::completed;
    i -= step;
  }
}

/// Stage-1 start documents. `exact` runs the plain graph ANN search from the
/// index's default start; `noisy` takes the docs at exhaustive-similarity
/// ranks [rank, rank+count); `index_default` ignores the query entirely and
/// returns the index's start vertex.
inline std::vector<std::uint32_t> start_points(const QueryRecord& query, const GraphIndex& index,
                                               const Corpus& corpus, StartStrategy strategy,
                                               int count, int noisy_rank = 1000,
                                               std::uint32_t beam = 0) {
  if (count < 1) throw InvalidInputError("start_points: count must be >= 1");
  switch (strategy) {
    case StartStrategy::exact: {
      const std::uint32_t eff_beam =
          std::max<std::uint32_t>(beam == 0 ? 64 : beam, static_cast<std::uint32_t>(count));
      const std::uint32_t start[1] = {index.default_start};
      auto res = greedy_beam_search(index, corpus, start, query.embedding.span(), eff_beam,
                                    static_cast<std::uint32_t>(count));
      return std::move(res.top);
    }
    case StartStrategy::noisy: {
      if (noisy_rank < 1) throw InvalidInputError("start_points: noisy rank must be >= 1");
      if (static_cast<std::size_t>(noisy_rank - 1 + count) > corpus.size()) {
        throw InvalidInputError("start_points: rank+count exceeds corpus size");
      }
      std::vector<std::pair<double, std::uint32_t>> scored(corpus.size());
      for (std::uint32_t d = 0; d < corpus.size(); ++d) {
        scored[d] = {similarity(query.embedding.span(), corpus.embedding(d)), d};
      }
      std::sort(scored.begin(), scored.end(), [&](const auto& x, const auto& y) {
        return detail::better_scored(x.first, x.second, y.first, y.second, corpus);
      });
      std::vector<std::uint32_t> out;
      out.reserve(count);
      for (int i = 0; i < count; ++i) out.push_back(scored[noisy_rank - 1 + i].second);
      return out;
    }
    case StartStrategy::index_default:
      return {index.default_start};
  }
  throw InvalidInputError("start_points: unknown strategy");
}

namespace detail {

inline void finalize_trace(SearchTrace& trace, const BudgetLedger& ledger,
                           const std::vector<std::uint32_t>& a, const Corpus& corpus,
                           const std::string& qid) {
  trace.final_list.qid = qid;
  trace.final_list.entries.clear();
  for (std::uint32_t d : a) {
    if (ledger.scanned(corpus.id(d))) {
      trace.final_list.entries.push_back(corpus.id(d));
      if (trace.final_list.entries.size() == 10) break;
    }
  }
  trace.seen = ledger.scanned_sorted();
  trace.scanned = ledger.scanned_count();
  trace.doc_views = ledger.doc_views();
  trace.calls = ledger.calls();
  trace.tokens_in = ledger.tokens_in();
  trace.tokens_out = ledger.tokens_out();
}

}  // namespace detail

/// Reranker-guided search. Stage 1 seeds the working list A with start docs
/// and reranks them. Stage 2 repeatedly expands the first unexpanded doc in
/// A, appends its graph neighbors, bubbles the extended list with sliding
/// windows, and truncates A to Ls — until the budget is exhausted or nothing
/// is left to expand. Returns the first 10 scanned docs of A.
inline SearchResult rgs_search(const QueryRecord& query, const Corpus& corpus,
                               const GraphIndex& index, RerankerBackend& backend,
                               const RgsParams& params_in) {
  if (corpus.empty()) throw InvalidInputError("rgs_search: empty corpus");
  if (index.size() != corpus.size()) {
    throw InvalidInputError("rgs_search: index does not match corpus");
  }
  const RgsParams params = params_in.resolved();
  params.validate();

  BudgetLedger ledger(params.budget_k);
  SearchTrace trace;
  trace.qid = query.qid;
  trace.method = "rgs";
  trace.budget_k = params.budget_k;

  std::vector<std::uint32_t> a;
  std::unordered_set<std::uint32_t> in_a;
  {
    auto seeds = start_points(query, index, corpus, params.start, params.seeds,
                              params.noisy_rank, params.stage1_beam);
    for (std::uint32_t s : seeds) {
      if (in_a.insert(s).second) a.push_back(s);
    }
  }

  bool exhausted = false;
  {
    TraceStep step;
    for (std::uint32_t s : a) step.appended.push_back(corpus.id(s));
    if (sliding_window_pass(a, a.size(), params.w, backend, query, corpus, ledger,
                            step.windows) == PassStatus::budget_stopped) {
      exhausted = true;
    }
    if (a.size() > static_cast<std::size_t>(params.ls)) {
      for (std::size_t i = params.ls; i < a.size(); ++i) in_a.erase(a[i]);
      a.resize(params.ls);
      step.truncated_to = a.size();
    }
    trace.steps.push_back(std::move(step));
  }

  std::unordered_set<std::uint32_t> expanded;  // U
  while (!exhausted && !ledger.full()) {
    auto it = std::find_if(a.begin(), a.end(),
                           [&](std::uint32_t d) { return !expanded.contains(d); });
    if (it == a.end()) break;
    const std::uint32_t v = *it;
    expanded.insert(v);

    TraceStep step;
    step.expanded = corpus.id(v);
    const std::size_t append_start = a.size();
    for (std::uint32_t nb : index.neighbors(v)) {
      if (in_a.insert(nb).second) {
        a.push_back(nb);
        step.appended.push_back(corpus.id(nb));
      }
    }
    const std::size_t stop_lo =
        params.partial_pass
            ? (append_start > static_cast<std::size_t>(params.w) / 2
                   ? append_start - static_cast<std::size_t>(params.w) / 2
                   : 0)
            : 0;
    if (sliding_window_pass(a, a.size(), params.w, backend, query, corpus, ledger, step.windows,
                            stop_lo) == PassStatus::budget_stopped) {
      exhausted = true;
    }
    if (a.size() > static_cast<std::size_t>(params.ls)) {
      for (std::size_t i = params.ls; i < a.size(); ++i) in_a.erase(a[i]);
      a.resize(params.ls);
      step.truncated_to = a.size();
    }
    trace.steps.push_back(std::move(step));
  }

  trace.budget_exhausted = exhausted || ledger.full();
  detail::finalize_trace(trace, ledger, a, corpus, query.qid);
  return SearchResult{trace.final_list, std::move(trace), std::move(ledger)};
}

/// Sequential baseline: ANN top-k shortlist, one overlapping sliding-window
/// pass from the tail to the front, return the first 10.
inline SearchResult retrieve_and_rerank(const QueryRecord& query, const Corpus& corpus,
                                        const GraphIndex& index, RerankerBackend& backend,
                                        int k, int w = 10) {
  if (corpus.empty()) throw InvalidInputError("retrieve_and_rerank: empty corpus");
  if (index.size() != corpus.size()) {
    throw InvalidInputError("retrieve_and_rerank: index does not match corpus");
  }
  if (k < 1 || static_cast<std::size_t>(k) > corpus.size()) {
    throw InvalidInputError("retrieve_and_rerank: k must be in [1, corpus size]");
  }
  if (w < 1) throw InvalidInputError("retrieve_and_rerank: w must be >= 1");

  BudgetLedger ledger(k);
  SearchTrace trace;
  trace.qid = query.qid;
  trace.method = "rr";
  trace.budget_k = k;

  const std::uint32_t start[1] = {index.default_start};
  const std::uint32_t beam = std::max<std::uint32_t>(64, static_cast<std::uint32_t>(k));
  auto shortlist =
      greedy_beam_search(index, corpus, start, query.embedding.span(), beam,
                         static_cast<std::uint32_t>(k))
          .top;
  std::vector<std::uint32_t> a = std::move(shortlist);

  TraceStep step;
  for (std::uint32_t d : a) step.appended.push_back(corpus.id(d));
  if (sliding_window_pass(a, a.size(), w, backend, query, corpus, ledger, step.windows) ==
      PassStatus::budget_stopped) {
    trace.budget_exhausted = true;
  }
  trace.steps.push_back(std::move(step));
  trace.budget_exhausted = trace.budget_exhausted || ledger.full();
  detail::finalize_trace(trace, ledger, a, corpus, query.qid);
  return SearchResult{trace.final_list, std::move(trace), std::move(ledger)};
}

/// SlideGAR baseline. Maintains a ranked result pool; each turn takes the
/// next batch of unseen docs alternately from the ANN shortlist (in
/// retrieval order) or the graph frontier (FIFO), reranks it together with
/// the current top half-window of the pool, and merges the window's order
/// back into the pool head. The top half of every reranked window
/// contributes its graph neighbors to the frontier. Stops when the budget
/// rejects a window or both sources are empty.
inline SearchResult slidegar_search(const QueryRecord& query, const Corpus& corpus,
                                    const GraphIndex& index, RerankerBackend& backend, int k,
                                    int w = 20) {
  if (corpus.empty()) throw InvalidInputError("slidegar_search: empty corpus");
  if (index.size() != corpus.size()) {
    throw InvalidInputError("slidegar_search: index does not match corpus");
  }
  if (k < 1 || static_cast<std::size_t>(k) > corpus.size()) {
    throw InvalidInputError("slidegar_search: k must be in [1, corpus size]");
  }
  if (w < 1) throw InvalidInputError("slidegar_search: w must be >= 1");

  BudgetLedger ledger(k);
  SearchTrace trace;
  trace.qid = query.qid;
  trace.method = "slidegar";
  trace.budget_k = k;

  const std::uint32_t start[1] = {index.default_start};
  const std::uint32_t beam = std::max<std::uint32_t>(64, static_cast<std::uint32_t>(k));
  const std::vector<std::uint32_t> shortlist =
      greedy_beam_search(index, corpus, start, query.embedding.span(), beam,
                         static_cast<std::uint32_t>(k))
          .top;

  std::vector<std::uint32_t> pool;  // ranked result pool, best first
  std::unordered_set<std::uint32_t> in_pool;
  std::size_t cursor = 0;  // next unconsumed shortlist position
  std::deque<std::uint32_t> frontier;
  std::unordered_set<std::uint32_t> queued;

  auto harvest = [&](std::span<const std::uint32_t> reranked) {
    const std::size_t top = (reranked.size() + 1) / 2;
    for (std::size_t i = 0; i < top; ++i) {
      for (std::uint32_t nb : index.neighbors(reranked[i])) {
        if (in_pool.contains(nb) || queued.contains(nb)) continue;
        queued.insert(nb);
        frontier.push_back(nb);
      }
    }
  };

  enum class Source { shortlist, frontier };
  Source turn = Source::shortlist;
  bool exhausted = false;

  while (!exhausted) {
    const bool shortlist_left = cursor < shortlist.size();
    const bool frontier_left = !frontier.empty();
    if (!shortlist_left && !frontier_left) break;
    Source src = turn;
    if (src == Source::shortlist && !shortlist_left) src = Source::frontier;
    if (src == Source::frontier && !frontier_left) src = Source::shortlist;

    // window = current pool head (already scanned, free) + fresh batch
    const std::size_t head = std::min<std::size_t>(pool.size(), static_cast<std::size_t>(w) / 2);
    std::vector<std::uint32_t> window(pool.begin(), pool.begin() + head);
    const std::size_t batch_room = static_cast<std::size_t>(w) - head;
    std::size_t batch_count = 0;
    if (src == Source::shortlist) {
      std::size_t c = cursor;
      while (batch_count < batch_room && c < shortlist.size()) {
        const std::uint32_t d = shortlist[c++];
        if (in_pool.contains(d)) continue;
        window.push_back(d);
        ++batch_count;
      }
    } else {
      for (std::size_t j = 0; j < frontier.size() && batch_count < batch_room; ++j) {
        const std::uint32_t d = frontier[j];
        if (in_pool.contains(d)) continue;
        window.push_back(d);
        ++batch_count;
      }
    }
    if (batch_count == 0) {
      // source had only already-pooled docs left; drain it and switch
      if (src == Source::shortlist) {
        cursor = shortlist.size();
      } else {
        for (std::uint32_t d : frontier) queued.erase(d);
        frontier.clear();
      }
      turn = src == Source::shortlist ? Source::frontier : Source::shortlist;
      continue;
    }

    const GateDecision gate = budget_gate(ledger, window, corpus);
    if (gate.kind == GateKind::reject) {
      exhausted = true;
      break;
    }
    window.resize(gate.prefix_len);  // head is always scanned, so always admitted
    const std::size_t admitted_batch = gate.prefix_len - head;

    // consume exactly the admitted batch docs from the source
    if (src == Source::shortlist) {
      std::size_t taken = 0;
      while (taken < admitted_batch && cursor < shortlist.size()) {
        if (!in_pool.contains(shortlist[cursor])) ++taken;
        ++cursor;
      }
    } else {
      std::size_t taken = 0;
      while (taken < admitted_batch && !frontier.empty()) {
        const std::uint32_t d = frontier.front();
        frontier.pop_front();
        queued.erase(d);
        if (!in_pool.contains(d)) ++taken;
      }
    }

    WindowOutcome outcome = rerank_window(backend, query, window, corpus, ledger);

    TraceStep st;
    for (std::size_t j = head; j < window.size(); ++j) {
      st.appended.push_back(corpus.id(window[j]));
    }
    WindowCallRecord rec;
    for (std::uint32_t d : window) rec.window.push_back(corpus.id(d));
    rec.truncated = gate.kind == GateKind::admit_truncated;
    rec.failed = outcome.backend_failed;
    st.windows.push_back(std::move(rec));
    trace.steps.push_back(std::move(st));

    // merge: the reranked window replaces the pool head, batch docs join
    pool.erase(pool.begin(), pool.begin() + head);
    pool.insert(pool.begin(), outcome.reordered.begin(), outcome.reordered.end());
    for (std::uint32_t d : outcome.reordered) in_pool.insert(d);
    harvest(outcome.reordered);

    turn = src == Source::shortlist ? Source::frontier : Source::shortlist;
    if (gate.kind == GateKind::admit_truncated) {
      exhausted = true;  // budget is now exactly consumed
      break;
    }
  }

  // never-reranked shortlist docs keep their retrieval order behind the pool
  std::vector<std::uint32_t> final_order = pool;
  for (std::uint32_t d : shortlist) {
    if (!in_pool.contains(d)) final_order.push_back(d);
  }
  trace.budget_exhausted = exhausted || ledger.full();
  detail::finalize_trace(trace, ledger, final_order, corpus, query.qid);
  return SearchResult{trace.final_list, std::move(trace), std::move(ledger)};
}

/// One search trace as a single JSON object (one line of a JSON-lines file).
inline nlohmann::json trace_to_json(const SearchTrace& trace) {
  nlohmann::json j;
  j["qid"] = trace.qid;
  j["method"] = trace.method;
  j["budget_k"] = trace.budget_k;
  j["budget_exhausted"] = trace.budget_exhausted;
  j["scanned"] = trace.scanned;
  j["doc_views"] = trace.doc_views;
  j["calls"] = trace.calls;
  j["tokens_in"] = trace.tokens_in;
  j["tokens_out"] = trace.tokens_out;
  j["seen"] = trace.seen;
  j["final"] = trace.final_list.entries;
  nlohmann::json steps = nlohmann::json::array();
  for (const TraceStep& s : trace.steps) {
    nlohmann::json js;
    if (!s.expanded.empty()) js["expanded"] = s.expanded;
    js["appended"] = s.appended;
    if (s.truncated_to > 0) js["truncated_to"] = s.truncated_to;
    nlohmann::json wins = nlohmann::json::array();
    for (const WindowCallRecord& wrec : s.windows) {
      nlohmann::json jw;
      jw["window"] = wrec.window;
      if (wrec.truncated) jw["truncated"] = true;
      if (wrec.failed) jw["failed"] = true;
      wins.push_back(std::move(jw));
    }
    js["windows"] = std::move(wins);
    steps.push_back(std::move(js));
  }
  j["steps"] = std::move(steps);
  return j;
}

}  // namespace rgs
