#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "rgs/core.hpp"
#include "rgs/graph.hpp"
#include "rgs/reranker.hpp"
#include "rgs/search.hpp"

namespace rgs {

/// NDCG@10 with gain 2^grade - 1 and log2(rank+1) discount. The ideal DCG
/// uses the query's 10 highest grades; returns 0 when the query has no
/// positive judgments.
inline double ndcg_at_10(const RankedList& ranked, const RelevanceJudgments& qrels) {
  double dcg = 0.0;
  const std::size_t depth = std::min<std::size_t>(10, ranked.entries.size());
  for (std::size_t i = 0; i < depth; ++i) {
    const int g = qrels.grade(ranked.qid, ranked.entries[i]);
    if (g > 0) {
      const double gain = static_cast<double>((std::uint64_t{1} << g) - 1);
      dcg += gain / std::log2(static_cast<double>(i + 2));
    }
  }
  std::vector<int> grades;
  for (const auto& [doc, g] : qrels.positives(ranked.qid)) grades.push_back(g);
  if (grades.empty()) return 0.0;
  std::sort(grades.begin(), grades.end(), std::greater<>());
  double idcg = 0.0;
  for (std::size_t i = 0; i < std::min<std::size_t>(10, grades.size()); ++i) {
    const double gain = static_cast<double>((std::uint64_t{1} << grades[i]) - 1);
    idcg += gain / std::log2(static_cast<double>(i + 2));
  }
  return idcg > 0.0 ? dcg / idcg : 0.0;
}

/// Seed-determined derangement (single cycle, so no element maps to itself).
inline std::vector<std::size_t> derangement(std::size_t n, std::uint64_t seed) {
  if (n < 2) throw InvalidInputError("derangement: need at least 2 elements");
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::mt19937_64 rng(detail::mix64(seed ^ 0x70657274ULL));
  // Sattolo's algorithm: one n-cycle
  for (std::size_t i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(p[i], p[pick(rng)]);
  }
  return p;
}

/// Mixes each embedding with its derangement partner: (1-w)*e_i + w*e_pi(i).
/// w=0 is the identity bit-for-bit; w=1 is a pure relabeling.
inline std::vector<std::vector<float>> perturb_rows(
    std::span<const std::vector<float>> rows, double w, std::uint64_t seed,
    bool renormalize = false) {
  if (w < 0.0 || w > 1.0) throw InvalidInputError("perturb: w must be in [0, 1]");
  if (rows.size() < 2) throw InvalidInputError("perturb: need at least 2 embeddings");
  const auto pi = derangement(rows.size(), seed);
  std::vector<std::vector<float>> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& a = rows[i];
    const auto& b = rows[pi[i]];
    if (a.size() != b.size()) throw InvalidInputError("perturb: dimension mismatch");
    std::vector<float> mixed(a.size());
    for (std::size_t d = 0; d < a.size(); ++d) {
      mixed[d] = static_cast<float>((1.0 - w) * a[d] + w * b[d]);
    }
    if (renormalize) {
      Embedding e{std::move(mixed)};
      e.normalize();
      mixed = std::move(e.values);
    }
    out[i] = std::move(mixed);
  }
  return out;
}

inline Corpus perturb_corpus(const Corpus& corpus, double w, std::uint64_t seed,
                             bool renormalize = false) {
  std::vector<std::vector<float>> rows(corpus.size());
  for (std::uint32_t i = 0; i < corpus.size(); ++i) {
    auto span = corpus.embedding(i);
    rows[i].assign(span.begin(), span.end());
  }
  auto mixed = perturb_rows(rows, w, seed, renormalize);
  Corpus out;
  for (std::uint32_t i = 0; i < corpus.size(); ++i) {
    out.add(corpus.id(i), std::move(mixed[i]), corpus.text(i));
  }
  return out;
}

inline std::vector<QueryRecord> perturb_queries(const std::vector<QueryRecord>& queries, double w,
                                                std::uint64_t seed, bool renormalize = false) {
  std::vector<std::vector<float>> rows(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) rows[i] = queries[i].embedding.values;
  auto mixed = perturb_rows(rows, w, seed, renormalize);
  std::vector<QueryRecord> out = queries;
  for (std::size_t i = 0; i < out.size(); ++i) out[i].embedding.values = std::move(mixed[i]);
  return out;
}

struct ErrorBreakdownRow {
  int budget = 0;
  std::size_t positives = 0;
  double fraction_returned = 0.0;
  double fraction_seen_not_selected = 0.0;
  double fraction_never_seen = 0.0;
};

struct ErrorBreakdown {
  std::vector<ErrorBreakdownRow> rows;  // sorted by budget
};

/// Classifies every positively judged doc of every trace's query as
/// returned (in the final top-10), seen-but-not-selected (scanned only), or
/// never seen, aggregated per budget.
inline ErrorBreakdown error_analysis(std::span<const SearchTrace> traces,
                                     const RelevanceJudgments& qrels) {
  struct Counts {
    std::size_t returned = 0, seen = 0, never = 0;
  };
  std::map<int, Counts> per_budget;
  for (const SearchTrace& t : traces) {
    const auto positives = qrels.positives(t.qid);
    if (positives.empty()) continue;
    std::unordered_set<DocId> in_final(t.final_list.entries.begin(), t.final_list.entries.end());
    std::unordered_set<DocId> seen(t.seen.begin(), t.seen.end());
    Counts& c = per_budget[t.budget_k];
    for (const auto& [doc, g] : positives) {
      if (in_final.contains(doc)) {
        ++c.returned;
      } else if (seen.contains(doc)) {
        ++c.seen;
      } else {
        ++c.never;
      }
    }
  }
  ErrorBreakdown out;
  for (const auto& [budget, c] : per_budget) {
    const std::size_t total = c.returned + c.seen + c.never;
    if (total == 0) continue;
    ErrorBreakdownRow row;
    row.budget = budget;
    row.positives = total;
    row.fraction_returned = static_cast<double>(c.returned) / static_cast<double>(total);
    row.fraction_seen_not_selected = static_cast<double>(c.seen) / static_cast<double>(total);
    row.fraction_never_seen = static_cast<double>(c.never) / static_cast<double>(total);
    out.rows.push_back(row);
  }
  return out;
}

struct PerturbationConfig {
  enum class Target { none, query, document };
  Target target = Target::none;
  double w = 0.0;
  std::uint64_t seed = 0;
  bool renormalize = false;
};

struct GraphConfig {
  GraphKind kind = GraphKind::diskann;
  BuildParams build;            // diskann
  std::uint32_t knn_k = 16;     // knn
  std::uint32_t degree = 16;    // random
};

struct BackendConfig {
  std::string kind = "oracle";  // oracle | noisy_oracle | static_sim | static_grade
  NoiseConfig noise;
};

inline std::unique_ptr<RerankerBackend> make_backend(const BackendConfig& cfg,
                                                     const Corpus& corpus,
                                                     const RelevanceJudgments& qrels) {
  if (cfg.kind == "oracle") return std::make_unique<OracleReranker>(corpus, qrels);
  if (cfg.kind == "noisy_oracle") {
    return std::make_unique<NoisyOracleReranker>(corpus, qrels, cfg.noise);
  }
  if (cfg.kind == "static_sim") {
    return std::make_unique<StaticScoreReranker>(corpus, StaticScoreReranker::Source::similarity);
  }
  if (cfg.kind == "static_grade") {
    return std::make_unique<StaticScoreReranker>(corpus, StaticScoreReranker::Source::grade,
                                                 &qrels);
  }
  throw InvalidInputError("unknown backend kind: " + cfg.kind);
}

using BackendFactory =
    std::function<std::unique_ptr<RerankerBackend>(const Corpus&, const RelevanceJudgments&)>;

struct ExperimentConfig {
  std::vector<std::string> methods = {"rr", "slidegar", "rgs"};
  std::vector<int> budgets = {100, 300, 500};
  int w_rr = 10;
  int w_slidegar = 20;
  int w_rgs = 10;
  int ls = 0;     // 0 = per-budget default
  int seeds = 0;  // 0 = k/5
  StartStrategy start = StartStrategy::exact;
  int noisy_rank = 1000;
  bool partial_pass = false;
  PerturbationConfig perturb;
  GraphConfig graph;
  BackendConfig backend;
  int jobs = 1;

  void validate() const {
    if (methods.empty()) throw InvalidInputError("experiment: no methods selected");
    for (const auto& m : methods) {
      if (m != "rr" && m != "slidegar" && m != "rgs") {
        throw InvalidInputError("experiment: unknown method '" + m + "'");
      }
    }
    if (budgets.empty()) throw InvalidInputError("experiment: no budgets");
    for (int b : budgets) {
      if (b < 1) throw InvalidInputError("experiment: budgets must be >= 1");
    }
    if (perturb.w < 0.0 || perturb.w > 1.0) {
      throw InvalidInputError("experiment: perturbation w must be in [0, 1]");
    }
    if (jobs < 1) throw InvalidInputError("experiment: jobs must be >= 1");
  }
};

struct ResultRow {
  std::string qid;
  std::string method;
  int budget = 0;
  double ndcg10 = 0.0;
  std::size_t scanned = 0;
  std::size_t doc_views = 0;
  std::size_t calls = 0;
  std::int64_t tokens_in = 0;
  std::int64_t tokens_out = 0;
  bool failed = false;
  std::string error;
};

struct AggregateRow {
  std::string method;
  int budget = 0;
  std::size_t queries = 0;
  std::size_t failed = 0;
  double mean_ndcg10 = 0.0;  // over non-failed queries
  double mean_scanned = 0.0;
  double mean_doc_views = 0.0;
  double mean_calls = 0.0;
  double mean_tokens_in = 0.0;
  double mean_tokens_out = 0.0;
};

struct ExperimentResults {
  std::vector<ResultRow> rows;        // sorted by (method, budget, qid)
  std::vector<AggregateRow> aggregates;
  std::vector<SearchTrace> traces;    // aligned with rows
};

namespace detail {

inline GraphIndex build_graph(const GraphConfig& cfg, const Corpus& corpus) {
  switch (cfg.kind) {
    case GraphKind::diskann: return build_diskann(corpus, cfg.build);
    case GraphKind::knn: return build_knn(corpus, cfg.knn_k, cfg.build.seed);
    case GraphKind::random_graph: return build_random(corpus, cfg.degree, cfg.build.seed);
  }
  throw InvalidInputError("unknown graph kind");
}

template <typename Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      fn(i);
    }
  };
  std::vector<std::thread> pool;
  const int threads = std::min<int>(jobs, static_cast<int>(count));
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

}  // namespace detail

/// Runs every (method, budget, query) combination and aggregates NDCG@10 and
/// budget counters. Queries fan out over a worker pool; per-query failures
/// are recorded and excluded from means rather than imputed. If
/// `backend_factory` is null the config's backend kind is instantiated
/// against the (possibly perturbed) corpus. `prebuilt_index` is only used
/// when no document perturbation is requested.
inline ExperimentResults run_experiment(const ExperimentConfig& config, const Corpus& corpus_in,
                                        const std::vector<QueryRecord>& queries_in,
                                        const RelevanceJudgments& qrels,
                                        BackendFactory backend_factory = {},
                                        const GraphIndex* prebuilt_index = nullptr) {
  config.validate();
  if (queries_in.empty()) throw InvalidInputError("experiment: no queries");
  if (corpus_in.empty()) throw InvalidInputError("experiment: empty corpus");

  const bool perturb_docs = config.perturb.target == PerturbationConfig::Target::document &&
                            config.perturb.w > 0.0;
  const bool perturb_query = config.perturb.target == PerturbationConfig::Target::query &&
                             config.perturb.w > 0.0;

  Corpus perturbed_corpus;
  const Corpus* corpus = &corpus_in;
  if (perturb_docs) {
    perturbed_corpus =
        perturb_corpus(corpus_in, config.perturb.w, config.perturb.seed, config.perturb.renormalize);
    corpus = &perturbed_corpus;
  }
  std::vector<QueryRecord> perturbed_queries;
  const std::vector<QueryRecord>* queries = &queries_in;
  if (perturb_query) {
    perturbed_queries = perturb_queries(queries_in, config.perturb.w, config.perturb.seed,
                                        config.perturb.renormalize);
    queries = &perturbed_queries;
  }

  GraphIndex built;
  const GraphIndex* index = nullptr;
  if (prebuilt_index != nullptr && !perturb_docs) {
    index = prebuilt_index;
  } else {
    built = detail::build_graph(config.graph, *corpus);
    index = &built;
  }

  std::unique_ptr<RerankerBackend> backend =
      backend_factory ? backend_factory(*corpus, qrels) : make_backend(config.backend, *corpus, qrels);

  ExperimentResults results;
  const std::size_t nq = queries->size();
  for (const std::string& method : config.methods) {
    for (int budget : config.budgets) {
      std::vector<ResultRow> rows(nq);
      std::vector<SearchTrace> traces(nq);
      detail::parallel_for(nq, config.jobs, [&](std::size_t qi) {
        const QueryRecord& q = (*queries)[qi];
        ResultRow& row = rows[qi];
        row.qid = q.qid;
        row.method = method;
        row.budget = budget;
        try {
          SearchResult res = [&] {
            if (method == "rr") {
              return retrieve_and_rerank(q, *corpus, *index, *backend, budget, config.w_rr);
            }
            if (method == "slidegar") {
              return slidegar_search(q, *corpus, *index, *backend, budget, config.w_slidegar);
            }
            RgsParams params;
            params.budget_k = budget;
            params.ls = config.ls;
            params.w = config.w_rgs;
            params.seeds = config.seeds;
            params.start = config.start;
            params.noisy_rank = config.noisy_rank;
            params.partial_pass = config.partial_pass;
            return rgs_search(q, *corpus, *index, *backend, params);
          }();
          row.ndcg10 = ndcg_at_10(res.top10, qrels);
          row.scanned = res.ledger.scanned_count();
          row.doc_views = res.ledger.doc_views();
          row.calls = res.ledger.calls();
          row.tokens_in = res.ledger.tokens_in();
          row.tokens_out = res.ledger.tokens_out();
          traces[qi] = std::move(res.trace);
        } catch (const std::exception& e) {
          row.failed = true;
          row.error = e.what();
          traces[qi].qid = q.qid;
          traces[qi].method = method;
          traces[qi].budget_k = budget;
        }
      });

      AggregateRow agg;
      agg.method = method;
      agg.budget = budget;
      agg.queries = nq;
      std::size_t ok = 0;
      for (const ResultRow& r : rows) {
        if (r.failed) {
          ++agg.failed;
          continue;
        }
        ++ok;
        agg.mean_ndcg10 += r.ndcg10;
        agg.mean_scanned += static_cast<double>(r.scanned);
        agg.mean_doc_views += static_cast<double>(r.doc_views);
        agg.mean_calls += static_cast<double>(r.calls);
        agg.mean_tokens_in += static_cast<double>(r.tokens_in);
        agg.mean_tokens_out += static_cast<double>(r.tokens_out);
      }
      if (ok > 0) {
        agg.mean_ndcg10 /= static_cast<double>(ok);
        agg.mean_scanned /= static_cast<double>(ok);
        agg.mean_doc_views /= static_cast<double>(ok);
        agg.mean_calls /= static_cast<double>(ok);
        agg.mean_tokens_in /= static_cast<double>(ok);
        agg.mean_tokens_out /= static_cast<double>(ok);
      }
      results.aggregates.push_back(agg);
      for (std::size_t qi = 0; qi < nq; ++qi) {
        results.rows.push_back(std::move(rows[qi]));
        results.traces.push_back(std::move(traces[qi]));
      }
    }
  }
  return results;
}

inline void write_results_csv(const ExperimentResults& results, std::ostream& os) {
  os << "qid,method,budget,ndcg10,scanned,doc_views,calls,tokens_in,tokens_out,failed\n";
  char buf[64];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return std::string(buf);
  };
  for (const ResultRow& r : results.rows) {
    os << r.qid << ',' << r.method << ',' << r.budget << ',' << fmt(r.ndcg10) << ',' << r.scanned
       << ',' << r.doc_views << ',' << r.calls << ',' << r.tokens_in << ',' << r.tokens_out << ','
       << (r.failed ? 1 : 0) << "\n";
  }
  for (const AggregateRow& a : results.aggregates) {
    os << "ALL," << a.method << ',' << a.budget << ',' << fmt(a.mean_ndcg10) << ','
       << fmt(a.mean_scanned) << ',' << fmt(a.mean_doc_views) << ',' << fmt(a.mean_calls) << ','
       << fmt(a.mean_tokens_in) << ',' << fmt(a.mean_tokens_out) << ',' << a.failed << "\n";
  }
  if (!os) throw IoError("write failed while saving results CSV");
}

inline nlohmann::json results_to_json(const ExperimentResults& results,
                                      const RelevanceJudgments& qrels) {
  nlohmann::json j;
  nlohmann::json aggs = nlohmann::json::array();
  for (const AggregateRow& a : results.aggregates) {
    aggs.push_back({{"method", a.method},
                    {"budget", a.budget},
                    {"queries", a.queries},
                    {"failed", a.failed},
                    {"mean_ndcg10", a.mean_ndcg10},
                    {"mean_scanned", a.mean_scanned},
                    {"mean_doc_views", a.mean_doc_views},
                    {"mean_calls", a.mean_calls},
                    {"mean_tokens_in", a.mean_tokens_in},
                    {"mean_tokens_out", a.mean_tokens_out}});
  }
  j["aggregates"] = std::move(aggs);

  // error breakdown per method over the traces of that method
  std::map<std::string, std::vector<SearchTrace>> by_method;
  for (const SearchTrace& t : results.traces) {
    if (!t.qid.empty()) by_method[t.method].push_back(t);
  }
  nlohmann::json err = nlohmann::json::object();
  for (const auto& [method, traces] : by_method) {
    ErrorBreakdown bd = error_analysis(traces, qrels);
    nlohmann::json rows = nlohmann::json::array();
    for (const ErrorBreakdownRow& r : bd.rows) {
      rows.push_back({{"budget", r.budget},
                      {"positives", r.positives},
                      {"fraction_returned", r.fraction_returned},
                      {"fraction_seen_not_selected", r.fraction_seen_not_selected},
                      {"fraction_never_seen", r.fraction_never_seen}});
    }
    err[method] = std::move(rows);
  }
  j["error_analysis"] = std::move(err);

  nlohmann::json rows = nlohmann::json::array();
  for (const ResultRow& r : results.rows) {
    nlohmann::json jr = {{"qid", r.qid},       {"method", r.method},
                         {"budget", r.budget}, {"ndcg10", r.ndcg10},
                         {"scanned", r.scanned}, {"doc_views", r.doc_views},
                         {"calls", r.calls},   {"tokens_in", r.tokens_in},
                         {"tokens_out", r.tokens_out}, {"failed", r.failed}};
    if (r.failed) jr["error"] = r.error;
    rows.push_back(std::move(jr));
  }
  j["rows"] = std::move(rows);
  return j;
}

namespace detail {

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (x, y)
};

// Minimal SVG line chart; enough for budget and token curves.
inline std::string render_line_chart_svg(const std::string& title, const std::string& x_label,
                                         const std::vector<Series>& series) {
  const double width = 640, height = 420;
  const double ml = 70, mr = 20, mt = 40, mb = 50;
  double xmin = 0, xmax = 1, ymax = 1e-9;
  bool first = true;
  for (const auto& s : series) {
    for (auto [x, y] : s.points) {
      if (first) {
        xmin = xmax = x;
        first = false;
      }
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymax = std::max(ymax, y);
    }
  }
  if (xmax <= xmin) xmax = xmin + 1;
  ymax = std::max(ymax * 1.1, 0.05);
  auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (width - ml - mr); };
  auto py = [&](double y) { return height - mb - y / ymax * (height - mt - mb); };

  static const char* colors[] = {"#d95f02", "#1b9e77", "#7570b3", "#e7298a"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
     << title << "</text>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr << "\" y2=\""
     << height - mb << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << height - mb
     << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"" << height - 12
     << "\" text-anchor=\"middle\" font-size=\"12\">" << x_label << "</text>\n";
  os << "<text x=\"18\" y=\"" << height / 2
     << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 18 " << height / 2
     << ")\">mean NDCG@10</text>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double y = ymax * tick / 4.0;
    os << "<text x=\"" << ml - 8 << "\" y=\"" << py(y) + 4
       << "\" text-anchor=\"end\" font-size=\"10\">" << static_cast<int>(y * 1000) / 1000.0
       << "</text>\n";
  }
  std::size_t ci = 0;
  for (const auto& s : series) {
    const char* color = colors[ci % 4];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (auto [x, y] : s.points) os << px(x) << ',' << py(y) << ' ';
    os << "\"/>\n";
    for (auto [x, y] : s.points) {
      os << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"3\" fill=\"" << color
         << "\"/>\n";
      os << "<text x=\"" << px(x) << "\" y=\"" << height - mb + 16
         << "\" text-anchor=\"middle\" font-size=\"10\">" << x << "</text>\n";
    }
    os << "<text x=\"" << width - mr - 8 << "\" y=\"" << mt + 16 + 16 * ci
       << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << color << "\">" << s.label
       << "</text>\n";
    ++ci;
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace detail

/// Mean NDCG@10 versus budget, one line per method.
inline std::string budget_curve_svg(const ExperimentResults& results) {
  std::map<std::string, detail::Series> by_method;
  for (const AggregateRow& a : results.aggregates) {
    auto& s = by_method[a.method];
    s.label = a.method;
    s.points.emplace_back(a.budget, a.mean_ndcg10);
  }
  std::vector<detail::Series> series;
  for (auto& [m, s] : by_method) {
    std::sort(s.points.begin(), s.points.end());
    series.push_back(std::move(s));
  }
  return detail::render_line_chart_svg("NDCG@10 vs reranker budget", "budget k", series);
}

/// Mean NDCG@10 versus mean total tokens per query, one line per method.
inline std::string token_curve_svg(const ExperimentResults& results) {
  std::map<std::string, detail::Series> by_method;
  for (const AggregateRow& a : results.aggregates) {
    auto& s = by_method[a.method];
    s.label = a.method;
    s.points.emplace_back(a.mean_tokens_in + a.mean_tokens_out, a.mean_ndcg10);
  }
  std::vector<detail::Series> series;
  for (auto& [m, s] : by_method) {
    std::sort(s.points.begin(), s.points.end());
    series.push_back(std::move(s));
  }
  return detail::render_line_chart_svg("NDCG@10 vs reranker tokens", "mean tokens per query",
                                       series);
}

}  // namespace rgs
