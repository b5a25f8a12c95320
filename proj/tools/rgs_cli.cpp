// rgs: build proximity graphs over embedding corpora, run budgeted
// reranker-guided searches and baselines, and drive experiment sweeps.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "rgs/eval.hpp"
#include "rgs/graph.hpp"
#include "rgs/http_reranker.hpp"
#include "rgs/io.hpp"
#include "rgs/search.hpp"
#include "rgs/synthetic.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitBackend = 4;

rgs::CorpusFormat parse_format(const std::string& fmt, const std::string& path) {
  if (fmt == "binary") return rgs::CorpusFormat::binary;
  if (fmt == "jsonl") return rgs::CorpusFormat::jsonl;
  return rgs::guess_format(path);
}

struct CorpusOptions {
  std::string path;
  std::string format = "auto";
  bool normalize = true;

  rgs::Corpus load() const {
    rgs::LoadOptions opts;
    opts.normalize = normalize;
    return rgs::load_corpus(path, parse_format(format, path), opts);
  }
};

void add_corpus_options(CLI::App* cmd, CorpusOptions& opts) {
  cmd->add_option("--corpus", opts.path, "corpus embeddings file")->required();
  cmd->add_option("--format", opts.format, "corpus file format")
      ->check(CLI::IsMember({"auto", "binary", "jsonl"}));
  cmd->add_flag("--normalize,!--no-normalize", opts.normalize,
                "L2-normalize embeddings at load (default on)");
}

struct BackendOptions {
  std::string kind = "oracle";
  double sigma = 0.0;
  std::uint64_t noise_seed = 0;
  // http
  std::string endpoint;
  std::string model = "gemini-2.0-flash";
  double timeout = 30.0;
  int retries = 2;
  double rate_limit = 0.0;
  std::string response_path = "choices.0.message.content";
};

void add_backend_options(CLI::App* cmd, BackendOptions& opts) {
  cmd->add_option("--backend", opts.kind, "reranker backend")
      ->check(CLI::IsMember({"oracle", "noisy-oracle", "static-sim", "static-grade", "http"}));
  cmd->add_option("--sigma", opts.sigma, "noisy oracle score noise sigma");
  cmd->add_option("--noise-seed", opts.noise_seed, "noisy oracle seed");
  cmd->add_option("--endpoint", opts.endpoint, "http backend endpoint URL");
  cmd->add_option("--model", opts.model, "http backend model name");
  cmd->add_option("--timeout", opts.timeout, "http timeout seconds");
  cmd->add_option("--retries", opts.retries, "http transport retries");
  cmd->add_option("--rate-limit", opts.rate_limit, "http requests per second (0 = unlimited)");
  cmd->add_option("--response-path", opts.response_path, "JSON path to the response text");
}

std::unique_ptr<rgs::RerankerBackend> make_cli_backend(const BackendOptions& opts,
                                                       const rgs::Corpus& corpus,
                                                       const rgs::RelevanceJudgments& qrels) {
  if (opts.kind == "http") {
    rgs::HttpRerankerConfig cfg;
    cfg.endpoint = opts.endpoint;
    cfg.model = opts.model;
    cfg.timeout_seconds = opts.timeout;
    cfg.max_retries = opts.retries;
    cfg.rate_limit_rps = opts.rate_limit;
    cfg.response_path = opts.response_path;
    return std::make_unique<rgs::HttpLlmReranker>(corpus, cfg);
  }
  rgs::BackendConfig cfg;
  if (opts.kind == "noisy-oracle") {
    cfg.kind = "noisy_oracle";
    cfg.noise.score_noise_sigma = opts.sigma;
    cfg.noise.seed = opts.noise_seed;
  } else if (opts.kind == "static-sim") {
    cfg.kind = "static_sim";
  } else if (opts.kind == "static-grade") {
    cfg.kind = "static_grade";
  } else {
    cfg.kind = "oracle";
  }
  return rgs::make_backend(cfg, corpus, qrels);
}

struct GraphOptions {
  std::string kind = "diskann";
  std::uint32_t r = 32;
  std::uint32_t l_build = 64;
  double alpha = 1.2;
  std::uint64_t seed = 42;
  bool single_pass = false;
  std::uint32_t knn_k = 16;
  std::uint32_t degree = 16;

  rgs::GraphConfig to_config() const {
    rgs::GraphConfig cfg;
    cfg.kind = rgs::graph_kind_from_string(kind);
    cfg.build.r = r;
    cfg.build.l_build = l_build;
    cfg.build.alpha = alpha;
    cfg.build.seed = seed;
    cfg.build.single_pass = single_pass;
    cfg.knn_k = knn_k;
    cfg.degree = degree;
    return cfg;
  }
};

void add_graph_options(CLI::App* cmd, GraphOptions& opts) {
  cmd->add_option("--kind,--graph-kind", opts.kind, "graph kind")
      ->check(CLI::IsMember({"diskann", "knn", "random"}));
  cmd->add_option("--R", opts.r, "degree bound R (diskann)");
  cmd->add_option("--l-build", opts.l_build, "construction beam width (diskann)");
  cmd->add_option("--alpha", opts.alpha, "pruning slack alpha (diskann)");
  cmd->add_option("--build-seed", opts.seed, "build RNG seed");
  cmd->add_flag("--single-pass", opts.single_pass, "skip the alpha=1 first pass (diskann)");
  cmd->add_option("--knn-k", opts.knn_k, "neighbors per vertex (knn)");
  cmd->add_option("--degree", opts.degree, "out-degree (random)");
}

rgs::StartStrategy parse_start(const std::string& s) {
  if (s == "default") return rgs::StartStrategy::index_default;
  return rgs::start_strategy_from_string(s);
}

int run_gen(const std::string& out_dir, const rgs::SyntheticParams& params) {
  namespace fs = std::filesystem;
  rgs::SyntheticData data = rgs::gen_synthetic(params);
  fs::create_directories(out_dir);
  const std::string corpus_path = (fs::path(out_dir) / "corpus.bin").string();
  const std::string queries_path = (fs::path(out_dir) / "queries.jsonl").string();
  const std::string qrels_path = (fs::path(out_dir) / "qrels.txt").string();
  rgs::atomic_write_file(corpus_path, true, [&](std::ostream& os) {
    rgs::save_corpus_binary(data.corpus, os);
  });
  rgs::atomic_write_file(queries_path, false, [&](std::ostream& os) {
    for (const auto& q : data.queries) {
      nlohmann::json j;
      j["id"] = q.qid;
      j["vector"] = q.embedding.values;
      if (!q.text.empty()) j["text"] = q.text;
      os << j.dump() << "\n";
    }
  });
  rgs::atomic_write_file(qrels_path, false, [&](std::ostream& os) {
    std::vector<std::string> qids;
    for (const auto& q : data.queries) qids.push_back(q.qid);
    rgs::save_qrels(data.qrels, qids, os);
  });
  std::cout << "wrote " << data.corpus.size() << " docs to " << corpus_path << "\n"
            << "wrote " << data.queries.size() << " queries to " << queries_path << "\n"
            << "wrote qrels for " << data.qrels.query_count() << " queries to " << qrels_path
            << "\n";
  return kExitOk;
}

int run_build(const CorpusOptions& corpus_opts, const GraphOptions& graph_opts,
              const std::string& out_path) {
  rgs::Corpus corpus = corpus_opts.load();
  rgs::GraphConfig cfg = graph_opts.to_config();
  rgs::GraphIndex index;
  switch (cfg.kind) {
    case rgs::GraphKind::diskann: index = rgs::build_diskann(corpus, cfg.build); break;
    case rgs::GraphKind::knn: index = rgs::build_knn(corpus, cfg.knn_k, cfg.build.seed); break;
    case rgs::GraphKind::random_graph:
      index = rgs::build_random(corpus, cfg.degree, cfg.build.seed);
      break;
  }
  rgs::atomic_write_file(out_path, true, [&](std::ostream& os) {
    rgs::save_index(index, corpus, os);
  });
  rgs::GraphStats stats = rgs::compute_graph_stats(index);
  std::printf("built %s graph: docs=%zu dim=%u max_degree=%u mean_degree=%.2f reachable=%.1f%%\n",
              rgs::to_string(index.kind), index.size(), corpus.dim(), stats.max_degree,
              stats.mean_degree, 100.0 * stats.reachable_fraction);
  std::printf("index written to %s\n", out_path.c_str());
  return kExitOk;
}

std::vector<float> parse_vector(const std::string& csv) {
  std::vector<float> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stof(item));
  }
  if (out.empty()) throw rgs::InvalidInputError("empty query vector");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reranker-guided retrieval engine and experiment harness"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read options from an INI file");

  // ---- gen ----
  auto* gen = app.add_subcommand("gen", "generate a planted-cluster synthetic dataset");
  std::string gen_out;
  rgs::SyntheticParams gen_params;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--n", gen_params.n, "number of documents");
  gen->add_option("--dim", gen_params.dim, "embedding dimension");
  gen->add_option("--clusters", gen_params.clusters, "number of query groups");
  gen->add_option("--queries", gen_params.queries, "number of queries");
  gen->add_option("--relevant", gen_params.relevant_per_query, "relevant docs per query");
  gen->add_option("--spread", gen_params.cluster_spread, "cluster spread");
  gen->add_option("--offset", gen_params.planted_rank_offset,
                  "embedding rank where relevant docs start");
  gen->add_option("--seed", gen_params.seed, "generation seed");
  gen->add_flag("--with-text", gen_params.with_text, "attach text payloads");

  // ---- build ----
  auto* build = app.add_subcommand("build", "build a proximity graph index");
  CorpusOptions build_corpus;
  GraphOptions build_graph;
  std::string build_out;
  add_corpus_options(build, build_corpus);
  add_graph_options(build, build_graph);
  build->add_option("--out", build_out, "index output path")->required();

  // ---- search ----
  auto* search = app.add_subcommand("search", "run one budgeted search");
  CorpusOptions search_corpus;
  BackendOptions search_backend;
  std::string search_index, search_queries, search_qid, search_vector, search_qtext;
  std::string search_qrels, search_method = "rgs", search_start = "exact", search_trace;
  int search_budget = 100, search_ls = 0, search_w = 0, search_seeds = 0, search_rank = 1000;
  bool search_partial = false;
  add_corpus_options(search, search_corpus);
  add_backend_options(search, search_backend);
  search->add_option("--index", search_index, "index file")->required();
  search->add_option("--queries", search_queries, "queries file (jsonl or binary)");
  search->add_option("--qid", search_qid, "query id to run from --queries");
  search->add_option("--query-vector", search_vector, "inline query vector, comma-separated");
  search->add_option("--query-text", search_qtext, "query text (http backend)");
  search->add_option("--qrels", search_qrels, "qrels file (oracle/static-grade backends)");
  search->add_option("--method", search_method, "search method")
      ->check(CLI::IsMember({"rgs", "rr", "slidegar"}));
  search->add_option("--budget", search_budget, "reranker budget k");
  search->add_option("--ls", search_ls, "search list size Ls (0 = default for budget)");
  search->add_option("--w", search_w, "window size (0 = method default)");
  search->add_option("--seeds", search_seeds, "start points (0 = k/5)");
  search->add_option("--start", search_start, "start strategy")
      ->check(CLI::IsMember({"exact", "noisy", "default", "index_default"}));
  search->add_option("--noisy-rank", search_rank, "rank of the first noisy start point");
  search->add_flag("--partial-pass", search_partial, "limit each pass to the appended tail");
  search->add_option("--trace", search_trace, "write the search trace (JSON lines)");

  // ---- eval ----
  auto* eval = app.add_subcommand("eval", "run an experiment sweep");
  CorpusOptions eval_corpus;
  BackendOptions eval_backend;
  GraphOptions eval_graph;
  std::string eval_queries, eval_qrels, eval_index, eval_out;
  std::string eval_methods = "rr,slidegar,rgs", eval_budgets = "100,300,500";
  std::string eval_start = "exact", eval_perturb;
  std::uint64_t eval_perturb_seed = 0;
  bool eval_perturb_renorm = false, eval_plots = false, eval_no_traces = false;
  int eval_ls = 0, eval_seeds = 0, eval_w_rgs = 10, eval_w_rr = 10, eval_w_slidegar = 20;
  int eval_rank = 1000, eval_jobs = 0;
  bool eval_partial = false;
  add_corpus_options(eval, eval_corpus);
  add_backend_options(eval, eval_backend);
  add_graph_options(eval, eval_graph);
  eval->add_option("--queries", eval_queries, "queries file")->required();
  eval->add_option("--qrels", eval_qrels, "qrels file")->required();
  eval->add_option("--index", eval_index, "prebuilt index (skipped under document perturbation)");
  eval->add_option("--methods", eval_methods, "comma-separated methods");
  eval->add_option("--budgets", eval_budgets, "comma-separated budgets");
  eval->add_option("--ls", eval_ls, "Ls override (0 = per-budget default)");
  eval->add_option("--seeds", eval_seeds, "start points (0 = k/5)");
  eval->add_option("--w-rgs", eval_w_rgs, "rgs window size");
  eval->add_option("--w-rr", eval_w_rr, "rr window size");
  eval->add_option("--w-slidegar", eval_w_slidegar, "slidegar window size");
  eval->add_option("--start", eval_start, "rgs start strategy")
      ->check(CLI::IsMember({"exact", "noisy", "default", "index_default"}));
  eval->add_option("--noisy-rank", eval_rank, "rank of the first noisy start point");
  eval->add_flag("--partial-pass", eval_partial, "limit rgs passes to the appended tail");
  eval->add_option("--perturb", eval_perturb, "embedding perturbation, e.g. query:1.0");
  eval->add_option("--perturb-seed", eval_perturb_seed, "perturbation seed");
  eval->add_flag("--perturb-renormalize", eval_perturb_renorm, "renormalize mixed embeddings");
  eval->add_flag("--plots", eval_plots, "write SVG curves");
  eval->add_flag("--no-traces", eval_no_traces, "skip writing traces.jsonl");
  eval->add_option("--jobs", eval_jobs, "worker threads (0 = hardware)");
  eval->add_option("--out", eval_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (gen->parsed()) return run_gen(gen_out, gen_params);

    if (build->parsed()) return run_build(build_corpus, build_graph, build_out);

    if (search->parsed()) {
      rgs::Corpus corpus = search_corpus.load();
      rgs::GraphIndex index = rgs::load_index_file(search_index, corpus);
      rgs::RelevanceJudgments qrels;
      if (!search_qrels.empty()) qrels = rgs::load_qrels(search_qrels, corpus);
      const bool needs_qrels = search_backend.kind == "oracle" ||
                               search_backend.kind == "noisy-oracle" ||
                               search_backend.kind == "static-grade";
      if (needs_qrels && search_qrels.empty()) {
        throw rgs::InvalidInputError("--qrels is required for backend " + search_backend.kind);
      }

      rgs::QueryRecord query;
      if (!search_vector.empty()) {
        query.qid = "inline";
        query.embedding.values = parse_vector(search_vector);
        if (search_corpus.normalize) query.embedding.normalize();
        query.text = search_qtext;
      } else {
        if (search_queries.empty() || search_qid.empty()) {
          throw rgs::InvalidInputError("provide --query-vector or --queries with --qid");
        }
        rgs::LoadOptions qopts;
        qopts.normalize = search_corpus.normalize;
        auto queries = rgs::load_queries(
            search_queries, parse_format(search_corpus.format, search_queries), qopts);
        auto it = std::find_if(queries.begin(), queries.end(),
                               [&](const rgs::QueryRecord& q) { return q.qid == search_qid; });
        if (it == queries.end()) {
          throw rgs::InvalidInputError("qid '" + search_qid + "' not found in " + search_queries);
        }
        query = *it;
        if (!search_qtext.empty()) query.text = search_qtext;
      }

      auto backend = make_cli_backend(search_backend, corpus, qrels);
      rgs::SearchResult result = [&] {
        if (search_method == "rr") {
          return rgs::retrieve_and_rerank(query, corpus, index, *backend, search_budget,
                                          search_w == 0 ? 10 : search_w);
        }
        if (search_method == "slidegar") {
          return rgs::slidegar_search(query, corpus, index, *backend, search_budget,
                                      search_w == 0 ? 20 : search_w);
        }
        rgs::RgsParams params;
        params.budget_k = search_budget;
        params.ls = search_ls;
        params.w = search_w == 0 ? 10 : search_w;
        params.seeds = search_seeds;
        params.start = parse_start(search_start);
        params.noisy_rank = search_rank;
        params.partial_pass = search_partial;
        return rgs::rgs_search(query, corpus, index, *backend, params);
      }();

      for (std::size_t i = 0; i < result.top10.entries.size(); ++i) {
        std::printf("%zu. %s\n", i + 1, result.top10.entries[i].c_str());
      }
      std::printf("scanned=%zu doc_views=%zu calls=%zu tokens_in=%lld tokens_out=%lld\n",
                  result.ledger.scanned_count(), result.ledger.doc_views(),
                  result.ledger.calls(), static_cast<long long>(result.ledger.tokens_in()),
                  static_cast<long long>(result.ledger.tokens_out()));
      if (!search_trace.empty()) {
        rgs::atomic_write_file(search_trace, false, [&](std::ostream& os) {
          os << rgs::trace_to_json(result.trace).dump() << "\n";
        });
      }
      return kExitOk;
    }

    if (eval->parsed()) {
      namespace fs = std::filesystem;
      rgs::Corpus corpus = eval_corpus.load();
      rgs::LoadOptions qopts;
      qopts.normalize = eval_corpus.normalize;
      auto queries =
          rgs::load_queries(eval_queries, parse_format(eval_corpus.format, eval_queries), qopts);
      rgs::RelevanceJudgments qrels = rgs::load_qrels(eval_qrels, corpus);
      if (qrels.dropped() > 0) {
        std::fprintf(stderr, "warning: dropped %zu qrels labels not present in the corpus\n",
                     qrels.dropped());
      }

      rgs::ExperimentConfig config;
      config.methods.clear();
      {
        std::stringstream ss(eval_methods);
        std::string m;
        while (std::getline(ss, m, ',')) {
          if (!m.empty()) config.methods.push_back(m);
        }
      }
      config.budgets.clear();
      {
        std::stringstream ss(eval_budgets);
        std::string b;
        while (std::getline(ss, b, ',')) {
          if (!b.empty()) config.budgets.push_back(std::stoi(b));
        }
      }
      config.ls = eval_ls;
      config.seeds = eval_seeds;
      config.w_rgs = eval_w_rgs;
      config.w_rr = eval_w_rr;
      config.w_slidegar = eval_w_slidegar;
      config.start = parse_start(eval_start);
      config.noisy_rank = eval_rank;
      config.partial_pass = eval_partial;
      config.graph = eval_graph.to_config();
      config.jobs =
          eval_jobs > 0 ? eval_jobs
                        : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
      if (!eval_perturb.empty()) {
        const auto colon = eval_perturb.find(':');
        if (colon == std::string::npos) {
          throw rgs::InvalidInputError("--perturb expects target:weight, e.g. query:1.0");
        }
        const std::string target = eval_perturb.substr(0, colon);
        if (target == "query") {
          config.perturb.target = rgs::PerturbationConfig::Target::query;
        } else if (target == "document") {
          config.perturb.target = rgs::PerturbationConfig::Target::document;
        } else {
          throw rgs::InvalidInputError("--perturb target must be query or document");
        }
        config.perturb.w = std::stod(eval_perturb.substr(colon + 1));
        config.perturb.seed = eval_perturb_seed;
        config.perturb.renormalize = eval_perturb_renorm;
      }

      rgs::BackendFactory factory = [&](const rgs::Corpus& c, const rgs::RelevanceJudgments& qr) {
        return make_cli_backend(eval_backend, c, qr);
      };

      rgs::GraphIndex prebuilt;
      const rgs::GraphIndex* prebuilt_ptr = nullptr;
      if (!eval_index.empty()) {
        prebuilt = rgs::load_index_file(eval_index, corpus);
        prebuilt.kind = config.graph.kind;
        prebuilt_ptr = &prebuilt;
      }

      rgs::ExperimentResults results =
          rgs::run_experiment(config, corpus, queries, qrels, factory, prebuilt_ptr);

      fs::create_directories(eval_out);
      const std::string csv_path = (fs::path(eval_out) / "results.csv").string();
      rgs::atomic_write_file(csv_path, false, [&](std::ostream& os) {
        rgs::write_results_csv(results, os);
      });
      const std::string json_path = (fs::path(eval_out) / "results.json").string();
      rgs::atomic_write_file(json_path, false, [&](std::ostream& os) {
        os << rgs::results_to_json(results, qrels).dump(2) << "\n";
      });
      if (!eval_no_traces) {
        const std::string traces_path = (fs::path(eval_out) / "traces.jsonl").string();
        rgs::atomic_write_file(traces_path, false, [&](std::ostream& os) {
          for (const auto& t : results.traces) {
            if (!t.qid.empty()) os << rgs::trace_to_json(t).dump() << "\n";
          }
        });
      }
      if (eval_plots) {
        rgs::atomic_write_file((fs::path(eval_out) / "ndcg_vs_budget.svg").string(), false,
                               [&](std::ostream& os) { os << rgs::budget_curve_svg(results); });
        rgs::atomic_write_file((fs::path(eval_out) / "ndcg_vs_tokens.svg").string(), false,
                               [&](std::ostream& os) { os << rgs::token_curve_svg(results); });
      }

      std::size_t failed_total = 0;
      for (const auto& agg : results.aggregates) {
        std::printf("%-9s budget=%-4d mean_ndcg10=%.4f mean_scanned=%.1f calls=%.1f failed=%zu\n",
                    agg.method.c_str(), agg.budget, agg.mean_ndcg10, agg.mean_scanned,
                    agg.mean_calls, agg.failed);
        failed_total += agg.failed;
      }
      if (failed_total > 0) {
        std::printf("%zu query runs failed and were excluded from means\n", failed_total);
      }
      std::printf("results written to %s\n", eval_out.c_str());
      return kExitOk;
    }
  } catch (const rgs::BackendError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitBackend;
  } catch (const rgs::IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const rgs::InvalidInputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
