#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rgs/core.hpp"

namespace rgs {

/// Planted-cluster dataset: each query group gets a "distractor" cluster of
/// exactly planted_rank_offset docs sitting closest to its queries (all grade
/// 0) and a nearby "relevant" cluster of relevant_per_query grade-1 docs.
/// The two clusters are adjacent in document space, so a proximity graph
/// connects them, while the relevant docs start below embedding rank
/// planted_rank_offset for the query. With offset 0 the queries point
/// straight at their relevant cluster.
struct SyntheticParams {
  std::size_t n = 5000;
  std::size_t dim = 64;
  std::size_t clusters = 20;  // number of query groups
  std::size_t queries = 100;
  std::size_t relevant_per_query = 10;
  double cluster_spread = 0.02;
  std::size_t planted_rank_offset = 200;
  std::uint64_t seed = 7;
  bool with_text = false;

  void validate() const {
    if (n == 0 || dim == 0 || clusters == 0 || queries == 0 || relevant_per_query == 0) {
      throw InvalidInputError("gen_synthetic: all size parameters must be positive");
    }
    if (cluster_spread <= 0.0) {
      throw InvalidInputError("gen_synthetic: cluster_spread must be positive");
    }
    const std::size_t needed = clusters * (planted_rank_offset + relevant_per_query);
    if (needed > n) {
      throw InvalidInputError(
          "gen_synthetic: infeasible rank offset for given n (need " + std::to_string(needed) +
          " cluster docs, have " + std::to_string(n) + ")");
    }
  }
};

struct SyntheticData {
  Corpus corpus;
  std::vector<QueryRecord> queries;
  RelevanceJudgments qrels;
};

namespace detail {

inline double gauss(std::mt19937_64& rng) {
  // Box-Muller, pinned (std::normal_distribution is implementation-defined).
  const double u1 =
      (static_cast<double>(rng() >> 11) + 0.5) / 9007199254740992.0;  // (0,1)
  const double u2 = static_cast<double>(rng() >> 11) / 9007199254740992.0;  // [0,1)
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793 * u2);
}

inline std::vector<float> random_unit(std::size_t dim, std::mt19937_64& rng) {
  std::vector<float> v(dim);
  double norm = 0.0;
  for (auto& x : v) {
    const double g = gauss(rng);
    x = static_cast<float>(g);
    norm += g * g;
  }
  norm = std::sqrt(norm);
  for (auto& x : v) x = static_cast<float>(x / norm);
  return v;
}

inline std::vector<float> jittered_unit(std::span<const float> center, double spread,
                                        std::mt19937_64& rng) {
  std::vector<float> v(center.size());
  double norm = 0.0;
  for (std::size_t d = 0; d < center.size(); ++d) {
    const double x = center[d] + spread * gauss(rng);
    v[d] = static_cast<float>(x);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (auto& x : v) x = static_cast<float>(x / norm);
  return v;
}

}  // namespace detail

inline SyntheticData gen_synthetic(const SyntheticParams& params) {
  params.validate();
  std::mt19937_64 rng(detail::mix64(params.seed ^ 0x73796e74ULL));

  // Relevant centers sit at a fixed angular offset from their distractor
  // center: far enough that every distractor ranks closer to the query
  // (inner-product gap of ~0.3 vs per-doc noise of a few sigma), close
  // enough that the two clusters stay adjacent in document space and the
  // proximity graph connects them.
  const double kCenterShift = 1.0;

  struct Group {
    std::vector<float> distractor_center;
    std::vector<float> relevant_center;
    std::vector<DocId> relevant_docs;
  };
  std::vector<Group> groups(params.clusters);
  for (auto& g : groups) {
    g.distractor_center = detail::random_unit(params.dim, rng);
    auto shift = detail::random_unit(params.dim, rng);
    std::vector<float> c(params.dim);
    double norm = 0.0;
    for (std::size_t d = 0; d < params.dim; ++d) {
      const double x = g.distractor_center[d] + kCenterShift * shift[d];
      c[d] = static_cast<float>(x);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (auto& x : c) x = static_cast<float>(x / norm);
    g.relevant_center = std::move(c);
  }

  SyntheticData data;
  std::size_t doc_counter = 0;
  char idbuf[32];
  auto next_id = [&]() {
    std::snprintf(idbuf, sizeof(idbuf), "d%06zu", doc_counter++);
    return std::string(idbuf);
  };
  auto add_doc = [&](std::vector<float> emb, const std::string& role, std::size_t group) {
    DocId id = next_id();
    std::string text;
    if (params.with_text) {
      text = role + " passage " + id + " of group " + std::to_string(group);
    }
    data.corpus.add(id, std::move(emb), std::move(text));
    return id;
  };

  for (std::size_t gi = 0; gi < params.clusters; ++gi) {
    Group& g = groups[gi];
    for (std::size_t i = 0; i < params.planted_rank_offset; ++i) {
      add_doc(detail::jittered_unit(g.distractor_center, params.cluster_spread, rng),
              "distractor", gi);
    }
    for (std::size_t i = 0; i < params.relevant_per_query; ++i) {
      g.relevant_docs.push_back(add_doc(
          detail::jittered_unit(g.relevant_center, params.cluster_spread, rng), "relevant", gi));
    }
  }
  while (data.corpus.size() < params.n) {
    add_doc(detail::random_unit(params.dim, rng), "background", params.clusters);
  }

  for (std::size_t qi = 0; qi < params.queries; ++qi) {
    const std::size_t gi = qi % params.clusters;
    const Group& g = groups[gi];
    const auto& target =
        params.planted_rank_offset > 0 ? g.distractor_center : g.relevant_center;
    char qbuf[32];
    std::snprintf(qbuf, sizeof(qbuf), "q%04zu", qi);
    QueryRecord q;
    q.qid = qbuf;
    q.embedding.values = detail::jittered_unit(target, params.cluster_spread, rng);
    if (params.with_text) {
      q.text = "query " + q.qid + " about group " + std::to_string(gi);
    }
    for (const DocId& doc : g.relevant_docs) data.qrels.set(q.qid, doc, 1);
    data.queries.push_back(std::move(q));
  }

  // Post-hoc verification of the planted ranks by exhaustive scan.
  for (const QueryRecord& q : data.queries) {
    std::vector<double> sims(data.corpus.size());
    for (std::uint32_t d = 0; d < data.corpus.size(); ++d) {
      sims[d] = similarity(q.embedding.span(), data.corpus.embedding(d));
    }
    const auto& g = groups[std::stoul(q.qid.substr(1)) % params.clusters];
    double best_rel = -1e30;
    for (const DocId& doc : g.relevant_docs) {
      best_rel = std::max(best_rel, sims[*data.corpus.find(doc)]);
    }
    std::size_t closer = 0;
    for (double s : sims) {
      if (s > best_rel) ++closer;
    }
    // `closer` == 0-based rank of the best relevant doc
    if (params.planted_rank_offset > 0) {
      if (closer < params.planted_rank_offset) {
        throw Error("gen_synthetic: rank verification failed for " + q.qid +
                    " (best relevant doc at rank " + std::to_string(closer + 1) +
                    ", expected > " + std::to_string(params.planted_rank_offset) + ")");
      }
      if (closer > params.planted_rank_offset + params.n / 10 + 50) {
        throw Error("gen_synthetic: rank verification failed for " + q.qid +
                    " (best relevant doc at rank " + std::to_string(closer + 1) +
                    ", far beyond the planted offset)");
      }
    } else if (closer > params.relevant_per_query) {
      throw Error("gen_synthetic: rank verification failed for " + q.qid +
                  " (relevant cluster does not dominate the top ranks)");
    }
  }
  return data;
}

}  // namespace rgs
