#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <fstream>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "rgs/core.hpp"

namespace rgs {

inline constexpr std::uint32_t kIndexMagic = 0x52475347;  // "RGSG" LE
inline constexpr std::uint32_t kIndexVersion = 1;

enum class GraphKind { diskann, knn, random_graph };

inline const char* to_string(GraphKind k) {
  switch (k) {
    case GraphKind::diskann: return "diskann";
    case GraphKind::knn: return "knn";
    case GraphKind::random_graph: return "random";
  }
  return "?";
}

inline GraphKind graph_kind_from_string(const std::string& s) {
  if (s == "diskann") return GraphKind::diskann;
  if (s == "knn") return GraphKind::knn;
  if (s == "random") return GraphKind::random_graph;
  throw InvalidInputError("unknown graph kind: " + s);
}

struct BuildParams {
  std::uint32_t r = 32;        // out-degree bound R
  std::uint32_t l_build = 64;  // construction beam width
  double alpha = 1.2;          // pruning slack factor
  std::uint64_t seed = 42;
  bool single_pass = false;    // skip the alpha=1 first pass

  void validate() const {
    if (r < 2) throw InvalidInputError("build params: R must be >= 2");
    if (l_build < r) throw InvalidInputError("build params: L_build must be >= R");
    if (alpha < 1.0) throw InvalidInputError("build params: alpha must be >= 1");
  }
};

/// Directed proximity graph over corpus indices. Adjacency is aligned with
/// the corpus the graph was built from (vertex i == corpus index i).
struct GraphIndex {
  GraphKind kind = GraphKind::diskann;
  std::uint32_t degree_bound = 0;  // R
  std::uint32_t default_start = 0;
  std::vector<std::vector<std::uint32_t>> adjacency;

  std::size_t size() const { return adjacency.size(); }
  std::span<const std::uint32_t> neighbors(std::uint32_t v) const {
    return {adjacency[v].data(), adjacency[v].size()};
  }

  bool operator==(const GraphIndex& other) const {
    return degree_bound == other.degree_bound && default_start == other.default_start &&
           adjacency == other.adjacency;
  }
};

struct GraphStats {
  std::uint32_t max_degree = 0;
  double mean_degree = 0.0;
  double reachable_fraction = 0.0;  // BFS from default_start over out-edges
};

inline GraphStats compute_graph_stats(const GraphIndex& index) {
  GraphStats st;
  const std::size_t n = index.size();
  if (n == 0) return st;
  std::size_t total = 0;
  for (const auto& nbrs : index.adjacency) {
    st.max_degree = std::max<std::uint32_t>(st.max_degree,
                                            static_cast<std::uint32_t>(nbrs.size()));
    total += nbrs.size();
  }
  st.mean_degree = static_cast<double>(total) / static_cast<double>(n);
  std::vector<char> seen(n, 0);
  std::deque<std::uint32_t> frontier{index.default_start};
  seen[index.default_start] = 1;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    std::uint32_t v = frontier.front();
    frontier.pop_front();
    for (std::uint32_t nb : index.adjacency[v]) {
      if (!seen[nb]) {
        seen[nb] = 1;
        ++reached;
        frontier.push_back(nb);
      }
    }
  }
  st.reachable_fraction = static_cast<double>(reached) / static_cast<double>(n);
  return st;
}

namespace detail {

// sim descending, then doc id ascending: the engine-wide ordering for
// "closer to the target".
inline bool better_scored(double sim_a, std::uint32_t a, double sim_b, std::uint32_t b,
                          const Corpus& corpus) {
  if (sim_a != sim_b) return sim_a > sim_b;
  return corpus.id(a) < corpus.id(b);
}

// l2 ascending, then doc id ascending.
inline bool closer_l2(double da, std::uint32_t a, double db, std::uint32_t b,
                      const Corpus& corpus) {
  if (da != db) return da < db;
  return corpus.id(a) < corpus.id(b);
}

// Deterministic Fisher-Yates (std::shuffle's algorithm is not pinned across
// standard libraries).
template <typename T>
void fisher_yates(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(v[i - 1], v[pick(rng)]);
  }
}

}  // namespace detail

struct BeamSearchResult {
  std::vector<std::uint32_t> top;      // k best visited, sim desc / id asc
  std::vector<std::uint32_t> visited;  // every vertex whose distance was evaluated
};

/// Best-first graph traversal with a bounded candidate pool of size `beam`.
/// Returns the k visited vertices with the highest inner-product similarity
/// to `target`, ties broken by ascending doc id. Deterministic.
inline BeamSearchResult greedy_beam_search(const GraphIndex& index, const Corpus& corpus,
                                           std::span<const std::uint32_t> start_set,
                                           std::span<const float> target, std::uint32_t beam,
                                           std::uint32_t k) {
  if (start_set.empty()) throw InvalidInputError("greedy_beam_search: empty start set");
  if (k < 1) throw InvalidInputError("greedy_beam_search: k must be >= 1");
  if (beam < k) throw InvalidInputError("greedy_beam_search: beam must be >= k");

  struct Entry {
    double sim;
    std::uint32_t idx;
    bool expanded;
  };
  std::vector<Entry> pool;  // sorted best-first, size <= beam
  pool.reserve(beam + 1);
  std::vector<char> visited_flag(corpus.size(), 0);
  std::vector<std::pair<double, std::uint32_t>> visited;  // (sim, idx)

  auto insert_pool = [&](double sim, std::uint32_t idx) {
    auto pos = std::lower_bound(pool.begin(), pool.end(), std::pair{sim, idx},
                                [&](const Entry& e, const std::pair<double, std::uint32_t>& x) {
                                  return detail::better_scored(e.sim, e.idx, x.first, x.second,
                                                               corpus);
                                });
    if (pool.size() >= beam && pos == pool.end()) return;
    pool.insert(pos, Entry{sim, idx, false});
    if (pool.size() > beam) pool.pop_back();
  };

  for (std::uint32_t s : start_set) {
    if (s >= corpus.size()) throw InvalidInputError("greedy_beam_search: start vertex out of range");
    if (visited_flag[s]) continue;
    visited_flag[s] = 1;
    const double sim = similarity(corpus.embedding(s), target);
    visited.emplace_back(sim, s);
    insert_pool(sim, s);
  }

  while (true) {
    auto it = std::find_if(pool.begin(), pool.end(), [](const Entry& e) { return !e.expanded; });
    if (it == pool.end()) break;
    it->expanded = true;
    const std::uint32_t v = it->idx;
    for (std::uint32_t nb : index.neighbors(v)) {
      if (visited_flag[nb]) continue;
      visited_flag[nb] = 1;
      const double sim = similarity(corpus.embedding(nb), target);
      visited.emplace_back(sim, nb);
      insert_pool(sim, nb);
    }
  }

  std::sort(visited.begin(), visited.end(),
            [&](const std::pair<double, std::uint32_t>& a,
                const std::pair<double, std::uint32_t>& b) {
              return detail::better_scored(a.first, a.second, b.first, b.second, corpus);
            });
  BeamSearchResult out;
  const std::size_t take = std::min<std::size_t>(k, visited.size());
  out.top.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.top.push_back(visited[i].second);
  out.visited.reserve(visited.size());
  for (const auto& [sim, idx] : visited) out.visited.push_back(idx);
  return out;
}

/// DiskANN-style neighbor selection: keep the closest candidate, then drop any
/// candidate c for which a kept neighbor n satisfies
/// alpha * dist(n, c) <= dist(p, c). Distances are Euclidean over embeddings.
/// Returns at most `r` neighbors in the order they were kept.
inline std::vector<std::uint32_t> robust_prune(std::uint32_t p,
                                               std::span<const std::uint32_t> candidates,
                                               double alpha, std::uint32_t r,
                                               const Corpus& corpus) {
  std::vector<std::uint32_t> cand;
  cand.reserve(candidates.size());
  {
    std::unordered_set<std::uint32_t> seen;
    for (std::uint32_t c : candidates) {
      if (c == p) continue;  // no self-loops
      if (seen.insert(c).second) cand.push_back(c);
    }
  }
  if (cand.empty()) return {};

  std::vector<double> dist_p(cand.size());
  for (std::size_t i = 0; i < cand.size(); ++i) {
    dist_p[i] = l2_distance(corpus.embedding(p), corpus.embedding(cand[i]));
  }
  std::vector<std::size_t> order(cand.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detail::closer_l2(dist_p[a], cand[a], dist_p[b], cand[b], corpus);
  });

  std::vector<std::uint32_t> kept;
  std::vector<char> pruned(cand.size(), 0);
  for (std::size_t oi = 0; oi < order.size() && kept.size() < r; ++oi) {
    const std::size_t i = order[oi];
    if (pruned[i]) continue;
    kept.push_back(cand[i]);
    for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
      const std::size_t j = order[oj];
      if (pruned[j]) continue;
      const double d_nc = l2_distance(corpus.embedding(cand[i]), corpus.embedding(cand[j]));
      if (alpha * d_nc <= dist_p[j]) pruned[j] = 1;
    }
  }
  return kept;
}

namespace detail {

// Medoid of a uniform sample (full corpus when n <= sample_size): the sample
// member minimizing total Euclidean distance to the rest of the sample.
inline std::uint32_t sample_medoid(const Corpus& corpus, std::size_t sample_size,
                                   std::uint64_t seed) {
  const std::size_t n = corpus.size();
  std::vector<std::uint32_t> sample(n);
  std::iota(sample.begin(), sample.end(), 0);
  if (n > sample_size) {
    std::mt19937_64 rng(mix64(seed ^ 0x6d65646f6964ULL));  // stream tag for the medoid sample
    fisher_yates(sample, rng);
    sample.resize(sample_size);
    std::sort(sample.begin(), sample.end());
  }
  std::uint32_t best = sample[0];
  double best_total = std::numeric_limits<double>::infinity();
  for (std::uint32_t v : sample) {
    double total = 0.0;
    for (std::uint32_t u : sample) {
      if (u != v) total += l2_distance(corpus.embedding(v), corpus.embedding(u));
    }
    if (total < best_total ||
        (total == best_total && corpus.id(v) < corpus.id(best))) {
      best_total = total;
      best = v;
    }
  }
  return best;
}

}  // namespace detail

/// Vamana incremental construction: insert points in a seeded random order;
/// for each point, greedy-search the current graph from the medoid, prune the
/// visited set into a neighbor list, and add bidirectional edges, re-pruning
/// any vertex whose degree exceeds R. Runs an alpha=1 pass followed by an
/// alpha=params.alpha pass unless single_pass is set. Insertions are strictly
/// sequential in the permuted order, so a fixed seed gives an identical graph.
inline GraphIndex build_diskann(const Corpus& corpus, const BuildParams& params) {
  params.validate();
  const std::size_t n = corpus.size();
  if (n < 2) throw InvalidInputError("build_diskann: corpus must have at least 2 docs");

  GraphIndex index;
  index.kind = GraphKind::diskann;
  index.degree_bound = params.r;
  index.adjacency.assign(n, {});
  index.default_start = detail::sample_medoid(corpus, 1000, params.seed);

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  {
    std::mt19937_64 rng(detail::mix64(params.seed));
    detail::fisher_yates(order, rng);
    // medoid first so every later insertion can start its search there
    auto it = std::find(order.begin(), order.end(), index.default_start);
    std::rotate(order.begin(), it, it + 1);
  }

  const std::uint32_t start[1] = {index.default_start};

  auto add_backedge = [&](std::uint32_t q, std::uint32_t p, double alpha) {
    auto& nbrs = index.adjacency[q];
    if (std::find(nbrs.begin(), nbrs.end(), p) != nbrs.end()) return;
    nbrs.push_back(p);
    if (nbrs.size() > params.r) {
      nbrs = robust_prune(q, nbrs, alpha, params.r, corpus);
    }
  };

  auto insert_pass = [&](double alpha, bool first_pass) {
    for (std::size_t oi = 0; oi < order.size(); ++oi) {
      const std::uint32_t p = order[oi];
      std::vector<std::uint32_t> cand;
      if (!(first_pass && oi == 0)) {
        auto res = greedy_beam_search(index, corpus, start, corpus.embedding(p),
                                      params.l_build, 1);
        cand = std::move(res.visited);
      }
      // re-prune over old neighbors too, so the second pass refines rather
      // than replaces
      cand.insert(cand.end(), index.adjacency[p].begin(), index.adjacency[p].end());
      index.adjacency[p] = robust_prune(p, cand, alpha, params.r, corpus);
      for (std::uint32_t q : index.adjacency[p]) add_backedge(q, p, alpha);
    }
  };

  if (params.single_pass) {
    insert_pass(params.alpha, true);
  } else {
    insert_pass(1.0, true);
    insert_pass(params.alpha, false);
  }
  return index;
}

/// Exact k-nearest-neighbor graph by exhaustive scan, Euclidean distance,
/// ties by ascending doc id.
inline GraphIndex build_knn(const Corpus& corpus, std::uint32_t k, std::uint64_t seed = 42) {
  const std::size_t n = corpus.size();
  if (n == 0) throw InvalidInputError("build_knn: empty corpus");
  if (k >= n) throw InvalidInputError("build_knn: k must be < corpus size");

  GraphIndex index;
  index.kind = GraphKind::knn;
  index.degree_bound = k;
  index.adjacency.assign(n, {});
  index.default_start = detail::sample_medoid(corpus, 1000, seed);

  std::vector<std::pair<double, std::uint32_t>> dists;
  dists.reserve(n - 1);
  for (std::uint32_t v = 0; v < n; ++v) {
    dists.clear();
    for (std::uint32_t u = 0; u < n; ++u) {
      if (u == v) continue;
      dists.emplace_back(l2_distance(corpus.embedding(v), corpus.embedding(u)), u);
    }
    std::partial_sort(dists.begin(), dists.begin() + k, dists.end(),
                      [&](const auto& a, const auto& b) {
                        return detail::closer_l2(a.first, a.second, b.first, b.second, corpus);
                      });
    auto& nbrs = index.adjacency[v];
    nbrs.reserve(k);
    for (std::uint32_t i = 0; i < k; ++i) nbrs.push_back(dists[i].second);
  }
  return index;
}

/// Random graph: every vertex gets exactly `degree` distinct neighbors, no
/// self-loops, drawn from a seeded generator.
inline GraphIndex build_random(const Corpus& corpus, std::uint32_t degree, std::uint64_t seed) {
  const std::size_t n = corpus.size();
  if (n == 0) throw InvalidInputError("build_random: empty corpus");
  if (degree >= n) throw InvalidInputError("build_random: degree must be < corpus size");

  GraphIndex index;
  index.kind = GraphKind::random_graph;
  index.degree_bound = degree;
  index.adjacency.assign(n, {});
  index.default_start = detail::sample_medoid(corpus, 1000, seed);

  std::mt19937_64 rng(detail::mix64(seed ^ 0x72616e64ULL));
  std::vector<std::uint32_t> others(n - 1);
  for (std::uint32_t v = 0; v < n; ++v) {
    std::size_t w = 0;
    for (std::uint32_t u = 0; u < n; ++u) {
      if (u != v) others[w++] = u;
    }
    // partial Fisher-Yates: the first `degree` slots end up uniform
    for (std::uint32_t i = 0; i < degree; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, others.size() - 1);
      std::swap(others[i], others[pick(rng)]);
    }
    index.adjacency[v].assign(others.begin(), others.begin() + degree);
  }
  return index;
}

namespace detail {

inline void write_id(std::ostream& os, const std::string& id) {
  if (id.size() > 0xffff) throw InvalidInputError("doc id too long for index format: " + id);
  write_le_u16(os, static_cast<std::uint16_t>(id.size()));
  os.write(id.data(), static_cast<std::streamsize>(id.size()));
}

inline std::string read_id(std::istream& is, const std::string& path) {
  std::uint16_t len = 0;
  if (!read_le_u16(is, len)) throw ParseError(path + ": truncated index file");
  std::string id(len, '\0');
  if (len > 0 && !read_bytes(is, id.data(), len)) {
    throw ParseError(path + ": truncated index file");
  }
  return id;
}

}  // namespace detail

inline void save_index(const GraphIndex& index, const Corpus& corpus, std::ostream& os) {
  if (index.size() != corpus.size()) {
    throw InvalidInputError("save_index: index/corpus size mismatch");
  }
  detail::write_le_u32(os, kIndexMagic);
  detail::write_le_u32(os, kIndexVersion);
  detail::write_le_u32(os, index.degree_bound);
  detail::write_le_u32(os, static_cast<std::uint32_t>(index.size()));
  detail::write_id(os, corpus.id(index.default_start));
  for (std::uint32_t v = 0; v < index.size(); ++v) {
    detail::write_id(os, corpus.id(v));
    const auto& nbrs = index.adjacency[v];
    if (nbrs.size() > 0xffff) throw InvalidInputError("neighbor list too long for index format");
    detail::write_le_u16(os, static_cast<std::uint16_t>(nbrs.size()));
    for (std::uint32_t nb : nbrs) detail::write_id(os, corpus.id(nb));
  }
  if (!os) throw IoError("write failed while saving index");
}

/// Loads an index and resolves every stored doc id against `corpus`. The
/// stored graph kind is not part of the format; callers that care set it
/// after loading.
inline GraphIndex load_index(std::istream& is, const Corpus& corpus, const std::string& path) {
  std::uint32_t magic = 0, version = 0, r = 0, n = 0;
  if (!detail::read_le_u32(is, magic) || !detail::read_le_u32(is, version) ||
      !detail::read_le_u32(is, r) || !detail::read_le_u32(is, n)) {
    throw ParseError(path + ": truncated index header");
  }
  if (magic != kIndexMagic) throw ParseError(path + ": bad magic, not an index file");
  if (version != kIndexVersion) {
    throw ParseError(path + ": unsupported index version " + std::to_string(version));
  }
  if (n != corpus.size()) {
    throw InvalidInputError(path + ": index has " + std::to_string(n) + " vertices but corpus has " +
                            std::to_string(corpus.size()) + " docs");
  }
  auto resolve = [&](const std::string& id) -> std::uint32_t {
    auto idx = corpus.find(id);
    if (!idx) throw InvalidInputError(path + ": index references doc id '" + id +
                                      "' missing from corpus");
    return *idx;
  };
  GraphIndex index;
  index.degree_bound = r;
  index.adjacency.assign(n, {});
  index.default_start = resolve(detail::read_id(is, path));
  std::vector<char> filled(n, 0);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t v = resolve(detail::read_id(is, path));
    if (filled[v]) throw ParseError(path + ": duplicate vertex '" + corpus.id(v) + "'");
    filled[v] = 1;
    std::uint16_t cnt = 0;
    if (!detail::read_le_u16(is, cnt)) throw ParseError(path + ": truncated index file");
    auto& nbrs = index.adjacency[v];
    nbrs.reserve(cnt);
    for (std::uint16_t j = 0; j < cnt; ++j) {
      const std::uint32_t nb = resolve(detail::read_id(is, path));
      if (nb == v) throw ParseError(path + ": self-loop on vertex '" + corpus.id(v) + "'");
      nbrs.push_back(nb);
    }
  }
  return index;
}

inline void save_index_file(const GraphIndex& index, const Corpus& corpus,
                            const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path);
  save_index(index, corpus, os);
}

inline GraphIndex load_index_file(const std::string& path, const Corpus& corpus) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidInputError("cannot open index file: " + path);
  return load_index(is, corpus, path);
}

}  // namespace rgs
