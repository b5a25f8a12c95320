#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "rgs/graph.hpp"

using namespace rgs;

namespace {

Corpus random_corpus(std::size_t n, std::size_t dim, std::uint32_t seed, bool normalize = true) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  Corpus corpus;
  char buf[32];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof(buf), "v%05zu", i);
    std::vector<float> v(dim);
    for (auto& x : v) x = u(rng);
    corpus.add(buf, std::move(v));
  }
  if (normalize) corpus.normalize_all();
  return corpus;
}

// Brute-force top-k by inner product, ties by doc id: the recall oracle.
std::vector<std::uint32_t> exhaustive_top_k(const Corpus& corpus, std::span<const float> target,
                                            std::size_t k) {
  std::vector<std::pair<double, std::uint32_t>> scored(corpus.size());
  for (std::uint32_t d = 0; d < corpus.size(); ++d) {
    scored[d] = {similarity(corpus.embedding(d), target), d};
  }
  std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return corpus.id(a.second) < corpus.id(b.second);
  });
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < std::min(k, scored.size()); ++i) out.push_back(scored[i].second);
  return out;
}

// Independent step-by-step reimplementation of the pruning rule, kept
// deliberately naive: repeatedly take the closest surviving candidate and
// delete everything it dominates under the alpha slack.
std::vector<std::uint32_t> prune_oracle(std::uint32_t p, std::vector<std::uint32_t> cands,
                                        double alpha, std::uint32_t r, const Corpus& corpus) {
  auto dist = [&](std::uint32_t a, std::uint32_t b) {
    double acc = 0.0;
    auto ea = corpus.embedding(a), eb = corpus.embedding(b);
    for (std::size_t i = 0; i < ea.size(); ++i) {
      acc += (static_cast<double>(ea[i]) - eb[i]) * (static_cast<double>(ea[i]) - eb[i]);
    }
    return std::sqrt(acc);
  };
  std::vector<std::uint32_t> kept;
  std::vector<std::uint32_t> pool;
  for (auto c : cands) {
    if (c != p && std::find(pool.begin(), pool.end(), c) == pool.end()) pool.push_back(c);
  }
  while (!pool.empty() && kept.size() < r) {
    std::uint32_t best = pool[0];
    for (auto c : pool) {
      const double dc = dist(p, c), db = dist(p, best);
      if (dc < db || (dc == db && corpus.id(c) < corpus.id(best))) best = c;
    }
    kept.push_back(best);
    std::vector<std::uint32_t> survivors;
    for (auto c : pool) {
      if (c == best) continue;
      if (alpha * dist(best, c) <= dist(p, c)) continue;
      survivors.push_back(c);
    }
    pool = std::move(survivors);
  }
  return kept;
}

}  // namespace

TEST_CASE("beam search finds an exact-match doc in a fully connected graph") {
  Corpus corpus;
  corpus.add("a", {1.0f, 0.0f});
  corpus.add("b", {0.8f, 0.6f});
  corpus.add("c", {0.0f, 1.0f});
  corpus.add("d", {-1.0f, 0.0f});
  corpus.add("e", {0.6f, -0.8f});
  GraphIndex index;
  index.kind = GraphKind::knn;
  index.degree_bound = 4;
  index.default_start = 0;
  index.adjacency.resize(5);
  for (std::uint32_t v = 0; v < 5; ++v) {
    for (std::uint32_t u = 0; u < 5; ++u) {
      if (u != v) index.adjacency[v].push_back(u);
    }
  }
  const std::uint32_t start[1] = {3};
  auto res = greedy_beam_search(index, corpus, start, corpus.embedding(1), 5, 3);
  REQUIRE_FALSE(res.top.empty());
  CHECK(res.top[0] == 1);
  CHECK(res.visited.size() == 5);

  SECTION("degenerate beam L=1 starting at the true nearest neighbor") {
    const std::uint32_t nn_start[1] = {1};
    auto one = greedy_beam_search(index, corpus, nn_start, corpus.embedding(1), 1, 1);
    REQUIRE(one.top.size() == 1);
    CHECK(one.top[0] == 1);
  }

  SECTION("empty start set is invalid") {
    CHECK_THROWS_AS(greedy_beam_search(index, corpus, {}, corpus.embedding(1), 5, 3),
                    InvalidInputError);
  }
}

TEST_CASE("beam search is deterministic") {
  Corpus corpus = random_corpus(300, 16, 5);
  BuildParams params;
  params.r = 12;
  params.l_build = 24;
  params.seed = 3;
  GraphIndex index = build_diskann(corpus, params);
  const std::uint32_t start[1] = {index.default_start};
  auto q = random_corpus(1, 16, 77);
  auto r1 = greedy_beam_search(index, corpus, start, q.embedding(0), 32, 10);
  auto r2 = greedy_beam_search(index, corpus, start, q.embedding(0), 32, 10);
  CHECK(r1.top == r2.top);
  CHECK(r1.visited == r2.visited);
}

TEST_CASE("robust prune keeps a single candidate and collapses duplicates") {
  Corpus corpus;
  corpus.add("p", {0.0f, 0.0f});
  corpus.add("c1", {1.0f, 0.0f});
  corpus.add("c2", {1.0f, 0.0f});
  corpus.add("c3", {1.0f, 0.0f});
  corpus.add("c4", {1.0f, 0.0f});

  SECTION("one candidate is kept") {
    std::vector<std::uint32_t> cands{1};
    auto kept = robust_prune(0, cands, 1.2, 4, corpus);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0] == 1);
  }

  SECTION("identical candidates dominate each other, exactly one survives") {
    std::vector<std::uint32_t> cands{1, 2, 3, 4};
    auto kept = robust_prune(0, cands, 1.2, 4, corpus);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0] == 1);  // id tie-break keeps c1
  }

  SECTION("empty candidates give an empty list") {
    CHECK(robust_prune(0, {}, 1.2, 4, corpus).empty());
  }
}

TEST_CASE("robust prune matches the step-by-step oracle on random candidate sets") {
  Corpus corpus = random_corpus(60, 8, 21);
  std::mt19937 rng(42);
  for (int round = 0; round < 25; ++round) {
    std::uniform_int_distribution<std::uint32_t> pick(0, 59);
    const std::uint32_t p = pick(rng);
    std::vector<std::uint32_t> cands;
    for (int i = 0; i < 50; ++i) {
      const std::uint32_t c = pick(rng);
      if (c != p) cands.push_back(c);
    }
    auto engine = robust_prune(p, cands, 1.2, 8, corpus);
    auto oracle = prune_oracle(p, cands, 1.2, 8, corpus);
    CHECK(engine == oracle);
    CHECK(engine.size() <= 8);
    REQUIRE_FALSE(engine.empty());
    // the nearest candidate is always retained
    CHECK(engine[0] == oracle[0]);
    // output is a subset of the input
    for (auto v : engine) {
      CHECK(std::find(cands.begin(), cands.end(), v) != cands.end());
    }
  }
}

TEST_CASE("diskann build on two docs links them both ways") {
  Corpus corpus;
  corpus.add("a", {1.0f, 0.0f});
  corpus.add("b", {0.0f, 1.0f});
  BuildParams params;
  params.r = 2;
  params.l_build = 4;
  GraphIndex index = build_diskann(corpus, params);
  REQUIRE(index.size() == 2);
  CHECK(index.adjacency[0] == std::vector<std::uint32_t>{1});
  CHECK(index.adjacency[1] == std::vector<std::uint32_t>{0});
}

TEST_CASE("diskann build rejects tiny corpora") {
  Corpus corpus;
  corpus.add("a", {1.0f});
  CHECK_THROWS_AS(build_diskann(corpus, BuildParams{}), InvalidInputError);
}

TEST_CASE("diskann build respects the degree bound and reaches almost everything") {
  Corpus corpus = random_corpus(1500, 24, 1);
  BuildParams params;
  params.r = 24;
  params.l_build = 48;
  params.seed = 9;
  GraphIndex index = build_diskann(corpus, params);
  GraphStats stats = compute_graph_stats(index);
  CHECK(stats.max_degree <= 24);
  CHECK(stats.reachable_fraction >= 0.99);

  SECTION("same seed rebuild is identical") {
    GraphIndex again = build_diskann(corpus, params);
    CHECK(index == again);
  }
}

TEST_CASE("degree bound holds over random build parameters") {
  std::mt19937 rng(31);
  for (int round = 0; round < 6; ++round) {
    std::uniform_int_distribution<std::size_t> n_dist(40, 160);
    std::uniform_int_distribution<std::uint32_t> r_dist(2, 24);
    Corpus corpus = random_corpus(n_dist(rng), 8, 100 + round);
    BuildParams params;
    params.r = r_dist(rng);
    params.l_build = params.r * 2;
    params.alpha = 1.0 + 0.4 * (round % 3);
    params.seed = round;
    params.single_pass = round % 2 == 0;
    GraphIndex index = build_diskann(corpus, params);
    for (const auto& nbrs : index.adjacency) {
      CHECK(nbrs.size() <= params.r);
    }
  }
}

TEST_CASE("recall floor on 1000 random vectors") {
  Corpus corpus = random_corpus(1000, 32, 1234);
  BuildParams params;
  params.r = 32;
  params.l_build = 64;
  params.seed = 5;
  GraphIndex index = build_diskann(corpus, params);
  Corpus queries = random_corpus(100, 32, 4321);
  const std::uint32_t start[1] = {index.default_start};
  double recall_sum = 0.0;
  for (std::uint32_t q = 0; q < queries.size(); ++q) {
    auto truth = exhaustive_top_k(corpus, queries.embedding(q), 10);
    auto got = greedy_beam_search(index, corpus, start, queries.embedding(q), 64, 10).top;
    std::unordered_set<std::uint32_t> truth_set(truth.begin(), truth.end());
    std::size_t hit = 0;
    for (auto d : got) {
      if (truth_set.contains(d)) ++hit;
    }
    recall_sum += static_cast<double>(hit) / 10.0;
  }
  CHECK(recall_sum / queries.size() >= 0.90);
}

TEST_CASE("knn graph picks metrically nearest neighbors") {
  SECTION("three collinear points") {
    Corpus corpus;
    corpus.add("left", {0.0f});
    corpus.add("mid", {1.0f});
    corpus.add("right", {3.0f});
    GraphIndex index = build_knn(corpus, 1);
    CHECK(index.adjacency[1] == std::vector<std::uint32_t>{0});  // nearer endpoint
  }

  SECTION("unit square, k=2 gives edge-adjacent corners") {
    Corpus corpus;
    corpus.add("c00", {0.0f, 0.0f});
    corpus.add("c10", {1.0f, 0.0f});
    corpus.add("c11", {1.0f, 1.0f});
    corpus.add("c01", {0.0f, 1.0f});
    GraphIndex index = build_knn(corpus, 2);
    for (std::uint32_t v = 0; v < 4; ++v) {
      REQUIRE(index.adjacency[v].size() == 2);
      for (auto nb : index.adjacency[v]) {
        // diagonal corners differ in both coordinates
        const bool diagonal = corpus.embedding(v)[0] != corpus.embedding(nb)[0] &&
                              corpus.embedding(v)[1] != corpus.embedding(nb)[1];
        CHECK_FALSE(diagonal);
      }
    }
  }

  SECTION("matches brute force on 500 random docs") {
    Corpus corpus = random_corpus(500, 12, 99);
    GraphIndex index = build_knn(corpus, 10);
    std::mt19937 rng(1);
    std::uniform_int_distribution<std::uint32_t> pick(0, 499);
    for (int i = 0; i < 20; ++i) {
      const std::uint32_t v = pick(rng);
      std::vector<std::pair<double, std::uint32_t>> dists;
      for (std::uint32_t u = 0; u < 500; ++u) {
        if (u != v) dists.emplace_back(l2_distance(corpus.embedding(v), corpus.embedding(u)), u);
      }
      std::sort(dists.begin(), dists.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return corpus.id(a.second) < corpus.id(b.second);
      });
      std::vector<std::uint32_t> expect;
      for (int j = 0; j < 10; ++j) expect.push_back(dists[j].second);
      CHECK(index.adjacency[v] == expect);
    }
  }

  SECTION("k >= n is invalid") {
    Corpus corpus;
    corpus.add("a", {0.0f});
    corpus.add("b", {1.0f});
    CHECK_THROWS_AS(build_knn(corpus, 2), InvalidInputError);
  }
}

TEST_CASE("random graph has exact out-degree and is seed-deterministic") {
  SECTION("n=3 degree=2 is complete") {
    Corpus corpus;
    corpus.add("a", {0.0f});
    corpus.add("b", {1.0f});
    corpus.add("c", {2.0f});
    GraphIndex index = build_random(corpus, 2, 8);
    for (std::uint32_t v = 0; v < 3; ++v) {
      std::vector<std::uint32_t> sorted = index.adjacency[v];
      std::sort(sorted.begin(), sorted.end());
      std::vector<std::uint32_t> expect;
      for (std::uint32_t u = 0; u < 3; ++u) {
        if (u != v) expect.push_back(u);
      }
      CHECK(sorted == expect);
    }
  }

  SECTION("degree histogram is exactly {16: n} and rebuild matches") {
    Corpus corpus = random_corpus(1000, 4, 3);
    GraphIndex index = build_random(corpus, 16, 77);
    for (std::uint32_t v = 0; v < index.size(); ++v) {
      REQUIRE(index.adjacency[v].size() == 16);
      std::unordered_set<std::uint32_t> uniq(index.adjacency[v].begin(),
                                             index.adjacency[v].end());
      CHECK(uniq.size() == 16);
      CHECK_FALSE(uniq.contains(v));
    }
    GraphIndex again = build_random(corpus, 16, 77);
    CHECK(index == again);
    GraphIndex other = build_random(corpus, 16, 78);
    CHECK_FALSE(index == other);
  }

  SECTION("degree >= n is invalid") {
    Corpus corpus;
    corpus.add("a", {0.0f});
    corpus.add("b", {1.0f});
    CHECK_THROWS_AS(build_random(corpus, 2, 1), InvalidInputError);
  }
}

TEST_CASE("index save/load round-trips and validates") {
  Corpus corpus = random_corpus(80, 6, 17);
  BuildParams params;
  params.r = 8;
  params.l_build = 16;
  GraphIndex index = build_diskann(corpus, params);

  std::ostringstream os(std::ios::binary);
  save_index(index, corpus, os);
  const std::string bytes = os.str();

  SECTION("round trip is structurally identical") {
    std::istringstream is(bytes, std::ios::binary);
    GraphIndex loaded = load_index(is, corpus, "mem");
    CHECK(loaded == index);
  }

  SECTION("truncated file is a parse error, not a crash") {
    std::istringstream is(bytes.substr(0, bytes.size() - 1), std::ios::binary);
    CHECK_THROWS_AS(load_index(is, corpus, "mem"), ParseError);
  }

  SECTION("bad version is rejected") {
    std::string mut = bytes;
    mut[4] = 9;  // version field
    std::istringstream is(mut, std::ios::binary);
    CHECK_THROWS_AS(load_index(is, corpus, "mem"), ParseError);
  }

  SECTION("loading against a corpus with missing ids names the first missing id") {
    // same corpus but with the first doc renamed
    Corpus renamed;
    for (std::uint32_t i = 0; i < corpus.size(); ++i) {
      auto e = corpus.embedding(i);
      renamed.add(i == 0 ? "renamed" : corpus.id(i), std::vector<float>(e.begin(), e.end()));
    }
    std::istringstream is(bytes, std::ios::binary);
    try {
      load_index(is, renamed, "mem");
      FAIL("expected InvalidInputError");
    } catch (const InvalidInputError& e) {
      CHECK(std::string(e.what()).find("v00000") != std::string::npos);
    }
  }
}
