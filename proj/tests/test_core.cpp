#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "rgs/core.hpp"

using namespace rgs;

TEST_CASE("similarity is the inner product") {
  std::vector<float> a{1.0f, 0.0f};
  std::vector<float> b{0.0f, 1.0f};
  CHECK(similarity(a, b) == 0.0);

  std::vector<float> c{1.0f, 2.0f};
  std::vector<float> d{3.0f, 4.0f};
  CHECK(similarity(c, d) == 11.0);
}

TEST_CASE("similarity matches a naive summation oracle on random 64-dim pairs") {
  std::mt19937 rng(123);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  for (int round = 0; round < 50; ++round) {
    std::vector<float> a(64), b(64);
    for (auto& x : a) x = u(rng);
    for (auto& x : b) x = u(rng);
    double expected = 0.0;
    for (int i = 0; i < 64; ++i) expected += static_cast<double>(a[i]) * b[i];
    CHECK(similarity(a, b) == Catch::Approx(expected).margin(1e-6));
  }
}

TEST_CASE("similarity rejects dimension mismatch") {
  std::vector<float> a{1.0f, 2.0f};
  std::vector<float> b{1.0f, 2.0f, 3.0f};
  CHECK_THROWS_AS(similarity(a, b), InvalidInputError);
}

TEST_CASE("similarity is symmetric and scales linearly in either argument") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<float> u(-2.0f, 2.0f);
  // power-of-two scalars keep f32 values exact, so equality is exact
  for (const float s : {2.0f, 0.25f, 8.0f}) {
    for (int round = 0; round < 40; ++round) {
      std::vector<float> a(16), b(16);
      for (auto& x : a) x = u(rng);
      for (auto& x : b) x = u(rng);
      CHECK(similarity(a, b) == similarity(b, a));
      std::vector<float> sa = a;
      for (auto& x : sa) x *= s;
      CHECK(similarity(sa, b) == static_cast<double>(s) * similarity(a, b));
      std::vector<float> sb = b;
      for (auto& x : sb) x *= s;
      CHECK(similarity(a, sb) == static_cast<double>(s) * similarity(a, b));
    }
  }
}

TEST_CASE("corpus enforces unique ids, uniform dims, finite values") {
  Corpus corpus;
  corpus.add("a", {1.0f, 2.0f});
  CHECK_THROWS_AS(corpus.add("a", {3.0f, 4.0f}), InvalidInputError);
  CHECK_THROWS_AS(corpus.add("b", {1.0f, 2.0f, 3.0f}), InvalidInputError);
  CHECK_THROWS_AS(corpus.add("c", {1.0f, std::numeric_limits<float>::infinity()}),
                  InvalidInputError);
  corpus.add("b", {3.0f, 4.0f});
  REQUIRE(corpus.size() == 2);
  CHECK(corpus.id(0) == "a");
  CHECK(corpus.id(1) == "b");
  CHECK(corpus.find("b").value() == 1);
  CHECK_FALSE(corpus.find("zzz").has_value());
}

TEST_CASE("budget ledger charges atomically and never exceeds its budget") {
  std::mt19937 rng(99);
  for (int round = 0; round < 200; ++round) {
    std::uniform_int_distribution<int> budget_dist(1, 30);
    const int budget = budget_dist(rng);
    BudgetLedger ledger(budget);
    std::uniform_int_distribution<int> len_dist(1, 12);
    std::uniform_int_distribution<int> id_dist(0, 60);
    for (int step = 0; step < 40; ++step) {
      std::vector<DocId> window(len_dist(rng));
      for (auto& d : window) d = "doc" + std::to_string(id_dist(rng));
      const std::size_t before = ledger.scanned_count();
      std::size_t fresh = 0;
      for (const auto& d : window) {
        if (!ledger.scanned(d)) ++fresh;
      }
      // duplicates inside one window only count once
      std::unordered_set<DocId> uniq(window.begin(), window.end());
      fresh = 0;
      for (const auto& d : uniq) {
        if (!ledger.scanned(d)) ++fresh;
      }
      const bool ok = ledger.try_charge(window);
      if (ok) {
        CHECK(ledger.scanned_count() == before + fresh);
      } else {
        CHECK(ledger.scanned_count() == before);  // no partial charge
        CHECK(before + fresh > static_cast<std::size_t>(budget));
      }
      CHECK(ledger.scanned_count() <= static_cast<std::size_t>(budget));
    }
  }
}

TEST_CASE("ledger counters track views, calls and tokens") {
  BudgetLedger ledger(5);
  std::vector<DocId> w{"a", "b"};
  REQUIRE(ledger.try_charge(w));
  ledger.add_views(2);
  ledger.add_call();
  ledger.add_tokens(100, 10);
  CHECK(ledger.doc_views() == 2);
  CHECK(ledger.calls() == 1);
  CHECK(ledger.tokens_in() == 100);
  CHECK(ledger.tokens_out() == 10);
  CHECK(ledger.doc_views() >= ledger.scanned_count());
}

TEST_CASE("permutation validation accepts exactly the true permutations") {
  std::vector<std::uint32_t> ok{2, 0, 1};
  CHECK(is_permutation_of(ok, 3));
  std::vector<std::uint32_t> dup{1, 1, 2};
  CHECK_FALSE(is_permutation_of(dup, 3));
  std::vector<std::uint32_t> range{0, 3, 1};
  CHECK_FALSE(is_permutation_of(range, 3));
  std::vector<std::uint32_t> shorter{0, 1};
  CHECK_FALSE(is_permutation_of(shorter, 3));
}

TEST_CASE("qrels grades default to zero and positives exclude zero grades") {
  RelevanceJudgments qrels;
  qrels.set("q1", "d1", 2);
  qrels.set("q1", "d2", 0);
  CHECK(qrels.grade("q1", "d1") == 2);
  CHECK(qrels.grade("q1", "d2") == 0);
  CHECK(qrels.grade("q1", "unknown") == 0);
  CHECK(qrels.grade("q2", "d1") == 0);
  auto pos = qrels.positives("q1");
  REQUIRE(pos.size() == 1);
  CHECK(pos[0].first == "d1");
}
