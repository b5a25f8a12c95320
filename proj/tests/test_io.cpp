#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rgs/io.hpp"
#include "rgs/synthetic.hpp"

using namespace rgs;

namespace {

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "rgs_io_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream os(p, std::ios::binary);
  os << content;
}

}  // namespace

TEST_CASE("jsonl corpus loads with deterministic order") {
  auto path = temp_dir() / "three_docs.jsonl";
  write_file(path,
             R"({"id": "doc-b", "vector": [1.0, 0.0, 0.0, 0.0], "text": "first"})"
             "\n"
             R"({"id": "doc-a", "vector": [0.0, 1.0, 0.0, 0.0]})"
             "\n"
             R"({"id": "doc-c", "vector": [0.0, 0.0, 1.0, 0.5]})"
             "\n");
  Corpus corpus = load_corpus(path.string(), CorpusFormat::jsonl);
  REQUIRE(corpus.size() == 3);
  CHECK(corpus.dim() == 4);
  CHECK(corpus.id(0) == "doc-b");  // insertion order, not sorted
  CHECK(corpus.id(1) == "doc-a");
  CHECK(corpus.text(0) == "first");
  CHECK_FALSE(corpus.has_text(1));
}

TEST_CASE("jsonl corpus load reports the offending line") {
  auto path = temp_dir() / "bad_dim.jsonl";
  write_file(path,
             R"({"id": "a", "vector": [1.0, 0.0, 0.0, 0.0]})"
             "\n"
             R"({"id": "b", "vector": [1.0, 0.0, 0.0, 0.0, 9.0]})"
             "\n");
  try {
    load_corpus(path.string(), CorpusFormat::jsonl);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("2") != std::string::npos);
    CHECK(std::string(e.what()).find("dimension mismatch") != std::string::npos);
  }
}

TEST_CASE("jsonl corpus load rejects duplicates and malformed lines") {
  auto dup = temp_dir() / "dup.jsonl";
  write_file(dup,
             R"({"id": "a", "vector": [1.0]})"
             "\n"
             R"({"id": "a", "vector": [2.0]})"
             "\n");
  CHECK_THROWS_AS(load_corpus(dup.string(), CorpusFormat::jsonl), ParseError);

  auto bad = temp_dir() / "malformed.jsonl";
  write_file(bad, "{\"id\": \"a\", \"vector\": [1.0]}\nnot json at all\n");
  CHECK_THROWS_AS(load_corpus(bad.string(), CorpusFormat::jsonl), ParseError);
}

TEST_CASE("binary corpus round-trips a generated dataset exactly") {
  SyntheticParams params;
  params.n = 1000;
  params.dim = 64;
  params.clusters = 4;
  params.queries = 8;
  params.relevant_per_query = 5;
  params.planted_rank_offset = 50;
  params.seed = 11;
  SyntheticData data = gen_synthetic(params);

  auto path = temp_dir() / "corpus.bin";
  atomic_write_file(path.string(), true, [&](std::ostream& os) {
    save_corpus_binary(data.corpus, os);
  });
  Corpus reloaded = load_corpus(path.string(), CorpusFormat::binary);
  REQUIRE(reloaded.size() == 1000);
  REQUIRE(reloaded.dim() == 64);
  for (std::uint32_t i = 0; i < reloaded.size(); ++i) {
    REQUIRE(reloaded.id(i) == data.corpus.id(i));
    auto a = reloaded.embedding(i);
    auto b = data.corpus.embedding(i);
    REQUIRE(std::equal(a.begin(), a.end(), b.begin(), b.end()));
  }
}

TEST_CASE("binary corpus load rejects truncation and bad magic") {
  Corpus corpus;
  corpus.add("x", {1.0f, 2.0f});
  corpus.add("y", {3.0f, 4.0f});
  std::ostringstream os(std::ios::binary);
  save_corpus_binary(corpus, os);
  const std::string bytes = os.str();

  auto trunc = temp_dir() / "trunc.bin";
  write_file(trunc, bytes.substr(0, bytes.size() - 1));
  CHECK_THROWS_AS(load_corpus(trunc.string(), CorpusFormat::binary), ParseError);

  auto bad = temp_dir() / "badmagic.bin";
  std::string corrupted = bytes;
  corrupted[0] = 'X';
  write_file(bad, corrupted);
  CHECK_THROWS_AS(load_corpus(bad.string(), CorpusFormat::binary), ParseError);
}

TEST_CASE("qrels load keeps corpus labels and drops unknown docs with a count") {
  Corpus corpus;
  corpus.add("d1", {1.0f});
  corpus.add("d2", {2.0f});
  corpus.add("d3", {3.0f});

  auto path = temp_dir() / "qrels.txt";
  write_file(path,
             "q1 0 d1 2\n"
             "q1 0 d2 1\n"
             "q1 0 d3 0\n"
             "q2 0 d1 1\n"
             "q2 0 d3 1\n");
  RelevanceJudgments qrels = load_qrels(path.string(), corpus);
  CHECK(qrels.dropped() == 0);
  CHECK(qrels.grade("q1", "d1") == 2);
  CHECK(qrels.grade("q1", "d3") == 0);  // explicit zero, same as absent
  CHECK(qrels.positives("q1").size() == 2);

  auto path2 = temp_dir() / "qrels_unknown.txt";
  write_file(path2,
             "q1 0 d1 1\n"
             "q1 0 ghost 1\n");
  RelevanceJudgments qrels2 = load_qrels(path2.string(), corpus);
  CHECK(qrels2.dropped() == 1);
  CHECK(qrels2.grade("q1", "ghost") == 0);
}

TEST_CASE("qrels load reports unparseable lines") {
  Corpus corpus;
  corpus.add("d1", {1.0f});
  auto path = temp_dir() / "qrels_bad.txt";
  write_file(path, "q1 0 d1 1\nq2 0 d1\n");
  try {
    load_qrels(path.string(), corpus);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
}

TEST_CASE("normalization at load is optional and rescales rows to unit norm") {
  auto path = temp_dir() / "norm.jsonl";
  write_file(path, R"({"id": "a", "vector": [3.0, 4.0]})"
                   "\n"
                   R"({"id": "b", "vector": [0.0, 2.0]})"
                   "\n");
  Corpus raw = load_corpus(path.string(), CorpusFormat::jsonl);
  CHECK(raw.embedding(0)[0] == 3.0f);
  LoadOptions opts;
  opts.normalize = true;
  Corpus unit = load_corpus(path.string(), CorpusFormat::jsonl, opts);
  CHECK(unit.embedding(0)[0] == Catch::Approx(0.6).margin(1e-6));
  CHECK(unit.embedding(0)[1] == Catch::Approx(0.8).margin(1e-6));
  CHECK(similarity(unit.embedding(1), unit.embedding(1)) == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("atomic write leaves no partial file when the writer throws") {
  auto path = temp_dir() / "never_created.bin";
  std::filesystem::remove(path);
  CHECK_THROWS(atomic_write_file(path.string(), true, [](std::ostream&) {
    throw IoError("simulated failure");
  }));
  CHECK_FALSE(std::filesystem::exists(path));
  CHECK_FALSE(std::filesystem::exists(path.string() + ".tmp"));
}
