#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rgs/core.hpp"

namespace rgs {

inline constexpr std::uint32_t kEmbeddingMagic = 0x52475331;  // "RGS1" LE

enum class CorpusFormat { binary, jsonl };

/// Guess the format from the file extension: .jsonl/.json -> jsonl,
/// everything else -> binary.
inline CorpusFormat guess_format(const std::string& path) {
  auto ext = std::filesystem::path(path).extension().string();
  if (ext == ".jsonl" || ext == ".json") return CorpusFormat::jsonl;
  return CorpusFormat::binary;
}

struct LoadOptions {
  bool normalize = false;      // L2-normalize embeddings at ingestion
  bool require_text = false;   // reject records without a text payload
};

namespace detail {

struct RawRecord {
  std::string id;
  std::vector<float> values;
  std::string text;
};

template <typename Sink>
void for_each_jsonl_record(const std::string& path, Sink&& sink) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("cannot open file: " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": malformed JSON record");
    }
    RawRecord rec;
    try {
      rec.id = j.at("id").get<std::string>();
      rec.values = j.at("vector").get<std::vector<float>>();
      if (j.contains("text")) rec.text = j["text"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    sink(std::move(rec), lineno);
  }
}

template <typename Sink>
void for_each_binary_record(const std::string& path, Sink&& sink) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInputError("cannot open file: " + path);
  std::uint32_t magic = 0, dim = 0;
  std::uint64_t count = 0;
  if (!read_le_u32(in, magic) || !read_le_u32(in, dim) || !read_le_u64(in, count)) {
    throw ParseError(path + ": truncated header");
  }
  if (magic != kEmbeddingMagic) throw ParseError(path + ": bad magic, not an embedding file");
  if (dim == 0) throw ParseError(path + ": zero dimension in header");
  for (std::uint64_t i = 0; i < count; ++i) {
    std::uint16_t id_len = 0;
    if (!read_le_u16(in, id_len)) {
      throw ParseError(path + ": truncated record " + std::to_string(i));
    }
    RawRecord rec;
    rec.id.resize(id_len);
    if (id_len > 0 && !read_bytes(in, rec.id.data(), id_len)) {
      throw ParseError(path + ": truncated id in record " + std::to_string(i));
    }
    rec.values.resize(dim);
    for (std::uint32_t d = 0; d < dim; ++d) {
      if (!read_le_f32(in, rec.values[d])) {
        throw ParseError(path + ": truncated vector in record " + std::to_string(i));
      }
    }
    sink(std::move(rec), static_cast<std::size_t>(i));
  }
}

template <typename Sink>
void for_each_record(const std::string& path, CorpusFormat fmt, Sink&& sink) {
  if (fmt == CorpusFormat::jsonl) {
    for_each_jsonl_record(path, sink);
  } else {
    for_each_binary_record(path, sink);
  }
}

}  // namespace detail

inline Corpus load_corpus(const std::string& path, CorpusFormat fmt,
                          const LoadOptions& opts = {}) {
  Corpus corpus;
  detail::for_each_record(path, fmt, [&](detail::RawRecord rec, std::size_t where) {
    if (opts.require_text && rec.text.empty()) {
      throw ParseError(path + ": record " + std::to_string(where) + " ('" + rec.id +
                       "') has no text payload");
    }
    try {
      corpus.add(std::move(rec.id), std::move(rec.values), std::move(rec.text));
    } catch (const InvalidInputError& e) {
      throw ParseError(path + ": record " + std::to_string(where) + ": " + e.what());
    }
  });
  if (opts.normalize) corpus.normalize_all();
  return corpus;
}

inline Corpus load_corpus(const std::string& path, const LoadOptions& opts = {}) {
  return load_corpus(path, guess_format(path), opts);
}

inline std::vector<QueryRecord> load_queries(const std::string& path, CorpusFormat fmt,
                                             const LoadOptions& opts = {}) {
  std::vector<QueryRecord> out;
  std::unordered_set<std::string> seen;
  detail::for_each_record(path, fmt, [&](detail::RawRecord rec, std::size_t where) {
    if (!seen.insert(rec.id).second) {
      throw ParseError(path + ": record " + std::to_string(where) + ": duplicate qid '" +
                       rec.id + "'");
    }
    QueryRecord q{std::move(rec.id), Embedding{std::move(rec.values)}, std::move(rec.text)};
    q.embedding.validate();
    if (opts.normalize) q.embedding.normalize();
    out.push_back(std::move(q));
  });
  return out;
}

inline std::vector<QueryRecord> load_queries(const std::string& path,
                                             const LoadOptions& opts = {}) {
  return load_queries(path, guess_format(path), opts);
}

inline void save_corpus_binary(const Corpus& corpus, std::ostream& os) {
  detail::write_le_u32(os, kEmbeddingMagic);
  detail::write_le_u32(os, corpus.dim());
  detail::write_le_u64(os, corpus.size());
  for (std::uint32_t i = 0; i < corpus.size(); ++i) {
    const DocId& id = corpus.id(i);
    if (id.size() > 0xffff) throw InvalidInputError("doc id too long for binary format: " + id);
    detail::write_le_u16(os, static_cast<std::uint16_t>(id.size()));
    os.write(id.data(), static_cast<std::streamsize>(id.size()));
    for (float v : corpus.embedding(i)) detail::write_le_f32(os, v);
  }
  if (!os) throw IoError("write failed while saving corpus");
}

inline void save_corpus_jsonl(const Corpus& corpus, std::ostream& os) {
  for (std::uint32_t i = 0; i < corpus.size(); ++i) {
    nlohmann::json j;
    j["id"] = corpus.id(i);
    auto span = corpus.embedding(i);
    j["vector"] = std::vector<float>(span.begin(), span.end());
    if (corpus.has_text(i)) j["text"] = corpus.text(i);
    os << j.dump() << "\n";
  }
  if (!os) throw IoError("write failed while saving corpus");
}

/// Writes through a temp file and renames, so failures leave no partial file.
template <typename WriteFn>
void atomic_write_file(const std::string& path, bool binary, WriteFn&& fn) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, binary ? std::ios::binary : std::ios::out);
    if (!os) throw IoError("cannot open for writing: " + tmp);
    try {
      fn(os);
    } catch (...) {
      os.close();
      std::remove(tmp.c_str());
      throw;
    }
    os.flush();
    if (!os) {
      std::remove(tmp.c_str());
      throw IoError("write failed: " + tmp);
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::remove(tmp.c_str());
    throw IoError("rename failed for " + path + ": " + ec.message());
  }
}

/// TREC-style qrels: whitespace-separated "qid 0 docid grade" lines.
/// Labels referencing docs missing from the corpus are dropped with a count.
inline RelevanceJudgments load_qrels(const std::string& path, const Corpus& corpus) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("cannot open qrels file: " + path);
  RelevanceJudgments qrels;
  std::string line;
  std::size_t lineno = 0;
  std::size_t dropped = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string qid, iter, docid;
    long grade = 0;
    if (!(ls >> qid >> iter >> docid >> grade)) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": unparseable qrels line");
    }
    if (grade < 0) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": negative grade");
    }
    if (!corpus.find(docid)) {
      ++dropped;
      continue;
    }
    qrels.set(qid, docid, static_cast<int>(grade));
  }
  qrels.note_dropped(dropped);
  return qrels;
}

inline void save_qrels(const RelevanceJudgments& qrels, const std::vector<std::string>& qids,
                       std::ostream& os) {
  for (const auto& qid : qids) {
    for (const auto& [doc, g] : qrels.positives(qid)) {
      os << qid << " 0 " << doc << " " << g << "\n";
    }
  }
  if (!os) throw IoError("write failed while saving qrels");
}

}  // namespace rgs
