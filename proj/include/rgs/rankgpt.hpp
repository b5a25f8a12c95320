#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rgs/common.hpp"

namespace rgs {

// Listwise rerank prompt, template id "rankgpt-v1". The same text ships as
// assets/rankgpt_prompt_v1.txt; a test pins the two copies together.
// Placeholders: {num}, {query}, {passages}; "---" separates the system
// instruction from the user message.
inline constexpr const char* kRankGptTemplateId = "rankgpt-v1";
inline constexpr const char* kRankGptTemplateV1 =
    "You are RankGPT, an intelligent assistant that can rank answers based on their relevance "
    "to the query. I will provide you with {num} passages, each indicated by a number "
    "identifier []. Rank the answers based on their relevance to query: {query}.\n"
    "---\n"
    "{passages}\n"
    "Query: {query}. Rank the {num} passages above based on their relevance to the query. The "
    "passages should be listed in descending order using identifiers. The most relevant "
    "passages should be listed first. The output format should be like [1] > [2] ... > [{num}]. "
    "Only response the ranking results, do not say any word or explain.\n";

struct RenderedPrompt {
  std::string system;
  std::string user;

  std::string full() const { return system + "\n" + user; }
};

namespace detail {

inline void replace_all(std::string& s, const std::string& from, const std::string& to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

}  // namespace detail

/// Renders the rank prompt for an ordered window of passages. Passage
/// identifiers are 1-based in request order.
inline RenderedPrompt render_rank_prompt(const std::string& query,
                                         std::span<const std::string> passages,
                                         const std::string& template_text = kRankGptTemplateV1) {
  if (passages.empty()) throw InvalidInputError("render_rank_prompt: no passages");
  const std::string tmpl(template_text);
  const auto sep = tmpl.find("---\n");
  if (sep == std::string::npos) throw InvalidInputError("prompt template: missing section separator");

  std::string numbered;
  for (std::size_t i = 0; i < passages.size(); ++i) {
    numbered += "[" + std::to_string(i + 1) + "] " + passages[i];
    if (i + 1 < passages.size()) numbered += "\n";
  }

  RenderedPrompt out;
  out.system = tmpl.substr(0, sep);
  out.user = tmpl.substr(sep + 4);
  // sections end without a trailing newline; the template stores one per line
  if (!out.system.empty() && out.system.back() == '\n') out.system.pop_back();
  if (!out.user.empty() && out.user.back() == '\n') out.user.pop_back();
  const std::string num = std::to_string(passages.size());
  for (std::string* part : {&out.system, &out.user}) {
    detail::replace_all(*part, "{num}", num);
    detail::replace_all(*part, "{query}", query);
  }
  detail::replace_all(out.user, "{passages}", numbered);
  return out;
}

/// Parses a "[3] > [1] > [2]" style response into a permutation of 0-based
/// input positions. Out-of-range identifiers are ignored, duplicate
/// identifiers keep their first occurrence, and identifiers missing from the
/// response are appended in original order. A response with no usable
/// identifiers therefore yields the identity permutation.
inline std::vector<std::uint32_t> parse_ranking(const std::string& response, std::size_t n) {
  std::vector<std::uint32_t> order;
  std::vector<bool> used(n, false);
  std::size_t i = 0;
  while (i < response.size() && order.size() < n) {
    if (response[i] != '[') {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    std::uint64_t value = 0;
    bool any_digit = false;
    while (j < response.size() && response[j] >= '0' && response[j] <= '9') {
      value = value * 10 + static_cast<std::uint64_t>(response[j] - '0');
      any_digit = true;
      if (value > n) break;  // early out on huge numbers
      ++j;
    }
    if (any_digit && j < response.size() && response[j] == ']' && value >= 1 && value <= n) {
      const auto pos = static_cast<std::uint32_t>(value - 1);
      if (!used[pos]) {
        used[pos] = true;
        order.push_back(pos);
      }
      i = j + 1;
    } else {
      ++i;
    }
  }
  for (std::uint32_t pos = 0; pos < n; ++pos) {
    if (!used[pos]) order.push_back(pos);
  }
  return order;
}

/// Whitespace-run token count, the budget-curve proxy used when an endpoint
/// does not report token usage.
inline std::int64_t approximate_tokens(const std::string& text) {
  std::int64_t count = 0;
  bool in_token = false;
  for (char c : text) {
    const bool ws = (c == ' ' || c == '\t' || c == '\n' || c == '\r');
    if (!ws && !in_token) ++count;
    in_token = !ws;
  }
  return count;
}

}  // namespace rgs
