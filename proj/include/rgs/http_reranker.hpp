#pragma once

#include <chrono>
#include <cstdlib>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "httplib.h"
#include "rgs/core.hpp"
#include "rgs/rankgpt.hpp"
#include "rgs/reranker.hpp"

namespace rgs {

struct HttpRerankerConfig {
  std::string endpoint;  // e.g. http://localhost:8089/v1/chat/completions
  std::string model = "gemini-2.0-flash";
  std::string template_id = kRankGptTemplateId;
  int max_retries = 2;          // transport retries on top of the first attempt
  double timeout_seconds = 30;
  double rate_limit_rps = 0;    // 0 = unlimited
  std::string response_path = "choices.0.message.content";
  std::string usage_in_path = "usage.prompt_tokens";
  std::string usage_out_path = "usage.completion_tokens";
  std::string api_key_env = "RGS_API_KEY";  // key read from env, never a flag
  int max_window = 10;          // the prompt enumerates [1]..[10]

  void validate() const {
    if (endpoint.empty()) throw InvalidInputError("http reranker: endpoint is required");
    if (max_retries < 0) throw InvalidInputError("http reranker: retries must be >= 0");
    if (timeout_seconds <= 0) throw InvalidInputError("http reranker: timeout must be positive");
    if (rate_limit_rps < 0) throw InvalidInputError("http reranker: rate limit must be >= 0");
    if (max_window < 1) throw InvalidInputError("http reranker: max window must be >= 1");
    if (template_id != kRankGptTemplateId) {
      throw InvalidInputError("http reranker: unknown prompt template '" + template_id + "'");
    }
  }
};

namespace detail {

// Dotted-path lookup into a JSON document; numeric segments index arrays.
inline std::optional<nlohmann::json> json_path_get(const nlohmann::json& root,
                                                   const std::string& path) {
  const nlohmann::json* cur = &root;
  std::size_t pos = 0;
  while (pos <= path.size()) {
    const std::size_t dot = path.find('.', pos);
    const std::string seg = path.substr(pos, dot == std::string::npos ? dot : dot - pos);
    if (seg.empty()) return std::nullopt;
    if (cur->is_array()) {
      if (seg.find_first_not_of("0123456789") != std::string::npos) return std::nullopt;
      const std::size_t idx = std::stoul(seg);
      if (idx >= cur->size()) return std::nullopt;
      cur = &(*cur)[idx];
    } else if (cur->is_object()) {
      auto it = cur->find(seg);
      if (it == cur->end()) return std::nullopt;
      cur = &*it;
    } else {
      return std::nullopt;
    }
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  return std::optional<nlohmann::json>(std::in_place, *cur);
}

struct SplitUrl {
  std::string base;  // scheme://host[:port]
  std::string path;  // /path, "/" when absent
};

inline SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw InvalidInputError("http reranker: endpoint must include a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace detail

/// Listwise reranker backed by an OpenAI-style chat endpoint speaking the
/// rank prompt protocol. Transport failures are retried up to max_retries;
/// malformed ranking text is NOT retried — the lenient parser falls back to
/// the original order so budget accounting stays deterministic.
class HttpLlmReranker : public RerankerBackend {
 public:
  HttpLlmReranker(const Corpus& corpus, HttpRerankerConfig config)
      : corpus_(corpus), config_(std::move(config)) {
    config_.validate();
    const auto url = detail::split_url(config_.endpoint);
    path_ = url.path;
    client_ = std::make_unique<httplib::Client>(url.base);
    const auto timeout = std::chrono::milliseconds(
        static_cast<long>(config_.timeout_seconds * 1000));
    client_->set_connection_timeout(timeout);
    client_->set_read_timeout(timeout);
    client_->set_write_timeout(timeout);
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key != nullptr && *key) {
      client_->set_default_headers({{"Authorization", std::string("Bearer ") + key}});
    }
  }

  std::string name() const override { return "http_llm"; }

  RerankerWindowResponse rerank(const RerankerWindowRequest& request) override {
    RerankerWindowResponse resp;
    const std::size_t n = request.candidates.size();
    if (n > static_cast<std::size_t>(config_.max_window)) {
      resp.ok = false;
      resp.error = "window larger than prompt supports (" + std::to_string(n) + " > " +
                   std::to_string(config_.max_window) + ")";
      return resp;
    }
    std::vector<std::string> passages;
    passages.reserve(n);
    for (std::uint32_t d : request.candidates) {
      if (!corpus_.has_text(d)) {
        resp.ok = false;
        resp.error = "doc '" + corpus_.id(d) + "' has no text payload";
        return resp;
      }
      passages.push_back(corpus_.text(d));
    }
    const RenderedPrompt prompt = render_rank_prompt(request.query_text, passages);

    nlohmann::json body;
    body["model"] = config_.model;
    body["system"] = prompt.system;
    body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt.user}}});

    std::string raw;
    if (!post_with_retries(body.dump(), raw, resp.error)) {
      resp.ok = false;
      return resp;
    }
    nlohmann::json parsed = nlohmann::json::parse(raw, nullptr, false);
    if (parsed.is_discarded()) {
      resp.ok = false;
      resp.error = "response is not valid JSON";
      return resp;
    }
    auto content = detail::json_path_get(parsed, config_.response_path);
    if (!content || !content->is_string()) {
      resp.ok = false;
      resp.error = "response path '" + config_.response_path + "' missing or not a string";
      return resp;
    }
    const std::string text = content->get<std::string>();
    resp.order = parse_ranking(text, n);

    auto usage_in = detail::json_path_get(parsed, config_.usage_in_path);
    auto usage_out = detail::json_path_get(parsed, config_.usage_out_path);
    if (usage_in && usage_in->is_number() && usage_out && usage_out->is_number()) {
      resp.tokens_in = usage_in->get<std::int64_t>();
      resp.tokens_out = usage_out->get<std::int64_t>();
    } else {
      resp.tokens_in = approximate_tokens(prompt.full());
      resp.tokens_out = approximate_tokens(text);
    }
    return resp;
  }

 private:
  bool post_with_retries(const std::string& body, std::string& out, std::string& error) {
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      throttle();
      auto res = client_->Post(path_, body, "application/json");
      if (!res) {
        error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status >= 500) {
        error = "server error: HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) {
        error = "HTTP " + std::to_string(res->status);
        return false;  // client errors are not retried
      }
      out = res->body;
      return true;
    }
    return false;
  }

  void throttle() {
    if (config_.rate_limit_rps <= 0) return;
    const auto interval =
        std::chrono::duration<double>(1.0 / config_.rate_limit_rps);
    std::unique_lock<std::mutex> lock(mu_);
    const auto now = std::chrono::steady_clock::now();
    const auto earliest = last_request_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(interval);
    if (now < earliest) {
      std::this_thread::sleep_until(earliest);
      last_request_ = earliest;
    } else {
      last_request_ = now;
    }
  }

  const Corpus& corpus_;
  HttpRerankerConfig config_;
  std::string path_;
  std::unique_ptr<httplib::Client> client_;
  std::mutex mu_;
  std::chrono::steady_clock::time_point last_request_{};
};

}  // namespace rgs
