// Copyright 2026 The TreeRanker Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

/**
 * Remote inference protocol over HTTP.
 *
 *   POST /v1/next
 *     { "context_tokens": [ids] | "context_text": str,
 *       "allowed": [ids] | null, "query": [ids] | null, "top_k": int? }
 *   200 { "probs": {"<id>": p, ...}, "argmax": id }
 *   413 { "error": "context_too_long", "message": str }
 *   400 { "error": "bad_request", "message": str }
 *
 * With "allowed" the probabilities are renormalized over the allowed set and
 * the argmax is taken inside it. Without it, "probs" holds the queried ids,
 * the argmax and the top_k most probable tokens; when neither "query" nor
 * "top_k" is given the full distribution is returned.
 *
 *   POST /v1/tokenize  { "text": str }  ->  { "tokens": [ids] }
 *
 * RemoteBackend is the client; BackendServer exposes any ModelBackend with
 * this protocol. A RemoteBackend is a single-owner session.
 */

#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "treeranker/backend.hpp"
#include "treeranker/errors.hpp"
#include "treeranker/vocabulary.hpp"

namespace treeranker {

inline nlohmann::json request_to_json(const NextTokenRequest& request) {
  nlohmann::json body;
  body["context_tokens"] = std::vector<TokenId>(request.context.begin(), request.context.end());
  if (request.mask != nullptr) {
    auto allowed = request.mask->tokens();
    body["allowed"] = std::vector<TokenId>(allowed.begin(), allowed.end());
  } else {
    body["allowed"] = nullptr;
  }
  if (!request.query.empty()) {
    body["query"] = std::vector<TokenId>(request.query.begin(), request.query.end());
  } else {
    body["query"] = nullptr;
  }
  if (request.top_k > 0) body["top_k"] = request.top_k;
  return body;
}

inline nlohmann::json distribution_to_json(const Distribution& dist) {
  nlohmann::json probs = nlohmann::json::object();
  for (const auto& [token, p] : dist.probs) probs[std::to_string(token)] = p;
  return {{"probs", probs}, {"argmax", dist.argmax}};
}

inline Distribution distribution_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("probs") || !doc.contains("argmax")) {
    throw BackendError("malformed backend response: needs probs and argmax");
  }
  Distribution dist;
  try {
    for (const auto& [key, value] : doc.at("probs").items()) {
      dist.probs.push_back({static_cast<TokenId>(std::stol(key)), value.get<double>()});
    }
    dist.argmax = doc.at("argmax").get<TokenId>();
  } catch (const std::exception& e) {
    throw BackendError(std::string("malformed backend response: ") + e.what());
  }
  std::sort(dist.probs.begin(), dist.probs.end(),
            [](const TokenProb& a, const TokenProb& b) { return a.token < b.token; });
  return dist;
}

// Trims an unconstrained full distribution to what the protocol promises:
// queried ids, the argmax and the top_k entries.
inline Distribution restrict_response(const Distribution& full, std::span<const TokenId> query,
                                      std::size_t top_k) {
  if (query.empty() && top_k == 0) return full;
  std::vector<TokenId> keep(query.begin(), query.end());
  keep.push_back(full.argmax);
  for (const auto& p : top_tokens(full, top_k)) keep.push_back(p.token);
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  Distribution out;
  out.argmax = full.argmax;
  for (TokenId t : keep) out.probs.push_back({t, full.prob(t)});
  return out;
}

class RemoteBackend final : public ModelBackend {
 public:
  // `endpoint` is scheme://host:port, e.g. http://127.0.0.1:8080.
  explicit RemoteBackend(std::string endpoint,
                         std::chrono::milliseconds timeout = std::chrono::seconds(30))
      : endpoint_(std::move(endpoint)), client_(endpoint_) {
    if (!client_.is_valid()) throw ConfigError("invalid remote endpoint: " + endpoint_);
    client_.set_connection_timeout(timeout);
    client_.set_read_timeout(timeout);
    client_.set_write_timeout(timeout);
  }

  const std::string& endpoint() const { return endpoint_; }

  std::optional<std::vector<TokenId>> tokenize(std::string_view text) override {
    const nlohmann::json body = {{"text", std::string(text)}};
    auto res = client_.Post("/v1/tokenize", body.dump(), "application/json");
    if (!res) throw BackendUnavailable(transport_error(res.error()));
    if (res->status == 404) return std::nullopt;
    if (res->status != 200) throw BackendError("tokenize failed with HTTP " + std::to_string(res->status));
    try {
      return nlohmann::json::parse(res->body).at("tokens").get<std::vector<TokenId>>();
    } catch (const std::exception& e) {
      throw BackendError(std::string("malformed tokenize response: ") + e.what());
    }
  }

 protected:
  Distribution compute(const NextTokenRequest& request) override {
    auto res = client_.Post("/v1/next", request_to_json(request).dump(), "application/json");
    if (!res) throw BackendUnavailable(transport_error(res.error()));
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception&) {
      throw BackendError("backend returned non-JSON body (HTTP " + std::to_string(res->status) + ")");
    }
    if (res->status == 413) throw ContextTooLong(doc.value("message", "context too long"));
    if (res->status != 200) {
      throw BackendError("backend error (HTTP " + std::to_string(res->status) +
                         "): " + doc.value("message", std::string("unknown")));
    }
    return distribution_from_json(doc);
  }

 private:
  std::string transport_error(httplib::Error err) const {
    return "cannot reach backend at " + endpoint_ + ": " + httplib::to_string(err);
  }

  std::string endpoint_;
  httplib::Client client_;
};

// Serves a ModelBackend with the protocol above on a background thread.
class BackendServer {
 public:
  // The served backend must outlive the server and tolerate concurrent
  // calls (mock backends do).
  explicit BackendServer(ModelBackend& backend, const Vocabulary* vocab = nullptr)
      : backend_(&backend), vocab_(vocab) {
    server_.Post("/v1/next", [this](const httplib::Request& req, httplib::Response& res) {
      handle_next(req, res);
    });
    server_.Post("/v1/tokenize", [this](const httplib::Request& req, httplib::Response& res) {
      handle_tokenize(req, res);
    });
    server_.Get("/health", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"status":"ok"})", "application/json");
    });
  }

  ~BackendServer() { stop(); }
  BackendServer(const BackendServer&) = delete;
  BackendServer& operator=(const BackendServer&) = delete;

  // Binds (port 0 picks a free port) and starts serving in the background.
  int start(const std::string& host = "127.0.0.1", int port = 0) {
    port_ = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
    if (port_ < 0) throw ConfigError("cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port_;
  }

  // Serves on the calling thread until stop() is called elsewhere.
  void listen(const std::string& host, int port) {
    if (!server_.listen(host, port)) throw ConfigError("cannot listen on " + host + ":" + std::to_string(port));
  }

  void stop() {
    if (server_.is_running()) server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  int port() const { return port_; }

 private:
  static void reply_error(httplib::Response& res, int status, const std::string& code,
                          const std::string& message) {
    res.status = status;
    res.set_content(nlohmann::json{{"error", code}, {"message", message}}.dump(), "application/json");
  }

  void handle_next(const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body;
    std::vector<TokenId> context, query;
    std::optional<LogitMask> mask;
    std::size_t top_k = 0;
    try {
      body = nlohmann::json::parse(req.body);
      if (body.contains("context_tokens") && !body.at("context_tokens").is_null()) {
        context = body.at("context_tokens").get<std::vector<TokenId>>();
      } else if (body.contains("context_text") && vocab_ != nullptr) {
        context = greedy_tokenize(body.at("context_text").get<std::string>(), *vocab_).tokens;
      } else {
        throw std::invalid_argument("needs context_tokens (or context_text with a vocabulary)");
      }
      if (body.contains("allowed") && !body.at("allowed").is_null()) {
        mask = LogitMask(body.at("allowed").get<std::vector<TokenId>>());
      }
      if (body.contains("query") && !body.at("query").is_null()) {
        query = body.at("query").get<std::vector<TokenId>>();
      }
      top_k = body.value("top_k", std::size_t{0});
    } catch (const std::exception& e) {
      reply_error(res, 400, "bad_request", e.what());
      return;
    }
    try {
      Distribution dist = backend_->next({context, mask ? &*mask : nullptr, query, top_k});
      if (!mask) dist = restrict_response(dist, query, top_k);
      res.set_content(distribution_to_json(dist).dump(), "application/json");
    } catch (const ContextTooLong& e) {
      reply_error(res, 413, "context_too_long", e.what());
    } catch (const InvalidArgument& e) {
      reply_error(res, 400, "bad_request", e.what());
    } catch (const EmptyMask& e) {
      reply_error(res, 400, "bad_request", e.what());
    } catch (const std::exception& e) {
      reply_error(res, 500, "internal", e.what());
    }
  }

  void handle_tokenize(const httplib::Request& req, httplib::Response& res) {
    if (vocab_ == nullptr) {
      reply_error(res, 404, "unsupported", "server has no vocabulary");
      return;
    }
    try {
      const auto body = nlohmann::json::parse(req.body);
      const TokenSeq seq = greedy_tokenize(body.at("text").get<std::string>(), *vocab_);
      res.set_content(nlohmann::json{{"tokens", seq.tokens}}.dump(), "application/json");
    } catch (const std::exception& e) {
      reply_error(res, 400, "bad_request", e.what());
    }
  }

  ModelBackend* backend_;
  const Vocabulary* vocab_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = -1;
};

// Tokenizer that defers to the backend, for when the local greedy rule does
// not reproduce the upstream tokenizer.
class BackendTokenizer final : public Tokenizer {
 public:
  BackendTokenizer(ModelBackend& backend, const Vocabulary& vocab)
      : backend_(&backend), vocab_(&vocab) {}

  TokenSeq tokenize(std::string_view text) const override {
    std::optional<std::vector<TokenId>> ids;
    {
      std::lock_guard lock(mutex_);
      ids = backend_->tokenize(text);
    }
    if (!ids) throw BackendError("backend does not offer tokenization");
    TokenSeq out;
    for (TokenId id : *ids) {
      out.tokens.push_back(id);
      out.texts.push_back(vocab_->text(id));
    }
    if (out.joined() != text) throw BackendError("backend tokenization does not spell the input");
    return out;
  }
  const Vocabulary& vocab() const override { return *vocab_; }

 private:
  ModelBackend* backend_;
  const Vocabulary* vocab_;
  mutable std::mutex mutex_;
};

// Strings on which the local longest-match tokenizer disagrees with the
// backend's own tokenization. Empty when the backend cannot tokenize.
inline std::vector<std::string> tokenizer_mismatches(ModelBackend& backend, const Vocabulary& vocab,
                                                     const std::vector<std::string>& texts) {
  std::vector<std::string> out;
  for (const auto& text : texts) {
    auto remote = backend.tokenize(text);
    if (!remote) return {};
    if (greedy_tokenize(text, vocab).tokens != *remote) out.push_back(text);
  }
  return out;
}

}  // namespace treeranker
