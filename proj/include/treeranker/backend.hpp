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

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "treeranker/errors.hpp"
#include "treeranker/vocabulary.hpp"

namespace treeranker {

struct TokenProb {
  TokenId token;
  double prob;

  friend bool operator==(const TokenProb&, const TokenProb&) = default;
};

// Next-token probabilities. `probs` is sorted by token id; tokens missing
// from it have probability zero (or were not requested).
struct Distribution {
  std::vector<TokenProb> probs;
  TokenId argmax = -1;

  double prob(TokenId token) const {
    auto it = std::lower_bound(probs.begin(), probs.end(), token,
                               [](const TokenProb& p, TokenId t) { return p.token < t; });
    return it != probs.end() && it->token == token ? it->prob : 0.0;
  }

  bool has(TokenId token) const {
    auto it = std::lower_bound(probs.begin(), probs.end(), token,
                               [](const TokenProb& p, TokenId t) { return p.token < t; });
    return it != probs.end() && it->token == token;
  }

  double total() const {
    double sum = 0.0;
    for (const auto& p : probs) sum += p.prob;
    return sum;
  }

  friend bool operator==(const Distribution&, const Distribution&) = default;
};

// Set of tokens that survive logit masking. Kept sorted and unique.
class LogitMask {
 public:
  LogitMask() = default;
  explicit LogitMask(std::vector<TokenId> allowed) : allowed_(std::move(allowed)) {
    std::sort(allowed_.begin(), allowed_.end());
    allowed_.erase(std::unique(allowed_.begin(), allowed_.end()), allowed_.end());
  }

  bool allows(TokenId token) const {
    return std::binary_search(allowed_.begin(), allowed_.end(), token);
  }
  bool empty() const { return allowed_.empty(); }
  std::size_t size() const { return allowed_.size(); }
  std::span<const TokenId> tokens() const { return allowed_; }

  friend bool operator==(const LogitMask&, const LogitMask&) = default;

 private:
  std::vector<TokenId> allowed_;
};

struct NextTokenRequest {
  std::span<const TokenId> context;
  // Constrained step when set: probabilities are renormalized over the
  // allowed set and argmax is taken inside it.
  const LogitMask* mask = nullptr;
  // Extra tokens whose probability the caller needs; never constrains argmax.
  std::span<const TokenId> query;
  // Unconstrained callers that need a ranked shortlist (beam search) ask for
  // at least this many of the most probable tokens.
  std::size_t top_k = 0;
};

// Provider of next-token distributions. Implementations override compute();
// next() validates the request and counts forward passes.
class ModelBackend {
 public:
  virtual ~ModelBackend() = default;

  Distribution next(const NextTokenRequest& request) {
    if (request.context.empty()) throw InvalidArgument("context must not be empty");
    if (request.mask != nullptr && request.mask->empty()) {
      throw EmptyMask("constrained step with an empty allowed set");
    }
    calls_.fetch_add(1, std::memory_order_relaxed);
    return compute(request);
  }

  std::size_t calls() const { return calls_.load(std::memory_order_relaxed); }
  void reset_calls() { calls_.store(0, std::memory_order_relaxed); }

  // Fixed per-forward-pass latency for simulated timing. Real backends
  // return nullopt and are timed with a wall clock.
  virtual std::optional<double> simulated_latency_seconds() const { return std::nullopt; }

  // Backend-side tokenization, when the backend offers it.
  virtual std::optional<std::vector<TokenId>> tokenize(std::string_view) { return std::nullopt; }

 protected:
  virtual Distribution compute(const NextTokenRequest& request) = 0;

 private:
  std::atomic<std::size_t> calls_{0};
};

inline Distribution next_distribution(ModelBackend& backend, std::span<const TokenId> context,
                                      const LogitMask* mask,
                                      std::span<const TokenId> query = {},
                                      std::size_t top_k = 0) {
  return backend.next(NextTokenRequest{context, mask, query, top_k});
}

// Highest probability wins; equal probabilities go to the lower token id.
inline bool better_token(const TokenProb& a, const TokenProb& b) {
  return a.prob > b.prob || (a.prob == b.prob && a.token < b.token);
}

// Applies a mask to a full (or sparse) table: keeps the allowed tokens and
// renormalizes over them, matching a softmax over the surviving logits.
// If the table gives the allowed set zero mass the result is uniform over
// it (all surviving logits equally -inf in the limit).
inline Distribution mask_and_renormalize(std::span<const TokenProb> table, const LogitMask& mask) {
  Distribution out;
  out.probs.reserve(mask.size());
  double mass = 0.0;
  for (TokenId t : mask.tokens()) {
    auto it = std::lower_bound(table.begin(), table.end(), t,
                               [](const TokenProb& p, TokenId id) { return p.token < id; });
    const double p = (it != table.end() && it->token == t) ? it->prob : 0.0;
    out.probs.push_back({t, p});
    mass += p;
  }
  if (mass > 0.0) {
    for (auto& p : out.probs) p.prob /= mass;
  } else {
    const double uniform = 1.0 / static_cast<double>(out.probs.size());
    for (auto& p : out.probs) p.prob = uniform;
  }
  TokenProb best = out.probs.front();
  for (const auto& p : out.probs) {
    if (better_token(p, best)) best = p;
  }
  out.argmax = best.token;
  return out;
}

inline TokenId table_argmax(std::span<const TokenProb> table) {
  if (table.empty()) throw InvalidArgument("empty distribution table");
  TokenProb best = table.front();
  for (const auto& p : table) {
    if (better_token(p, best)) best = p;
  }
  return best.token;
}

// The k most probable entries (ties to lower id), excluding zero mass.
inline std::vector<TokenProb> top_tokens(const Distribution& dist, std::size_t k) {
  std::vector<TokenProb> sorted;
  sorted.reserve(dist.probs.size());
  for (const auto& p : dist.probs) {
    if (p.prob > 0.0) sorted.push_back(p);
  }
  const std::size_t n = std::min(k, sorted.size());
  std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n), sorted.end(),
                    better_token);
  sorted.resize(n);
  return sorted;
}

// Decorator that timestamps the first response, for ranking-time
// measurement, and forwards everything else.
class TimedBackend final : public ModelBackend {
 public:
  using Clock = std::chrono::steady_clock;

  explicit TimedBackend(ModelBackend& inner) : inner_(&inner) {}

  std::optional<Clock::time_point> first_response() const { return first_response_; }
  std::optional<double> simulated_latency_seconds() const override {
    return inner_->simulated_latency_seconds();
  }
  std::optional<std::vector<TokenId>> tokenize(std::string_view text) override {
    return inner_->tokenize(text);
  }

 protected:
  Distribution compute(const NextTokenRequest& request) override {
    Distribution d = inner_->next(request);
    if (!first_response_) first_response_ = Clock::now();
    return d;
  }

 private:
  ModelBackend* inner_;
  std::optional<Clock::time_point> first_response_;
};

}  // namespace treeranker
