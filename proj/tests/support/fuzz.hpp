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

// Seeded generators for random vocabularies, candidate sets and mock models,
// plus test-only backends.

#include <algorithm>
#include <cstdint>
#include <memory>
#include <mutex>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "treeranker/backend.hpp"
#include "treeranker/mock_backend.hpp"
#include "treeranker/vocabulary.hpp"

namespace treeranker::testing {

enum class VocabShape {
  // Multi-character tokens drawn freely; many tokens are prefixes of others.
  kOverlapping,
  // No identifier token is a strict prefix of another identifier token.
  kPrefixFree,
  // Families of tokens sharing a stem, so subtoken splits are common.
  kSharedStems,
};

struct FuzzCase {
  std::uint64_t seed = 0;
  std::vector<std::string> vocab_texts;
  std::vector<std::string> candidates;
  std::string prefix;
  MockSpec spec;

  Vocabulary vocab() const { return Vocabulary(vocab_texts); }
};

struct FuzzLimits {
  std::size_t max_vocab = 64;
  std::size_t max_candidates = 50;
  std::size_t max_depth = 6;
  std::size_t min_candidates = 1;
};

namespace detail {

inline std::string random_word(std::mt19937_64& rng, const std::string& alphabet, std::size_t min_len,
                               std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::string out;
  const std::size_t n = len(rng);
  for (std::size_t i = 0; i < n; ++i) out += alphabet[pick(rng)];
  return out;
}

}  // namespace detail

inline FuzzCase make_fuzz_case(std::uint64_t seed, VocabShape shape, FuzzLimits limits = {}) {
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 17);
  FuzzCase fc;
  fc.seed = seed;

  // Termination tokens and the prefix context token.
  const std::vector<std::string> fixed{".", "(", ";", "\n", "q"};
  std::vector<std::string> identifier_tokens;
  std::set<std::string> seen(fixed.begin(), fixed.end());
  auto add = [&](const std::string& t) {
    if (fc.vocab_texts.size() + identifier_tokens.size() + fixed.size() >= limits.max_vocab) return;
    if (seen.insert(t).second) identifier_tokens.push_back(t);
  };

  switch (shape) {
    case VocabShape::kOverlapping: {
      const std::string alphabet = "abcdef";
      for (char c : alphabet) add(std::string(1, c));
      std::uniform_int_distribution<std::size_t> count(10, limits.max_vocab - fixed.size() - 6);
      const std::size_t target = count(rng);
      for (std::size_t tries = 0; identifier_tokens.size() < target && tries < 1000; ++tries) {
        add(detail::random_word(rng, alphabet, 2, 4));
      }
      break;
    }
    case VocabShape::kPrefixFree: {
      // Single letters a-f plus two-letter tokens over g-l (no g-l singles).
      for (char c : std::string("abcdef")) add(std::string(1, c));
      std::uniform_int_distribution<std::size_t> count(6, 30);
      const std::size_t target = identifier_tokens.size() + count(rng);
      for (std::size_t tries = 0; identifier_tokens.size() < target && tries < 1000; ++tries) {
        add(detail::random_word(rng, "ghijkl", 2, 2));
      }
      break;
    }
    case VocabShape::kSharedStems: {
      const std::string alphabet = "abcdef";
      for (char c : alphabet) add(std::string(1, c));
      std::uniform_int_distribution<std::size_t> stems(2, 5);
      const std::size_t n_stems = stems(rng);
      for (std::size_t s = 0; s < n_stems; ++s) {
        const std::string stem = detail::random_word(rng, alphabet, 2, 3);
        add(stem);
        std::uniform_int_distribution<std::size_t> ext(2, 5);
        const std::size_t n_ext = ext(rng);
        for (std::size_t e = 0; e < n_ext; ++e) add(stem + detail::random_word(rng, alphabet, 1, 2));
      }
      for (std::size_t tries = 0; identifier_tokens.size() < 40 && tries < 200; ++tries) {
        add(detail::random_word(rng, alphabet, 2, 3));
      }
      break;
    }
  }

  fc.vocab_texts = fixed;
  fc.vocab_texts.insert(fc.vocab_texts.end(), identifier_tokens.begin(), identifier_tokens.end());
  const Vocabulary vocab(fc.vocab_texts);

  std::vector<std::string> pieces;
  for (const auto& t : identifier_tokens) {
    if (shape != VocabShape::kPrefixFree || t.size() == 2 || t.size() == 1) pieces.push_back(t);
  }
  std::uniform_int_distribution<std::size_t> n_cand(limits.min_candidates, limits.max_candidates);
  std::uniform_int_distribution<std::size_t> n_pieces(1, 4);
  std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
  const std::size_t want = n_cand(rng);
  std::set<std::string> taken;
  for (std::size_t tries = 0; fc.candidates.size() < want && tries < want * 20; ++tries) {
    std::string cand;
    const std::size_t k = n_pieces(rng);
    for (std::size_t i = 0; i < k; ++i) cand += pieces[pick(rng)];
    if (taken.contains(cand)) continue;
    if (greedy_tokenize(cand, vocab).size() > limits.max_depth) continue;
    taken.insert(cand);
    fc.candidates.push_back(cand);
  }
  fc.prefix = "q.";
  fc.spec = random_mock_spec(seed, vocab.size());
  fc.spec.latency_ms = 10;
  return fc;
}

// Multiplies the probability of every token in `boost` before masking or
// reporting, so the decode selects subtokens often.
class BoostedBackend final : public ModelBackend {
 public:
  BoostedBackend(MockSpec spec, std::set<TokenId> boost, double factor)
      : mock_(std::move(spec)), boost_(std::move(boost)), factor_(factor) {}

  std::vector<TokenProb> table_for(std::span<const TokenId> context) const {
    std::vector<TokenProb> table = mock_.table_for(context);
    double sum = 0.0;
    for (auto& p : table) {
      if (boost_.contains(p.token)) p.prob *= factor_;
      sum += p.prob;
    }
    for (auto& p : table) p.prob /= sum;
    return table;
  }

 protected:
  Distribution compute(const NextTokenRequest& request) override {
    const auto table = table_for(request.context);
    if (request.mask != nullptr) return mask_and_renormalize(table, *request.mask);
    Distribution out;
    out.probs = table;
    out.argmax = table_argmax(table);
    return out;
  }

 private:
  MockBackend mock_;
  std::set<TokenId> boost_;
  double factor_;
};

// Swaps probabilities so that the full-vocabulary argmax always lands on
// the tree: among the queried tokens (unconstrained) or the allowed tokens
// that are not termination tokens (constrained).
class OnTreeBackend final : public ModelBackend {
 public:
  OnTreeBackend(MockSpec spec, std::vector<TokenId> termination)
      : mock_(std::move(spec)), termination_(std::move(termination)) {
    std::sort(termination_.begin(), termination_.end());
  }

 protected:
  Distribution compute(const NextTokenRequest& request) override {
    std::vector<TokenProb> table = mock_.table_for(request.context);
    std::vector<TokenId> on_tree;
    if (request.mask != nullptr) {
      for (TokenId t : request.mask->tokens()) {
        if (!std::binary_search(termination_.begin(), termination_.end(), t)) on_tree.push_back(t);
      }
    } else {
      on_tree.assign(request.query.begin(), request.query.end());
    }
    std::sort(on_tree.begin(), on_tree.end());
    if (!on_tree.empty()) {
      auto global = table.begin();
      auto best_on = table.end();
      for (auto it = table.begin(); it != table.end(); ++it) {
        if (better_token(*it, *global)) global = it;
        if (std::binary_search(on_tree.begin(), on_tree.end(), it->token) &&
            (best_on == table.end() || better_token(*it, *best_on))) {
          best_on = it;
        }
      }
      if (best_on != table.end() && best_on != global) {
        std::swap(global->prob, best_on->prob);
        // Break any remaining tie in favour of the on-tree token.
        best_on->prob = std::nextafter(best_on->prob, 1.0);
        double sum = 0.0;
        for (const auto& p : table) sum += p.prob;
        for (auto& p : table) p.prob /= sum;
      }
    }
    if (request.mask != nullptr) return mask_and_renormalize(table, *request.mask);
    Distribution out;
    out.probs = table;
    out.argmax = table_argmax(table);
    return out;
  }

 private:
  MockBackend mock_;
  std::vector<TokenId> termination_;
};

// Records every request and response.
class SpyBackend final : public ModelBackend {
 public:
  struct Call {
    std::vector<TokenId> context;
    std::optional<std::vector<TokenId>> mask;
    std::vector<TokenId> query;
    Distribution response;
  };

  explicit SpyBackend(ModelBackend& inner) : inner_(&inner) {}

  const std::vector<Call>& log() const { return log_; }
  void clear() { log_.clear(); }

 protected:
  Distribution compute(const NextTokenRequest& request) override {
    Call call;
    call.context.assign(request.context.begin(), request.context.end());
    if (request.mask != nullptr) {
      call.mask = std::vector<TokenId>(request.mask->tokens().begin(), request.mask->tokens().end());
    }
    call.query.assign(request.query.begin(), request.query.end());
    call.response = inner_->next(request);
    log_.push_back(call);
    return call.response;
  }

 private:
  ModelBackend* inner_;
  std::vector<Call> log_;
};

}  // namespace treeranker::testing
