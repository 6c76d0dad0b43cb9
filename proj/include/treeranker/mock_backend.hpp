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
 * Deterministic table-driven language model.
 *
 * Lookup order for a context:
 *   1. the explicit entry keyed by the longest matching token suffix
 *      (up to kMaxSuffix tokens);
 *   2. if a procedural seed is set, a dense pseudo-random distribution
 *      derived from (seed, last kMaxSuffix tokens);
 *   3. the default distribution.
 *
 * Identical contexts always produce bitwise-identical distributions, and the
 * object is immutable after construction so it can be shared across threads.
 */

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "treeranker/backend.hpp"
#include "treeranker/errors.hpp"
#include "treeranker/vocabulary.hpp"

namespace treeranker {

struct MockEntry {
  std::vector<TokenId> suffix;
  std::vector<TokenProb> probs;

  friend bool operator==(const MockEntry&, const MockEntry&) = default;
};

struct MockSpec {
  std::size_t vocab_size = 0;
  std::vector<TokenProb> default_probs;
  std::vector<MockEntry> entries;
  std::optional<std::uint64_t> procedural_seed;
  // Exponent applied to the uniform draws of the procedural table; larger
  // values give peakier distributions.
  double sharpness = 4.0;
  double latency_ms = 20.0;
  std::optional<std::size_t> max_context;

  friend bool operator==(const MockSpec&, const MockSpec&) = default;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform double in (0, 1] from the top 53 bits.
inline double unit_interval(std::uint64_t bits) {
  return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

inline std::vector<TokenProb> validated_table(std::vector<TokenProb> table, std::size_t vocab_size,
                                              const std::string& where) {
  std::sort(table.begin(), table.end(),
            [](const TokenProb& a, const TokenProb& b) { return a.token < b.token; });
  double sum = 0.0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& p = table[i];
    if (p.token < 0 || static_cast<std::size_t>(p.token) >= vocab_size) {
      throw MalformedSpec(where + ": token id " + std::to_string(p.token) + " out of range");
    }
    if (i > 0 && table[i - 1].token == p.token) {
      throw MalformedSpec(where + ": token " + std::to_string(p.token) + " listed twice");
    }
    if (!std::isfinite(p.prob) || p.prob < 0.0) {
      throw MalformedSpec(where + ": negative or non-finite probability");
    }
    sum += p.prob;
  }
  if (sum > 1.0 + 1e-9) throw MalformedSpec(where + ": probabilities sum above 1");
  return table;
}

}  // namespace detail

class MockBackend final : public ModelBackend {
 public:
  static constexpr std::size_t kMaxSuffix = 4;

  explicit MockBackend(MockSpec spec) : spec_(std::move(spec)) {
    if (spec_.vocab_size == 0) throw MalformedSpec("vocab_size must be positive");
    if (spec_.default_probs.empty()) throw MalformedSpec("missing default distribution");
    spec_.default_probs =
        detail::validated_table(std::move(spec_.default_probs), spec_.vocab_size, "default");
    if (spec_.sharpness <= 0.0 || !std::isfinite(spec_.sharpness)) {
      throw MalformedSpec("sharpness must be positive");
    }
    if (spec_.latency_ms < 0.0) throw MalformedSpec("latency_ms must be non-negative");
    for (auto& entry : spec_.entries) {
      if (entry.suffix.empty() || entry.suffix.size() > kMaxSuffix) {
        throw MalformedSpec("entry suffix must have 1.." + std::to_string(kMaxSuffix) + " tokens");
      }
      for (TokenId t : entry.suffix) {
        if (t < 0 || static_cast<std::size_t>(t) >= spec_.vocab_size) {
          throw MalformedSpec("entry suffix token out of range");
        }
      }
      entry.probs = detail::validated_table(std::move(entry.probs), spec_.vocab_size, "entry");
      if (entry.probs.empty()) throw MalformedSpec("entry has an empty distribution");
      if (!tables_.emplace(entry.suffix, entry.probs).second) {
        throw MalformedSpec("duplicate entry suffix");
      }
    }
  }

  const MockSpec& spec() const { return spec_; }

  // The unmasked table this model assigns to `context`.
  std::vector<TokenProb> table_for(std::span<const TokenId> context) const {
    const std::size_t longest = std::min(kMaxSuffix, context.size());
    for (std::size_t n = longest; n > 0; --n) {
      std::vector<TokenId> key(context.end() - static_cast<std::ptrdiff_t>(n), context.end());
      if (auto it = tables_.find(key); it != tables_.end()) return it->second;
    }
    if (spec_.procedural_seed) return procedural_table(context);
    return spec_.default_probs;
  }

  std::optional<double> simulated_latency_seconds() const override {
    return spec_.latency_ms / 1000.0;
  }

 protected:
  Distribution compute(const NextTokenRequest& request) override {
    if (spec_.max_context && request.context.size() > *spec_.max_context) {
      throw ContextTooLong(request.context.size(), *spec_.max_context);
    }
    const std::vector<TokenProb> table = table_for(request.context);
    if (request.mask != nullptr) return mask_and_renormalize(table, *request.mask);
    Distribution out;
    out.probs = table;
    out.argmax = table_argmax(table);
    // Sparse tables omit zero-mass tokens; queried ones are reported as 0.
    bool added = false;
    for (TokenId t : request.query) {
      if (!out.has(t)) {
        out.probs.push_back({t, 0.0});
        added = true;
      }
    }
    if (added) {
      std::sort(out.probs.begin(), out.probs.end(),
                [](const TokenProb& a, const TokenProb& b) { return a.token < b.token; });
    }
    return out;
  }

 private:
  std::vector<TokenProb> procedural_table(std::span<const TokenId> context) const {
    std::uint64_t h = detail::splitmix64(*spec_.procedural_seed);
    const std::size_t n = std::min(kMaxSuffix, context.size());
    for (std::size_t i = context.size() - n; i < context.size(); ++i) {
      h = detail::splitmix64(h ^ static_cast<std::uint64_t>(context[i]));
    }
    std::vector<TokenProb> table(spec_.vocab_size);
    double sum = 0.0;
    for (std::size_t t = 0; t < spec_.vocab_size; ++t) {
      const double u = detail::unit_interval(detail::splitmix64(h + 0x632be59bd9b4e019ULL * (t + 1)));
      table[t] = {static_cast<TokenId>(t), std::pow(u, spec_.sharpness)};
      sum += table[t].prob;
    }
    for (auto& p : table) p.prob /= sum;
    return table;
  }

  MockSpec spec_;
  std::map<std::vector<TokenId>, std::vector<TokenProb>> tables_;
};

// Random mock description: dense default drawn from `seed`, procedural
// tables for every other context. Same arguments, same spec.
inline MockSpec random_mock_spec(std::uint64_t seed, std::size_t vocab_size,
                                 double sharpness = 4.0) {
  MockSpec spec;
  spec.vocab_size = vocab_size;
  spec.procedural_seed = seed;
  spec.sharpness = sharpness;
  std::mt19937_64 rng(seed);
  double sum = 0.0;
  spec.default_probs.resize(vocab_size);
  for (std::size_t t = 0; t < vocab_size; ++t) {
    const double u = detail::unit_interval(rng());
    spec.default_probs[t] = {static_cast<TokenId>(t), std::pow(u, sharpness)};
    sum += spec.default_probs[t].prob;
  }
  for (auto& p : spec.default_probs) p.prob /= sum;
  return spec;
}

// ---------------------------------------------------------------------------
// JSON description. Tokens are written by text and resolved against the
// vocabulary:
//
//   { "default": {"add": 0.5, "clear": 0.5},
//     "entries": [ {"suffix": ["x", "."], "probs": {"add": 0.6}} ],
//     "seed": 7, "sharpness": 4.0, "latency_ms": 20, "max_context": 2048 }
//
// "default" may be omitted only when "seed" is given; it then defaults to
// the seeded random default of random_mock_spec.
// ---------------------------------------------------------------------------

inline std::vector<TokenProb> table_from_json(const nlohmann::json& obj, const Vocabulary& vocab,
                                              const std::string& where) {
  if (!obj.is_object()) throw MalformedSpec(where + " must be an object of token -> probability");
  std::vector<TokenProb> table;
  for (const auto& [text, value] : obj.items()) {
    auto id = vocab.find(text);
    if (!id) throw MalformedSpec(where + ": token \"" + text + "\" not in vocabulary");
    if (!value.is_number()) throw MalformedSpec(where + ": probability must be a number");
    table.push_back({*id, value.get<double>()});
  }
  return table;
}

inline MockSpec mock_spec_from_json(const nlohmann::json& doc, const Vocabulary& vocab) {
  if (!doc.is_object()) throw MalformedSpec("mock spec must be a JSON object");
  MockSpec spec;
  if (doc.contains("seed")) {
    spec = random_mock_spec(doc.at("seed").get<std::uint64_t>(), vocab.size(),
                            doc.value("sharpness", 4.0));
  }
  spec.vocab_size = vocab.size();
  if (doc.contains("sharpness")) spec.sharpness = doc.at("sharpness").get<double>();
  if (doc.contains("default")) {
    spec.default_probs = table_from_json(doc.at("default"), vocab, "default");
  } else if (!spec.procedural_seed) {
    throw MalformedSpec("missing default distribution");
  }
  if (doc.contains("entries")) {
    for (const auto& e : doc.at("entries")) {
      MockEntry entry;
      if (!e.contains("suffix") || !e.at("suffix").is_array()) {
        throw MalformedSpec("entry needs a suffix array");
      }
      for (const auto& tok : e.at("suffix")) {
        auto id = vocab.find(tok.get<std::string>());
        if (!id) throw MalformedSpec("suffix token \"" + tok.get<std::string>() + "\" not in vocabulary");
        entry.suffix.push_back(*id);
      }
      entry.probs = table_from_json(e.value("probs", nlohmann::json::object()), vocab, "entry");
      spec.entries.push_back(std::move(entry));
    }
  }
  if (doc.contains("latency_ms")) spec.latency_ms = doc.at("latency_ms").get<double>();
  if (doc.contains("max_context") && !doc.at("max_context").is_null()) {
    spec.max_context = doc.at("max_context").get<std::size_t>();
  }
  return spec;
}

inline MockSpec load_mock_spec(const std::string& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mock spec: " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedSpec(std::string("mock spec is not valid JSON: ") + e.what());
  }
  return mock_spec_from_json(doc, vocab);
}

}  // namespace treeranker
