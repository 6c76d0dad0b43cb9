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
 * Tree-guided ranking decode.
 *
 * One greedy pass down the completion tree. At every visited node the model
 * is queried once; the probability of every child edge is appended to the
 * score trace of every candidate below that child, and the decode follows
 * the most probable admissible token. Candidates are finally ordered by
 * (scored length, last recorded probability), both descending.
 *
 * Selection rules at node v for the argmax token s:
 *   - s is a child edge           -> follow it.
 *   - s is a termination token and v ends a candidate
 *                                 -> that candidate gets P(s) appended; stop.
 *   - s strictly prefixes exactly one child main token m
 *                                 -> push: follow m, its members' last
 *                                    entry becomes P(s).
 *   - s strictly prefixes two or more child main tokens
 *                                 -> split the tree on s, follow the new
 *                                    node, moved members' last entry is P(s).
 *   - anything else (unconstrained mode only) -> off-tree exit.
 */

#include <algorithm>
#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "treeranker/backend.hpp"
#include "treeranker/completion_tree.hpp"
#include "treeranker/errors.hpp"
#include "treeranker/vocabulary.hpp"

namespace treeranker {

struct DecodeConfig {
  bool constrained = true;
  bool early_stop = true;
  std::size_t max_steps = 16;
  // Admit termination tokens at nodes that end a candidate.
  bool include_termination_mass = true;
};

struct DecodeStats {
  std::size_t steps = 0;  // forward passes
  bool early_stopped = false;
  std::size_t splits = 0;
  std::size_t pushes = 0;
  std::optional<std::size_t> ground_truth_token_length;
  bool off_tree_exit = false;
  bool terminated = false;
  // Tokens appended to the context, in order. A push appends the main token.
  std::vector<TokenId> decoded;
};

struct ScoreTrace {
  std::vector<double> probs;

  std::size_t scored_len() const { return probs.size(); }
  double last() const { return probs.empty() ? 0.0 : probs.back(); }
};

struct RankingKey {
  std::size_t scored_len = 0;
  double last_prob = 0.0;
};

// Lexicographic: longer scored prefix first, then higher last probability.
// `greater` means `a` ranks ahead of `b`.
inline std::partial_ordering compare(const RankingKey& a, const RankingKey& b) {
  if (auto c = a.scored_len <=> b.scored_len; c != 0) return c;
  return a.last_prob <=> b.last_prob;
}

struct RankedCompletion {
  CandidateId candidate = 0;
  std::string identifier;
  RankingKey key;
  std::size_t rank = 0;
};

struct RankResult {
  std::vector<RankedCompletion> ranking;
  DecodeStats stats;
  std::vector<ScoreTrace> traces;  // indexed by CandidateId
  // Candidates whose first characters can merge with the end of the prefix
  // into a single vocabulary token ("._" style boundary merges).
  std::vector<CandidateId> boundary_merges;
  std::size_t ground_truth_rank(const std::string& identifier) const {
    for (const auto& r : ranking) {
      if (r.identifier == identifier) return r.rank;
    }
    return 0;
  }
};

// Appends P(child) to the trace of every member below each child edge.
inline void record_step(std::vector<ScoreTrace>& traces, const CompletionTree& tree, NodeId node,
                        const Distribution& dist) {
  for (const auto& [token, child] : tree.node(node).children) {
    if (!dist.has(token)) {
      throw MissingChildProbability("distribution lacks child token " + std::to_string(token));
    }
    const double p = dist.prob(token);
    for (CandidateId c : tree.node(child).members) traces.at(c).probs.push_back(p);
  }
}

// Child main tokens, their registered subtokens and, at a node that ends a
// candidate, the termination tokens.
inline LogitMask build_allowed_set(const CompletionTree& tree, NodeId node,
                                   const SubtokenMap& submap,
                                   std::span<const TokenId> termination_tokens,
                                   const DecodeConfig& config) {
  const TreeNode& n = tree.node(node);
  std::vector<TokenId> allowed;
  for (const auto& [token, child] : n.children) {
    allowed.push_back(token);
    const auto& subs = submap.subtokens_of(token);
    allowed.insert(allowed.end(), subs.begin(), subs.end());
  }
  if (n.terminal_for && config.include_termination_mass) {
    allowed.insert(allowed.end(), termination_tokens.begin(), termination_tokens.end());
  }
  if (allowed.empty()) {
    throw EmptyMask("node " + std::to_string(node) + " has no admissible continuation");
  }
  return LogitMask(std::move(allowed));
}

// Stable order: equal keys keep the original candidate order.
inline std::vector<RankedCompletion> rank_by_traces(const std::vector<ScoreTrace>& traces,
                                                    const std::vector<std::string>& identifiers) {
  std::vector<RankedCompletion> out;
  out.reserve(identifiers.size());
  for (CandidateId c = 0; c < identifiers.size(); ++c) {
    out.push_back({c, identifiers[c], {traces[c].scored_len(), traces[c].last()}, 0});
  }
  std::stable_sort(out.begin(), out.end(), [](const RankedCompletion& a, const RankedCompletion& b) {
    return compare(a.key, b.key) == std::partial_ordering::greater;
  });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = i + 1;
  return out;
}

inline std::vector<CandidateId> flag_boundary_merges(const Vocabulary& vocab,
                                                     std::string_view prefix_text,
                                                     const std::vector<std::string>& candidates) {
  std::vector<CandidateId> out;
  const std::size_t max_len = vocab.max_token_length();
  for (CandidateId c = 0; c < candidates.size(); ++c) {
    const std::string& cand = candidates[c];
    bool merged = false;
    for (std::size_t left = 1; left < max_len && left <= prefix_text.size() && !merged; ++left) {
      const std::string tail(prefix_text.substr(prefix_text.size() - left));
      for (std::size_t right = 1; left + right <= max_len && right <= cand.size(); ++right) {
        if (vocab.find(tail + cand.substr(0, right))) {
          merged = true;
          break;
        }
      }
    }
    if (merged) out.push_back(c);
  }
  return out;
}

// Holds the per-vocabulary tables (subtoken relation, termination tokens).
// Immutable after construction; rank() can run concurrently.
class TreeRanker {
 public:
  explicit TreeRanker(const Vocabulary& vocab)
      : vocab_(&vocab),
        greedy_(vocab),
        tokenizer_(&greedy_),
        submap_(build_full_subtoken_map(vocab)),
        termination_(vocab.termination_tokens()) {}

  TreeRanker(const Vocabulary& vocab, const Tokenizer& tokenizer) : TreeRanker(vocab) {
    tokenizer_ = &tokenizer;
  }

  TreeRanker(const TreeRanker&) = delete;
  TreeRanker& operator=(const TreeRanker&) = delete;

  const Vocabulary& vocab() const { return *vocab_; }
  const Tokenizer& tokenizer() const { return *tokenizer_; }
  const SubtokenMap& subtokens() const { return submap_; }
  std::span<const TokenId> termination_tokens() const { return termination_; }

  bool is_termination(TokenId t) const {
    return std::binary_search(termination_.begin(), termination_.end(), t);
  }

  LogitMask allowed_set(const CompletionTree& tree, NodeId node, const DecodeConfig& config) const {
    return build_allowed_set(tree, node, submap_, termination_, config);
  }

  CompletionTree build_tree(const std::vector<std::string>& candidates) const {
    return CompletionTree::build(candidates, *tokenizer_);
  }

  RankResult rank(ModelBackend& backend, const TokenSeq& prefix,
                  const std::vector<std::string>& candidates, const DecodeConfig& config) const {
    if (candidates.empty()) throw EmptyCandidateList();
    if (prefix.empty()) throw InvalidArgument("prefix context must not be empty");
    if (config.max_steps < 1) throw InvalidArgument("max_steps must be at least 1");

    CompletionTree tree = build_tree(candidates);
    RankResult result;
    result.traces.resize(candidates.size());
    result.boundary_merges = flag_boundary_merges(*vocab_, prefix.joined(), candidates);
    DecodeStats& stats = result.stats;
    std::vector<ScoreTrace>& traces = result.traces;

    std::vector<TokenId> context = prefix.tokens;
    NodeId node = tree.root();
    while (true) {
      if (stats.steps > 0 && config.early_stop && tree.unique_candidate(node)) {
        stats.early_stopped = true;
        break;
      }
      if (tree.node(node).children.empty()) break;
      if (stats.steps == config.max_steps) break;

      Distribution dist;
      std::optional<LogitMask> mask;
      if (config.constrained) {
        mask = allowed_set(tree, node, config);
        dist = backend.next({context, &*mask, {}, 0});
      } else {
        DecodeConfig no_term = config;
        no_term.include_termination_mass = false;
        const LogitMask query = build_allowed_set(tree, node, submap_, {}, no_term);
        dist = backend.next({context, nullptr, query.tokens(), 0});
      }
      ++stats.steps;
      record_step(traces, tree, node, dist);

      const TokenId selected = dist.argmax;
      const double p_selected = dist.prob(selected);
      if (mask && !mask->allows(selected)) {
        throw BackendError("backend argmax " + std::to_string(selected) +
                           " is outside the allowed set");
      }

      if (auto next = tree.child(node, selected)) {
        node = *next;
        context.push_back(selected);
        stats.decoded.push_back(selected);
        continue;
      }

      const TreeNode& current = tree.node(node);
      if (current.terminal_for && config.include_termination_mass && is_termination(selected)) {
        traces[*current.terminal_for].probs.push_back(p_selected);
        stats.terminated = true;
        stats.decoded.push_back(selected);
        break;
      }

      const std::vector<TokenId> extended = tree.children_extending(node, selected);
      if (auto pushed = tree.main_token_push(node, selected, submap_)) {
        const TokenId main = *pushed;
        const NodeId target = *tree.child(node, main);
        for (CandidateId c : tree.node(target).members) traces[c].probs.back() = p_selected;
        ++stats.pushes;
        node = target;
        context.push_back(main);
        stats.decoded.push_back(main);
        continue;
      }
      if (extended.size() >= 2) {
        const NodeId split = tree.split_on_subtoken(node, selected);
        for (CandidateId c : tree.node(split).members) traces[c].probs.back() = p_selected;
        ++stats.splits;
        node = split;
        context.push_back(selected);
        stats.decoded.push_back(selected);
        continue;
      }

      if (!config.constrained) {
        stats.off_tree_exit = true;
        break;
      }
      throw std::logic_error("allowed token " + std::to_string(selected) +
                             " could not be resolved against the tree");
    }

    for (const auto& t : traces) {
      if (t.scored_len() == 0) throw std::logic_error("candidate left unscored after decode");
    }
    result.ranking = rank_by_traces(traces, candidates);
    return result;
  }

 private:
  const Vocabulary* vocab_;
  GreedyTokenizer greedy_;
  const Tokenizer* tokenizer_;
  SubtokenMap submap_;
  std::vector<TokenId> termination_;
};

}  // namespace treeranker
