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
 * Reference decoders the ranker is compared against:
 *
 *   greedy_complete  unconstrained argmax decode, cut at the identifier
 *                    boundary;
 *   beam_search      unconstrained beam search over cumulative natural-log
 *                    probability;
 *   filter_to_candidates  keeps only beam outputs found in the candidate list;
 *   beam_all         exhaustive walk of the completion tree, scoring every
 *                    candidate by sum(log p) / length^alpha.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <unordered_set>
#include <vector>

#include "treeranker/backend.hpp"
#include "treeranker/completion_tree.hpp"
#include "treeranker/errors.hpp"
#include "treeranker/ranker.hpp"
#include "treeranker/vocabulary.hpp"

namespace treeranker {

struct GreedyResult {
  std::string identifier;
  std::size_t steps = 0;
};

inline GreedyResult greedy_complete(ModelBackend& backend, const TokenSeq& prefix,
                                    const Vocabulary& vocab, std::size_t max_steps) {
  if (max_steps < 1) throw InvalidArgument("max_steps must be at least 1");
  std::vector<TokenId> context = prefix.tokens;
  std::string generated;
  GreedyResult out;
  while (out.steps < max_steps) {
    const Distribution dist = backend.next({context, nullptr, {}, 1});
    ++out.steps;
    const std::string& text = vocab.text(dist.argmax);
    generated += text;
    if (leading_identifier(text).size() < text.size()) break;
    context.push_back(dist.argmax);
  }
  out.identifier = std::string(leading_identifier(generated));
  return out;
}

struct BeamResult {
  std::string identifier;
  double cum_logprob = 0.0;
  bool finished = false;

  friend bool operator==(const BeamResult&, const BeamResult&) = default;
};

struct BeamSearchOutput {
  std::vector<BeamResult> beams;
  std::size_t calls = 0;
};

// A hypothesis finishes when a token carries a character that cannot
// extend an identifier; its identifier is the leading identifier run of the
// generated text. Each step keeps the global top-`width` expansions.
inline BeamSearchOutput beam_search(ModelBackend& backend, const TokenSeq& prefix,
                                    const Vocabulary& vocab, std::size_t width,
                                    std::size_t max_steps) {
  if (width < 1) throw InvalidArgument("beam width must be at least 1");
  if (max_steps < 1) throw InvalidArgument("max_steps must be at least 1");

  struct Hypothesis {
    std::vector<TokenId> tokens;
    std::string text;
    double logp = 0.0;
    bool finished = false;
  };

  BeamSearchOutput out;
  std::vector<Hypothesis> live{Hypothesis{}};
  std::vector<Hypothesis> done;
  for (std::size_t step = 0; step < max_steps && !live.empty(); ++step) {
    std::vector<Hypothesis> expanded;
    for (const auto& h : live) {
      std::vector<TokenId> context = prefix.tokens;
      context.insert(context.end(), h.tokens.begin(), h.tokens.end());
      const Distribution dist = backend.next({context, nullptr, {}, width});
      ++out.calls;
      for (const auto& [token, p] : top_tokens(dist, width)) {
        Hypothesis next = h;
        next.tokens.push_back(token);
        next.text += vocab.text(token);
        next.logp += std::log(p);
        next.finished = leading_identifier(next.text).size() < next.text.size();
        expanded.push_back(std::move(next));
      }
    }
    std::stable_sort(expanded.begin(), expanded.end(),
                     [](const Hypothesis& a, const Hypothesis& b) { return a.logp > b.logp; });
    if (expanded.size() > width) expanded.resize(width);
    live.clear();
    for (auto& h : expanded) (h.finished ? done : live).push_back(std::move(h));
  }
  done.insert(done.end(), std::make_move_iterator(live.begin()),
              std::make_move_iterator(live.end()));
  std::stable_sort(done.begin(), done.end(),
                   [](const Hypothesis& a, const Hypothesis& b) { return a.logp > b.logp; });
  std::unordered_set<std::string> seen;
  for (const auto& h : done) {
    std::string id(leading_identifier(h.text));
    if (!seen.insert(id).second) continue;
    out.beams.push_back({std::move(id), h.logp, h.finished});
    if (out.beams.size() == width) break;
  }
  return out;
}

inline std::vector<BeamResult> filter_to_candidates(const std::vector<BeamResult>& beams,
                                                    const std::vector<std::string>& candidates) {
  const std::unordered_set<std::string> allowed(candidates.begin(), candidates.end());
  std::vector<BeamResult> out;
  for (const auto& b : beams) {
    if (allowed.contains(b.identifier)) out.push_back(b);
  }
  return out;
}

struct BeamAllScore {
  CandidateId candidate = 0;
  std::string identifier;
  double sum_logprob = 0.0;
  std::size_t length = 0;
  double penalized = 0.0;
};

struct BeamAllConfig {
  double alpha = 1.0;
  // Query each node with the decoder's allowed set (renormalized); when
  // false, child probabilities come from the unmasked distribution.
  bool constrained = true;
  bool include_termination_mass = true;
};

struct BeamAllOutput {
  std::vector<BeamAllScore> scores;  // best first
  std::size_t calls = 0;
};

inline double length_penalized(double sum_logprob, std::size_t length, double alpha) {
  return sum_logprob / std::pow(static_cast<double>(length), alpha);
}

// Visits every internal node once, depth first in ascending token order.
inline BeamAllOutput beam_all(ModelBackend& backend, const CompletionTree& tree,
                              const TokenSeq& prefix, const SubtokenMap& submap,
                              std::span<const TokenId> termination_tokens,
                              const BeamAllConfig& config) {
  if (config.alpha < 0.0) throw InvalidArgument("alpha must be non-negative");
  BeamAllOutput out;
  std::vector<double> sums(tree.candidate_count(), 0.0);
  DecodeConfig mask_config;
  mask_config.include_termination_mass = config.include_termination_mass;

  struct Frame {
    NodeId node;
    double sum;
  };
  std::vector<Frame> stack{{tree.root(), 0.0}};
  while (!stack.empty()) {
    const Frame frame = stack.back();
    stack.pop_back();
    const TreeNode& n = tree.node(frame.node);
    if (n.terminal_for) sums[*n.terminal_for] = frame.sum;
    if (n.children.empty()) continue;

    std::vector<TokenId> context = prefix.tokens;
    const TokenSeq path = tree.path_tokens(frame.node);
    context.insert(context.end(), path.tokens.begin(), path.tokens.end());
    Distribution dist;
    if (config.constrained) {
      const LogitMask mask =
          build_allowed_set(tree, frame.node, submap, termination_tokens, mask_config);
      dist = backend.next({context, &mask, {}, 0});
    } else {
      std::vector<TokenId> query;
      for (const auto& [t, ch] : n.children) query.push_back(t);
      dist = backend.next({context, nullptr, query, 0});
    }
    ++out.calls;
    // Reverse push so children pop in ascending token order.
    for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) {
      if (!dist.has(it->first)) {
        throw MissingChildProbability("distribution lacks child token " +
                                      std::to_string(it->first));
      }
      stack.push_back({it->second, frame.sum + std::log(dist.prob(it->first))});
    }
  }

  for (CandidateId c = 0; c < tree.candidate_count(); ++c) {
    const TreeCandidate& cand = tree.candidate(c);
    const std::size_t length = cand.tokens.size();
    out.scores.push_back(
        {c, cand.identifier, sums[c], length, length_penalized(sums[c], length, config.alpha)});
  }
  std::stable_sort(out.scores.begin(), out.scores.end(),
                   [](const BeamAllScore& a, const BeamAllScore& b) {
                     return a.penalized > b.penalized;
                   });
  return out;
}

inline BeamAllOutput beam_all(ModelBackend& backend, const TreeRanker& ranker,
                              const TokenSeq& prefix, const std::vector<std::string>& candidates,
                              const BeamAllConfig& config) {
  const CompletionTree tree = ranker.build_tree(candidates);
  return beam_all(backend, tree, prefix, ranker.subtokens(), ranker.termination_tokens(), config);
}

}  // namespace treeranker
