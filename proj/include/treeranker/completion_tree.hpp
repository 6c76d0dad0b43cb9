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
 * Prefix trie over the token sequences of candidate identifiers.
 *
 * Nodes live in an arena indexed by NodeId; the root is node 0. Every node
 * keeps the sorted set of candidates whose token path passes through it, so
 * "which candidates are still reachable" is a lookup rather than a walk.
 *
 * The tree is mutable during one decode: split_on_subtoken() inserts a
 * shared-prefix subtoken as a new intermediate node and re-tokenizes the
 * suffixes of the candidates moved under it. Subtrees that get replaced are
 * marked dead and left in the arena.
 */

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "treeranker/errors.hpp"
#include "treeranker/vocabulary.hpp"

namespace treeranker {

// Index into the caller's candidate list; also the tie-break order.
using CandidateId = std::size_t;
using NodeId = std::size_t;

struct TreeNode {
  std::optional<TokenId> edge;  // absent at the root
  NodeId parent = 0;
  std::map<TokenId, NodeId> children;
  std::vector<CandidateId> members;  // sorted, unique
  std::optional<CandidateId> terminal_for;
  std::size_t depth = 0;         // tokens from the root
  std::size_t prefix_chars = 0;  // characters spelled from the root
  std::uint64_t version = 0;     // tree version when the node was created
  bool alive = true;
};

struct TreeCandidate {
  std::string identifier;
  TokenSeq tokens;  // current path from the root
  NodeId terminal = 0;
};

struct Continuation {
  TokenId token;
  NodeId child;
  std::vector<CandidateId> members;

  friend bool operator==(const Continuation&, const Continuation&) = default;
};

class CompletionTree {
 public:
  static CompletionTree build(const std::vector<std::string>& identifiers,
                              const Tokenizer& tokenizer) {
    if (identifiers.empty()) throw EmptyCandidateList();
    CompletionTree tree(tokenizer);
    std::unordered_set<std::string> seen;
    for (const auto& id : identifiers) {
      if (!seen.insert(id).second) throw DuplicateCandidate(id);
    }
    for (CandidateId c = 0; c < identifiers.size(); ++c) {
      TokenSeq tokens = tokenizer.tokenize(identifiers[c]);
      if (tokens.empty()) throw InvalidArgument("candidate identifiers must be non-empty");
      tree.nodes_[0].members.push_back(c);
      tree.candidates_.push_back({identifiers[c], tokens, 0});
      tree.insert_below(0, c, tokens);
    }
    return tree;
  }

  NodeId root() const { return 0; }
  const TreeNode& node(NodeId id) const { return nodes_.at(id); }
  std::size_t candidate_count() const { return candidates_.size(); }
  // Allocated nodes, including detached ones; ids are [0, node_count()).
  std::size_t node_count() const { return nodes_.size(); }
  const TreeCandidate& candidate(CandidateId id) const { return candidates_.at(id); }
  const Tokenizer& tokenizer() const { return *tokenizer_; }
  const Vocabulary& vocab() const { return tokenizer_->vocab(); }

  // Bumped on every structural change.
  std::uint64_t version() const { return version_; }
  std::size_t splits() const { return splits_; }

  std::optional<NodeId> child(NodeId node, TokenId token) const {
    const auto& children = nodes_.at(node).children;
    auto it = children.find(token);
    if (it == children.end()) return std::nullopt;
    return it->second;
  }

  std::vector<Continuation> valid_continuations(NodeId node) const {
    std::vector<Continuation> out;
    for (const auto& [token, child] : nodes_.at(node).children) {
      out.push_back({token, child, nodes_[child].members});
    }
    return out;
  }

  std::optional<CandidateId> unique_candidate(NodeId node) const {
    const auto& members = nodes_.at(node).members;
    if (members.size() != 1) return std::nullopt;
    return members.front();
  }

  // Children of `node` whose main-token text has `subtoken` as a strict
  // prefix.
  std::vector<TokenId> children_extending(NodeId node, TokenId subtoken) const {
    const std::string& sub = vocab().text(subtoken);
    std::vector<TokenId> out;
    for (const auto& [token, child] : nodes_.at(node).children) {
      const std::string& main = vocab().text(token);
      if (main.size() > sub.size() && main.compare(0, sub.size(), sub) == 0) {
        out.push_back(token);
      }
    }
    return out;
  }

  // The single child main token that `subtoken` prefixes, if exactly one.
  std::optional<TokenId> main_token_push(NodeId node, TokenId subtoken,
                                         const SubtokenMap& submap) const {
    std::optional<TokenId> found;
    for (const auto& [token, child] : nodes_.at(node).children) {
      if (!submap.is_subtoken_of(subtoken, token)) continue;
      if (found) return std::nullopt;
      found = token;
    }
    return found;
  }

  // Inserts `subtoken` as a new child of `node`, moves every candidate whose
  // next main token starts with it underneath, and re-tokenizes what is left
  // of those identifiers. Returns the new node.
  NodeId split_on_subtoken(NodeId node, TokenId subtoken) {
    if (!nodes_.at(node).alive) throw InvalidArgument("split on a detached node");
    if (nodes_[node].children.contains(subtoken)) {
      throw NotASharedPrefix("token " + std::to_string(subtoken) + " is already a child edge");
    }
    const std::vector<TokenId> affected = children_extending(node, subtoken);
    if (affected.size() < 2) {
      throw NotASharedPrefix("\"" + vocab().text(subtoken) + "\" prefixes " +
                             std::to_string(affected.size()) + " child main token(s)");
    }
    ++version_;
    std::vector<CandidateId> moved;
    for (TokenId token : affected) {
      const NodeId old_child = nodes_[node].children.at(token);
      const auto& m = nodes_[old_child].members;
      moved.insert(moved.end(), m.begin(), m.end());
      detach(old_child);
      nodes_[node].children.erase(token);
    }
    std::sort(moved.begin(), moved.end());

    const NodeId split = new_node(node, subtoken);
    for (CandidateId c : moved) {
      nodes_[split].members.push_back(c);
      const std::string rest = candidates_[c].identifier.substr(nodes_[split].prefix_chars);
      const TokenSeq suffix = tokenizer_->tokenize(rest);
      TokenSeq path = path_tokens(split);
      path.tokens.insert(path.tokens.end(), suffix.tokens.begin(), suffix.tokens.end());
      path.texts.insert(path.texts.end(), suffix.texts.begin(), suffix.texts.end());
      candidates_[c].tokens = std::move(path);
      insert_below(split, c, suffix);
    }
    ++splits_;
    return split;
  }

  TokenSeq path_tokens(NodeId node) const {
    TokenSeq out;
    for (NodeId cur = node; cur != 0; cur = nodes_[cur].parent) {
      out.tokens.push_back(*nodes_[cur].edge);
      out.texts.push_back(vocab().text(*nodes_[cur].edge));
    }
    std::reverse(out.tokens.begin(), out.tokens.end());
    std::reverse(out.texts.begin(), out.texts.end());
    return out;
  }

  // Live nodes that have at least one child.
  std::size_t internal_node_count() const {
    std::size_t n = 0;
    for (const auto& nd : nodes_) {
      if (nd.alive && !nd.children.empty()) ++n;
    }
    return n;
  }

  std::size_t live_node_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.alive; }));
  }

  // Depth-first rendering, children in ascending token-id order:
  //   <root> members=[0,1,2]
  //     "add" #3 members=[0,1] terminal=0
  std::string dump() const {
    std::ostringstream out;
    dump_node(out, 0, 0);
    return out.str();
  }

  // Throws std::logic_error describing the first violated structural
  // invariant.
  void check_invariants() const {
    std::vector<CandidateId> all(candidates_.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    if (nodes_[0].members != all) fail("root members are not the full candidate set");
    check_node(0);
    for (CandidateId c = 0; c < candidates_.size(); ++c) {
      const auto& cand = candidates_[c];
      const NodeId term = cand.terminal;
      if (!nodes_[term].alive || nodes_[term].terminal_for != c) {
        fail("candidate " + std::to_string(c) + " lost its terminal node");
      }
      const TokenSeq path = path_tokens(term);
      if (path.joined() != cand.identifier) {
        fail("path of candidate " + std::to_string(c) + " does not spell its identifier");
      }
      if (path != cand.tokens) fail("candidate token sequence out of sync with its path");
    }
  }

 private:
  explicit CompletionTree(const Tokenizer& tokenizer) : tokenizer_(&tokenizer) {
    nodes_.emplace_back();
  }

  NodeId new_node(NodeId parent, TokenId edge) {
    TreeNode n;
    n.edge = edge;
    n.parent = parent;
    n.depth = nodes_[parent].depth + 1;
    n.prefix_chars = nodes_[parent].prefix_chars + vocab().text(edge).size();
    n.version = version_;
    nodes_.push_back(std::move(n));
    const NodeId id = nodes_.size() - 1;
    nodes_[parent].children.emplace(edge, id);
    return id;
  }

  // Adds `c` to every node along `suffix` below `from` (not to `from`).
  void insert_below(NodeId from, CandidateId c, const TokenSeq& suffix) {
    NodeId cur = from;
    for (TokenId token : suffix.tokens) {
      auto next = child(cur, token);
      cur = next ? *next : new_node(cur, token);
      nodes_[cur].members.push_back(c);
    }
    if (nodes_[cur].terminal_for) {
      throw DuplicateCandidate(candidates_[c].identifier);
    }
    nodes_[cur].terminal_for = c;
    candidates_[c].terminal = cur;
  }

  void detach(NodeId node) {
    std::vector<NodeId> stack{node};
    while (!stack.empty()) {
      const NodeId cur = stack.back();
      stack.pop_back();
      nodes_[cur].alive = false;
      for (const auto& [t, ch] : nodes_[cur].children) stack.push_back(ch);
    }
  }

  void dump_node(std::ostringstream& out, NodeId id, std::size_t indent) const {
    const TreeNode& n = nodes_[id];
    out << std::string(indent * 2, ' ');
    if (n.edge) {
      out << '"' << escape_token_text(vocab().text(*n.edge)) << "\" #" << *n.edge;
    } else {
      out << "<root>";
    }
    out << " members=[";
    for (std::size_t i = 0; i < n.members.size(); ++i) {
      out << (i ? "," : "") << n.members[i];
    }
    out << ']';
    if (n.terminal_for) out << " terminal=" << *n.terminal_for;
    out << '\n';
    for (const auto& [t, ch] : n.children) dump_node(out, ch, indent + 1);
  }

  void check_node(NodeId id) const {
    const TreeNode& n = nodes_[id];
    if (!n.alive) fail("reachable node marked dead");
    if (!std::is_sorted(n.members.begin(), n.members.end()) ||
        std::adjacent_find(n.members.begin(), n.members.end()) != n.members.end()) {
      fail("members of node " + std::to_string(id) + " not sorted/unique");
    }
    std::vector<CandidateId> expected;
    if (n.terminal_for) expected.push_back(*n.terminal_for);
    for (const auto& [t, ch] : n.children) {
      const TreeNode& c = nodes_[ch];
      if (c.parent != id || c.edge != t) fail("child link of node " + std::to_string(id) + " broken");
      expected.insert(expected.end(), c.members.begin(), c.members.end());
      check_node(ch);
    }
    std::sort(expected.begin(), expected.end());
    if (std::adjacent_find(expected.begin(), expected.end()) != expected.end()) {
      fail("candidate appears under two children of node " + std::to_string(id));
    }
    if (expected != n.members) {
      fail("members of node " + std::to_string(id) + " differ from children union");
    }
  }

  [[noreturn]] static void fail(const std::string& what) {
    throw std::logic_error("completion tree invariant: " + what);
  }

  const Tokenizer* tokenizer_;
  std::vector<TreeNode> nodes_;
  std::vector<TreeCandidate> candidates_;
  std::uint64_t version_ = 0;
  std::size_t splits_ = 0;
};

}  // namespace treeranker
