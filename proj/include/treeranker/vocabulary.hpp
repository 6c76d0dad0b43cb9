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
 * Token layer: vocabularies, longest-match tokenization and the
 * main-token / subtoken prefix relation.
 *
 * A Vocabulary is a dense id <-> text table. Tokenization is greedy: at every
 * position the longest vocabulary token that matches is taken. The
 * SubtokenMap records, for each main token, every other vocabulary token
 * whose text is a strict prefix of it (and the inverse).
 */

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "treeranker/errors.hpp"

namespace treeranker {

using TokenId = std::int32_t;

// [A-Za-z0-9_]: the characters that may extend an identifier.
inline bool is_identifier_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c == '_';
}

// Maximal leading run of identifier characters.
inline std::string_view leading_identifier(std::string_view text) {
  std::size_t n = 0;
  while (n < text.size() && is_identifier_char(text[n])) ++n;
  return text.substr(0, n);
}

class Vocabulary {
 public:
  Vocabulary() = default;

  // Texts are indexed by id; ids are dense by construction.
  explicit Vocabulary(std::vector<std::string> texts) : texts_(std::move(texts)) {
    by_text_.reserve(texts_.size());
    for (std::size_t i = 0; i < texts_.size(); ++i) {
      if (texts_[i].empty()) {
        throw MalformedVocabulary("token " + std::to_string(i) + " has empty text");
      }
      auto [it, inserted] = by_text_.emplace(texts_[i], static_cast<TokenId>(i));
      if (!inserted) {
        throw MalformedVocabulary("duplicate token text for ids " +
                                  std::to_string(it->second) + " and " +
                                  std::to_string(i));
      }
      max_token_length_ = std::max(max_token_length_, texts_[i].size());
    }
  }

  std::size_t size() const { return texts_.size(); }
  bool contains(TokenId id) const {
    return id >= 0 && static_cast<std::size_t>(id) < texts_.size();
  }

  const std::string& text(TokenId id) const {
    if (!contains(id)) {
      throw InvalidArgument("token id out of range: " + std::to_string(id));
    }
    return texts_[static_cast<std::size_t>(id)];
  }

  std::optional<TokenId> find(std::string_view text) const {
    auto it = by_text_.find(std::string(text));
    if (it == by_text_.end()) return std::nullopt;
    return it->second;
  }

  TokenId id(std::string_view text) const {
    auto found = find(text);
    if (!found) throw InvalidArgument("unknown token text: " + std::string(text));
    return *found;
  }

  std::size_t max_token_length() const { return max_token_length_; }
  const std::vector<std::string>& texts() const { return texts_; }

  // Tokens whose first character cannot extend an identifier ("(", ".",
  // "\n", ...). These are the tokens that can end a completion.
  std::vector<TokenId> termination_tokens() const {
    std::vector<TokenId> out;
    for (std::size_t i = 0; i < texts_.size(); ++i) {
      if (!is_identifier_char(texts_[i].front())) out.push_back(static_cast<TokenId>(i));
    }
    return out;
  }

 private:
  std::vector<std::string> texts_;
  std::unordered_map<std::string, TokenId> by_text_;
  std::size_t max_token_length_ = 0;
};

struct TokenSeq {
  std::vector<TokenId> tokens;
  std::vector<std::string> texts;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }

  std::string joined() const {
    std::string out;
    for (const auto& t : texts) out += t;
    return out;
  }

  friend bool operator==(const TokenSeq&, const TokenSeq&) = default;
};

inline TokenSeq greedy_tokenize(std::string_view text, const Vocabulary& vocab) {
  TokenSeq out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t longest = std::min(vocab.max_token_length(), text.size() - pos);
    bool matched = false;
    for (std::size_t len = longest; len > 0; --len) {
      if (auto id = vocab.find(text.substr(pos, len))) {
        out.tokens.push_back(*id);
        out.texts.emplace_back(text.substr(pos, len));
        pos += len;
        matched = true;
        break;
      }
    }
    if (!matched) throw UncoverableText(std::string(text), pos);
  }
  return out;
}

// Turns identifier text into the token sequence the model would see. The
// greedy implementation is the default; a backend-side tokenizer can be
// plugged in when the local longest-match rule disagrees with upstream.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual TokenSeq tokenize(std::string_view text) const = 0;
  virtual const Vocabulary& vocab() const = 0;
};

class GreedyTokenizer final : public Tokenizer {
 public:
  explicit GreedyTokenizer(const Vocabulary& vocab) : vocab_(&vocab) {}
  TokenSeq tokenize(std::string_view text) const override {
    return greedy_tokenize(text, *vocab_);
  }
  const Vocabulary& vocab() const override { return *vocab_; }

 private:
  const Vocabulary* vocab_;
};

// ---------------------------------------------------------------------------
// Vocabulary file: one `<id>\t<escaped text>` record per line. Backslash,
// tab and newline are escaped as `\\`, `\t`, `\n`.
// ---------------------------------------------------------------------------

inline std::string escape_token_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string unescape_token_text(std::string_view text, std::size_t line) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '\\') {
      out += text[i];
      continue;
    }
    if (i + 1 == text.size()) throw ParseError(line, "dangling escape");
    switch (text[++i]) {
      case '\\': out += '\\'; break;
      case 't': out += '\t'; break;
      case 'n': out += '\n'; break;
      default: throw ParseError(line, std::string("unknown escape \\") + text[i]);
    }
  }
  return out;
}

inline Vocabulary read_vocabulary(std::istream& in) {
  std::map<long long, std::string> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(line_no, "missing tab separator");
    long long id = 0;
    try {
      std::size_t used = 0;
      id = std::stoll(line.substr(0, tab), &used);
      if (used != tab) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError(line_no, "bad token id");
    }
    if (id < 0) throw ParseError(line_no, "negative token id");
    if (!entries.emplace(id, unescape_token_text(std::string_view(line).substr(tab + 1), line_no))
             .second) {
      throw ParseError(line_no, "duplicate token id " + std::to_string(id));
    }
  }
  std::vector<std::string> texts;
  texts.reserve(entries.size());
  for (auto& [id, text] : entries) {
    if (id != static_cast<long long>(texts.size())) {
      throw MalformedVocabulary("token ids are not dense: missing id " +
                                std::to_string(texts.size()));
    }
    texts.push_back(std::move(text));
  }
  return Vocabulary(std::move(texts));
}

inline Vocabulary load_vocabulary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open vocabulary file: " + path);
  return read_vocabulary(in);
}

inline void write_vocabulary(std::ostream& out, const Vocabulary& vocab) {
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    out << i << '\t' << escape_token_text(vocab.texts()[i]) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Main-token / subtoken relation.
// ---------------------------------------------------------------------------

class SubtokenMap {
 public:
  const std::set<TokenId>& subtokens_of(TokenId main) const {
    auto it = by_main_.find(main);
    return it == by_main_.end() ? empty_ : it->second;
  }
  const std::set<TokenId>& mains_of(TokenId sub) const {
    auto it = by_sub_.find(sub);
    return it == by_sub_.end() ? empty_ : it->second;
  }
  bool is_subtoken_of(TokenId sub, TokenId main) const {
    return subtokens_of(main).contains(sub);
  }

  const std::map<TokenId, std::set<TokenId>>& by_main() const { return by_main_; }
  const std::map<TokenId, std::set<TokenId>>& by_sub() const { return by_sub_; }

 private:
  friend SubtokenMap build_subtoken_map(const Vocabulary&, std::span<const TokenId>);

  std::map<TokenId, std::set<TokenId>> by_main_;
  std::map<TokenId, std::set<TokenId>> by_sub_;
  inline static const std::set<TokenId> empty_{};
};

// For each main token, every vocabulary token whose text is a strict prefix
// of the main token's text.
inline SubtokenMap build_subtoken_map(const Vocabulary& vocab,
                                      std::span<const TokenId> main_tokens) {
  SubtokenMap map;
  for (TokenId main : main_tokens) {
    const std::string& text = vocab.text(main);
    auto& subs = map.by_main_[main];
    for (std::size_t len = 1; len < text.size(); ++len) {
      if (auto sub = vocab.find(std::string_view(text).substr(0, len))) {
        subs.insert(*sub);
        map.by_sub_[*sub].insert(main);
      }
    }
  }
  return map;
}

// Subtoken relation over the whole vocabulary, so that main tokens created
// by re-tokenization during a decode are covered too.
inline SubtokenMap build_full_subtoken_map(const Vocabulary& vocab) {
  std::vector<TokenId> all(vocab.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<TokenId>(i);
  return build_subtoken_map(vocab, all);
}

}  // namespace treeranker
