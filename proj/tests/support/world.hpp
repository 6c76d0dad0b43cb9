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

// Small hand-written vocabulary and mock models shared by the unit tests.

#include <string>
#include <vector>

#include "json.hpp"

#include "treeranker/mock_backend.hpp"
#include "treeranker/vocabulary.hpp"

namespace treeranker::testing {

inline std::vector<std::string> world_tokens() {
  std::vector<std::string> out;
  for (char c = 'a'; c <= 'z'; ++c) out.emplace_back(1, c);
  for (char c = 'A'; c <= 'Z'; ++c) out.emplace_back(1, c);
  for (const char* t : {".", "(", ")", ";", "\n", " ", "add", "All", "clear", "ret", "is", "isEmpty",
                        "isDone", "Empty", "Done", "ab", "abc", "abd", "xyz", "get", "getName", "Name"}) {
    out.emplace_back(t);
  }
  return out;
}

inline const Vocabulary& world() {
  static const Vocabulary vocab(world_tokens());
  return vocab;
}

inline TokenSeq world_prefix(const std::string& text = "x.") { return greedy_tokenize(text, world()); }

// Mock spec written in the JSON mock format against the world vocabulary.
inline MockSpec world_spec(const nlohmann::json& doc) { return mock_spec_from_json(doc, world()); }

}  // namespace treeranker::testing
