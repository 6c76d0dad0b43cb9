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

// Completion-point datasets: JSONL, one object per line.
//
//   { "id": str, "prefix": str, "candidates": [str], "ground_truth": str,
//     "baselines": {name: [str]}?, "meta": {}? }

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "treeranker/errors.hpp"

namespace treeranker {

struct CompletionPoint {
  std::string id;
  std::string prefix;
  std::vector<std::string> candidates;  // IDE order
  std::string ground_truth;
  std::map<std::string, std::vector<std::string>> baselines;
  nlohmann::json meta = nlohmann::json::object();
};

struct DatasetIssue {
  std::size_t line = 0;
  std::string reason;
  bool rejected = false;  // false: point kept with a warning
};

struct LoadedDataset {
  std::vector<CompletionPoint> points;
  std::vector<DatasetIssue> issues;
};

namespace detail {

inline std::vector<std::string> string_list(const nlohmann::json& obj, const std::string& field) {
  if (!obj.is_array()) throw SchemaError(field, "must be an array of strings");
  std::vector<std::string> out;
  for (const auto& v : obj) {
    if (!v.is_string()) throw SchemaError(field, "must be an array of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

inline std::string required_string(const nlohmann::json& obj, const std::string& field) {
  if (!obj.contains(field)) throw SchemaError(field, "missing");
  if (!obj.at(field).is_string()) throw SchemaError(field, "must be a string");
  return obj.at(field).get<std::string>();
}

}  // namespace detail

// Parses one record. Duplicate candidates are dropped (first occurrence
// wins) and reported through `warnings`.
inline CompletionPoint completion_point_from_json(const nlohmann::json& obj,
                                                  std::vector<std::string>* warnings = nullptr) {
  if (!obj.is_object()) throw SchemaError("<record>", "must be a JSON object");
  CompletionPoint p;
  p.id = detail::required_string(obj, "id");
  p.prefix = detail::required_string(obj, "prefix");
  p.ground_truth = detail::required_string(obj, "ground_truth");
  if (!obj.contains("candidates")) throw SchemaError("candidates", "missing");
  std::unordered_set<std::string> seen;
  for (auto& c : detail::string_list(obj.at("candidates"), "candidates")) {
    if (c.empty()) throw SchemaError("candidates", "empty identifier");
    if (!seen.insert(c).second) {
      if (warnings) warnings->push_back("duplicate candidate \"" + c + "\" dropped");
      continue;
    }
    p.candidates.push_back(std::move(c));
  }
  if (p.candidates.empty()) throw SchemaError("candidates", "empty candidate list");
  if (obj.contains("baselines") && !obj.at("baselines").is_null()) {
    if (!obj.at("baselines").is_object()) throw SchemaError("baselines", "must be an object");
    for (const auto& [name, list] : obj.at("baselines").items()) {
      p.baselines[name] = detail::string_list(list, "baselines." + name);
    }
  }
  if (obj.contains("meta") && !obj.at("meta").is_null()) p.meta = obj.at("meta");
  return p;
}

inline nlohmann::ordered_json completion_point_to_json(const CompletionPoint& p) {
  nlohmann::ordered_json out;
  out["id"] = p.id;
  out["prefix"] = p.prefix;
  out["candidates"] = p.candidates;
  out["ground_truth"] = p.ground_truth;
  if (!p.baselines.empty()) out["baselines"] = p.baselines;
  if (!p.meta.empty()) out["meta"] = p.meta;
  return out;
}

// Lenient reader: bad lines are reported and skipped, points whose ground
// truth is not a candidate are rejected with "truth-not-in-candidates".
inline LoadedDataset parse_dataset(std::istream& in) {
  LoadedDataset out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      out.issues.push_back({line_no, std::string("parse error: ") + e.what(), true});
      continue;
    }
    std::vector<std::string> warnings;
    CompletionPoint p;
    try {
      p = completion_point_from_json(obj, &warnings);
    } catch (const SchemaError& e) {
      out.issues.push_back({line_no, std::string("schema error: ") + e.what(), true});
      continue;
    }
    for (auto& w : warnings) out.issues.push_back({line_no, std::move(w), false});
    if (std::find(p.candidates.begin(), p.candidates.end(), p.ground_truth) ==
        p.candidates.end()) {
      out.issues.push_back({line_no, "truth-not-in-candidates", true});
      continue;
    }
    out.points.push_back(std::move(p));
  }
  return out;
}

inline LoadedDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset: " + path);
  return parse_dataset(in);
}

// Strict variant: the first bad line is an error.
inline std::vector<CompletionPoint> load_dataset_strict(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset: " + path);
  std::string line;
  std::size_t line_no = 0;
  std::vector<CompletionPoint> points;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    }
    CompletionPoint p = completion_point_from_json(obj);
    if (std::find(p.candidates.begin(), p.candidates.end(), p.ground_truth) ==
        p.candidates.end()) {
      throw SchemaError("ground_truth", "truth-not-in-candidates (line " + std::to_string(line_no) + ")");
    }
    points.push_back(std::move(p));
  }
  return points;
}

}  // namespace treeranker
