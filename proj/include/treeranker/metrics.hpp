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

#include <cmath>
#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "treeranker/errors.hpp"

namespace treeranker {

// 1-based rank of the ground truth; nullopt when it was not returned.
using GroundTruthRank = std::optional<std::size_t>;

inline double mrr(std::span<const GroundTruthRank> ranks) {
  if (ranks.empty()) throw EmptyInput("mrr over no ranks");
  double sum = 0.0;
  for (const auto& r : ranks) {
    if (r) {
      if (*r == 0) throw InvalidArgument("ranks are 1-based");
      sum += 1.0 / static_cast<double>(*r);
    }
  }
  return sum / static_cast<double>(ranks.size());
}

inline double recall_at_k(std::span<const GroundTruthRank> ranks, std::size_t k) {
  if (ranks.empty()) throw EmptyInput("recall over no ranks");
  if (k < 1) throw InvalidArgument("k must be at least 1");
  std::size_t hits = 0;
  for (const auto& r : ranks) {
    if (r && *r <= k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

inline double exact_match_rate(std::span<const bool> matches) {
  if (matches.empty()) throw EmptyInput("exact match over no points");
  std::size_t hits = 0;
  for (bool m : matches) hits += m ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(matches.size());
}

// Ground-truth token count over decode steps; above 1 means the answer was
// settled in fewer steps than spelling it out.
inline double token_efficiency(std::size_t ground_truth_tokens, std::size_t generated_steps) {
  if (generated_steps == 0) throw ZeroGenerated();
  return static_cast<double>(ground_truth_tokens) / static_cast<double>(generated_steps);
}

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw EmptyInput("mean of no samples");
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

// Sample standard deviation; 0 for fewer than two samples.
inline double sample_stddev(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

struct MeanCi {
  double mean = 0.0;
  double ci95 = 0.0;  // half-width
};

// Student-t 95% interval half-width over repeated measurements.
inline MeanCi mean_ci95(std::span<const double> samples) {
  MeanCi out{mean(samples), 0.0};
  if (samples.size() < 2) return out;
  const double n = static_cast<double>(samples.size());
  const boost::math::students_t dist(n - 1.0);
  const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
  out.ci95 = t * sample_stddev(samples) / std::sqrt(n);
  return out;
}

inline double median(std::vector<double> xs) {
  if (xs.empty()) throw EmptyInput("median of no samples");
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

}  // namespace treeranker
