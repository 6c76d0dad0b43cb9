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
 * Offline evaluation of ranking strategies over a completion-point dataset.
 *
 * Every point counts in every strategy's denominator; a point that fails
 * (e.g. its prefix cannot be tokenized) counts as a miss and is listed in
 * the report. A backend error aborts the strategy.
 *
 * Timing: ranking time runs from the first backend response to the end of
 * the decode. With simulated timing (the default for backends that declare
 * a per-pass latency, i.e. mocks) it is (passes - 1) * latency, which makes
 * reports reproducible bit for bit. Total time adds a fixed first-token
 * latency. Each point is run `runs` times; per-point means and Student-t
 * half-widths are averaged over the dataset.
 */

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "treeranker/backend.hpp"
#include "treeranker/baselines.hpp"
#include "treeranker/dataset.hpp"
#include "treeranker/errors.hpp"
#include "treeranker/metrics.hpp"
#include "treeranker/ranker.hpp"
#include "treeranker/vocabulary.hpp"

namespace treeranker {

enum class StrategyKind { TreeRanker, BeamAll, Greedy, Beam, IdeBaseline };

struct Strategy {
  std::string name;
  StrategyKind kind = StrategyKind::TreeRanker;
  std::size_t width = 0;
  bool filtered = false;
  std::string baseline;  // for IdeBaseline
};

inline const std::vector<std::string>& builtin_strategies() {
  static const std::vector<std::string> names{"greedy",  "beam5",   "beam20",    "beam5f",
                                              "beam20f", "beamall", "treeranker"};
  return names;
}

inline std::string valid_strategy_list() {
  std::string out;
  for (const auto& n : builtin_strategies()) out += n + ", ";
  return out + "ide-baseline:<name>";
}

inline Strategy parse_strategy(const std::string& name) {
  if (name == "treeranker") return {name, StrategyKind::TreeRanker, 0, false, {}};
  if (name == "beamall") return {name, StrategyKind::BeamAll, 0, false, {}};
  if (name == "greedy") return {name, StrategyKind::Greedy, 0, false, {}};
  if (name == "beam5") return {name, StrategyKind::Beam, 5, false, {}};
  if (name == "beam20") return {name, StrategyKind::Beam, 20, false, {}};
  if (name == "beam5f") return {name, StrategyKind::Beam, 5, true, {}};
  if (name == "beam20f") return {name, StrategyKind::Beam, 20, true, {}};
  const std::string ide = "ide-baseline:";
  if (name.rfind(ide, 0) == 0 && name.size() > ide.size()) {
    return {name, StrategyKind::IdeBaseline, 0, false, name.substr(ide.size())};
  }
  throw ConfigError("unknown strategy '" + name + "'; valid strategies: " + valid_strategy_list());
}

enum class TimingMode { Auto, Simulated, Wall };

inline TimingMode parse_timing_mode(const std::string& s) {
  if (s == "auto") return TimingMode::Auto;
  if (s == "simulated") return TimingMode::Simulated;
  if (s == "wall") return TimingMode::Wall;
  throw ConfigError("timing mode must be auto, simulated or wall");
}

struct EvalConfig {
  DecodeConfig decode;
  double alpha = 1.0;
  std::size_t runs = 5;
  double first_token_ms = 75.0;
  std::size_t jobs = 1;
  TimingMode timing = TimingMode::Auto;
  // Step budget of the generative baselines.
  std::size_t generation_max_steps = 16;
};

struct PointResult {
  std::string id;
  GroundTruthRank rank;
  bool exact_match = false;
  std::size_t steps = 0;  // forward passes
  std::optional<std::size_t> gt_tokens;
  bool early_stopped = false;
  std::size_t splits = 0;
  std::size_t pushes = 0;
  bool off_tree_exit = false;
  std::vector<double> ranking_seconds;  // one sample per run
  std::optional<std::string> error;
};

struct StrategyReport {
  std::string strategy;
  std::size_t points = 0;
  std::size_t failed = 0;
  bool aborted = false;
  std::string abort_reason;
  double mrr = 0.0;
  double recall1 = 0.0;
  double recall5 = 0.0;
  double recall20 = 0.0;
  double em = 0.0;
  std::optional<double> token_efficiency;
  double avg_generated_tokens = 0.0;
  double std_generated_tokens = 0.0;
  double early_stop_rate = 0.0;
  double split_rate = 0.0;
  double push_rate = 0.0;
  double single_pass_rate = 0.0;
  double within_two_passes_rate = 0.0;
  double off_tree_rate = 0.0;
  MeanCi ranking_time;
  MeanCi total_time;
  std::size_t backend_calls = 0;
  std::vector<PointResult> per_point;
};

struct DatasetSummary {
  std::size_t points = 0;
  std::size_t rejected = 0;
  double avg_candidates = 0.0;
  double median_candidates = 0.0;
  double avg_gt_tokens = 0.0;
  double median_gt_tokens = 0.0;
};

struct EvalReport {
  DatasetSummary dataset;
  std::vector<DatasetIssue> issues;
  std::vector<StrategyReport> strategies;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();

  bool partial() const {
    return std::any_of(strategies.begin(), strategies.end(),
                       [](const StrategyReport& s) { return s.aborted || s.failed > 0; });
  }
  bool any_aborted() const {
    return std::any_of(strategies.begin(), strategies.end(),
                       [](const StrategyReport& s) { return s.aborted; });
  }
};

// Shared across workers for immutable backends (mocks); a fresh session per
// call for remote backends.
using BackendFactory = std::function<std::shared_ptr<ModelBackend>()>;

inline std::optional<std::size_t> position_of(const std::vector<std::string>& list,
                                              const std::string& item) {
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (list[i] == item) return i + 1;
  }
  return std::nullopt;
}

// One run of one strategy on one point. Throws BackendError on backend
// failure and other treeranker::Error subclasses on bad point data.
// `backend` may be null for ide-baseline strategies.
inline PointResult run_point(const Strategy& strategy, const CompletionPoint& point,
                             ModelBackend* backend, const TreeRanker& ranker,
                             const EvalConfig& config) {
  PointResult out;
  out.id = point.id;
  try {
    out.gt_tokens = ranker.tokenizer().tokenize(point.ground_truth).size();
  } catch (const UncoverableText&) {
    out.gt_tokens.reset();
  }

  if (strategy.kind == StrategyKind::IdeBaseline) {
    auto it = point.baselines.find(strategy.baseline);
    if (it == point.baselines.end()) {
      throw SchemaError("baselines." + strategy.baseline, "missing for point " + point.id);
    }
    out.rank = position_of(it->second, point.ground_truth);
    out.exact_match = out.rank == 1u;
    out.ranking_seconds.push_back(0.0);
    return out;
  }

  if (backend == nullptr) throw InvalidArgument("strategy " + strategy.name + " needs a backend");
  const TokenSeq prefix = ranker.tokenizer().tokenize(point.prefix);
  TimedBackend timed(*backend);
  const auto started = TimedBackend::Clock::now();

  switch (strategy.kind) {
    case StrategyKind::TreeRanker: {
      const RankResult r = ranker.rank(timed, prefix, point.candidates, config.decode);
      const std::size_t rank = r.ground_truth_rank(point.ground_truth);
      if (rank > 0) out.rank = rank;
      out.exact_match = rank == 1 && !r.stats.off_tree_exit;
      out.early_stopped = r.stats.early_stopped;
      out.splits = r.stats.splits;
      out.pushes = r.stats.pushes;
      out.off_tree_exit = r.stats.off_tree_exit;
      break;
    }
    case StrategyKind::BeamAll: {
      BeamAllConfig bc;
      bc.alpha = config.alpha;
      bc.constrained = config.decode.constrained;
      bc.include_termination_mass = config.decode.include_termination_mass;
      const BeamAllOutput r = beam_all(timed, ranker, prefix, point.candidates, bc);
      for (std::size_t i = 0; i < r.scores.size(); ++i) {
        if (r.scores[i].identifier == point.ground_truth) out.rank = i + 1;
      }
      out.exact_match = out.rank == 1u;
      break;
    }
    case StrategyKind::Greedy: {
      const GreedyResult r =
          greedy_complete(timed, prefix, ranker.vocab(), config.generation_max_steps);
      if (r.identifier == point.ground_truth) out.rank = 1;
      out.exact_match = out.rank == 1u;
      break;
    }
    case StrategyKind::Beam: {
      const BeamSearchOutput r = beam_search(timed, prefix, ranker.vocab(), strategy.width,
                                             config.generation_max_steps);
      std::vector<BeamResult> beams =
          strategy.filtered ? filter_to_candidates(r.beams, point.candidates) : r.beams;
      for (std::size_t i = 0; i < beams.size(); ++i) {
        if (beams[i].identifier == point.ground_truth) {
          out.rank = i + 1;
          break;
        }
      }
      out.exact_match = !r.beams.empty() && r.beams.front().identifier == point.ground_truth;
      break;
    }
    case StrategyKind::IdeBaseline:
      break;
  }

  const auto finished = TimedBackend::Clock::now();
  out.steps = timed.calls();
  const auto latency = backend->simulated_latency_seconds();
  const bool simulated = config.timing == TimingMode::Simulated ||
                         (config.timing == TimingMode::Auto && latency.has_value());
  if (simulated) {
    const double per_pass = latency.value_or(0.0);
    out.ranking_seconds.push_back(out.steps > 0 ? static_cast<double>(out.steps - 1) * per_pass
                                                : 0.0);
  } else {
    const auto from = timed.first_response().value_or(started);
    out.ranking_seconds.push_back(std::chrono::duration<double>(finished - from).count());
  }
  return out;
}

inline StrategyReport aggregate(const std::string& name, std::vector<PointResult> results,
                                const EvalConfig& config) {
  StrategyReport rep;
  rep.strategy = name;
  rep.points = results.size();
  if (results.empty()) throw EmptyInput("no points to aggregate");

  std::vector<GroundTruthRank> ranks;
  std::vector<bool> em;
  std::vector<double> steps, ter, rank_means, rank_cis;
  std::size_t early = 0, split = 0, push = 0, single = 0, two = 0, off = 0;
  for (const auto& r : results) {
    ranks.push_back(r.rank);
    em.push_back(r.exact_match);
    if (r.error) {
      ++rep.failed;
      continue;
    }
    rep.backend_calls += r.steps;
    steps.push_back(static_cast<double>(r.steps));
    if (r.gt_tokens && r.steps > 0) ter.push_back(token_efficiency(*r.gt_tokens, r.steps));
    early += r.early_stopped ? 1 : 0;
    split += r.splits > 0 ? 1 : 0;
    push += r.pushes > 0 ? 1 : 0;
    single += r.steps == 1 ? 1 : 0;
    two += (r.steps >= 1 && r.steps <= 2) ? 1 : 0;
    off += r.off_tree_exit ? 1 : 0;
    if (!r.ranking_seconds.empty()) {
      const MeanCi m = mean_ci95(r.ranking_seconds);
      rank_means.push_back(m.mean);
      rank_cis.push_back(m.ci95);
    }
  }
  rep.mrr = mrr(ranks);
  rep.recall1 = recall_at_k(ranks, 1);
  rep.recall5 = recall_at_k(ranks, 5);
  rep.recall20 = recall_at_k(ranks, 20);
  const std::unique_ptr<bool[]> em_flags(new bool[em.size()]);
  std::copy(em.begin(), em.end(), em_flags.get());
  rep.em = exact_match_rate(std::span<const bool>(em_flags.get(), em.size()));
  if (!ter.empty()) rep.token_efficiency = mean(ter);
  const double ok = static_cast<double>(rep.points - rep.failed);
  if (!steps.empty()) {
    rep.avg_generated_tokens = mean(steps);
    rep.std_generated_tokens = sample_stddev(steps);
    rep.early_stop_rate = static_cast<double>(early) / ok;
    rep.split_rate = static_cast<double>(split) / ok;
    rep.push_rate = static_cast<double>(push) / ok;
    rep.single_pass_rate = static_cast<double>(single) / ok;
    rep.within_two_passes_rate = static_cast<double>(two) / ok;
    rep.off_tree_rate = static_cast<double>(off) / ok;
  }
  if (!rank_means.empty()) {
    rep.ranking_time = {mean(rank_means), mean(rank_cis)};
    rep.total_time = {rep.ranking_time.mean + config.first_token_ms / 1000.0,
                      rep.ranking_time.ci95};
  }
  rep.per_point = std::move(results);
  return rep;
}

inline StrategyReport evaluate(const Strategy& strategy,
                               const std::vector<CompletionPoint>& points,
                               const BackendFactory& make_backend, const TreeRanker& ranker,
                               const EvalConfig& config) {
  if (points.empty()) throw EmptyInput("dataset has no completion points");
  if (config.runs < 1) throw ConfigError("runs must be at least 1");

  std::vector<PointResult> results(points.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::mutex abort_mutex;
  std::string abort_reason;

  auto worker = [&] {
    std::shared_ptr<ModelBackend> backend;
    if (strategy.kind != StrategyKind::IdeBaseline) backend = make_backend();
    for (std::size_t i = next++; i < points.size() && !abort; i = next++) {
      PointResult merged;
      for (std::size_t run = 0; run < config.runs; ++run) {
        try {
          PointResult r = run_point(strategy, points[i], backend.get(), ranker, config);
          if (run == 0) {
            merged = std::move(r);
          } else {
            merged.ranking_seconds.push_back(r.ranking_seconds.front());
          }
        } catch (const BackendError& e) {
          std::lock_guard lock(abort_mutex);
          if (!abort.exchange(true)) abort_reason = "point " + points[i].id + ": " + e.what();
          return;
        } catch (const Error& e) {
          merged = PointResult{};
          merged.id = points[i].id;
          merged.error = e.what();
          break;
        }
      }
      results[i] = std::move(merged);
    }
  };

  const std::size_t jobs = std::max<std::size_t>(1, std::min(config.jobs, points.size()));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }

  if (abort) {
    StrategyReport rep;
    rep.strategy = strategy.name;
    rep.points = points.size();
    rep.aborted = true;
    rep.abort_reason = abort_reason;
    return rep;
  }
  return aggregate(strategy.name, std::move(results), config);
}

inline DatasetSummary summarize_dataset(const LoadedDataset& data, const TreeRanker& ranker) {
  DatasetSummary s;
  s.points = data.points.size();
  s.rejected = static_cast<std::size_t>(std::count_if(
      data.issues.begin(), data.issues.end(), [](const DatasetIssue& i) { return i.rejected; }));
  if (data.points.empty()) return s;
  std::vector<double> sizes, gt;
  for (const auto& p : data.points) {
    sizes.push_back(static_cast<double>(p.candidates.size()));
    try {
      gt.push_back(static_cast<double>(ranker.tokenizer().tokenize(p.ground_truth).size()));
    } catch (const UncoverableText&) {
    }
  }
  s.avg_candidates = mean(sizes);
  s.median_candidates = median(sizes);
  if (!gt.empty()) {
    s.avg_gt_tokens = mean(gt);
    s.median_gt_tokens = median(gt);
  }
  return s;
}

inline EvalReport evaluate_all(const std::vector<Strategy>& strategies, const LoadedDataset& data,
                               const BackendFactory& make_backend, const TreeRanker& ranker,
                               const EvalConfig& config) {
  if (data.points.empty()) throw EmptyInput("dataset has no completion points");
  EvalReport report;
  report.dataset = summarize_dataset(data, ranker);
  report.issues = data.issues;
  for (const auto& s : strategies) {
    report.strategies.push_back(evaluate(s, data.points, make_backend, ranker, config));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Serialization and rendering.
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json strategy_to_json(const StrategyReport& s, bool with_points) {
  nlohmann::ordered_json j;
  j["strategy"] = s.strategy;
  j["points"] = s.points;
  j["failed"] = s.failed;
  j["aborted"] = s.aborted;
  if (s.aborted) {
    j["abort_reason"] = s.abort_reason;
    return j;
  }
  j["mrr"] = s.mrr;
  j["recall@1"] = s.recall1;
  j["recall@5"] = s.recall5;
  j["recall@20"] = s.recall20;
  j["em"] = s.em;
  j["token_efficiency"] =
      s.token_efficiency ? nlohmann::ordered_json(*s.token_efficiency) : nlohmann::ordered_json();
  j["avg_generated_tokens"] = s.avg_generated_tokens;
  j["std_generated_tokens"] = s.std_generated_tokens;
  j["early_stop_rate"] = s.early_stop_rate;
  j["split_rate"] = s.split_rate;
  j["push_rate"] = s.push_rate;
  j["single_pass_rate"] = s.single_pass_rate;
  j["within_two_passes_rate"] = s.within_two_passes_rate;
  j["off_tree_rate"] = s.off_tree_rate;
  j["ranking_time"] = {{"mean", s.ranking_time.mean}, {"ci95", s.ranking_time.ci95}};
  j["total_time"] = {{"mean", s.total_time.mean}, {"ci95", s.total_time.ci95}};
  j["backend_calls"] = s.backend_calls;
  if (with_points) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& p : s.per_point) {
      nlohmann::ordered_json pj;
      pj["id"] = p.id;
      pj["rank"] = p.rank ? nlohmann::ordered_json(*p.rank) : nlohmann::ordered_json();
      pj["steps"] = p.steps;
      if (p.error) pj["error"] = *p.error;
      arr.push_back(std::move(pj));
    }
    j["per_point"] = std::move(arr);
  }
  return j;
}

inline nlohmann::ordered_json report_to_json(const EvalReport& report, bool with_points = false) {
  nlohmann::ordered_json j;
  j["config"] = report.config;
  nlohmann::ordered_json ds;
  ds["points"] = report.dataset.points;
  ds["rejected"] = report.dataset.rejected;
  ds["avg_candidates"] = report.dataset.avg_candidates;
  ds["median_candidates"] = report.dataset.median_candidates;
  ds["avg_gt_tokens"] = report.dataset.avg_gt_tokens;
  ds["median_gt_tokens"] = report.dataset.median_gt_tokens;
  j["dataset"] = std::move(ds);
  auto warnings = nlohmann::ordered_json::array();
  for (const auto& issue : report.issues) {
    warnings.push_back({{"line", issue.line}, {"reason", issue.reason}, {"rejected", issue.rejected}});
  }
  for (const auto& s : report.strategies) {
    for (const auto& p : s.per_point) {
      if (p.error) {
        warnings.push_back({{"strategy", s.strategy}, {"point", p.id}, {"reason", *p.error}});
      }
    }
  }
  j["warnings"] = std::move(warnings);
  j["partial"] = report.partial();
  auto strategies = nlohmann::ordered_json::array();
  for (const auto& s : report.strategies) strategies.push_back(strategy_to_json(s, with_points));
  j["strategies"] = std::move(strategies);
  return j;
}

namespace detail {

inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

inline std::string pad(const std::string& s, std::size_t width, bool left = false) {
  if (s.size() >= width) return s;
  return left ? s + std::string(width - s.size(), ' ') : std::string(width - s.size(), ' ') + s;
}

}  // namespace detail

// Columns: strategy, MRR, R@1, R@5, R@20, EM, TER, ranking time (ms).
inline std::string render_table(const EvalReport& report) {
  using detail::fixed;
  using detail::pad;
  std::string out;
  out += pad("strategy", 24, true) + pad("MRR", 8) + pad("R@1", 8) + pad("R@5", 8) +
         pad("R@20", 8) + pad("EM", 8) + pad("TER", 8) + pad("rank-ms", 18) + "\n";
  out += std::string(84, '-') + "\n";
  for (const auto& s : report.strategies) {
    out += pad(s.strategy, 24, true);
    if (s.aborted) {
      out += "  aborted: " + s.abort_reason + "\n";
      continue;
    }
    out += pad(fixed(s.mrr, 3), 8) + pad(fixed(s.recall1, 3), 8) + pad(fixed(s.recall5, 3), 8) +
           pad(fixed(s.recall20, 3), 8) + pad(fixed(s.em, 3), 8) +
           pad(s.token_efficiency ? fixed(*s.token_efficiency, 2) : "-", 8) +
           pad(fixed(s.ranking_time.mean * 1000.0, 1) + " +- " +
                   fixed(s.ranking_time.ci95 * 1000.0, 1),
               18) +
           "\n";
  }
  const auto& d = report.dataset;
  out += "\npoints: " + std::to_string(d.points) + " (rejected " + std::to_string(d.rejected) +
         "), avg candidates " + fixed(d.avg_candidates, 1) + ", avg ground-truth tokens " +
         fixed(d.avg_gt_tokens, 2) + "\n";
  if (!report.issues.empty()) {
    out += "\nwarnings:\n";
    for (const auto& i : report.issues) {
      out += "  line " + std::to_string(i.line) + ": " + i.reason +
             (i.rejected ? " (rejected)" : "") + "\n";
    }
  }
  return out;
}

// Tree-manipulation statistics for one strategy (normally treeranker).
inline nlohmann::ordered_json stats_to_json(const StrategyReport& s, const DatasetSummary& d) {
  nlohmann::ordered_json j;
  j["strategy"] = s.strategy;
  j["total_examples"] = d.points;
  j["avg_ground_truth_tokens"] = d.avg_gt_tokens;
  j["median_ground_truth_tokens"] = d.median_gt_tokens;
  j["early_completion_rate"] = s.early_stop_rate;
  j["split_rate"] = s.split_rate;
  j["push_rate"] = s.push_rate;
  j["avg_generated_tokens"] = s.avg_generated_tokens;
  j["std_generated_tokens"] = s.std_generated_tokens;
  j["single_forward_pass_rate"] = s.single_pass_rate;
  j["within_two_passes_rate"] = s.within_two_passes_rate;
  j["token_efficiency"] =
      s.token_efficiency ? nlohmann::ordered_json(*s.token_efficiency) : nlohmann::ordered_json();
  return j;
}

inline std::string render_stats(const StrategyReport& s, const DatasetSummary& d) {
  using detail::fixed;
  using detail::pad;
  auto row = [](const std::string& k, const std::string& v) {
    return detail::pad(k, 32, true) + detail::pad(v, 10) + "\n";
  };
  auto pct = [](double v) { return detail::fixed(v * 100.0, 1) + "%"; };
  std::string out;
  out += row("Total examples", std::to_string(d.points));
  out += row("Avg. ground truth length (tok)", fixed(d.avg_gt_tokens, 2));
  out += row("Median ground truth length (tok)", fixed(d.median_gt_tokens, 1));
  out += row("Early completion", pct(s.early_stop_rate));
  out += row("Gen. new tree sub-branch", pct(s.split_rate));
  out += row("Main tokens push", pct(s.push_rate));
  out += row("Avg. gen. tokens", fixed(s.avg_generated_tokens, 2));
  out += row("Std. gen. tokens", fixed(s.std_generated_tokens, 2));
  out += row("Single forward pass", pct(s.single_pass_rate));
  out += row("Within two forward passes", pct(s.within_two_passes_rate));
  out += row("Token efficiency ratio", s.token_efficiency ? fixed(*s.token_efficiency, 2) : "-");
  return out;
}

// Per-metric deltas (b - a) for strategies present in both reports.
inline nlohmann::ordered_json compare_reports(const nlohmann::json& a, const nlohmann::json& b) {
  static const std::vector<std::string> scalar{"mrr",       "recall@1", "recall@5",
                                               "recall@20", "em",       "token_efficiency",
                                               "avg_generated_tokens"};
  auto index = [](const nlohmann::json& rep) {
    std::map<std::string, nlohmann::json> out;
    if (!rep.contains("strategies") || !rep.at("strategies").is_array()) {
      throw SchemaError("strategies", "report has no strategies array");
    }
    for (const auto& s : rep.at("strategies")) out[s.at("strategy").get<std::string>()] = s;
    return out;
  };
  const auto ia = index(a);
  const auto ib = index(b);
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& s : a.at("strategies")) {
    const std::string name = s.at("strategy").get<std::string>();
    auto it = ib.find(name);
    if (it == ib.end()) continue;
    const auto& sa = ia.at(name);
    const auto& sb = it->second;
    nlohmann::ordered_json row;
    row["strategy"] = name;
    auto add = [&](const std::string& key, const nlohmann::json& va, const nlohmann::json& vb) {
      if (!va.is_number() || !vb.is_number()) return;
      row[key] = {{"a", va.get<double>()},
                  {"b", vb.get<double>()},
                  {"delta", vb.get<double>() - va.get<double>()}};
    };
    for (const auto& key : scalar) {
      if (sa.contains(key) && sb.contains(key)) add(key, sa.at(key), sb.at(key));
    }
    for (const std::string key : {"ranking_time", "total_time"}) {
      if (sa.contains(key) && sb.contains(key)) {
        add(key + ".mean", sa.at(key).at("mean"), sb.at(key).at("mean"));
      }
    }
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace treeranker
