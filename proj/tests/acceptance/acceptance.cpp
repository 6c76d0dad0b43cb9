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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "support/fuzz.hpp"
#include "support/oracle.hpp"
#include "treeranker/baselines.hpp"
#include "treeranker/cli.hpp"
#include "treeranker/metrics.hpp"
#include "treeranker/mock_backend.hpp"
#include "treeranker/ranker.hpp"

namespace tr = treeranker;
namespace tt = treeranker::testing;

namespace {

constexpr std::size_t kModels = 100;
constexpr double kScoreRelTol = 1e-12;

int failures = 0;

void verdict(int id, const std::string& title, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %2d  %-34s %s\n", pass ? "PASS" : "FAIL", id, title.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::vector<std::string> identifiers(const tr::RankResult& r) {
  std::vector<std::string> out;
  for (const auto& rc : r.ranking) out.push_back(rc.identifier);
  return out;
}

tr::TokenSeq prefix_of(const tt::FuzzCase& fc, const tr::Vocabulary& vocab) {
  return tr::greedy_tokenize(fc.prefix, vocab);
}

bool rel_close(double a, double b, double tol) {
  if (a == b) return true;
  return std::fabs(a - b) <= tol * std::max(std::fabs(a), std::fabs(b));
}

std::set<tr::TokenId> prefix_tokens_of_vocab(const tr::Vocabulary& vocab) {
  std::set<tr::TokenId> out;
  for (std::size_t t = 0; t < vocab.size(); ++t) {
    const auto& s = vocab.text(static_cast<tr::TokenId>(t));
    if (!tr::is_identifier_char(s.front())) continue;
    for (std::size_t u = 0; u < vocab.size(); ++u) {
      const auto& v = vocab.text(static_cast<tr::TokenId>(u));
      if (v.size() > s.size() && tt::starts_with(v, s)) {
        out.insert(static_cast<tr::TokenId>(t));
        break;
      }
    }
  }
  return out;
}

// Internal nodes of the static tree form one chain (each has one child).
bool single_path(const tr::CompletionTree& tree) {
  for (tr::NodeId id = 0; id < tree.node_count(); ++id) {
    const auto& n = tree.node(id);
    if (n.alive && n.children.size() > 1) return false;
  }
  return true;
}

// Replays a constrained or unconstrained decode from the spy log with the
// independent follower. Returns the number of mismatches found.
struct Replay {
  std::size_t steps = 0;
  std::size_t mask_mismatches = 0;
  std::size_t selection_violations = 0;
  std::size_t context_mismatches = 0;
  std::size_t splits = 0;
  std::size_t pushes = 0;
};

Replay replay(const tt::SpyBackend& spy, const tr::Vocabulary& vocab, const tr::TokenSeq& prefix,
              const std::vector<std::string>& candidates, const tr::DecodeConfig& cfg) {
  Replay out;
  tt::DecodeFollower f(vocab, candidates);
  std::vector<tr::TokenId> context = prefix.tokens;
  for (const auto& call : spy.log()) {
    ++out.steps;
    if (call.context != context) ++out.context_mismatches;
    const auto expected = f.allowed(cfg.constrained && cfg.include_termination_mass);
    const tr::TokenId selected = call.response.argmax;
    if (cfg.constrained) {
      if (!call.mask || *call.mask != expected) ++out.mask_mismatches;
      if (!call.mask || !std::binary_search(call.mask->begin(), call.mask->end(), selected)) {
        ++out.selection_violations;
      }
    } else {
      const auto query_expected = f.allowed(false);
      if (call.query != query_expected) ++out.mask_mismatches;
    }
    tr::TokenId appended = -1;
    const auto ev = f.advance(selected, cfg.constrained && cfg.include_termination_mass, &appended);
    if (ev == tt::DecodeFollower::Event::kPush) ++out.pushes;
    if (ev == tt::DecodeFollower::Event::kSplit) ++out.splits;
    if (ev == tt::DecodeFollower::Event::kTerminate || ev == tt::DecodeFollower::Event::kOffTree) break;
    context.push_back(appended);
  }
  return out;
}

tt::FuzzLimits default_limits() { return tt::FuzzLimits{}; }

void criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t ranking_mismatch = 0, score_mismatch = 0, call_mismatch = 0, candidates = 0;
  for (std::uint64_t seed = 1; seed <= kModels; ++seed) {
    const auto fc = tt::make_fuzz_case(seed, tt::VocabShape::kOverlapping, default_limits());
    const tr::Vocabulary vocab = fc.vocab();
    const tr::TreeRanker ranker(vocab);
    const auto prefix = prefix_of(fc, vocab);
    const double alpha = seed % 2 == 0 ? 1.0 : 0.5 * static_cast<double>(seed % 5);
    tr::MockBackend m1(fc.spec), m2(fc.spec);
    tr::BeamAllConfig cfg;
    cfg.alpha = alpha;
    const auto got = tr::beam_all(m1, ranker, prefix, fc.candidates, cfg);
    const auto want = tt::brute_force_beam_all(m2, vocab, prefix, fc.candidates, alpha);
    candidates += fc.candidates.size();
    if (got.calls != tt::internal_prefix_count(vocab, fc.candidates)) ++call_mismatch;
    for (std::size_t i = 0; i < want.size(); ++i) {
      if (got.scores[i].identifier != want[i].identifier) {
        ++ranking_mismatch;
        break;
      }
    }
    for (std::size_t i = 0; i < want.size(); ++i) {
      if (!rel_close(got.scores[i].penalized, want[i].penalized, kScoreRelTol) ||
          !rel_close(got.scores[i].sum_logprob, want[i].sum_logprob, kScoreRelTol)) {
        ++score_mismatch;
      }
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ostringstream d;
  d << kModels << " models, " << candidates << " candidates: ranking mismatches " << ranking_mismatch
    << ", score mismatches " << score_mismatch << ", pass-count mismatches " << call_mismatch
    << ", " << secs << " s";
  verdict(1, "Beam@All oracle equivalence",
          ranking_mismatch == 0 && score_mismatch == 0 && call_mismatch == 0 && secs < 60.0, d.str());
}

void criterion2() {
  std::size_t mismatches = 0, early_stops = 0;
  for (std::uint64_t seed = 1; seed <= kModels; ++seed) {
    const auto fc = tt::make_fuzz_case(seed, tt::VocabShape::kOverlapping, default_limits());
    const tr::Vocabulary vocab = fc.vocab();
    const tr::TreeRanker ranker(vocab);
    const auto prefix = prefix_of(fc, vocab);
    tr::MockBackend mock(fc.spec);
    for (bool constrained : {true, false}) {
      tr::DecodeConfig on, off;
      on.constrained = off.constrained = constrained;
      off.early_stop = false;
      const auto a = ranker.rank(mock, prefix, fc.candidates, on);
      const auto b = ranker.rank(mock, prefix, fc.candidates, off);
      early_stops += a.stats.early_stopped ? 1 : 0;
      if (identifiers(a) != identifiers(b)) ++mismatches;
    }
  }
  std::ostringstream d;
  d << 2 * kModels << " decode pairs (constrained + unconstrained), " << early_stops
    << " early stops, ranking mismatches " << mismatches;
  verdict(2, "Early-stop invariance", mismatches == 0 && early_stops > 0, d.str());
}

void criterion3() {
  std::size_t decodes = 0, steps = 0, violations = 0, mask_mismatches = 0, ctx = 0;
  const tt::VocabShape shapes[] = {tt::VocabShape::kOverlapping, tt::VocabShape::kSharedStems,
                                   tt::VocabShape::kPrefixFree};
  for (std::uint64_t seed = 1; seed <= 400; ++seed) {
    for (auto shape : shapes) {
      const auto fc = tt::make_fuzz_case(seed + 1000, shape, default_limits());
      const tr::Vocabulary vocab = fc.vocab();
      const tr::TreeRanker ranker(vocab);
      const auto prefix = prefix_of(fc, vocab);
      tt::BoostedBackend inner(fc.spec, prefix_tokens_of_vocab(vocab),
                               shape == tt::VocabShape::kSharedStems ? 40.0 : 1.0);
      tt::SpyBackend spy(inner);
      tr::DecodeConfig cfg;
      cfg.early_stop = seed % 3 != 0;
      ranker.rank(spy, prefix, fc.candidates, cfg);
      const Replay r = replay(spy, vocab, prefix, fc.candidates, cfg);
      ++decodes;
      steps += r.steps;
      violations += r.selection_violations;
      mask_mismatches += r.mask_mismatches;
      ctx += r.context_mismatches;
    }
  }
  std::ostringstream d;
  d << decodes << " decodes, " << steps << " steps: selections outside mask " << violations
    << ", masks differing from brute force " << mask_mismatches << ", context mismatches " << ctx;
  verdict(3, "Constrained validity",
          decodes >= 1000 && violations == 0 && mask_mismatches == 0 && ctx == 0, d.str());
}

void criterion4() {
  std::size_t fixtures = 0, direct_splits = 0, represent_changes = 0, invariant_failures = 0;
  std::size_t decode_split_fixtures = 0, counter_mismatches = 0, total_splits = 0, total_pushes = 0;
  for (std::uint64_t seed = 1; fixtures < kModels && seed < 5000; ++seed) {
    tt::FuzzLimits lim;
    lim.min_candidates = 4;
    const auto fc = tt::make_fuzz_case(seed, tt::VocabShape::kSharedStems, lim);
    const tr::Vocabulary vocab = fc.vocab();
    const tr::TreeRanker ranker(vocab);
    tr::CompletionTree tree = ranker.build_tree(fc.candidates);

    // Split every eligible (node, subtoken) pair until none is left.
    std::size_t splits_here = 0;
    bool progress = true;
    while (progress) {
      progress = false;
      for (tr::NodeId id = 0; id < tree.node_count() && !progress; ++id) {
        if (!tree.node(id).alive) continue;
        for (std::size_t t = 0; t < vocab.size() && !progress; ++t) {
          const auto sub = static_cast<tr::TokenId>(t);
          if (tree.child(id, sub)) continue;
          if (tree.children_extending(id, sub).size() < 2) continue;
          const auto before = tt::represented(tree);
          tree.split_on_subtoken(id, sub);
          ++splits_here;
          if (tt::represented(tree) != before) ++represent_changes;
          try {
            tree.check_invariants();
          } catch (const std::exception&) {
            ++invariant_failures;
          }
          progress = true;
        }
      }
    }
    if (splits_here == 0) continue;
    ++fixtures;
    direct_splits += splits_here;

    const auto prefix = prefix_of(fc, vocab);
    tt::BoostedBackend inner(fc.spec, prefix_tokens_of_vocab(vocab), 40.0);
    for (bool constrained : {true, false}) {
      tt::SpyBackend spy(inner);
      tr::DecodeConfig cfg;
      cfg.constrained = constrained;
      const auto r = ranker.rank(spy, prefix, fc.candidates, cfg);
      const Replay rep = replay(spy, vocab, prefix, fc.candidates, cfg);
      if (rep.splits != r.stats.splits || rep.pushes != r.stats.pushes) ++counter_mismatches;
      total_splits += r.stats.splits;
      total_pushes += r.stats.pushes;
      if (constrained && r.stats.splits > 0) ++decode_split_fixtures;
    }
  }
  std::ostringstream d;
  d << fixtures << " fixtures, " << direct_splits << " direct splits (represented-set changes "
    << represent_changes << ", invariant failures " << invariant_failures << "); decodes: "
    << total_splits << " splits, " << total_pushes << " pushes, counter mismatches "
    << counter_mismatches;
  verdict(4, "Restructuring preservation",
          fixtures >= kModels && represent_changes == 0 && invariant_failures == 0 &&
              counter_mismatches == 0 && decode_split_fixtures > 0,
          d.str());
}

void criterion5() {
  std::size_t agree = 0, subtoken_events = 0;
  for (std::uint64_t seed = 1; seed <= kModels; ++seed) {
    const auto fc = tt::make_fuzz_case(seed, tt::VocabShape::kPrefixFree, default_limits());
    const tr::Vocabulary vocab = fc.vocab();
    const tr::TreeRanker ranker(vocab);
    const auto prefix = prefix_of(fc, vocab);
    tr::MockBackend m1(fc.spec), m2(fc.spec);
    const auto r = ranker.rank(m1, prefix, fc.candidates, tr::DecodeConfig{});
    subtoken_events += r.stats.splits + r.stats.pushes;
    const std::size_t greedy = tt::greedy_descent(m2, vocab, prefix, fc.candidates);
    if (r.ranking.front().identifier == fc.candidates[greedy]) ++agree;
  }
  std::ostringstream d;
  d << agree << "/" << kModels << " seeds agree; subtoken events " << subtoken_events;
  verdict(5, "Greedy consistency", agree == kModels && subtoken_events == 0, d.str());
}

void criterion6() {
  std::size_t identical = 0, off_tree = 0;
  for (std::uint64_t seed = 1; seed <= kModels; ++seed) {
    const auto fc = tt::make_fuzz_case(seed, tt::VocabShape::kOverlapping, default_limits());
    const tr::Vocabulary vocab = fc.vocab();
    const tr::TreeRanker ranker(vocab);
    const auto prefix = prefix_of(fc, vocab);
    const auto term = vocab.termination_tokens();
    tt::OnTreeBackend backend(fc.spec, term);
    tr::DecodeConfig c, u;
    u.constrained = false;
    const auto a = ranker.rank(backend, prefix, fc.candidates, c);
    const auto b = ranker.rank(backend, prefix, fc.candidates, u);
    off_tree += b.stats.off_tree_exit ? 1 : 0;
    if (identifiers(a) == identifiers(b)) ++identical;
  }
  std::ostringstream d;
  d << identical << "/" << kModels << " on-tree models give identical rankings, off-tree exits "
    << off_tree;
  verdict(6, "Ablation parity", identical == kModels && off_tree == 0, d.str());

  // General models: Recall@5 in both modes (reported, not gated).
  std::vector<tr::GroundTruthRank> rc, ru;
  for (std::uint64_t seed = 1; seed <= kModels; ++seed) {
    const auto fc = tt::make_fuzz_case(seed, tt::VocabShape::kOverlapping, default_limits());
    const tr::Vocabulary vocab = fc.vocab();
    const tr::TreeRanker ranker(vocab);
    const auto prefix = prefix_of(fc, vocab);
    tr::MockBackend mock(fc.spec);
    std::mt19937_64 rng(seed);
    const std::string truth = fc.candidates[rng() % fc.candidates.size()];
    tr::DecodeConfig c, u;
    u.constrained = false;
    const auto a = ranker.rank(mock, prefix, fc.candidates, c);
    const auto b = ranker.rank(mock, prefix, fc.candidates, u);
    const auto ra = a.ground_truth_rank(truth), rb = b.ground_truth_rank(truth);
    rc.push_back(ra ? tr::GroundTruthRank(ra) : std::nullopt);
    ru.push_back(rb ? tr::GroundTruthRank(rb) : std::nullopt);
  }
  const double r5c = tr::recall_at_k(rc, 5), r5u = tr::recall_at_k(ru, 5);
  std::printf("[INFO] criterion  6  general-model Recall@5: constrained %.3f, unconstrained %.3f, "
              "|diff| %.3f (within 0.05: %s; soft check, not gated)\n",
              r5c, r5u, std::fabs(r5c - r5u), std::fabs(r5c - r5u) <= 0.05 ? "yes" : "no");
}

void criterion7() {
  const tr::Vocabulary vocab({"x", ".", "add", "All", "clear", "ret", "(", "\n"});
  const auto id = [&](const char* s) { return vocab.id(s); };
  tr::MockSpec spec;
  spec.vocab_size = vocab.size();
  spec.default_probs = {{id("ret"), 1.0}};
  spec.entries = {{{id("x"), id(".")}, {{id("add"), 0.6}, {id("clear"), 0.3}, {id("ret"), 0.1}}},
                  {{id("."), id("add")}, {{id("All"), 0.5}, {id("("), 0.4}, {id("ret"), 0.1}}}};
  const tr::TreeRanker ranker(vocab);
  const auto prefix = tr::greedy_tokenize("x.", vocab);
  const std::vector<std::string> cands{"add", "addAll", "clear"};
  tr::MockBackend mock(spec);

  // Unconstrained: probabilities are the raw table values.
  tr::DecodeConfig u;
  u.constrained = false;
  const auto r = ranker.rank(mock, prefix, cands, u);
  const bool raw_traces = r.traces[0].probs == std::vector<double>{0.6} &&
                          r.traces[1].probs == std::vector<double>{0.6, 0.5} &&
                          r.traces[2].probs == std::vector<double>{0.3};
  const bool raw_rank = identifiers(r) == std::vector<std::string>{"addAll", "add", "clear"};

  // Constrained: same ranking; values renormalized over each step's mask.
  const auto c = ranker.rank(mock, prefix, cands, tr::DecodeConfig{});
  auto near = [](const std::vector<double>& got, const std::vector<double>& want) {
    if (got.size() != want.size()) return false;
    for (std::size_t i = 0; i < got.size(); ++i) {
      if (!rel_close(got[i], want[i], kScoreRelTol)) return false;
    }
    return true;
  };
  const bool norm_traces = near(c.traces[0].probs, {0.6 / 0.9}) &&
                           near(c.traces[1].probs, {0.6 / 0.9, 0.5 / 0.9}) &&
                           near(c.traces[2].probs, {0.3 / 0.9});
  const bool norm_rank = identifiers(c) == std::vector<std::string>{"addAll", "add", "clear"};
  std::ostringstream d;
  d << "raw traces " << (raw_traces ? "exact" : "DIFFER") << ", ranking "
    << (raw_rank ? "[addAll, add, clear]" : "WRONG") << "; constrained traces "
    << (norm_traces ? "renormalized as expected" : "DIFFER") << ", ranking "
    << (norm_rank ? "same" : "WRONG");
  verdict(7, "Hand-trace fixture", raw_traces && raw_rank && norm_traces && norm_rank, d.str());
}

void criterion8() {
  std::mt19937_64 rng(2026);
  std::size_t mismatches = 0, monotonic_violations = 0;
  for (int list = 0; list < 1000; ++list) {
    const std::size_t n = 1 + rng() % 60;
    std::vector<tr::GroundTruthRank> ranks;
    std::vector<std::optional<std::size_t>> plain;
    bool em_flags[64];
    std::size_t em_hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t v = rng() % 32;
      ranks.push_back(v == 0 ? std::nullopt : tr::GroundTruthRank(v));
      plain.push_back(ranks.back());
      em_flags[i] = v == 1;
      em_hits += v == 1 ? 1 : 0;
    }
    if (tr::mrr(ranks) != tt::brute_mrr(plain)) ++mismatches;
    double prev = -1.0;
    for (std::size_t k = 1; k <= 32; ++k) {
      const double r = tr::recall_at_k(ranks, k);
      if (r != tt::brute_recall(plain, k)) ++mismatches;
      if (r < prev) ++monotonic_violations;
      prev = r;
    }
    const double em = tr::exact_match_rate(std::span<const bool>(em_flags, n));
    if (em != static_cast<double>(em_hits) / static_cast<double>(n)) ++mismatches;
    const std::size_t gt = 1 + rng() % 10, gen = 1 + rng() % 10;
    if (tr::token_efficiency(gt, gen) != static_cast<double>(gt) / static_cast<double>(gen)) {
      ++mismatches;
    }
  }
  std::ostringstream d;
  d << "1000 rank lists: metric mismatches " << mismatches << ", recall monotonicity violations "
    << monotonic_violations;
  verdict(8, "Metric oracles", mismatches == 0 && monotonic_violations == 0, d.str());
}

void criterion9() {
  std::size_t inputs = 0, exceed = 0, equal_not_chain = 0, equal = 0;
  std::size_t exceed_with_split = 0;
  std::ostringstream examples;
  const tt::VocabShape shapes[] = {tt::VocabShape::kOverlapping, tt::VocabShape::kSharedStems,
                                   tt::VocabShape::kPrefixFree};
  // Plain mocks over three vocabulary shapes, then subtoken-boosted mocks
  // over shared stems (the split-heavy corpus of criteria 3 and 4).
  for (int pass = 0; pass < 4; ++pass) {
    const auto shape = pass < 3 ? shapes[pass] : tt::VocabShape::kSharedStems;
    for (std::uint64_t seed = 1; seed <= kModels; ++seed) {
      const auto fc = tt::make_fuzz_case(seed, shape, default_limits());
      const tr::Vocabulary vocab = fc.vocab();
      const tr::TreeRanker ranker(vocab);
      const auto prefix = prefix_of(fc, vocab);
      const double boost = pass == 3 ? 40.0 : 1.0;
      tt::BoostedBackend m1(fc.spec, prefix_tokens_of_vocab(vocab), boost);
      tt::BoostedBackend m2(fc.spec, prefix_tokens_of_vocab(vocab), boost);
      for (bool constrained : {true, false}) {
        tr::DecodeConfig cfg;
        cfg.constrained = constrained;
        const auto r = ranker.rank(m1, prefix, fc.candidates, cfg);
        tr::BeamAllConfig bc;
        bc.constrained = constrained;
        const auto b = tr::beam_all(m2, ranker, prefix, fc.candidates, bc);
        ++inputs;
        const std::size_t tcalls = r.stats.steps;
        if (tcalls > b.calls) {
          ++exceed;
          if (r.stats.splits > 0) ++exceed_with_split;
          if (exceed <= 3) {
            examples << " [seed " << seed << ": " << fc.candidates.size() << " candidates, "
                     << tcalls << " vs " << b.calls << " passes, " << r.stats.splits << " splits]";
          }
        }
        if (tcalls == b.calls) {
          ++equal;
          if (!single_path(ranker.build_tree(fc.candidates))) ++equal_not_chain;
        }
      }
    }
  }
  // Unique first tokens: one forward pass.
  std::size_t unique_fixtures = 0, single_pass = 0;
  for (std::uint64_t seed = 1; unique_fixtures < kModels && seed < 2000; ++seed) {
    auto fc = tt::make_fuzz_case(seed, tt::VocabShape::kPrefixFree, default_limits());
    const tr::Vocabulary vocab = fc.vocab();
    std::set<tr::TokenId> firsts;
    std::vector<std::string> picked;
    for (const auto& c : fc.candidates) {
      if (firsts.insert(tr::greedy_tokenize(c, vocab).tokens.front()).second) picked.push_back(c);
    }
    if (picked.size() < 2) continue;
    ++unique_fixtures;
    const tr::TreeRanker ranker(vocab);
    tr::MockBackend mock(fc.spec);
    const auto r = ranker.rank(mock, prefix_of(fc, vocab), picked, tr::DecodeConfig{});
    if (r.stats.steps == 1 && r.stats.early_stopped) ++single_pass;
  }
  std::ostringstream d;
  d << inputs << " inputs: TreeRanker > Beam@All passes on " << exceed << " (" << exceed_with_split
    << " involve a split)" << examples.str() << "; equal on " << equal << " (" << equal_not_chain
    << " not single-path); unique-first-token fixtures with 1 pass " << single_pass << "/"
    << unique_fixtures;
  verdict(9, "Efficiency contract",
          exceed == 0 && equal_not_chain == 0 && single_pass == unique_fixtures &&
              unique_fixtures >= kModels,
          d.str());
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion10(std::chrono::steady_clock::time_point started) {
  const std::filesystem::path data = TREERANKER_DATA_DIR;
  const auto tmp = std::filesystem::temp_directory_path() / "treeranker_acceptance";
  std::filesystem::create_directories(tmp);
  std::vector<std::string> outputs;
  int codes = 0;
  for (int run = 0; run < 2; ++run) {
    const auto out = tmp / ("report" + std::to_string(run) + ".json");
    std::ostringstream so, se;
    codes |= tr::run_cli({"eval", "--backend", "mock:7", "--vocab", (data / "vocab.tsv").string(),
                          "--strategy", "treeranker", "--strategy", "beamall", "--strategy",
                          "greedy", "--strategy", "beam5", "--strategy", "beam20f", "--strategy",
                          "ide-baseline:intellij", "--runs", "5", "--out", out.string(),
                          (data / "dataset.jsonl").string()},
                         so, se);
    outputs.push_back(slurp(out));
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  const bool same = !outputs[0].empty() && outputs[0] == outputs[1];
  std::ostringstream d;
  d << "two eval runs " << (same ? "bitwise identical" : "DIFFER") << " (" << outputs[0].size()
    << " bytes, exit " << codes << "); acceptance suite ran in " << secs << " s";
  verdict(10, "End-to-end determinism", same && codes == 0 && secs < 300.0, d.str());
}

}  // namespace

int main() {
  const auto started = std::chrono::steady_clock::now();
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  criterion10(started);
  std::printf("%s: %d criterion(s) failed\n", failures == 0 ? "OK" : "FAILED", failures);
  return failures == 0 ? 0 : 1;
}
