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

// Command-line front end.
//
//   treeranker rank    --backend B --vocab V [--strategy S] (--prefix T | --prefix-file F)
//                      (CANDIDATE... | --candidates-file F) [--dump-tree F]
//   treeranker eval    --backend B --vocab V --strategy S... DATASET [--out REPORT]
//   treeranker stats   --backend B --vocab V DATASET [--out JSON]
//   treeranker compare A.json B.json [--out JSON]
//   treeranker serve   --backend B --vocab V [--host H] [--port P]
//
// Backends: mock:<spec.json>, mock:<seed>, remote:<http://host:port>.
// Exit codes: 0 success, 2 configuration or input error, 3 backend error
// (including an eval run in which some strategy aborted).

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "treeranker/backend.hpp"
#include "treeranker/baselines.hpp"
#include "treeranker/dataset.hpp"
#include "treeranker/errors.hpp"
#include "treeranker/evaluate.hpp"
#include "treeranker/mock_backend.hpp"
#include "treeranker/ranker.hpp"
#include "treeranker/remote_backend.hpp"
#include "treeranker/vocabulary.hpp"

namespace treeranker {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitBackend = 3;

struct RunConfig {
  std::string backend;
  std::string vocab_path;
  std::vector<std::string> strategies;
  DecodeConfig decode;
  double alpha = 1.0;
  std::size_t runs = 5;
  double first_token_ms = 75.0;
  std::size_t jobs = 1;
  std::string timing = "auto";
  std::string out;

  void validate() const {
    if (backend.empty()) throw ConfigError("--backend is required");
    if (vocab_path.empty()) throw ConfigError("--vocab is required");
    if (strategies.empty()) throw ConfigError("at least one strategy is required");
    if (runs < 1) throw ConfigError("--runs must be at least 1");
    if (jobs < 1) throw ConfigError("--jobs must be at least 1");
    if (decode.max_steps < 1) throw ConfigError("--max-steps must be at least 1");
    if (!(alpha >= 0.0)) throw ConfigError("--alpha must be non-negative");
    if (!(first_token_ms >= 0.0)) throw ConfigError("--first-token-ms must be non-negative");
    for (const auto& s : strategies) parse_strategy(s);
    parse_timing_mode(timing);
  }
};

// Overlays the keys of a JSON config document onto `cfg`.
inline void apply_config_json(RunConfig& cfg, const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("config file must hold a JSON object");
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "backend") cfg.backend = value.get<std::string>();
      else if (key == "vocab") cfg.vocab_path = value.get<std::string>();
      else if (key == "strategies") cfg.strategies = value.get<std::vector<std::string>>();
      else if (key == "strategy") cfg.strategies = {value.get<std::string>()};
      else if (key == "alpha") cfg.alpha = value.get<double>();
      else if (key == "max_steps") cfg.decode.max_steps = value.get<std::size_t>();
      else if (key == "constrained") cfg.decode.constrained = value.get<bool>();
      else if (key == "early_stop") cfg.decode.early_stop = value.get<bool>();
      else if (key == "runs") cfg.runs = value.get<std::size_t>();
      else if (key == "first_token_ms") cfg.first_token_ms = value.get<double>();
      else if (key == "jobs") cfg.jobs = value.get<std::size_t>();
      else if (key == "timing") cfg.timing = value.get<std::string>();
      else if (key == "out") cfg.out = value.get<std::string>();
      else throw ConfigError("unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline nlohmann::json load_report(const std::string& path) {
  nlohmann::json doc = read_json_file(path);
  if (!doc.is_object() || !doc.contains("strategies")) {
    throw ConfigError(path + " is not an evaluation report");
  }
  return doc;
}

inline bool is_unsigned_integer(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

// Resolves a backend spec into a factory. Mock backends are immutable and
// shared between workers; every remote worker gets its own connection.
inline BackendFactory make_backend_factory(const std::string& spec, const Vocabulary& vocab) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) {
    throw ConfigError("backend must be mock:<path|seed> or remote:<endpoint>, got '" + spec + "'");
  }
  const std::string kind = spec.substr(0, colon);
  const std::string arg = spec.substr(colon + 1);
  if (arg.empty()) throw ConfigError("backend '" + spec + "' has no argument");
  if (kind == "mock") {
    MockSpec mock;
    if (is_unsigned_integer(arg)) {
      mock = random_mock_spec(std::stoull(arg), vocab.size());
    } else {
      try {
        mock = load_mock_spec(arg, vocab);
      } catch (const MalformedSpec& e) {
        throw ConfigError(e.what());
      }
    }
    if (mock.vocab_size != vocab.size()) {
      throw ConfigError("mock backend vocabulary size does not match --vocab");
    }
    auto shared = std::make_shared<MockBackend>(std::move(mock));
    return [shared] { return shared; };
  }
  if (kind == "remote") {
    RemoteBackend probe(arg);  // validates the endpoint syntax
    return [arg]() -> std::shared_ptr<ModelBackend> { return std::make_shared<RemoteBackend>(arg); };
  }
  throw ConfigError("unknown backend kind '" + kind + "'");
}

// Backend-side tokenization for remote backends whose tokenizer disagrees
// with the local longest-match rule on any of `texts`. Null when the local
// rule can be used.
struct TokenizerChoice {
  std::shared_ptr<ModelBackend> session;
  std::unique_ptr<BackendTokenizer> tokenizer;
};

inline TokenizerChoice choose_tokenizer(const std::string& backend_spec, const BackendFactory& factory,
                                        const Vocabulary& vocab,
                                        const std::vector<std::string>& texts, std::ostream& err) {
  TokenizerChoice choice;
  if (backend_spec.rfind("remote:", 0) != 0) return choice;
  choice.session = factory();
  std::vector<std::string> coverable;
  for (const auto& t : texts) {
    try {
      greedy_tokenize(t, vocab);
      coverable.push_back(t);
    } catch (const UncoverableText&) {
    }
  }
  const auto mismatches = tokenizer_mismatches(*choice.session, vocab, coverable);
  if (mismatches.empty()) {
    choice.session.reset();
    return choice;
  }
  err << "warning: local tokenization differs from the backend on " << mismatches.size()
      << " string(s) (e.g. \"" << mismatches.front() << "\"); using backend tokenization\n";
  choice.tokenizer = std::make_unique<BackendTokenizer>(*choice.session, vocab);
  return choice;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << content;
}

// Ranking output record for one completion point.
inline nlohmann::ordered_json ranking_to_json(const std::string& strategy, const RankResult& r) {
  nlohmann::ordered_json j;
  j["strategy"] = strategy;
  auto ranking = nlohmann::ordered_json::array();
  for (const auto& rc : r.ranking) {
    ranking.push_back({{"identifier", rc.identifier},
                       {"rank", rc.rank},
                       {"scored_len", rc.key.scored_len},
                       {"last_prob", rc.key.last_prob}});
  }
  j["ranking"] = std::move(ranking);
  nlohmann::ordered_json stats;
  stats["steps"] = r.stats.steps;
  stats["early_stopped"] = r.stats.early_stopped;
  stats["splits"] = r.stats.splits;
  stats["pushes"] = r.stats.pushes;
  stats["off_tree_exit"] = r.stats.off_tree_exit;
  j["stats"] = std::move(stats);
  return j;
}

inline nlohmann::ordered_json baseline_ranking_json(const std::string& strategy,
                                                    const std::vector<std::string>& ids,
                                                    const std::vector<double>& scores,
                                                    const std::vector<std::size_t>& lengths,
                                                    std::size_t calls) {
  nlohmann::ordered_json j;
  j["strategy"] = strategy;
  auto ranking = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    ranking.push_back({{"identifier", ids[i]},
                       {"rank", i + 1},
                       {"scored_len", lengths[i]},
                       {"last_prob", std::exp(scores[i])},
                       {"score", scores[i]}});
  }
  j["ranking"] = std::move(ranking);
  j["stats"] = {{"steps", calls},
                {"early_stopped", false},
                {"splits", 0},
                {"pushes", 0},
                {"off_tree_exit", false}};
  return j;
}

namespace detail {

struct CliState {
  RunConfig cfg;
  std::string config_path;
  std::vector<std::string> strategies;
  std::string backend, vocab, timing, out;
  double alpha = 1.0, first_token_ms = 75.0;
  std::size_t max_steps = 16, runs = 5, jobs = 1;
  bool unconstrained = false, no_early_stop = false;
  std::vector<CLI::Option*> opts;
  CLI::Option *o_backend = nullptr, *o_vocab = nullptr, *o_strategy = nullptr, *o_alpha = nullptr,
              *o_max = nullptr, *o_runs = nullptr, *o_ftm = nullptr, *o_jobs = nullptr,
              *o_timing = nullptr, *o_out = nullptr;

  void add_common(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file (flags override it)");
    o_backend = cmd->add_option("--backend", backend, "mock:<path|seed> or remote:<endpoint>");
    o_vocab = cmd->add_option("--vocab", vocab, "vocabulary TSV");
    o_strategy = cmd->add_option("--strategy", strategies, "strategy (repeatable)")
                     ->allow_extra_args(false);
    o_alpha = cmd->add_option("--alpha", alpha, "beamall length-penalty exponent");
    o_max = cmd->add_option("--max-steps", max_steps, "decode step budget");
    cmd->add_flag("--unconstrained", unconstrained, "decode without logit masking");
    cmd->add_flag("--no-early-stop", no_early_stop, "disable early stopping");
    o_runs = cmd->add_option("--runs", runs, "timing repetitions per point");
    o_ftm = cmd->add_option("--first-token-ms", first_token_ms, "first-token latency added to totals");
    o_jobs = cmd->add_option("--jobs", jobs, "evaluation worker threads");
    o_timing = cmd->add_option("--timing", timing, "auto, simulated or wall");
    o_out = cmd->add_option("--out", out, "output path");
  }

  // defaults < config file < flags
  RunConfig resolve(const std::vector<std::string>& default_strategies) {
    RunConfig c;
    c.strategies = default_strategies;
    if (!config_path.empty()) apply_config_json(c, read_json_file(config_path));
    if (o_backend->count()) c.backend = backend;
    if (o_vocab->count()) c.vocab_path = vocab;
    if (o_strategy->count()) c.strategies = strategies;
    if (o_alpha->count()) c.alpha = alpha;
    if (o_max->count()) c.decode.max_steps = max_steps;
    if (unconstrained) c.decode.constrained = false;
    if (no_early_stop) c.decode.early_stop = false;
    if (o_runs->count()) c.runs = runs;
    if (o_ftm->count()) c.first_token_ms = first_token_ms;
    if (o_jobs->count()) c.jobs = jobs;
    if (o_timing->count()) c.timing = timing;
    if (o_out->count()) c.out = out;
    c.validate();
    return c;
  }
};

inline EvalConfig eval_config(const RunConfig& c) {
  EvalConfig e;
  e.decode = c.decode;
  e.alpha = c.alpha;
  e.runs = c.runs;
  e.first_token_ms = c.first_token_ms;
  e.jobs = c.jobs;
  e.timing = parse_timing_mode(c.timing);
  e.generation_max_steps = c.decode.max_steps;
  return e;
}

inline nlohmann::ordered_json config_echo(const RunConfig& c, const std::string& dataset) {
  nlohmann::ordered_json j;
  j["backend"] = c.backend;
  j["vocab"] = c.vocab_path;
  j["dataset"] = dataset;
  j["strategies"] = c.strategies;
  j["alpha"] = c.alpha;
  j["max_steps"] = c.decode.max_steps;
  j["constrained"] = c.decode.constrained;
  j["early_stop"] = c.decode.early_stop;
  j["runs"] = c.runs;
  j["first_token_ms"] = c.first_token_ms;
  j["jobs"] = c.jobs;
  j["timing"] = c.timing;
  return j;
}

// Strings checked against the backend tokenizer: the candidates and
// prefixes of the first points.
inline std::vector<std::string> sample_texts(const LoadedDataset& data, std::size_t points = 50) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < data.points.size() && i < points; ++i) {
    out.push_back(data.points[i].prefix);
    out.insert(out.end(), data.points[i].candidates.begin(), data.points[i].candidates.end());
  }
  return out;
}

inline int cmd_rank(const RunConfig& c, const std::string& prefix_text,
                    const std::vector<std::string>& candidates, const std::string& dump_path,
                    std::ostream& out, std::ostream& err) {
  if (c.strategies.size() != 1) throw ConfigError("rank takes exactly one --strategy");
  const Strategy strategy = parse_strategy(c.strategies.front());
  if (strategy.kind == StrategyKind::IdeBaseline) {
    throw ConfigError("ide-baseline strategies need a dataset; use eval");
  }
  if (candidates.empty()) throw ConfigError("no candidates given");
  const Vocabulary vocab = load_vocabulary(c.vocab_path);
  const auto factory = make_backend_factory(c.backend, vocab);
  const auto backend = factory();
  std::vector<std::string> texts = candidates;
  texts.push_back(prefix_text);
  const TokenizerChoice tok = choose_tokenizer(c.backend, factory, vocab, texts, err);
  const TreeRanker ranker = tok.tokenizer ? TreeRanker(vocab, *tok.tokenizer) : TreeRanker(vocab);
  const TokenSeq prefix = ranker.tokenizer().tokenize(prefix_text);
  if (!dump_path.empty()) write_file(dump_path, ranker.build_tree(candidates).dump());

  nlohmann::ordered_json doc;
  switch (strategy.kind) {
    case StrategyKind::TreeRanker:
      doc = ranking_to_json(strategy.name, ranker.rank(*backend, prefix, candidates, c.decode));
      break;
    case StrategyKind::BeamAll: {
      BeamAllConfig bc;
      bc.alpha = c.alpha;
      bc.constrained = c.decode.constrained;
      const BeamAllOutput r = beam_all(*backend, ranker, prefix, candidates, bc);
      std::vector<std::string> ids;
      std::vector<double> scores;
      std::vector<std::size_t> lengths;
      for (const auto& s : r.scores) {
        ids.push_back(s.identifier);
        scores.push_back(s.penalized);
        lengths.push_back(s.length);
      }
      doc = baseline_ranking_json(strategy.name, ids, scores, lengths, r.calls);
      break;
    }
    case StrategyKind::Greedy: {
      const GreedyResult r = greedy_complete(*backend, prefix, vocab, c.decode.max_steps);
      doc = baseline_ranking_json(strategy.name, {r.identifier}, {0.0}, {r.steps}, r.steps);
      doc["ranking"][0].erase("score");
      doc["ranking"][0].erase("last_prob");
      break;
    }
    case StrategyKind::Beam: {
      const BeamSearchOutput r =
          beam_search(*backend, prefix, vocab, strategy.width, c.decode.max_steps);
      const auto beams = strategy.filtered ? filter_to_candidates(r.beams, candidates) : r.beams;
      std::vector<std::string> ids;
      std::vector<double> scores;
      std::vector<std::size_t> lengths;
      for (const auto& b : beams) {
        ids.push_back(b.identifier);
        scores.push_back(b.cum_logprob);
        std::size_t len = 0;
        try {
          len = ranker.tokenizer().tokenize(b.identifier).size();
        } catch (const UncoverableText&) {
        }
        lengths.push_back(len);
      }
      doc = baseline_ranking_json(strategy.name, ids, scores, lengths, r.calls);
      break;
    }
    case StrategyKind::IdeBaseline:
      break;
  }
  const std::string text = doc.dump(2) + "\n";
  out << text;
  if (!c.out.empty()) write_file(c.out, text);
  return kExitOk;
}

inline int cmd_eval(const RunConfig& c, const std::string& dataset_path, std::ostream& out,
                    std::ostream& err) {
  const Vocabulary vocab = load_vocabulary(c.vocab_path);
  std::vector<Strategy> strategies;
  for (const auto& s : c.strategies) strategies.push_back(parse_strategy(s));
  const LoadedDataset data = load_dataset(dataset_path);
  if (data.points.empty()) throw ConfigError("dataset " + dataset_path + " has no usable points");
  const auto factory = make_backend_factory(c.backend, vocab);
  const TokenizerChoice tok = choose_tokenizer(c.backend, factory, vocab, sample_texts(data), err);
  const TreeRanker ranker = tok.tokenizer ? TreeRanker(vocab, *tok.tokenizer) : TreeRanker(vocab);
  EvalReport report = evaluate_all(strategies, data, factory, ranker, eval_config(c));
  report.config = config_echo(c, dataset_path);
  const std::string json = report_to_json(report).dump(2) + "\n";
  const std::string table = render_table(report);
  if (c.out.empty()) {
    out << json;
    err << table;
  } else {
    write_file(c.out, json);
    write_file(c.out + ".txt", table);
    out << table;
  }
  for (const auto& s : report.strategies) {
    if (s.aborted) err << "strategy " << s.strategy << " aborted: " << s.abort_reason << "\n";
  }
  return report.any_aborted() ? kExitBackend : kExitOk;
}

inline int cmd_stats(RunConfig c, const std::string& dataset_path, std::ostream& out,
                     std::ostream& err) {
  const Vocabulary vocab = load_vocabulary(c.vocab_path);
  const LoadedDataset data = load_dataset(dataset_path);
  if (data.points.empty()) throw ConfigError("dataset " + dataset_path + " has no usable points");
  const auto factory = make_backend_factory(c.backend, vocab);
  const TokenizerChoice tok = choose_tokenizer(c.backend, factory, vocab, sample_texts(data), err);
  const TreeRanker ranker = tok.tokenizer ? TreeRanker(vocab, *tok.tokenizer) : TreeRanker(vocab);
  EvalConfig e = eval_config(c);
  e.runs = 1;
  const StrategyReport rep = evaluate(parse_strategy("treeranker"), data.points, factory, ranker, e);
  if (rep.aborted) {
    err << "treeranker aborted: " << rep.abort_reason << "\n";
    return kExitBackend;
  }
  const DatasetSummary summary = summarize_dataset(data, ranker);
  out << render_stats(rep, summary);
  if (!c.out.empty()) write_file(c.out, stats_to_json(rep, summary).dump(2) + "\n");
  return kExitOk;
}

}  // namespace detail

// Runs the CLI; `args` excludes the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tree-guided ranking of code completion candidates", "treeranker"};
  app.require_subcommand(1);

  detail::CliState rank_state, eval_state, stats_state, serve_state;

  auto* rank = app.add_subcommand("rank", "rank one completion point, JSON to stdout");
  rank_state.add_common(rank);
  std::string prefix, prefix_file, candidates_file, dump_tree;
  std::vector<std::string> candidates;
  rank->add_option("--prefix", prefix, "prefix text");
  rank->add_option("--prefix-file", prefix_file, "file holding the prefix text");
  rank->add_option("--candidates-file", candidates_file, "one candidate per line");
  rank->add_option("--dump-tree", dump_tree, "write the completion tree dump here");
  rank->add_option("candidates", candidates, "candidate identifiers");

  auto* eval = app.add_subcommand("eval", "evaluate strategies on a JSONL dataset");
  eval_state.add_common(eval);
  std::string eval_dataset;
  eval->add_option("dataset", eval_dataset, "dataset JSONL")->required();

  auto* stats = app.add_subcommand("stats", "tree-manipulation statistics on a dataset");
  stats_state.add_common(stats);
  std::string stats_dataset;
  stats->add_option("dataset", stats_dataset, "dataset JSONL")->required();

  auto* compare = app.add_subcommand("compare", "per-metric deltas between two reports");
  std::string report_a, report_b, compare_out;
  compare->add_option("a", report_a, "baseline report JSON")->required();
  compare->add_option("b", report_b, "new report JSON")->required();
  compare->add_option("--out", compare_out, "output path");

  auto* serve = app.add_subcommand("serve", "serve a backend over HTTP");
  serve_state.add_common(serve);
  std::string host = "127.0.0.1";
  int port = 8080;
  serve->add_option("--host", host, "bind address");
  serve->add_option("--port", port, "bind port");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (rank->parsed()) {
      const RunConfig c = rank_state.resolve({"treeranker"});
      if (!prefix.empty() && !prefix_file.empty()) {
        throw ConfigError("give either --prefix or --prefix-file");
      }
      const std::string text = prefix_file.empty() ? prefix : read_text_file(prefix_file);
      if (text.empty()) throw ConfigError("a non-empty --prefix or --prefix-file is required");
      if (!candidates_file.empty()) {
        const auto more = read_lines(candidates_file);
        candidates.insert(candidates.end(), more.begin(), more.end());
      }
      return detail::cmd_rank(c, text, candidates, dump_tree, out, err);
    }
    if (eval->parsed()) {
      return detail::cmd_eval(eval_state.resolve({"treeranker"}), eval_dataset, out, err);
    }
    if (stats->parsed()) {
      return detail::cmd_stats(stats_state.resolve({"treeranker"}), stats_dataset, out, err);
    }
    if (compare->parsed()) {
      const auto deltas = compare_reports(load_report(report_a), load_report(report_b));
      const std::string text = deltas.dump(2) + "\n";
      out << text;
      if (!compare_out.empty()) write_file(compare_out, text);
      return kExitOk;
    }
    if (serve->parsed()) {
      const RunConfig c = serve_state.resolve({"treeranker"});
      const Vocabulary vocab = load_vocabulary(c.vocab_path);
      const auto backend = make_backend_factory(c.backend, vocab)();
      BackendServer server(*backend, &vocab);
      err << "serving on " << host << ":" << port << "\n";
      server.listen(host, port);
      return kExitOk;
    }
  } catch (const BackendError& e) {
    err << "backend error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace treeranker
