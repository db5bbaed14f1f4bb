// tgpo: command-line driver for the offline preference pipeline.
//
//   tgpo simulate --seed 7 | tgpo build-graph | tgpo score | tgpo pairs | tgpo train | tgpo report
//
// Every stage reads one artifact (file or stdin) and writes one (file or stdout).
// Exit codes: 0 ok, 2 usage, 3 bad input data, 4 internal invariant violation.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "tgpo/benchmark.hpp"
#include "tgpo/config.hpp"
#include "tgpo/corpus_io.hpp"
#include "tgpo/errors.hpp"
#include "tgpo/graph_io.hpp"
#include "tgpo/objective.hpp"
#include "tgpo/preference.hpp"
#include "tgpo/process_reward.hpp"
#include "tgpo/sim.hpp"
#include "tgpo/state_merge.hpp"
#include "tgpo/verifier.hpp"

namespace {

using namespace tgpo;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitInternal = 4;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Flags {
  std::string config_file;
  std::vector<std::string> sets;
  std::string alpha, beta, epochs, seed, pairing, aggregation, weighting;
  bool strict = false;
  bool lenient = false;
  bool stamp = false;
  unsigned jobs = 1;
  std::string input = "-";
  std::string output = "-";
};

PipelineConfig resolve(const Flags& flags) {
  PipelineConfig config;
  if (!flags.config_file.empty()) load_config_file(config, flags.config_file);
  for (const std::string& set : flags.sets) {
    const auto eq = set.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + set + "'");
    set_option(config, set.substr(0, eq), set.substr(eq + 1));
  }
  const std::pair<const char*, const std::string*> overrides[] = {
      {"alpha", &flags.alpha},       {"beta", &flags.beta},       {"epochs", &flags.epochs},
      {"seed", &flags.seed},         {"pairing", &flags.pairing}, {"aggregation", &flags.aggregation},
      {"weighting", &flags.weighting},
  };
  for (const auto& [key, value] : overrides)
    if (!value->empty()) set_option(config, key, *value);
  if (flags.strict && flags.lenient) throw ConfigError("--strict and --lenient are mutually exclusive");
  if (flags.strict) config.strict = true;
  if (flags.lenient) config.strict = false;
  config.train.seed = config.seed;
  try {
    validate(config.reward);
    validate(config.train);
    validate(config.simulation.agent);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return config;
}

std::string read_input(const std::string& path) {
  if (path == "-") {
    std::ostringstream buffer;
    buffer << std::cin.rdbuf();
    return buffer.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text << std::flush;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out.flush()) throw IoError("cannot write '" + path + "'");
}

ordered_json header_for(std::string_view format, const PipelineConfig& config, const Flags& flags) {
  ordered_json header = make_header(format, to_json(config));
  if (flags.stamp) {
    const std::time_t now = std::time(nullptr);
    char buffer[32];
    std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    header["header"]["stamp"] = buffer;
  }
  return header;
}

// Runs f over the items on up to `jobs` threads. Results keep item order, and the
// error of the lowest failing index is rethrown, so output never depends on jobs.
template <typename Out, typename In, typename F>
std::vector<Out> parallel_map(const std::vector<In>& items, unsigned jobs, F f) {
  std::vector<std::optional<Out>> results(items.size());
  std::vector<std::exception_ptr> errors(items.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < items.size(); i = next++) {
      try {
        results[i].emplace(f(items[i]));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(items.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  for (const auto& error : errors)
    if (error) std::rethrow_exception(error);
  std::vector<Out> out;
  out.reserve(items.size());
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

Corpus load_corpus(const std::string& text, const PipelineConfig& config) {
  ParseOptions options;
  options.strict = config.strict;
  ParsedCorpus parsed = parse_corpus_string(text, options);
  for (const std::string& warning : parsed.warnings) std::cerr << "warning: " << warning << '\n';
  annotate(parsed.groups, ReferenceVerifier(config.url));
  return std::move(parsed.groups);
}

std::vector<TrajectoryGraph> build_graphs(Corpus corpus, const PipelineConfig& config, unsigned jobs) {
  std::sort(corpus.begin(), corpus.end(),
            [](const TaskGroup& a, const TaskGroup& b) { return a.task.task_id < b.task.task_id; });
  MergeOptions options;
  options.url_policy = config.url;
  return parallel_map<TrajectoryGraph>(
      corpus, jobs, [&](const TaskGroup& group) { return build_graph(group.task, group.trajectories, options); });
}

// --- subcommands -----------------------------------------------------------

std::string cmd_simulate(const PipelineConfig& config, const Flags& flags, const std::string& world_dump) {
  const Simulation sim = simulate(config.simulation, config.seed);
  if (!world_dump.empty()) {
    std::ostringstream worlds;
    write_record(worlds, header_for(kWorldFormat, config, flags));
    for (const SimWorld& world : sim.worlds) write_world(worlds, world);
    write_output(world_dump, worlds.str());
  }
  std::ostringstream out;
  const ordered_json header = header_for(kCorpusFormat, config, flags);
  emit_corpus(out, sim.corpus, &header);
  return out.str();
}

std::string cmd_ingest(const PipelineConfig& config, const Flags& flags) {
  const Corpus corpus = load_corpus(read_input(flags.input), config);
  std::ostringstream out;
  const ordered_json header = header_for(kCorpusFormat, config, flags);
  emit_corpus(out, corpus, &header);
  return out.str();
}

std::string cmd_build_graph(const PipelineConfig& config, const Flags& flags) {
  const auto graphs = build_graphs(load_corpus(read_input(flags.input), config), config, flags.jobs);
  std::ostringstream out;
  write_record(out, header_for(kGraphFormat, config, flags));
  for (const TrajectoryGraph& g : graphs) write_graph(out, g);
  return out.str();
}

std::string cmd_score(const PipelineConfig& config, const Flags& flags) {
  std::istringstream in(read_input(flags.input));
  const GraphFile file = read_graphs(in);
  const auto scored = parallel_map<ScoredGraph>(file.graphs, flags.jobs,
                                                [&](const TrajectoryGraph& g) { return score_graph(g, config.reward); });
  std::ostringstream out;
  write_record(out, header_for(kScoredGraphFormat, config, flags));
  for (const ScoredGraph& s : scored) write_scored_graph(out, s);
  return out.str();
}

std::string cmd_pairs(const PipelineConfig& config, const Flags& flags) {
  std::istringstream in(read_input(flags.input));
  const ScoredGraphFile file = read_scored_graphs(in);
  std::ostringstream out;
  write_record(out, header_for(kPairsFormat, config, flags));
  for (const ScoredGraph& s : file.graphs) write_pairs(out, extract_pairs(s, config.pairing));
  return out.str();
}

std::string cmd_train(const PipelineConfig& config, const Flags& flags, const std::string& graph_path,
                      const std::string& trace_path) {
  std::istringstream in(read_input(flags.input));
  const PairsFile file = read_pairs(in);
  Vocabulary vocabulary = vocabulary_from_pairs(file.pairs);
  if (!graph_path.empty()) {
    std::istringstream graph_in(read_input(graph_path));
    for (const TrajectoryGraph& g : read_graphs(graph_in).graphs) merge_into(vocabulary, vocabulary_from_graph(g));
  }
  const PolicyTable initial(vocabulary);
  const ReferencePolicy ref(initial, config.reference);
  const TrainResult result = train(file.pairs, initial, ref, config.train);
  if (!trace_path.empty()) {
    std::ostringstream trace;
    write_record(trace, header_for(kLossTraceFormat, config, flags));
    write_loss_trace(trace, result.trace);
    write_output(trace_path, trace.str());
  }
  std::ostringstream out;
  write_record(out, header_for(kPolicyFormat, config, flags));
  write_policy(out, result.policy);
  return out.str();
}

std::string fixed(double value, int digits = 4) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.*f", digits, value);
  return buffer;
}

ordered_json graph_metrics(const std::vector<TrajectoryGraph>& graphs) {
  std::vector<TrajectoryWalk> walks;
  std::size_t successes = 0;
  for (const TrajectoryGraph& g : graphs)
    for (const TrajectoryWalk& w : g.walks) {
      walks.push_back(w);
      successes += w.label == 1 ? 1 : 0;
    }
  const RedundancyMetrics redundancy = redundancy_metrics(walks);
  const ConflictReport conflicts = label_conflicts(graphs);
  ordered_json m;
  m["tasks"] = graphs.size();
  m["trajectories"] = walks.size();
  m["success_rate"] = walks.empty() ? 0.0 : static_cast<double>(successes) / static_cast<double>(walks.size());
  m["avg_steps"] = redundancy.avg_steps;
  m["redundant_steps"] = redundancy.redundant_steps;
  m["conflict_percentage"] = conflicts.conflict_percentage;
  m["edge_conflict_percentage"] = conflicts.edge_conflict_percentage;
  ordered_json table = ordered_json::array();
  for (std::size_t i = 0; i < graphs.size(); ++i)
    for (const ConflictEntry& c : conflicts.tasks[i].conflicting) {
      ordered_json row;
      row["task_id"] = graphs[i].task.task_id;
      row["node"] = c.node_id;
      row["url"] = graphs[i].nodes[static_cast<std::size_t>(c.node_id)].fingerprint.normalized_url;
      row["action"] = c.action_key;
      row["occurrences"] = c.occurrences;
      table.push_back(std::move(row));
    }
  m["conflicts"] = std::move(table);
  return m;
}

ordered_json pair_metrics(const std::vector<PreferencePair>& pairs) {
  ordered_json m;
  m["pairs"] = pairs.size();
  double sum = 0.0, lo = 0.0, hi = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    sum += pairs[i].weight;
    lo = i ? std::min(lo, pairs[i].weight) : pairs[i].weight;
    hi = i ? std::max(hi, pairs[i].weight) : pairs[i].weight;
  }
  m["mean_weight"] = pairs.empty() ? 0.0 : sum / static_cast<double>(pairs.size());
  m["min_weight"] = lo;
  m["max_weight"] = hi;
  return m;
}

ordered_json policy_metrics(const PolicyTable& policy) {
  ordered_json m;
  m["states"] = policy.blocks().size();
  m["actions"] = policy.size();
  double confidence = 0.0;
  for (const auto& [state, block] : policy.blocks()) {
    const auto p = policy.probabilities(state);
    confidence += *std::max_element(p.begin(), p.end());
  }
  m["mean_greedy_probability"] = policy.blocks().empty() ? 0.0 : confidence / static_cast<double>(policy.blocks().size());
  return m;
}

std::string artifact_format(const std::string& text) {
  const auto end = text.find('\n');
  try {
    const auto first = nlohmann::json::parse(text.substr(0, end));
    if (is_header_record(first)) return first.at("header").value("format", std::string{});
  } catch (const nlohmann::json::exception&) {
  }
  return std::string(kCorpusFormat);
}

void print_human(std::ostream& out, const ordered_json& report) {
  if (report.contains("trajectories")) {
    const auto& m = report["trajectories"];
    out << "trajectories\n";
    out << "  tasks                 " << m["tasks"].get<std::size_t>() << '\n';
    out << "  trajectories          " << m["trajectories"].get<std::size_t>() << '\n';
    out << "  success rate          " << fixed(100.0 * m["success_rate"].get<double>(), 2) << "%\n";
    out << "  avg steps             " << fixed(m["avg_steps"].get<double>(), 2) << '\n';
    out << "  redundant steps       " << fixed(m["redundant_steps"].get<double>(), 2) << '\n';
    out << "  label conflicts       " << fixed(m["conflict_percentage"].get<double>(), 2) << "% of occurrences, "
        << fixed(m["edge_conflict_percentage"].get<double>(), 2) << "% of edges\n";
    if (!m["conflicts"].empty()) {
      out << "conflicting edges\n";
      for (const auto& row : m["conflicts"])
        out << "  " << row["task_id"].get<std::string>() << "  node " << row["node"].get<int>() << "  "
            << row["url"].get<std::string>() << "  " << row["action"].get<std::string>() << "  x"
            << row["occurrences"].get<std::size_t>() << '\n';
    }
  }
  if (report.contains("pairs")) {
    const auto& m = report["pairs"];
    out << "preference pairs\n";
    out << "  pairs                 " << m["pairs"].get<std::size_t>() << '\n';
    out << "  weight mean/min/max   " << fixed(m["mean_weight"].get<double>()) << " / "
        << fixed(m["min_weight"].get<double>()) << " / " << fixed(m["max_weight"].get<double>()) << '\n';
  }
  if (report.contains("policy")) {
    const auto& m = report["policy"];
    out << "policy\n";
    out << "  states                " << m["states"].get<std::size_t>() << '\n';
    out << "  actions               " << m["actions"].get<std::size_t>() << '\n';
    out << "  mean greedy prob      " << fixed(m["mean_greedy_probability"].get<double>()) << '\n';
  }
}

std::string cmd_report(const PipelineConfig& config, const std::vector<std::string>& inputs, bool as_json) {
  ordered_json report;
  for (const std::string& path : inputs) {
    const std::string text = read_input(path);
    const std::string format = artifact_format(text);
    std::istringstream in(text);
    if (format == kCorpusFormat) {
      report["trajectories"] = graph_metrics(build_graphs(load_corpus(text, config), config, 1));
    } else if (format == kGraphFormat || format == kScoredGraphFormat) {
      report["trajectories"] = graph_metrics(read_graphs(in).graphs);
    } else if (format == kPairsFormat) {
      report["pairs"] = pair_metrics(read_pairs(in).pairs);
    } else if (format == kPolicyFormat) {
      report["policy"] = policy_metrics(read_policy(in).policy);
    } else {
      fail(ErrorKind::schema_mismatch, "'" + path + "' is a " + format + " file, which report does not read");
    }
  }
  if (as_json) return report.dump(2) + "\n";
  std::ostringstream out;
  print_human(out, report);
  return out.str();
}

std::string cmd_benchmark(const PipelineConfig& config, int runs, int tasks) {
  BenchmarkConfig bench;
  bench.simulation = config.simulation;
  bench.simulation.tasks = tasks;
  bench.reward = config.reward;
  bench.pairing = config.pairing;
  bench.reference = config.reference;
  bench.merge.url_policy = config.url;
  std::ostringstream out;
  out << "seed    pairs  success(tgpo/dpo)  redundant(tgpo/dpo)\n";
  for (int r = 0; r < runs; ++r) {
    const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(r);
    const BenchmarkResult result = run_benchmark(bench, seed);
    char line[160];
    std::snprintf(line, sizeof line, "%-7llu %6zu  %6.3f / %6.3f     %6.3f / %6.3f\n",
                  static_cast<unsigned long long>(seed), result.pairs, result.weighted.success_rate,
                  result.unit.success_rate, result.weighted.redundant_steps, result.unit.redundant_steps);
    out << line;
  }
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Offline trajectory-graph preference optimization for web agents"};
  app.require_subcommand(1);
  app.fallthrough();

  Flags flags;
  app.add_option("--config", flags.config_file, "flat key=value config file");
  app.add_option("--set", flags.sets, "override any config key: key=value (repeatable)");
  app.add_option("--alpha", flags.alpha, "subgoal weight");
  app.add_option("--beta", flags.beta, "preference temperature");
  app.add_option("--epochs", flags.epochs, "training epochs");
  app.add_option("--seed", flags.seed, "seed for simulation and training");
  app.add_option("--pairing", flags.pairing, "pair extraction")->check(CLI::IsMember({"all", "best"}));
  app.add_option("--aggregation", flags.aggregation, "edge reward aggregation")
      ->check(CLI::IsMember({"mean", "min_prefix"}));
  app.add_option("--weighting", flags.weighting, "pair weights")->check(CLI::IsMember({"dynamic", "unit"}));
  app.add_option("--jobs", flags.jobs, "worker threads for per-task stages")->check(CLI::Range(1u, 256u));
  app.add_flag("--strict", flags.strict, "reject unknown corpus fields (default)");
  app.add_flag("--lenient", flags.lenient, "warn about unknown corpus fields instead");
  app.add_flag("--stamp", flags.stamp, "add a wall-clock timestamp to output headers");

  auto with_io = [&](CLI::App* sub) {
    sub->add_option("-i,--input", flags.input, "input file, - for stdin");
    sub->add_option("-o,--output", flags.output, "output file, - for stdout");
  };

  std::string world_dump;
  auto* simulate_cmd = app.add_subcommand("simulate", "generate synthetic worlds and a trajectory corpus");
  simulate_cmd->add_option("-o,--output", flags.output, "corpus output, - for stdout");
  simulate_cmd->add_option("--world-dump", world_dump, "also write the generated worlds here");

  auto* ingest_cmd = app.add_subcommand("ingest", "validate a corpus and fill in missing step flags");
  with_io(ingest_cmd);
  auto* build_cmd = app.add_subcommand("build-graph", "merge states and build one graph per task");
  with_io(build_cmd);
  auto* score_cmd = app.add_subcommand("score", "attach step rewards to a graph dump");
  with_io(score_cmd);
  auto* pairs_cmd = app.add_subcommand("pairs", "extract weighted preference pairs from a scored dump");
  with_io(pairs_cmd);

  std::string graph_path, trace_path;
  auto* train_cmd = app.add_subcommand("train", "train a tabular policy on preference pairs");
  with_io(train_cmd);
  train_cmd->add_option("--graph", graph_path, "graph dump whose actions join the policy vocabulary");
  train_cmd->add_option("--loss-trace", trace_path, "write per-epoch loss here");

  std::vector<std::string> report_inputs;
  bool as_json = false;
  auto* report_cmd = app.add_subcommand("report", "summarize corpora, graphs, pairs and policies");
  report_cmd->add_option("inputs", report_inputs, "artifacts to summarize (default: stdin)");
  report_cmd->add_option("-o,--output", flags.output, "output file, - for stdout");
  report_cmd->add_flag("--json", as_json, "machine-readable output");

  int runs = 10, bench_tasks = 30;
  auto* bench_cmd = app.add_subcommand("benchmark", "weighted vs unit-weight training on synthetic tasks");
  bench_cmd->add_option("--runs", runs, "consecutive seeds starting at --seed")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--tasks", bench_tasks, "tasks per run")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    const PipelineConfig config = resolve(flags);
    std::string text;
    if (*simulate_cmd) text = cmd_simulate(config, flags, world_dump);
    else if (*ingest_cmd) text = cmd_ingest(config, flags);
    else if (*build_cmd) text = cmd_build_graph(config, flags);
    else if (*score_cmd) text = cmd_score(config, flags);
    else if (*pairs_cmd) text = cmd_pairs(config, flags);
    else if (*train_cmd) text = cmd_train(config, flags, graph_path, trace_path);
    else if (*report_cmd) text = cmd_report(config, report_inputs.empty() ? std::vector<std::string>{"-"} : report_inputs, as_json);
    else if (*bench_cmd) text = cmd_benchmark(config, runs, bench_tasks);
    write_output(flags.output, text);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "tgpo: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "tgpo: " << e.what() << '\n';
    return kExitData;
  } catch (const Error& e) {
    std::cerr << "tgpo: " << e.what() << '\n';
    if (e.kind() == ErrorKind::infeasible_parameters) return kExitUsage;
    return e.is_data_error() ? kExitData : kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "tgpo: internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}
