#include "tgpo/preference.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <tuple>

#include "tgpo/errors.hpp"

namespace tgpo {

namespace {

double percentage(std::size_t part, std::size_t whole) {
  return whole == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(whole);
}

PreferencePair build_pair(const std::string& task_id, int node_id, const std::string& context,
                         const ActionReward& chosen, const ActionReward& rejected, double sigma) {
  return {task_id,         node_id,         context, chosen.action_key, rejected.action_key, chosen.reward,
          rejected.reward, std::abs(chosen.reward - rejected.reward) / sigma};
}

}  // namespace

std::string_view to_string(PairingPolicy policy) {
  return policy == PairingPolicy::all_strict_pairs ? "all" : "best";
}

std::optional<PairingPolicy> parse_pairing_policy(std::string_view name) {
  if (name == "all" || name == "all_strict_pairs") return PairingPolicy::all_strict_pairs;
  if (name == "best" || name == "best_vs_rest") return PairingPolicy::best_vs_rest;
  return std::nullopt;
}

double population_sigma(std::span<const double> values) {
  // Pairwise form: n^2 sigma^2 = sum_{i<j} (v_i - v_j)^2. Two values give exactly |a - b| / 2.
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) sq += (values[i] - values[j]) * (values[i] - values[j]);
  return std::sqrt(sq) / static_cast<double>(n);
}

std::vector<NodeRewardStats> node_reward_stats(const ScoredGraph& scored) {
  const TrajectoryGraph& g = scored.graph;
  std::vector<NodeRewardStats> out;
  for (const MergedNode& node : g.nodes) {
    std::map<std::string, std::pair<double, std::size_t>> by_key;
    for (std::size_t e : g.out_edges(node.node_id)) {
      const auto n = g.edges[e].occurrences.size();
      auto& [sum, count] = by_key[g.edges[e].action_key];
      sum += scored.edges[e].canonical.total * static_cast<double>(n);
      count += n;
    }
    if (by_key.empty()) continue;
    NodeRewardStats stats;
    stats.node_id = node.node_id;
    std::vector<double> rewards;
    for (const auto& [key, acc] : by_key) {
      const double r = acc.first / static_cast<double>(acc.second);
      stats.action_rewards.push_back({key, r, acc.second});
      rewards.push_back(r);
    }
    stats.sigma = population_sigma(rewards);
    out.push_back(std::move(stats));
  }
  return out;
}

std::vector<PreferencePair> pairs_at_node(const std::string& task_id, const std::string& context,
                                          const NodeRewardStats& stats, PairingPolicy policy) {
  std::vector<PreferencePair> pairs;
  if (stats.action_rewards.size() < 2 || !(stats.sigma > 0.0)) return pairs;
  const auto& actions = stats.action_rewards;
  if (policy == PairingPolicy::all_strict_pairs) {
    for (const ActionReward& w : actions)
      for (const ActionReward& l : actions)
        if (w.reward > l.reward) pairs.push_back(build_pair(task_id, stats.node_id, context, w, l, stats.sigma));
  } else {
    // First maximal action in key order is the argmax.
    const auto best = std::max_element(actions.begin(), actions.end(),
                                       [](const ActionReward& a, const ActionReward& b) { return a.reward < b.reward; });
    for (const ActionReward& l : actions)
      if (best->reward > l.reward) pairs.push_back(build_pair(task_id, stats.node_id, context, *best, l, stats.sigma));
  }
  std::sort(pairs.begin(), pairs.end(), [](const PreferencePair& a, const PreferencePair& b) {
    return std::tie(a.chosen, a.rejected) < std::tie(b.chosen, b.rejected);
  });
  return pairs;
}

std::string node_context(const TaskSpec& task, const MergedNode& node) {
  std::string context = "instruction: " + task.instruction + "\nstate: " + node.fingerprint.normalized_url;
  if (!node.fingerprint.effective_prefix.empty()) {
    context += " after [";
    for (std::size_t i = 0; i < node.fingerprint.effective_prefix.size(); ++i) {
      if (i) context += ", ";
      context += node.fingerprint.effective_prefix[i];
    }
    context += "]";
  }
  return context;
}

std::vector<PreferencePair> extract_pairs(const ScoredGraph& scored, PairingPolicy policy) {
  std::vector<PreferencePair> pairs;
  for (const NodeRewardStats& stats : node_reward_stats(scored)) {
    const auto& node = scored.graph.nodes[stats.node_id];
    auto at_node = pairs_at_node(scored.graph.task.task_id, node_context(scored.graph.task, node), stats, policy);
    pairs.insert(pairs.end(), std::make_move_iterator(at_node.begin()), std::make_move_iterator(at_node.end()));
  }
  return pairs;
}

TaskConflicts label_conflicts(const TrajectoryGraph& graph) {
  TaskConflicts report;
  report.task_id = graph.task.task_id;
  std::map<std::pair<int, std::string>, std::pair<std::size_t, std::set<int>>> keyed;
  for (const ActionEdge& edge : graph.edges) {
    auto& [count, labels] = keyed[{edge.from, edge.action_key}];
    count += edge.occurrences.size();
    labels.insert(edge.label_set.begin(), edge.label_set.end());
  }
  for (const auto& [key, entry] : keyed) {
    const auto& [count, labels] = entry;
    ++report.keyed_edges;
    report.occurrences += count;
    if (labels.count(0) && labels.count(1)) {
      ++report.conflicting_edges;
      report.conflicting_occurrences += count;
      report.conflicting.push_back({key.first, key.second, count});
    }
  }
  report.conflict_percentage = percentage(report.conflicting_occurrences, report.occurrences);
  report.edge_conflict_percentage = percentage(report.conflicting_edges, report.keyed_edges);
  return report;
}

ConflictReport label_conflicts(std::span<const TrajectoryGraph> graphs) {
  ConflictReport report;
  for (const TrajectoryGraph& g : graphs) {
    TaskConflicts task = label_conflicts(g);
    report.keyed_edges += task.keyed_edges;
    report.conflicting_edges += task.conflicting_edges;
    report.occurrences += task.occurrences;
    report.conflicting_occurrences += task.conflicting_occurrences;
    report.tasks.push_back(std::move(task));
  }
  report.conflict_percentage = percentage(report.conflicting_occurrences, report.occurrences);
  report.edge_conflict_percentage = percentage(report.conflicting_edges, report.keyed_edges);
  return report;
}

bool step_is_redundant(const TrajectoryWalk& walk, std::size_t step) {
  if (!walk.effective.at(step)) return true;
  const int arrival = walk.nodes.at(step + 1);
  return std::find(walk.nodes.begin(), walk.nodes.begin() + static_cast<std::ptrdiff_t>(step) + 1, arrival) !=
         walk.nodes.begin() + static_cast<std::ptrdiff_t>(step) + 1;
}

RedundancyMetrics redundancy_metrics(std::span<const TrajectoryWalk> walks) {
  RedundancyMetrics metrics;
  metrics.trajectories = walks.size();
  if (walks.empty()) return metrics;
  std::size_t steps = 0;
  std::size_t redundant = 0;
  for (const TrajectoryWalk& walk : walks) {
    steps += walk.length();
    for (std::size_t t = 0; t < walk.length(); ++t) redundant += step_is_redundant(walk, t) ? 1 : 0;
  }
  metrics.avg_steps = static_cast<double>(steps) / static_cast<double>(walks.size());
  metrics.redundant_steps = static_cast<double>(redundant) / static_cast<double>(walks.size());
  return metrics;
}

RedundancyMetrics redundancy_metrics(const TrajectoryGraph& graph) { return redundancy_metrics(graph.walks); }

ordered_json to_json(const PreferencePair& pair) {
  ordered_json r;
  r["task_id"] = pair.task_id;
  r["node_id"] = pair.node_id;
  r["context"] = pair.context;
  r["chosen"] = ordered_json{{"action", pair.chosen}};
  r["rejected"] = ordered_json{{"action", pair.rejected}};
  r["r_w"] = pair.r_w;
  r["r_l"] = pair.r_l;
  r["weight"] = pair.weight;
  return r;
}

void write_pairs(std::ostream& out, std::span<const PreferencePair> pairs) {
  for (const PreferencePair& pair : pairs) write_record(out, to_json(pair));
}

PairsFile read_pairs(std::istream& in) {
  using json = nlohmann::json;
  PairsFile file;
  std::string text;
  std::size_t line = 0;
  bool any = false;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json record = json::parse(text);
      if (is_header_record(record)) {
        if (any) throw MalformedRecord(line, "header must be the first record");
        check_header(record, kPairsFormat, line);
        file.header = record.at("header");
        any = true;
        continue;
      }
      any = true;
      PreferencePair pair;
      pair.task_id = record.at("task_id").get<std::string>();
      pair.node_id = record.at("node_id").get<int>();
      pair.context = record.at("context").get<std::string>();
      pair.chosen = record.at("chosen").at("action").get<std::string>();
      pair.rejected = record.at("rejected").at("action").get<std::string>();
      pair.r_w = record.at("r_w").get<double>();
      pair.r_l = record.at("r_l").get<double>();
      pair.weight = record.at("weight").get<double>();
      if (!(pair.r_w > pair.r_l)) throw MalformedRecord(line, "pair must satisfy r_w > r_l");
      if (!(pair.weight > 0.0) || !std::isfinite(pair.weight))
        throw MalformedRecord(line, "pair weight must be positive and finite");
      file.pairs.push_back(std::move(pair));
    } catch (const json::exception& e) {
      throw MalformedRecord(line, e.what());
    }
  }
  return file;
}

}  // namespace tgpo
