#include "tgpo/process_reward.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "tgpo/errors.hpp"

namespace tgpo {

std::string_view to_string(RewardAggregation aggregation) {
  return aggregation == RewardAggregation::mean ? "mean" : "min_prefix";
}

std::optional<RewardAggregation> parse_aggregation(std::string_view name) {
  if (name == "mean") return RewardAggregation::mean;
  if (name == "min_prefix") return RewardAggregation::min_prefix;
  return std::nullopt;
}

std::string_view to_string(RedundancyScope scope) {
  return scope == RedundancyScope::closing_action ? "closing_action" : "whole_cycle";
}

std::optional<RedundancyScope> parse_redundancy_scope(std::string_view name) {
  if (name == "closing_action") return RedundancyScope::closing_action;
  if (name == "whole_cycle") return RedundancyScope::whole_cycle;
  return std::nullopt;
}

void validate(const RewardConfig& config) {
  const double values[] = {config.alpha, config.redundancy_penalty, config.accuracy_bonus, config.format_bonus,
                           config.unreachable_subgoal};
  for (double v : values)
    if (!std::isfinite(v)) fail(ErrorKind::infeasible_parameters, "reward configuration values must be finite");
  if (!(config.alpha > 0.0)) fail(ErrorKind::infeasible_parameters, "alpha must be positive");
}

RewardBreakdown RewardBreakdown::combine(double subgoal, double redundancy, double accuracy, double format,
                                         double alpha) {
  return {subgoal, redundancy, accuracy, format, accuracy + format + redundancy + alpha * subgoal};
}

double subgoal_reward(int prefix_length, int node, const DistanceIndex& index, const RewardConfig& config) {
  const HopCount& remaining = index.to_goal.at(static_cast<std::size_t>(node));
  if (!index.l_min || !remaining) return config.unreachable_subgoal;
  const int denominator = prefix_length + *remaining;
  if (denominator <= 0) return 1.0;  // already at the goal with nothing taken
  return std::clamp(static_cast<double>(*index.l_min) / denominator, 0.0, 1.0);
}

double redundancy_reward(std::span<const int> walk, std::size_t step, const RewardConfig& config) {
  if (step + 1 >= walk.size()) return 0.0;
  if (config.redundancy_scope == RedundancyScope::closing_action) {
    const int arrival = walk[step + 1];
    for (std::size_t j = 0; j <= step; ++j)
      if (walk[j] == arrival) return config.redundancy_penalty;
    return 0.0;
  }
  // whole_cycle: step lies inside [first visit of v, re-entry of v) for some revisited v.
  std::map<int, std::size_t> first_visit;
  for (std::size_t i = 0; i < walk.size(); ++i) {
    auto [it, fresh] = first_visit.emplace(walk[i], i);
    if (!fresh && it->second <= step && step < i) return config.redundancy_penalty;
  }
  return 0.0;
}

std::pair<double, double> accuracy_and_format(const Step& step, const StateObservation& before,
                                              const StateObservation& after, const EffectVerifier& verifier,
                                              const RewardConfig& config) {
  bool effective = false;
  bool format_valid = false;
  if (step.effective && step.format_valid) {
    effective = *step.effective;
    format_valid = *step.format_valid;
  } else {
    const Verdict verdict = verifier.judge(before, step.action, after);
    effective = step.effective.value_or(verdict.effective);
    format_valid = step.format_valid.value_or(verdict.format_valid);
  }
  return {effective ? config.accuracy_bonus : 0.0, format_valid ? config.format_bonus : 0.0};
}

ScoredGraph score_graph(TrajectoryGraph graph, DistanceIndex distances, const RewardConfig& config) {
  validate(config);
  if (distances.to_goal.size() != graph.nodes.size() || distances.from_root.size() != graph.nodes.size())
    fail(ErrorKind::invariant_violation, "distance index does not match graph of task '" + graph.task.task_id + "'");

  ScoredGraph scored{std::move(graph), std::move(distances), config, {}};
  const TrajectoryGraph& g = scored.graph;
  scored.edges.reserve(g.edges.size());
  for (const ActionEdge& edge : g.edges) {
    ScoredEdge out;
    double sums[4] = {0, 0, 0, 0};
    int min_prefix = -1;
    for (const EdgeOccurrence& occ : edge.occurrences) {
      const TrajectoryWalk* walk = g.find_walk(occ.trajectory_id);
      if (!walk)
        fail(ErrorKind::invariant_violation, "edge occurrence references unknown trajectory '" + occ.trajectory_id + "'");
      const int prefix = occ.step + 1;
      min_prefix = min_prefix < 0 ? prefix : std::min(min_prefix, prefix);
      const auto r = RewardBreakdown::combine(
          subgoal_reward(prefix, edge.to, scored.distances, config),
          redundancy_reward(walk->nodes, static_cast<std::size_t>(occ.step), config),
          occ.effective ? config.accuracy_bonus : 0.0, occ.format_valid ? config.format_bonus : 0.0, config.alpha);
      sums[0] += r.subgoal;
      sums[1] += r.redundancy;
      sums[2] += r.accuracy;
      sums[3] += r.format;
      out.occurrences.push_back(r);
    }
    const double n = static_cast<double>(edge.occurrences.size());
    double subgoal = sums[0] / n;
    if (config.aggregation == RewardAggregation::min_prefix)
      subgoal = subgoal_reward(min_prefix, edge.to, scored.distances, config);
    out.canonical = RewardBreakdown::combine(subgoal, sums[1] / n, sums[2] / n, sums[3] / n, config.alpha);
    scored.edges.push_back(std::move(out));
  }
  return scored;
}

ScoredGraph score_graph(TrajectoryGraph graph, const RewardConfig& config) {
  DistanceIndex distances = shortest_distances(graph);
  return score_graph(std::move(graph), std::move(distances), config);
}

}  // namespace tgpo
