#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "tgpo/distances.hpp"
#include "tgpo/state_merge.hpp"
#include "tgpo/verifier.hpp"

namespace tgpo {

/// How per-occurrence rewards collapse into one reward per edge.
enum class RewardAggregation {
  mean,        // component-wise mean over occurrences
  min_prefix,  // mean, except subgoal re-evaluated at the shortest observed prefix
};

/// Which steps a detected state cycle penalizes.
enum class RedundancyScope {
  closing_action,  // only the step that re-enters a visited node
  whole_cycle,     // every step from the earlier visit up to the re-entry
};

std::string_view to_string(RewardAggregation aggregation);
std::optional<RewardAggregation> parse_aggregation(std::string_view name);
std::string_view to_string(RedundancyScope scope);
std::optional<RedundancyScope> parse_redundancy_scope(std::string_view name);

struct RewardConfig {
  double alpha = 3.0;
  double redundancy_penalty = -1.0;
  double accuracy_bonus = 1.0;
  double format_bonus = 1.0;
  double unreachable_subgoal = 0.0;
  RewardAggregation aggregation = RewardAggregation::mean;
  RedundancyScope redundancy_scope = RedundancyScope::closing_action;
};

/// Throws InfeasibleParameters unless alpha > 0 and every value is finite.
void validate(const RewardConfig& config);

struct RewardBreakdown {
  double subgoal = 0.0;
  double redundancy = 0.0;
  double accuracy = 0.0;
  double format = 0.0;
  double total = 0.0;

  /// total = accuracy + format + redundancy + alpha * subgoal, evaluated in that order.
  static RewardBreakdown combine(double subgoal, double redundancy, double accuracy, double format, double alpha);
  bool operator==(const RewardBreakdown&) const = default;
};

/// L_min / (prefix_length + dist_to_goal(node)), clamped to [0, 1]; the configured
/// fallback when the node cannot reach a goal or the task has none.
double subgoal_reward(int prefix_length, int node, const DistanceIndex& index, const RewardConfig& config);

/// Penalty for step t of a walk (the action from walk[t] to walk[t+1]).
double redundancy_reward(std::span<const int> walk, std::size_t step, const RewardConfig& config);

/// (accuracy, format) for a step; annotated flags take precedence over the verifier.
std::pair<double, double> accuracy_and_format(const Step& step, const StateObservation& before,
                                              const StateObservation& after, const EffectVerifier& verifier,
                                              const RewardConfig& config);

struct ScoredEdge {
  RewardBreakdown canonical;
  std::vector<RewardBreakdown> occurrences;  // aligned with ActionEdge::occurrences
};

struct ScoredGraph {
  TrajectoryGraph graph;
  DistanceIndex distances;
  RewardConfig config;
  std::vector<ScoredEdge> edges;  // aligned with graph.edges
};

/// Scores every action occurrence from the graph's resolved step flags. An
/// occurrence of a_t is evaluated at its destination node with prefix length t+1.
ScoredGraph score_graph(TrajectoryGraph graph, DistanceIndex distances, const RewardConfig& config);
ScoredGraph score_graph(TrajectoryGraph graph, const RewardConfig& config);

}  // namespace tgpo
