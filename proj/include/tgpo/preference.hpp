#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tgpo/process_reward.hpp"
#include "tgpo/records.hpp"

namespace tgpo {

enum class PairingPolicy { all_strict_pairs, best_vs_rest };

std::string_view to_string(PairingPolicy policy);
std::optional<PairingPolicy> parse_pairing_policy(std::string_view name);

struct ActionReward {
  std::string action_key;
  double reward = 0.0;  // occurrence-weighted mean of the canonical edge totals
  std::size_t occurrences = 0;
};

struct NodeRewardStats {
  int node_id = 0;
  std::vector<ActionReward> action_rewards;  // sorted by action key
  double sigma = 0.0;                        // population standard deviation of the rewards
};

double population_sigma(std::span<const double> values);

/// Reward per distinct outgoing action key, for every node with outgoing edges.
std::vector<NodeRewardStats> node_reward_stats(const ScoredGraph& scored);

struct PreferencePair {
  std::string task_id;
  int node_id = 0;
  std::string context;
  std::string chosen;    // a_w
  std::string rejected;  // a_l
  double r_w = 0.0;
  double r_l = 0.0;
  double weight = 0.0;  // |r_w - r_l| / sigma

  bool operator==(const PreferencePair&) const = default;
};

/// Pairs at a single node. Nodes with fewer than two distinct rewards yield nothing.
/// Output is ordered by (chosen, rejected) key.
std::vector<PreferencePair> pairs_at_node(const std::string& task_id, const std::string& context,
                                          const NodeRewardStats& stats, PairingPolicy policy);

/// Instruction plus a plain-text summary of the node's fingerprint.
std::string node_context(const TaskSpec& task, const MergedNode& node);

/// All pairs of a scored graph, ordered by node id then action keys.
std::vector<PreferencePair> extract_pairs(const ScoredGraph& scored,
                                          PairingPolicy policy = PairingPolicy::all_strict_pairs);

struct ConflictEntry {
  int node_id = 0;
  std::string action_key;
  std::size_t occurrences = 0;
};

struct TaskConflicts {
  std::string task_id;
  std::size_t keyed_edges = 0;  // distinct (node, action) keys
  std::size_t conflicting_edges = 0;
  std::size_t occurrences = 0;
  std::size_t conflicting_occurrences = 0;
  double conflict_percentage = 0.0;       // by occurrences
  double edge_conflict_percentage = 0.0;  // by distinct keys
  std::vector<ConflictEntry> conflicting;
};

struct ConflictReport {
  std::vector<TaskConflicts> tasks;
  std::size_t keyed_edges = 0;
  std::size_t conflicting_edges = 0;
  std::size_t occurrences = 0;
  std::size_t conflicting_occurrences = 0;
  double conflict_percentage = 0.0;
  double edge_conflict_percentage = 0.0;
};

/// A (node, action) key conflicts when trajectories of both labels traverse it.
TaskConflicts label_conflicts(const TrajectoryGraph& graph);
ConflictReport label_conflicts(std::span<const TrajectoryGraph> graphs);

struct RedundancyMetrics {
  double avg_steps = 0.0;
  double redundant_steps = 0.0;  // mean per trajectory of revisiting or ineffective steps
  std::size_t trajectories = 0;
};

/// Whether step t of the walk is redundant: it re-enters a visited node or was ineffective.
bool step_is_redundant(const TrajectoryWalk& walk, std::size_t step);

RedundancyMetrics redundancy_metrics(std::span<const TrajectoryWalk> walks);
RedundancyMetrics redundancy_metrics(const TrajectoryGraph& graph);

inline constexpr std::string_view kPairsFormat = "tgpo-pairs";

ordered_json to_json(const PreferencePair& pair);
void write_pairs(std::ostream& out, std::span<const PreferencePair> pairs);

struct PairsFile {
  std::optional<nlohmann::json> header;
  std::vector<PreferencePair> pairs;
};

/// Rejects pairs that violate r_w > r_l or have a non-positive or non-finite weight.
PairsFile read_pairs(std::istream& in);

}  // namespace tgpo
