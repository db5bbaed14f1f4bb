#pragma once

#include <compare>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tgpo/trajectory.hpp"
#include "tgpo/url.hpp"

namespace tgpo {

struct StateFingerprint {
  std::string normalized_url;
  std::vector<std::string> effective_prefix;  // effective action keys since the last URL change
  std::optional<std::string> screenshot_hash;

  auto operator<=>(const StateFingerprint&) const = default;
  bool operator==(const StateFingerprint&) const = default;
};

/// Same normalized URL, and either the same effective-action window or the same
/// (present) screenshot hash.
bool states_equivalent(const StateFingerprint& a, const StateFingerprint& b);

/// Fingerprints of s_0 .. s_T. The effective window restarts whenever the
/// normalized URL differs from the previous state's; the trajectory start is the
/// initial anchor. Every step must carry a resolved `effective` flag.
std::vector<StateFingerprint> fingerprint_trajectory(const Trajectory& trajectory, const UrlPolicy& policy = {});

struct NodeOccurrence {
  std::string trajectory_id;
  int step = 0;           // state index t within the trajectory
  int prefix_length = 0;  // steps taken to reach the node, d(s_0 -> s_t)

  auto operator<=>(const NodeOccurrence&) const = default;
};

struct MergedNode {
  int node_id = 0;
  StateFingerprint fingerprint;  // lexicographically smallest member of the merged class
  bool is_root = false;
  bool is_goal = false;
  std::vector<NodeOccurrence> occurrences;

  bool operator==(const MergedNode&) const = default;
};

struct EdgeOccurrence {
  std::string trajectory_id;
  int step = 0;  // index of the action a_t
  int label = 0;
  bool effective = false;
  bool format_valid = false;

  auto operator<=>(const EdgeOccurrence&) const = default;
};

struct ActionEdge {
  int from = 0;
  int to = 0;
  std::string action_key;
  std::vector<EdgeOccurrence> occurrences;
  std::vector<int> label_set;  // sorted distinct labels of the occurrences

  bool operator==(const ActionEdge&) const = default;
};

/// One trajectory replayed through the graph: nodes has length()+1 entries.
struct TrajectoryWalk {
  std::string trajectory_id;
  int label = 0;
  std::vector<int> nodes;
  std::vector<bool> effective;  // per step

  std::size_t length() const { return effective.size(); }
  bool operator==(const TrajectoryWalk&) const = default;
};

/// Rooted directed multigraph of merged states. Cycles are allowed; parallel
/// edges between two nodes always carry distinct action keys. Node ids follow
/// breadth-first order from the root, siblings ordered by fingerprint.
struct TrajectoryGraph {
  TaskSpec task;
  std::vector<MergedNode> nodes;
  std::vector<ActionEdge> edges;  // sorted by (from, to, action_key)
  int root_id = 0;
  std::vector<int> goal_ids;
  std::vector<TrajectoryWalk> walks;  // sorted by trajectory_id

  /// Indices into `edges` of the node's outgoing edges, in edge order.
  std::vector<std::size_t> out_edges(int node) const;
  const TrajectoryWalk* find_walk(std::string_view trajectory_id) const;

  bool operator==(const TrajectoryGraph&) const = default;
};

struct MergeOptions {
  UrlPolicy url_policy;
};

/// Merges the task's trajectories into one graph. States are unified by the
/// transitive closure of states_equivalent; all initial states form the root.
/// The result does not depend on the order of `trajectories`.
/// Throws EmptyTaskGroup, MixedTask, UnresolvedFlag.
TrajectoryGraph build_graph(const TaskSpec& task, std::span<const Trajectory> trajectories,
                            const MergeOptions& options = {});

}  // namespace tgpo
