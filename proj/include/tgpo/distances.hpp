#pragma once

#include <optional>
#include <vector>

#include "tgpo/state_merge.hpp"

namespace tgpo {

/// Hop count; nullopt is the +infinity sentinel for unreachable targets.
using HopCount = std::optional<int>;

struct DistanceIndex {
  std::vector<HopCount> from_root;  // per node id
  std::vector<HopCount> to_goal;    // per node id, minimum over goal nodes
  HopCount l_min;                   // to_goal of the root

  /// False when the task has no successful trajectory (no goal node).
  bool has_goal() const { return l_min.has_value(); }
};

/// Unweighted shortest paths along observed action edges.
DistanceIndex shortest_distances(const TrajectoryGraph& graph);

}  // namespace tgpo
