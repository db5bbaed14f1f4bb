#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tgpo/process_reward.hpp"
#include "tgpo/records.hpp"

namespace tgpo {

inline constexpr std::string_view kGraphFormat = "tgpo-graph";
inline constexpr std::string_view kScoredGraphFormat = "tgpo-scored-graph";

// Dump layout, one record per line, per task in this order:
//
//   {"type":"task", ...}     counts, root, goals (scored: l_min, reward_config)
//   {"type":"node", ...}     by node id (scored: from_root, to_goal)
//   {"type":"edge", ...}     by (from, to, action) (scored: reward per edge and occurrence)
//   {"type":"walk", ...}     by trajectory id
//
// Unreachable distances are written as null. Two graphs are equal iff their dumps are.

ordered_json to_json(const RewardConfig& config);
RewardConfig reward_config_from_json(const nlohmann::json& object);

void write_graph(std::ostream& out, const TrajectoryGraph& graph);
void write_scored_graph(std::ostream& out, const ScoredGraph& scored);

std::string dump_graph(const TrajectoryGraph& graph);
std::string dump_scored_graph(const ScoredGraph& scored);

struct GraphFile {
  std::optional<nlohmann::json> header;
  std::vector<TrajectoryGraph> graphs;
};

struct ScoredGraphFile {
  std::optional<nlohmann::json> header;
  std::vector<ScoredGraph> graphs;
};

/// Reads a graph dump. Scoring fields, if present, are ignored.
GraphFile read_graphs(std::istream& in);
/// Reads a scored dump; throws MalformedRecord when scoring fields are missing.
ScoredGraphFile read_scored_graphs(std::istream& in);

}  // namespace tgpo
