#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "tgpo/distances.hpp"
#include "tgpo/objective.hpp"
#include "tgpo/sim.hpp"
#include "tgpo/state_merge.hpp"
#include "tgpo/trajectory.hpp"

namespace testing {

using namespace tgpo;

std::string hash16(std::uint64_t n);
StateObservation obs(std::string url, std::optional<std::string> hash = std::nullopt);

Action click(std::string target);
Action type_text(std::string target, std::string value);
Action scroll(std::string direction);
Action navigate(std::string target);

struct StepSpec {
  StateObservation state;
  Action action;
  std::optional<bool> effective = std::nullopt;
};

Trajectory make_trajectory(std::string id, std::string task, int label, std::vector<StepSpec> steps,
                           StateObservation final_state, std::optional<bool> format_valid = true);

/// Two runs of "add the cheapest Coca-Cola to the cart" that share the search and
/// sort states and then diverge: one adds to cart, the other opens an item page.
/// Step flags are left for the verifier.
TaskGroup cola_group();
Corpus cola_corpus();

/// Node ids of the cola graph, by BFS numbering.
inline constexpr int kColaRoot = 0;
inline constexpr int kColaResults = 1;
inline constexpr int kColaSorted = 2;
inline constexpr int kColaCart = 3;
inline constexpr int kColaItem = 4;

std::string fixture_path(const std::string& name);
std::string read_file(const std::string& path);

// ---- independent oracles -------------------------------------------------

/// Bellman-Ford style relaxation over the edge list; -1 means unreachable.
struct OracleDistances {
  std::vector<int> from_root;
  std::vector<int> to_goal;
  int l_min = -1;
};
OracleDistances relax_distances(const TrajectoryGraph& graph);

/// Shortest distances to the goal over page moves of a simulated world; -1 if none.
std::vector<int> world_distances(const SimWorld& world);

/// Partition of (trajectory index, state index) by quadratic fixpoint over the
/// merge rule, with all initial states forced together.
std::set<std::set<std::pair<std::size_t, std::size_t>>> merge_partition(const std::vector<Trajectory>& trajectories,
                                                                        const UrlPolicy& policy = {});

/// Partition induced by a built graph, in the same shape.
std::set<std::set<std::pair<std::size_t, std::size_t>>> graph_partition(const TrajectoryGraph& graph,
                                                                        const std::vector<Trajectory>& trajectories);

/// Scans walk[0..t] for walk[t+1].
bool revisits(const std::vector<int>& walk, std::size_t t);

/// Mean TGPO loss computed from raw logits in long double, using its own
/// log-softmax. Block structure is read from `table`; values come from `logits`.
long double oracle_loss(const std::vector<PreferencePair>& pairs, const PolicyTable& table,
                        const std::vector<long double>& logits, const std::vector<long double>& ref_logits,
                        long double beta, bool unit_weights);

/// A corpus from one simulated task with randomized world and agent parameters.
struct RandomTask {
  SimWorld world;
  TaskGroup group;
};
RandomTask random_task(std::mt19937_64& rng, int index);

std::vector<TrajectoryGraph> build_all(const Corpus& corpus);

}  // namespace testing
