#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tgpo/records.hpp"
#include "tgpo/trajectory.hpp"

namespace tgpo {

// Synthetic web sites with a known transition function. A world state is a
// (page, variant) pair: variant 0 is the page as loaded, variant 1 the page after
// an in-page change (scroll, expanded panel). Transitions depend only on the page.

struct WorldParams {
  int nodes = 8;             // backbone pages; page 0 is the start, page nodes-1 the goal
  double branching = 2.0;    // mean forward out-degree of backbone pages
  int decoys = 3;            // self-loops, dead ends and in-page variant actions
  double dynamic_fraction = 0.25;  // pages whose screenshot changes on every visit
  std::uint64_t seed = 0;
};

enum class Effect {
  move,       // load another page (variant 0)
  in_page,    // same page, switch to variant 1
  self_loop,  // nothing changes
};

struct SimPage {
  int id = 0;
  std::string path;
  bool dead_end = false;
  bool dynamic_hash = false;
};

struct SimTransition {
  int from = 0;
  Action action;
  std::string key;  // canonical_key(action)
  Effect effect = Effect::move;
  int to = 0;       // destination page for moves, `from` otherwise
};

struct SimWorld {
  WorldParams params;
  std::string task_id;
  std::string instruction;
  std::string host;  // mixed case on purpose; normalization lowercases it
  std::vector<SimPage> pages;
  std::vector<SimTransition> transitions;  // sorted by (from, key)
  int start = 0;
  int goal = 0;
  std::vector<std::optional<int>> distance_to_goal;  // ground truth over page moves
  int shortest_distance = 0;                         // start -> goal

  std::vector<const SimTransition*> actions_at(int page) const;
  std::string raw_url(int page, std::uint64_t session) const;
  std::string canonical_url(int page) const;
  std::string screenshot_hash(int page, int variant, int visit) const;
};

/// Random backbone DAG from start to goal with forward shortcuts, back edges,
/// and the requested decoys. Throws InfeasibleParameters.
SimWorld generate_world(const WorldParams& params, std::string task_id = "task-000");

struct AgentScript {
  double competence = 0.7;  // probability of the canonical shortest-path action
  double loop_bias = 0.1;   // probability of taking an available back edge instead
  int max_steps = 10;
  std::uint64_t seed = 0;
};

void validate(const AgentScript& script);

/// K scripted trajectories labeled by goal arrival within max_steps; effective and
/// format flags come from the world's ground truth.
std::vector<Trajectory> roll_out(const SimWorld& world, const AgentScript& script, int trajectories);

struct EpisodeState {
  int page = 0;
  int variant = 0;
  int step = 0;
};

/// Picks one of `world.actions_at(state.page)`; returns its index in that list.
using ActionChooser = std::function<std::size_t(const EpisodeState& state,
                                                const std::vector<const SimTransition*>& actions)>;
/// Told which transition was taken, after the fact.
using TransitionObserver = std::function<void(const SimTransition& taken)>;

struct Episode {
  Trajectory trajectory;
  bool success = false;
  int redundant_steps = 0;  // steps revisiting a (page, variant) or changing nothing
};

Episode run_episode(const SimWorld& world, const ActionChooser& choose, int max_steps, std::uint64_t seed,
                    std::string trajectory_id, const TransitionObserver& observe = {});

struct SimulationConfig {
  int tasks = 1;
  int trajectories = 20;  // K per task
  WorldParams world;
  AgentScript agent;
};

struct Simulation {
  std::vector<SimWorld> worlds;
  Corpus corpus;
};

/// Task i uses world seed and agent seed derived from (seed, i).
Simulation simulate(const SimulationConfig& config, std::uint64_t seed);

inline constexpr std::string_view kWorldFormat = "tgpo-world";

ordered_json to_json(const WorldParams& params);
ordered_json to_json(const AgentScript& script);
void write_world(std::ostream& out, const SimWorld& world);

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace tgpo
