#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tgpo/objective.hpp"
#include "tgpo/preference.hpp"
#include "tgpo/process_reward.hpp"
#include "tgpo/sim.hpp"
#include "tgpo/state_merge.hpp"

namespace tgpo {

// Synthetic end-to-end comparison: simulate a corpus, run the offline pipeline,
// train a weighted and a unit-weight policy, then roll each out greedily.

struct BenchmarkConfig {
  SimulationConfig simulation{30, 20, WorldParams{}, AgentScript{}};
  RewardConfig reward;
  PairingPolicy pairing = PairingPolicy::all_strict_pairs;
  TrainConfig train{0.1, 1.0, 20, 0, Weighting::dynamic, 0};
  ReferenceMode reference = ReferenceMode::uniform;
  MergeOptions merge;
  int eval_max_steps = 10;
};

struct PolicyScore {
  double success_rate = 0.0;
  double avg_steps = 0.0;
  double redundant_steps = 0.0;  // mean per task, ground truth from the world
};

/// Greedy rollout of `policy` in every world. The agent tracks its graph node by
/// following the most frequent edge for the chosen action; once off the graph it
/// takes the first available action in key order.
PolicyScore evaluate_greedy(std::span<const SimWorld> worlds, std::span<const TrajectoryGraph> graphs,
                            const PolicyTable& policy, int max_steps);

struct BenchmarkResult {
  std::uint64_t seed = 0;
  std::size_t pairs = 0;
  RedundancyMetrics behavior;  // the simulated corpus itself
  double conflict_percentage = 0.0;
  PolicyScore weighted;  // dynamic weights
  PolicyScore unit;      // w = 1
};

BenchmarkResult run_benchmark(const BenchmarkConfig& config, std::uint64_t seed);

}  // namespace tgpo
