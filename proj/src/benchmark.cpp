#include "tgpo/benchmark.hpp"

#include <map>

#include "tgpo/distances.hpp"
#include "tgpo/errors.hpp"

namespace tgpo {

namespace {

// Destination of the most frequent edge (from, key); ties go to the smaller node id.
std::optional<int> follow(const TrajectoryGraph& graph, int from, const std::string& key) {
  std::optional<int> best;
  std::size_t best_count = 0;
  for (std::size_t e : graph.out_edges(from)) {
    const ActionEdge& edge = graph.edges[e];
    if (edge.action_key != key) continue;
    if (!best || edge.occurrences.size() > best_count) {
      best = edge.to;
      best_count = edge.occurrences.size();
    }
  }
  return best;
}

}  // namespace

PolicyScore evaluate_greedy(std::span<const SimWorld> worlds, std::span<const TrajectoryGraph> graphs,
                            const PolicyTable& policy, int max_steps) {
  if (worlds.size() != graphs.size()) fail(ErrorKind::invariant_violation, "one graph per world expected");
  PolicyScore score;
  if (worlds.empty()) return score;
  std::size_t successes = 0, steps = 0, redundant = 0;
  for (std::size_t i = 0; i < worlds.size(); ++i) {
    const SimWorld& world = worlds[i];
    const TrajectoryGraph& graph = graphs[i];
    std::optional<int> node = graph.root_id;
    auto choose = [&](const EpisodeState&, const std::vector<const SimTransition*>& actions) -> std::size_t {
      std::optional<std::string> wanted;
      if (node) wanted = policy.greedy_action(StateKey{graph.task.task_id, *node});
      if (wanted)
        for (std::size_t k = 0; k < actions.size(); ++k)
          if (actions[k]->key == *wanted) {
            node = follow(graph, *node, *wanted);
            return k;
          }
      node.reset();
      return 0;
    };
    const Episode episode = run_episode(world, choose, max_steps, mix_seed(world.params.seed, 0xe7a1),
                                        world.task_id + "-greedy");
    successes += episode.success ? 1 : 0;
    steps += episode.trajectory.steps.size();
    redundant += static_cast<std::size_t>(episode.redundant_steps);
  }
  const double n = static_cast<double>(worlds.size());
  score.success_rate = static_cast<double>(successes) / n;
  score.avg_steps = static_cast<double>(steps) / n;
  score.redundant_steps = static_cast<double>(redundant) / n;
  return score;
}

BenchmarkResult run_benchmark(const BenchmarkConfig& config, std::uint64_t seed) {
  BenchmarkResult result;
  result.seed = seed;
  Simulation sim = simulate(config.simulation, seed);

  std::vector<TrajectoryGraph> graphs;
  std::vector<TrajectoryWalk> walks;
  std::vector<PreferencePair> pairs;
  Vocabulary vocabulary;
  for (const TaskGroup& group : sim.corpus) {
    TrajectoryGraph graph = build_graph(group.task, group.trajectories, config.merge);
    walks.insert(walks.end(), graph.walks.begin(), graph.walks.end());
    merge_into(vocabulary, vocabulary_from_graph(graph));
    const ScoredGraph scored = score_graph(graph, config.reward);
    auto task_pairs = extract_pairs(scored, config.pairing);
    pairs.insert(pairs.end(), task_pairs.begin(), task_pairs.end());
    graphs.push_back(std::move(graph));
  }
  result.pairs = pairs.size();
  result.behavior = redundancy_metrics(walks);
  result.conflict_percentage = label_conflicts(graphs).conflict_percentage;

  const PolicyTable initial(vocabulary);
  const ReferencePolicy ref(initial, config.reference);
  TrainConfig weighted = config.train;
  weighted.weighting = Weighting::dynamic;
  TrainConfig unit = config.train;
  unit.weighting = Weighting::unit;
  const TrainResult tgpo = train(pairs, initial, ref, weighted);
  const TrainResult dpo = train(pairs, initial, ref, unit);
  result.weighted = evaluate_greedy(sim.worlds, graphs, tgpo.policy, config.eval_max_steps);
  result.unit = evaluate_greedy(sim.worlds, graphs, dpo.policy, config.eval_max_steps);
  return result;
}

}  // namespace tgpo
