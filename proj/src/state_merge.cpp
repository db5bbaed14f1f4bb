#include "tgpo/state_merge.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <tuple>
#include <unordered_map>

#include "tgpo/errors.hpp"

namespace tgpo {

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<int> rank_;
};

std::string join_keys(const std::vector<std::string>& keys) {
  std::string joined;
  for (const auto& k : keys) {
    joined += k;
    joined.push_back('\x1e');
  }
  return joined;
}

struct Instance {
  std::size_t trajectory;
  std::size_t step;
};

}  // namespace

bool states_equivalent(const StateFingerprint& a, const StateFingerprint& b) {
  if (a.normalized_url != b.normalized_url) return false;
  if (a.effective_prefix == b.effective_prefix) return true;
  return a.screenshot_hash && b.screenshot_hash && *a.screenshot_hash == *b.screenshot_hash;
}

std::vector<StateFingerprint> fingerprint_trajectory(const Trajectory& trajectory, const UrlPolicy& policy) {
  std::vector<StateFingerprint> prints;
  prints.reserve(trajectory.length() + 1);
  std::vector<std::string> window;
  for (std::size_t t = 0; t <= trajectory.length(); ++t) {
    const StateObservation& obs = trajectory.state_at(t);
    std::string url = normalize_url(obs.url, policy);
    if (t > 0) {
      const Step& previous = trajectory.steps[t - 1];
      if (!previous.effective)
        fail(ErrorKind::unresolved_flag, "trajectory '" + trajectory.trajectory_id + "' step " +
                                             std::to_string(t - 1) + " has no effective flag");
      if (url != prints.back().normalized_url)
        window.clear();
      else if (*previous.effective)
        window.push_back(canonical_key(previous.action));
    }
    prints.push_back(StateFingerprint{std::move(url), window, obs.screenshot_hash});
  }
  return prints;
}

std::vector<std::size_t> TrajectoryGraph::out_edges(int node) const {
  std::vector<std::size_t> out;
  auto first = std::lower_bound(edges.begin(), edges.end(), node,
                                [](const ActionEdge& e, int n) { return e.from < n; });
  for (auto it = first; it != edges.end() && it->from == node; ++it)
    out.push_back(static_cast<std::size_t>(it - edges.begin()));
  return out;
}

const TrajectoryWalk* TrajectoryGraph::find_walk(std::string_view trajectory_id) const {
  auto it = std::lower_bound(walks.begin(), walks.end(), trajectory_id,
                             [](const TrajectoryWalk& w, std::string_view id) { return w.trajectory_id < id; });
  return it != walks.end() && it->trajectory_id == trajectory_id ? &*it : nullptr;
}

TrajectoryGraph build_graph(const TaskSpec& task, std::span<const Trajectory> trajectories,
                            const MergeOptions& options) {
  if (trajectories.empty()) fail(ErrorKind::empty_task_group, "task '" + task.task_id + "' has no trajectories");
  for (const Trajectory& trajectory : trajectories) {
    if (trajectory.task_id != task.task_id)
      fail(ErrorKind::mixed_task, "trajectory '" + trajectory.trajectory_id + "' belongs to task '" +
                                      trajectory.task_id + "', not '" + task.task_id + "'");
    for (const Step& step : trajectory.steps)
      if (!step.effective || !step.format_valid)
        fail(ErrorKind::unresolved_flag, "trajectory '" + trajectory.trajectory_id + "' step " +
                                             std::to_string(step.index) + " is not annotated; run the verifier first");
  }

  // Fingerprint every state instance.
  std::vector<std::vector<StateFingerprint>> prints;
  std::vector<Instance> instances;
  std::vector<std::vector<std::size_t>> instance_of(trajectories.size());
  for (std::size_t k = 0; k < trajectories.size(); ++k) {
    prints.push_back(fingerprint_trajectory(trajectories[k], options.url_policy));
    for (std::size_t t = 0; t < prints[k].size(); ++t) {
      instance_of[k].push_back(instances.size());
      instances.push_back({k, t});
    }
  }
  auto print_of = [&](std::size_t i) -> const StateFingerprint& {
    return prints[instances[i].trajectory][instances[i].step];
  };

  // Transitive closure of states_equivalent. Within one URL, disjunct (a) is
  // equality of windows and (b) equality of hashes, so bucketing on each is exact.
  DisjointSets sets(instances.size());
  {
    std::unordered_map<std::string, std::size_t> by_window;
    std::unordered_map<std::string, std::size_t> by_hash;
    for (std::size_t i = 0; i < instances.size(); ++i) {
      const StateFingerprint& fp = print_of(i);
      const std::string url_key = fp.normalized_url + '\x1f';
      auto [w, fresh_window] = by_window.emplace(url_key + join_keys(fp.effective_prefix), i);
      if (!fresh_window) sets.unite(w->second, i);
      if (fp.screenshot_hash) {
        auto [h, fresh_hash] = by_hash.emplace(url_key + *fp.screenshot_hash, i);
        if (!fresh_hash) sets.unite(h->second, i);
      }
    }
    for (std::size_t k = 1; k < trajectories.size(); ++k) sets.unite(instance_of[0][0], instance_of[k][0]);
  }

  // Representative (smallest) fingerprint per class.
  std::map<std::size_t, std::size_t> representative;  // class root -> instance
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const std::size_t cls = sets.find(i);
    auto [it, fresh] = representative.emplace(cls, i);
    if (!fresh && print_of(i) < print_of(it->second)) it->second = i;
  }

  std::map<std::size_t, std::set<std::size_t>> successors;
  for (std::size_t k = 0; k < trajectories.size(); ++k)
    for (std::size_t t = 0; t + 1 < instance_of[k].size(); ++t)
      successors[sets.find(instance_of[k][t])].insert(sets.find(instance_of[k][t + 1]));

  // Breadth-first numbering; newly discovered siblings ordered by fingerprint.
  std::map<std::size_t, int> id_of;
  std::vector<std::size_t> class_of_id;
  const std::size_t root_class = sets.find(instance_of[0][0]);
  id_of[root_class] = 0;
  class_of_id.push_back(root_class);
  for (std::size_t head = 0; head < class_of_id.size(); ++head) {
    std::vector<std::size_t> fresh;
    for (std::size_t next : successors[class_of_id[head]])
      if (!id_of.count(next)) fresh.push_back(next);
    std::sort(fresh.begin(), fresh.end(), [&](std::size_t a, std::size_t b) {
      return print_of(representative.at(a)) < print_of(representative.at(b));
    });
    for (std::size_t cls : fresh) {
      id_of[cls] = static_cast<int>(class_of_id.size());
      class_of_id.push_back(cls);
    }
  }
  if (class_of_id.size() != representative.size())
    fail(ErrorKind::invariant_violation, "merged graph of task '" + task.task_id + "' has unreachable nodes");

  TrajectoryGraph graph;
  graph.task = task;
  graph.root_id = 0;
  graph.nodes.resize(class_of_id.size());
  for (std::size_t id = 0; id < class_of_id.size(); ++id) {
    MergedNode& node = graph.nodes[id];
    node.node_id = static_cast<int>(id);
    node.fingerprint = print_of(representative.at(class_of_id[id]));
    node.is_root = id == 0;
  }

  std::map<std::tuple<int, int, std::string>, std::vector<EdgeOccurrence>> edge_occurrences;
  std::set<int> goals;
  for (std::size_t k = 0; k < trajectories.size(); ++k) {
    const Trajectory& trajectory = trajectories[k];
    TrajectoryWalk walk{trajectory.trajectory_id, trajectory.label, {}, {}};
    for (std::size_t t = 0; t < instance_of[k].size(); ++t) {
      const int node = id_of.at(sets.find(instance_of[k][t]));
      walk.nodes.push_back(node);
      graph.nodes[node].occurrences.push_back({trajectory.trajectory_id, static_cast<int>(t), static_cast<int>(t)});
    }
    for (std::size_t t = 0; t < trajectory.length(); ++t) {
      const Step& step = trajectory.steps[t];
      walk.effective.push_back(*step.effective);
      edge_occurrences[{walk.nodes[t], walk.nodes[t + 1], canonical_key(step.action)}].push_back(
          {trajectory.trajectory_id, static_cast<int>(t), trajectory.label, *step.effective,
           *step.format_valid});
    }
    if (trajectory.label == 1) goals.insert(walk.nodes.back());
    graph.walks.push_back(std::move(walk));
  }

  for (MergedNode& node : graph.nodes) std::sort(node.occurrences.begin(), node.occurrences.end());
  for (int g : goals) graph.nodes[g].is_goal = true;
  graph.goal_ids.assign(goals.begin(), goals.end());

  for (auto& [key, occurrences] : edge_occurrences) {
    ActionEdge edge;
    std::tie(edge.from, edge.to, edge.action_key) = key;
    std::sort(occurrences.begin(), occurrences.end());
    std::set<int> labels;
    for (const auto& o : occurrences) labels.insert(o.label);
    edge.label_set.assign(labels.begin(), labels.end());
    edge.occurrences = std::move(occurrences);
    graph.edges.push_back(std::move(edge));
  }
  std::sort(graph.walks.begin(), graph.walks.end(),
            [](const TrajectoryWalk& a, const TrajectoryWalk& b) { return a.trajectory_id < b.trajectory_id; });
  return graph;
}

}  // namespace tgpo
