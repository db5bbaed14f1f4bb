#include "tgpo/distances.hpp"

#include <deque>

namespace tgpo {

namespace {

std::vector<HopCount> bfs(const std::vector<std::vector<int>>& adjacency, const std::vector<int>& sources) {
  std::vector<HopCount> dist(adjacency.size());
  std::deque<int> queue;
  for (int s : sources) {
    if (dist[s]) continue;
    dist[s] = 0;
    queue.push_back(s);
  }
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (int v : adjacency[u]) {
      if (dist[v]) continue;
      dist[v] = *dist[u] + 1;
      queue.push_back(v);
    }
  }
  return dist;
}

}  // namespace

DistanceIndex shortest_distances(const TrajectoryGraph& graph) {
  std::vector<std::vector<int>> forward(graph.nodes.size());
  std::vector<std::vector<int>> backward(graph.nodes.size());
  for (const ActionEdge& edge : graph.edges) {
    forward[edge.from].push_back(edge.to);
    backward[edge.to].push_back(edge.from);
  }
  DistanceIndex index;
  index.from_root = bfs(forward, {graph.root_id});
  index.to_goal = bfs(backward, graph.goal_ids);
  index.l_min = index.to_goal[graph.root_id];
  return index;
}

}  // namespace tgpo
