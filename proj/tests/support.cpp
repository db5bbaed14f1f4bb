#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <sstream>

#include "tgpo/url.hpp"
#include "tgpo/verifier.hpp"

#ifndef TGPO_FIXTURE_DIR
#define TGPO_FIXTURE_DIR "tests/fixtures"
#endif

namespace testing {

std::string hash16(std::uint64_t n) {
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(n));
  return buffer;
}

StateObservation obs(std::string url, std::optional<std::string> hash) {
  return StateObservation{std::move(url), std::move(hash), std::nullopt};
}

Action click(std::string target) {
  return Action{ActionKind::click, target, std::nullopt, "click(\"" + target + "\")"};
}

Action type_text(std::string target, std::string value) {
  return Action{ActionKind::type, target, value, "type(\"" + target + "\", \"" + value + "\")"};
}

Action scroll(std::string direction) {
  return Action{ActionKind::scroll, direction, std::nullopt, "scroll(" + direction + ")"};
}

Action navigate(std::string target) {
  return Action{ActionKind::navigate, target, std::nullopt, "navigate(" + target + ")"};
}

Trajectory make_trajectory(std::string id, std::string task, int label, std::vector<StepSpec> steps,
                           StateObservation final_state, std::optional<bool> format_valid) {
  Trajectory t;
  t.trajectory_id = std::move(id);
  t.task_id = std::move(task);
  t.label = label;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    Step s;
    s.index = static_cast<int>(i);
    s.state = std::move(steps[i].state);
    s.action = std::move(steps[i].action);
    s.effective = steps[i].effective;
    if (steps[i].effective) s.format_valid = format_valid;
    t.steps.push_back(std::move(s));
  }
  t.final_state = std::move(final_state);
  return t;
}

TaskGroup cola_group() {
  const std::string task = "cart-cheapest-cola";
  TaskGroup group;
  group.task = {task, "Add the cheapest Coca-Cola to the shopping cart"};
  group.trajectories.push_back(make_trajectory(
      "cola-success", task, 1,
      {{obs("https://shop.example.com/", hash16(0x1001)), type_text("#search", "Coca-Cola")},
       {obs("https://shop.example.com/search?q=coca-cola&sid=a81f", hash16(0x1002)), click("#sort-price")},
       {obs("https://shop.example.com/search?sort=price&q=coca-cola", hash16(0x1003)), click("#add-to-cart-1")}},
      obs("https://shop.example.com/cart", hash16(0x1004))));
  group.trajectories.push_back(make_trajectory(
      "cola-failure", task, 0,
      {{obs("https://Shop.Example.com/?utm_source=mail", hash16(0x1001)), type_text("#search", "coca cola")},
       {obs("https://shop.example.com/search?q=coca-cola&sid=77c0", hash16(0x2002)), click("#sort-price")},
       {obs("https://shop.example.com/search?q=coca-cola&sort=price", hash16(0x2003)), click("#item-2")}},
      obs("https://shop.example.com/item/2", hash16(0x2004))));
  return group;
}

Corpus cola_corpus() { return {cola_group()}; }

std::string fixture_path(const std::string& name) { return std::string(TGPO_FIXTURE_DIR) + "/" + name; }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

OracleDistances relax_distances(const TrajectoryGraph& graph) {
  const std::size_t n = graph.nodes.size();
  constexpr int inf = 1 << 29;
  std::vector<int> from(n, inf), to(n, inf);
  from[static_cast<std::size_t>(graph.root_id)] = 0;
  for (int g : graph.goal_ids) to[static_cast<std::size_t>(g)] = 0;
  for (std::size_t round = 0; round < n; ++round)
    for (const ActionEdge& e : graph.edges) {
      const auto u = static_cast<std::size_t>(e.from), v = static_cast<std::size_t>(e.to);
      from[v] = std::min(from[v], from[u] + 1);
      to[u] = std::min(to[u], to[v] + 1);
    }
  OracleDistances out;
  for (std::size_t i = 0; i < n; ++i) {
    out.from_root.push_back(from[i] >= inf ? -1 : from[i]);
    out.to_goal.push_back(to[i] >= inf ? -1 : to[i]);
  }
  out.l_min = out.to_goal[static_cast<std::size_t>(graph.root_id)];
  return out;
}

std::vector<int> world_distances(const SimWorld& world) {
  const std::size_t n = world.pages.size();
  constexpr int inf = 1 << 29;
  std::vector<int> d(n, inf);
  d[static_cast<std::size_t>(world.goal)] = 0;
  for (std::size_t round = 0; round < n; ++round)
    for (const SimTransition& t : world.transitions)
      if (t.effect == Effect::move)
        d[static_cast<std::size_t>(t.from)] = std::min(d[static_cast<std::size_t>(t.from)], d[static_cast<std::size_t>(t.to)] + 1);
  for (int& x : d)
    if (x >= inf) x = -1;
  return d;
}

namespace {

struct Print {
  std::string url;
  std::vector<std::string> window;
  std::optional<std::string> hash;
};

std::vector<Print> prints_of(const Trajectory& t, const UrlPolicy& policy) {
  std::vector<Print> out;
  for (std::size_t i = 0; i <= t.length(); ++i) {
    const StateObservation& o = i < t.length() ? t.steps[i].state : t.final_state;
    Print p{normalize_url(o.url, policy), {}, o.screenshot_hash};
    if (i > 0 && p.url == out.back().url) {
      p.window = out.back().window;
      if (t.steps[i - 1].effective.value()) p.window.push_back(canonical_key(t.steps[i - 1].action));
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

std::set<std::set<std::pair<std::size_t, std::size_t>>> merge_partition(const std::vector<Trajectory>& trajectories,
                                                                        const UrlPolicy& policy) {
  std::vector<std::pair<std::size_t, std::size_t>> ids;
  std::vector<Print> prints;
  for (std::size_t k = 0; k < trajectories.size(); ++k) {
    auto p = prints_of(trajectories[k], policy);
    for (std::size_t i = 0; i < p.size(); ++i) {
      ids.push_back({k, i});
      prints.push_back(std::move(p[i]));
    }
  }
  std::vector<std::size_t> label(ids.size());
  for (std::size_t i = 0; i < label.size(); ++i) label[i] = i;
  auto linked = [&](std::size_t i, std::size_t j) {
    if (ids[i].second == 0 && ids[j].second == 0) return true;
    if (prints[i].url != prints[j].url) return false;
    return prints[i].window == prints[j].window ||
           (prints[i].hash && prints[j].hash && *prints[i].hash == *prints[j].hash);
  };
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (std::size_t j = i + 1; j < ids.size(); ++j)
        if (label[i] != label[j] && linked(i, j)) {
          const std::size_t low = std::min(label[i], label[j]);
          label[i] = label[j] = low;
          changed = true;
        }
  }
  std::map<std::size_t, std::set<std::pair<std::size_t, std::size_t>>> groups;
  for (std::size_t i = 0; i < ids.size(); ++i) groups[label[i]].insert(ids[i]);
  std::set<std::set<std::pair<std::size_t, std::size_t>>> out;
  for (auto& [l, g] : groups) out.insert(g);
  return out;
}

std::set<std::set<std::pair<std::size_t, std::size_t>>> graph_partition(const TrajectoryGraph& graph,
                                                                        const std::vector<Trajectory>& trajectories) {
  std::map<std::string, std::size_t> index;
  for (std::size_t k = 0; k < trajectories.size(); ++k) index[trajectories[k].trajectory_id] = k;
  std::set<std::set<std::pair<std::size_t, std::size_t>>> out;
  for (const MergedNode& node : graph.nodes) {
    std::set<std::pair<std::size_t, std::size_t>> g;
    for (const NodeOccurrence& o : node.occurrences)
      g.insert({index.at(o.trajectory_id), static_cast<std::size_t>(o.step)});
    out.insert(g);
  }
  return out;
}

bool revisits(const std::vector<int>& walk, std::size_t t) {
  for (std::size_t j = 0; j <= t; ++j)
    if (walk[j] == walk[t + 1]) return true;
  return false;
}

long double oracle_loss(const std::vector<PreferencePair>& pairs, const PolicyTable& table,
                        const std::vector<long double>& logits, const std::vector<long double>& ref_logits,
                        long double beta, bool unit_weights) {
  auto log_pi = [&](const std::vector<long double>& z, const StateKey& s, const std::string& a) {
    const auto* block = table.find(s);
    long double sum = 0;
    for (std::size_t i = 0; i < block->actions.size(); ++i) sum += std::exp(z[block->offset + i]);
    return z[*table.index_of(s, a)] - std::log(sum);
  };
  long double total = 0;
  for (const PreferencePair& p : pairs) {
    const StateKey s{p.task_id, p.node_id};
    const long double delta = (log_pi(logits, s, p.chosen) - log_pi(ref_logits, s, p.chosen)) -
                              (log_pi(logits, s, p.rejected) - log_pi(ref_logits, s, p.rejected));
    const long double w = unit_weights ? 1.0L : static_cast<long double>(p.weight);
    total += w * std::log1p(std::exp(-beta * delta));
  }
  return total / static_cast<long double>(pairs.size());
}

RandomTask random_task(std::mt19937_64& rng, int index) {
  std::uniform_int_distribution<int> nodes(2, 12), decoys(0, 6), k(3, 15), steps(4, 16);
  std::uniform_real_distribution<double> branching(1.0, 3.0), fraction(0.0, 0.6), competence(0.2, 1.0),
      loop(0.0, 0.3);
  WorldParams params;
  params.nodes = nodes(rng);
  params.branching = branching(rng);
  params.decoys = decoys(rng);
  params.dynamic_fraction = fraction(rng);
  params.seed = rng();
  AgentScript script;
  script.competence = competence(rng);
  script.loop_bias = loop(rng);
  script.max_steps = steps(rng);
  script.seed = rng();
  char id[32];
  std::snprintf(id, sizeof id, "rand-%04d", index);
  RandomTask out;
  out.world = generate_world(params, id);
  out.group.task = {out.world.task_id, out.world.instruction};
  out.group.trajectories = roll_out(out.world, script, k(rng));
  return out;
}

std::vector<TrajectoryGraph> build_all(const Corpus& corpus) {
  std::vector<TrajectoryGraph> graphs;
  for (const TaskGroup& g : corpus) graphs.push_back(build_graph(g.task, g.trajectories));
  return graphs;
}

}  // namespace testing
