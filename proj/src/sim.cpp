#include "tgpo/sim.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <deque>
#include <map>
#include <ostream>
#include <random>
#include <set>

#include "tgpo/errors.hpp"

namespace tgpo {

namespace {

constexpr std::string_view kBackKey = "navigate|back";

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Engine output is specified by the standard; distributions are not, so draws
// are built from raw 64-bit outputs.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

std::string hex(std::uint64_t value, int digits) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(static_cast<std::size_t>(digits), '0');
  for (int i = digits - 1; i >= 0; --i, value >>= 4) out[static_cast<std::size_t>(i)] = kDigits[value & 0xf];
  return out;
}

Action make_action(ActionKind kind, std::string target) {
  Action action;
  action.kind = kind;
  action.target = target;
  const bool quoted = kind == ActionKind::click;
  action.raw = std::string(to_string(kind)) + "(" + (quoted ? "\"" + target + "\"" : target) + ")";
  return action;
}

void add_transition(SimWorld& world, int from, Action action, Effect effect, int to) {
  SimTransition t;
  t.from = from;
  t.key = canonical_key(action);
  t.action = std::move(action);
  t.effect = effect;
  t.to = to;
  world.transitions.push_back(std::move(t));
}

bool has_key(const SimWorld& world, int page, std::string_view key) {
  return std::any_of(world.transitions.begin(), world.transitions.end(),
                     [&](const SimTransition& t) { return t.from == page && t.key == key; });
}

void compute_distances(SimWorld& world) {
  std::vector<std::vector<int>> reverse(world.pages.size());
  for (const SimTransition& t : world.transitions)
    if (t.effect == Effect::move) reverse[static_cast<std::size_t>(t.to)].push_back(t.from);
  world.distance_to_goal.assign(world.pages.size(), std::nullopt);
  std::deque<int> queue{world.goal};
  world.distance_to_goal[static_cast<std::size_t>(world.goal)] = 0;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    for (int u : reverse[static_cast<std::size_t>(v)]) {
      auto& d = world.distance_to_goal[static_cast<std::size_t>(u)];
      if (d) continue;
      d = *world.distance_to_goal[static_cast<std::size_t>(v)] + 1;
      queue.push_back(u);
    }
  }
  if (!world.distance_to_goal[static_cast<std::size_t>(world.start)])
    fail(ErrorKind::invariant_violation, "generated world has no route from start to goal");
  world.shortest_distance = *world.distance_to_goal[static_cast<std::size_t>(world.start)];
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ (stream * 0xd1b54a32d192ed03ULL));
}

std::vector<const SimTransition*> SimWorld::actions_at(int page) const {
  std::vector<const SimTransition*> out;
  for (const SimTransition& t : transitions)
    if (t.from == page) out.push_back(&t);
  return out;
}

std::string SimWorld::raw_url(int page, std::uint64_t session) const {
  return "https://" + host + pages.at(static_cast<std::size_t>(page)).path + "?sid=" + hex(session, 8) + "&lang=en";
}

std::string SimWorld::canonical_url(int page) const {
  std::string lower = host;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return "https://" + lower + pages.at(static_cast<std::size_t>(page)).path + "?lang=en";
}

std::string SimWorld::screenshot_hash(int page, int variant, int visit) const {
  const bool dynamic = pages.at(static_cast<std::size_t>(page)).dynamic_hash;
  std::uint64_t h = mix_seed(params.seed, 0x51a7e);
  h = splitmix64(h ^ static_cast<std::uint64_t>(page) * 7919ULL);
  h = splitmix64(h ^ static_cast<std::uint64_t>(variant) * 104729ULL);
  if (dynamic) h = splitmix64(h ^ static_cast<std::uint64_t>(visit) * 15485863ULL);
  return hex(h, 16);
}

SimWorld generate_world(const WorldParams& params, std::string task_id) {
  if (params.nodes < 2) fail(ErrorKind::infeasible_parameters, "a world needs at least 2 pages");
  if (!(params.branching >= 1.0) || params.branching > 4.0)
    fail(ErrorKind::infeasible_parameters, "branching must lie in [1, 4]");
  if (params.decoys < 0 || params.decoys > 10 * params.nodes)
    fail(ErrorKind::infeasible_parameters, "decoys must lie in [0, 10 * nodes]");
  if (!(params.dynamic_fraction >= 0.0 && params.dynamic_fraction <= 1.0))
    fail(ErrorKind::infeasible_parameters, "dynamic_fraction must lie in [0, 1]");

  std::mt19937_64 rng(mix_seed(params.seed, 0x3c6ef372));
  SimWorld world;
  world.params = params;
  world.task_id = std::move(task_id);
  world.host = "Shop" + std::to_string(params.seed % 10000) + ".Example.com";
  const int n = params.nodes;
  world.start = 0;
  world.goal = n - 1;

  for (int i = 0; i < n; ++i) {
    SimPage page;
    page.id = i;
    page.path = i == 0 ? "/" : i == n - 1 ? "/checkout/done" : "/p/" + std::to_string(i);
    const double u = uniform01(rng);
    page.dynamic_hash = i != 0 && i != n - 1 && u < params.dynamic_fraction;
    world.pages.push_back(page);
  }

  const double extra_mean = params.branching - 1.0;
  const int extra_floor = static_cast<int>(std::floor(extra_mean));
  for (int i = 0; i + 1 < n; ++i) {
    add_transition(world, i, make_action(ActionKind::click, "#link-" + std::to_string(i + 1)), Effect::move, i + 1);
    int extra = extra_floor + (uniform01(rng) < extra_mean - extra_floor ? 1 : 0);
    std::vector<int> candidates;
    for (int j = i + 2; j <= std::min(n - 1, i + 3); ++j) candidates.push_back(j);
    while (extra-- > 0 && !candidates.empty()) {
      const std::size_t pick = uniform_index(rng, candidates.size());
      const int j = candidates[pick];
      candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(pick));
      add_transition(world, i, make_action(ActionKind::click, "#link-" + std::to_string(j)), Effect::move, j);
    }
  }
  for (int i = 1; i + 1 < n; ++i) add_transition(world, i, make_action(ActionKind::navigate, "back"), Effect::move, i - 1);

  for (int d = 0; d < params.decoys; ++d) {
    const int page = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(n - 1)));
    const std::string tag = std::to_string(d);
    switch (uniform_index(rng, 4)) {
      case 0:
        add_transition(world, page, make_action(ActionKind::click, "#banner-" + tag), Effect::self_loop, page);
        break;
      case 1: {
        SimPage dead;
        dead.id = static_cast<int>(world.pages.size());
        dead.path = "/promo/" + tag;
        dead.dead_end = true;
        world.pages.push_back(dead);
        add_transition(world, page, make_action(ActionKind::click, "#promo-" + tag), Effect::move, dead.id);
        add_transition(world, dead.id, make_action(ActionKind::navigate, "back"), Effect::move, page);
        break;
      }
      case 2:
        if (!has_key(world, page, "scroll|down")) {
          add_transition(world, page, make_action(ActionKind::scroll, "down"), Effect::in_page, page);
          break;
        }
        [[fallthrough]];
      default:
        add_transition(world, page, make_action(ActionKind::click, "#expand-" + tag), Effect::in_page, page);
        break;
    }
  }

  std::sort(world.transitions.begin(), world.transitions.end(), [](const SimTransition& a, const SimTransition& b) {
    return std::tie(a.from, a.key) < std::tie(b.from, b.key);
  });
  compute_distances(world);
  world.instruction = "Complete checkout at " + world.canonical_url(world.goal) + " starting from " +
                      world.canonical_url(world.start);
  return world;
}

void validate(const AgentScript& script) {
  auto probability = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!probability(script.competence) || !probability(script.loop_bias))
    fail(ErrorKind::infeasible_parameters, "competence and loop_bias must lie in [0, 1]");
  if (script.max_steps < 1) fail(ErrorKind::infeasible_parameters, "max_steps must be at least 1");
}

Episode run_episode(const SimWorld& world, const ActionChooser& choose, int max_steps, std::uint64_t seed,
                    std::string trajectory_id, const TransitionObserver& observe) {
  std::mt19937_64 sessions(seed);
  std::vector<int> visits(world.pages.size(), 0);
  std::set<std::pair<int, int>> seen;
  EpisodeState state{world.start, 0, 0};
  visits[static_cast<std::size_t>(state.page)] = 1;
  seen.insert({state.page, state.variant});

  auto observe_state = [&] {
    return StateObservation{world.raw_url(state.page, sessions()),
                            world.screenshot_hash(state.page, state.variant, visits[static_cast<std::size_t>(state.page)]),
                            std::nullopt};
  };

  Episode episode;
  episode.trajectory.trajectory_id = std::move(trajectory_id);
  episode.trajectory.task_id = world.task_id;
  StateObservation current = observe_state();
  while (state.page != world.goal && state.step < max_steps) {
    const auto actions = world.actions_at(state.page);
    if (actions.empty()) break;
    const SimTransition& taken = *actions.at(choose(state, actions));
    const auto before = std::make_pair(state.page, state.variant);
    if (taken.effect == Effect::move) {
      state.page = taken.to;
      state.variant = 0;
      ++visits[static_cast<std::size_t>(state.page)];
    } else if (taken.effect == Effect::in_page) {
      state.variant = 1;
    }
    const auto after = std::make_pair(state.page, state.variant);
    const bool changed = after != before;
    const bool revisit = !seen.insert(after).second;
    if (!changed || revisit) ++episode.redundant_steps;

    Step step;
    step.index = state.step;
    step.state = current;
    step.action = taken.action;
    step.effective = changed;
    step.format_valid = true;
    episode.trajectory.steps.push_back(std::move(step));
    current = observe_state();
    ++state.step;
    if (observe) observe(taken);
  }
  episode.success = state.page == world.goal;
  episode.trajectory.label = episode.success ? 1 : 0;
  episode.trajectory.final_state = current;
  return episode;
}

std::vector<Trajectory> roll_out(const SimWorld& world, const AgentScript& script, int trajectories) {
  validate(script);
  if (trajectories < 1) fail(ErrorKind::infeasible_parameters, "roll_out needs K >= 1");
  std::vector<Trajectory> out;
  for (int k = 0; k < trajectories; ++k) {
    std::mt19937_64 rng(mix_seed(script.seed, 2 * static_cast<std::uint64_t>(k)));
    auto choose = [&](const EpisodeState& state, const std::vector<const SimTransition*>& actions) -> std::size_t {
      const auto& dist = world.distance_to_goal;
      const auto here = dist[static_cast<std::size_t>(state.page)];
      std::vector<std::size_t> optimal, other;
      std::optional<std::size_t> back;
      for (std::size_t i = 0; i < actions.size(); ++i) {
        const SimTransition& t = *actions[i];
        const auto there = dist[static_cast<std::size_t>(t.to)];
        const bool on_path = t.effect == Effect::move && here && there && *there == *here - 1;
        (on_path ? optimal : other).push_back(i);
        if (t.key == kBackKey) back = i;
      }
      const double u = uniform01(rng);
      const double v = uniform01(rng);
      if (back && u < script.loop_bias) return *back;
      if ((v < script.competence && !optimal.empty()) || other.empty()) return optimal.empty() ? 0 : optimal.front();
      return other[uniform_index(rng, other.size())];
    };
    char id[32];
    std::snprintf(id, sizeof id, "-k%03d", k);
    Episode episode = run_episode(world, choose, script.max_steps,
                                  mix_seed(script.seed, 2 * static_cast<std::uint64_t>(k) + 1), world.task_id + id);
    out.push_back(std::move(episode.trajectory));
  }
  return out;
}

Simulation simulate(const SimulationConfig& config, std::uint64_t seed) {
  if (config.tasks < 1) fail(ErrorKind::infeasible_parameters, "simulate needs at least one task");
  Simulation sim;
  for (int i = 0; i < config.tasks; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "task-%03d", i);
    WorldParams params = config.world;
    params.seed = mix_seed(seed, 2 * static_cast<std::uint64_t>(i));
    AgentScript script = config.agent;
    script.seed = mix_seed(seed, 2 * static_cast<std::uint64_t>(i) + 1);
    SimWorld world = generate_world(params, id);
    TaskGroup group{TaskSpec{world.task_id, world.instruction}, roll_out(world, script, config.trajectories)};
    sim.corpus.push_back(std::move(group));
    sim.worlds.push_back(std::move(world));
  }
  return sim;
}

ordered_json to_json(const WorldParams& params) {
  ordered_json out;
  out["nodes"] = params.nodes;
  out["branching"] = params.branching;
  out["decoys"] = params.decoys;
  out["dynamic_fraction"] = params.dynamic_fraction;
  out["seed"] = params.seed;
  return out;
}

ordered_json to_json(const AgentScript& script) {
  ordered_json out;
  out["competence"] = script.competence;
  out["loop_bias"] = script.loop_bias;
  out["max_steps"] = script.max_steps;
  out["seed"] = script.seed;
  return out;
}

void write_world(std::ostream& out, const SimWorld& world) {
  ordered_json task;
  task["type"] = "world";
  task["task_id"] = world.task_id;
  task["instruction"] = world.instruction;
  task["params"] = to_json(world.params);
  task["host"] = world.host;
  task["start"] = world.start;
  task["goal"] = world.goal;
  task["shortest_distance"] = world.shortest_distance;
  write_record(out, task);
  for (const SimPage& page : world.pages) {
    ordered_json r;
    r["type"] = "page";
    r["task_id"] = world.task_id;
    r["id"] = page.id;
    r["url"] = world.canonical_url(page.id);
    r["dead_end"] = page.dead_end;
    r["dynamic_hash"] = page.dynamic_hash;
    const auto& d = world.distance_to_goal[static_cast<std::size_t>(page.id)];
    r["to_goal"] = d ? ordered_json(*d) : ordered_json(nullptr);
    write_record(out, r);
  }
  static constexpr const char* kEffects[] = {"move", "in_page", "self_loop"};
  for (const SimTransition& t : world.transitions) {
    ordered_json r;
    r["type"] = "transition";
    r["task_id"] = world.task_id;
    r["from"] = t.from;
    r["to"] = t.to;
    r["action"] = t.key;
    r["raw"] = t.action.raw;
    r["effect"] = kEffects[static_cast<int>(t.effect)];
    write_record(out, r);
  }
}

}  // namespace tgpo
