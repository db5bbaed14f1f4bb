#include "doctest.h"

#include <cmath>
#include <random>

#include "support.hpp"
#include "tgpo/errors.hpp"
#include "tgpo/process_reward.hpp"
#include "tgpo/verifier.hpp"

using namespace testing;

namespace {

ScoredGraph score_cola(const RewardConfig& config) {
  TaskGroup g = cola_group();
  annotate(g.trajectories.front(), ReferenceVerifier{});
  annotate(g.trajectories.back(), ReferenceVerifier{});
  return score_graph(build_graph(g.task, g.trajectories), config);
}

const ScoredEdge& edge_for(const ScoredGraph& s, int from, const std::string& key) {
  for (std::size_t e = 0; e < s.graph.edges.size(); ++e)
    if (s.graph.edges[e].from == from && s.graph.edges[e].action_key == key) return s.edges[e];
  FAIL("no such edge");
  return s.edges.front();
}

// root -a-> P -b-> N -c-> G, and a detour root -d-> Q -e-> R -f-> P -b-> N -c-> G
std::vector<Trajectory> detour_corpus() {
  auto url = [](const char* p) { return obs(std::string("https://d.org/") + p); };
  return {make_trajectory("direct", "t", 1,
                          {{url(""), click("#a"), true}, {url("p"), click("#b"), true}, {url("n"), click("#c"), true}},
                          url("g")),
          make_trajectory("detour", "t", 1,
                          {{url(""), click("#d"), true},
                           {url("q"), click("#e"), true},
                           {url("r"), click("#f"), true},
                           {url("p"), click("#b"), true},
                           {url("n"), click("#c"), true}},
                          url("g"))};
}

}  // namespace

TEST_SUITE("process_reward") {

TEST_CASE("subgoal reward") {
  DistanceIndex d;
  d.to_goal = {3, 1, std::nullopt};
  d.from_root = {0, 2, 1};
  d.l_min = 3;
  const RewardConfig config;
  CHECK(subgoal_reward(2, 1, d, config) == 1.0);
  CHECK(subgoal_reward(4, 1, d, config) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(subgoal_reward(1, 2, d, config) == 0.0);
  RewardConfig fallback;
  fallback.unreachable_subgoal = 0.25;
  CHECK(subgoal_reward(1, 2, d, fallback) == 0.25);
  // the prefix can never undercut the shortest route, but values clamp anyway
  CHECK(subgoal_reward(0, 1, d, config) == 1.0);
  d.l_min.reset();
  CHECK(subgoal_reward(2, 1, d, config) == 0.0);
}

TEST_CASE("closing-action redundancy") {
  const RewardConfig config;
  const std::vector<int> cycle{0, 1, 2, 1};
  CHECK(redundancy_reward(cycle, 0, config) == 0.0);
  CHECK(redundancy_reward(cycle, 1, config) == 0.0);
  CHECK(redundancy_reward(cycle, 2, config) == -1.0);
  const std::vector<int> twice{0, 1, 0, 1};
  CHECK(redundancy_reward(twice, 0, config) == 0.0);
  CHECK(redundancy_reward(twice, 1, config) == -1.0);
  CHECK(redundancy_reward(twice, 2, config) == -1.0);
  const std::vector<int> novel{0, 1, 2, 3, 4};
  for (std::size_t t = 0; t < 4; ++t) CHECK(redundancy_reward(novel, t, config) == 0.0);
  const std::vector<int> self{0, 0};
  CHECK(redundancy_reward(self, 0, config) == -1.0);
}

TEST_CASE("whole-cycle redundancy penalizes every step of the loop") {
  RewardConfig config;
  config.redundancy_scope = RedundancyScope::whole_cycle;
  const std::vector<int> walk{0, 1, 2, 1, 3};
  CHECK(redundancy_reward(walk, 0, config) == 0.0);
  CHECK(redundancy_reward(walk, 1, config) == -1.0);
  CHECK(redundancy_reward(walk, 2, config) == -1.0);
  CHECK(redundancy_reward(walk, 3, config) == 0.0);
}

TEST_CASE("accuracy and format") {
  const ReferenceVerifier verifier;
  const RewardConfig config;
  Step step;
  step.action = click("#go");
  step.effective = true;
  step.format_valid = true;
  const auto same = obs("https://a.org/", hash16(1));
  CHECK(accuracy_and_format(step, same, same, verifier, config) == std::pair{1.0, 1.0});
  step.effective.reset();
  step.format_valid.reset();
  CHECK(accuracy_and_format(step, same, same, verifier, config) == std::pair{0.0, 1.0});
  step.action.raw = "click(";
  CHECK(accuracy_and_format(step, same, obs("https://a.org/x"), verifier, config) == std::pair{1.0, 0.0});
}

TEST_CASE("total combines the terms") {
  const auto r = RewardBreakdown::combine(1.0, 0.0, 1.0, 1.0, 2.0);
  CHECK(r.total == 4.0);
  CHECK(RewardBreakdown::combine(0.5, -1.0, 1.0, 0.0, 3.0).total == 1.5);
}

TEST_CASE("cola rewards") {
  const ScoredGraph s = score_cola(RewardConfig{});
  CHECK(edge_for(s, kColaSorted, "click|#add-to-cart-1").canonical.total == 5.0);
  CHECK(edge_for(s, kColaSorted, "click|#item-2").canonical.total == 2.0);
  CHECK(edge_for(s, kColaResults, "click|#sort-price").canonical.total == 5.0);
  CHECK(edge_for(s, kColaRoot, "type|#search|coca cola").canonical.subgoal == 1.0);
}

TEST_CASE("mean and min-prefix aggregation") {
  const auto corpus = detour_corpus();
  const auto g = build_graph({"t", "i"}, corpus);
  RewardConfig config;
  const ScoredGraph mean = score_graph(g, config);
  const int p = g.find_walk("direct")->nodes[1];
  const ScoredEdge& b = edge_for(mean, p, "click|#b");
  REQUIRE(b.occurrences.size() == 2);
  CHECK(b.canonical.subgoal == doctest::Approx(0.8).epsilon(1e-15));
  config.aggregation = RewardAggregation::min_prefix;
  CHECK(edge_for(score_graph(g, config), p, "click|#b").canonical.subgoal == 1.0);
}

TEST_CASE("alpha enters linearly") {
  RewardConfig two, five;
  two.alpha = 2.0;
  five.alpha = 5.0;
  std::mt19937_64 rng(3);
  for (int i = 0; i < 30; ++i) {
    const RandomTask task = random_task(rng, i);
    const auto g = build_graph(task.group.task, task.group.trajectories);
    const ScoredGraph a = score_graph(g, two), b = score_graph(g, five);
    for (std::size_t e = 0; e < a.edges.size(); ++e)
      for (std::size_t k = 0; k < a.edges[e].occurrences.size(); ++k) {
        const auto& x = a.edges[e].occurrences[k];
        const auto& y = b.edges[e].occurrences[k];
        CHECK(y.total - x.total == doctest::Approx(3.0 * x.subgoal).epsilon(1e-12));
      }
  }
}

TEST_CASE("per-occurrence terms stay in range") {
  std::mt19937_64 rng(9);
  const RewardConfig config;
  for (int i = 0; i < 50; ++i) {
    const RandomTask task = random_task(rng, i);
    const ScoredGraph s = score_graph(build_graph(task.group.task, task.group.trajectories), config);
    for (const ScoredEdge& e : s.edges)
      for (const RewardBreakdown& r : e.occurrences) {
        CHECK(r.subgoal >= 0.0);
        CHECK(r.subgoal <= 1.0);
        CHECK((r.redundancy == 0.0 || r.redundancy == config.redundancy_penalty));
        CHECK(r.total == RewardBreakdown::combine(r.subgoal, r.redundancy, r.accuracy, r.format, config.alpha).total);
      }
  }
}

TEST_CASE("config validation") {
  RewardConfig bad;
  bad.alpha = 0.0;
  CHECK_THROWS_AS(validate(bad), Error);
  bad.alpha = std::nan("");
  CHECK_THROWS_AS(validate(bad), Error);
  CHECK(parse_aggregation("min_prefix") == RewardAggregation::min_prefix);
  CHECK_FALSE(parse_aggregation("median"));
}

}  // TEST_SUITE
