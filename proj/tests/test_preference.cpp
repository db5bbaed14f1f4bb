#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "support.hpp"
#include "tgpo/errors.hpp"
#include "tgpo/preference.hpp"
#include "tgpo/verifier.hpp"

using namespace testing;

namespace {

NodeRewardStats stats_of(std::vector<std::pair<std::string, double>> rewards) {
  NodeRewardStats s;
  std::vector<double> values;
  for (auto& [key, r] : rewards) {
    s.action_rewards.push_back({key, r, 1});
    values.push_back(r);
  }
  s.sigma = population_sigma(values);
  return s;
}

// two-pass textbook form, for comparison only
double textbook_sigma(const std::vector<double>& v) {
  long double mean = 0;
  for (double x : v) mean += x;
  mean /= v.size();
  long double sq = 0;
  for (double x : v) sq += (x - mean) * (x - mean);
  return static_cast<double>(std::sqrt(sq / v.size()));
}

Corpus annotated_cola() {
  Corpus c = cola_corpus();
  annotate(c, ReferenceVerifier{});
  return c;
}

}  // namespace

TEST_SUITE("preference") {

TEST_CASE("population sigma") {
  CHECK(population_sigma(std::vector<double>{3, 1}) == 1.0);
  CHECK(population_sigma(std::vector<double>{4, 2, 0}) == doctest::Approx(std::sqrt(8.0 / 3.0)).epsilon(1e-15));
  CHECK(population_sigma(std::vector<double>{5}) == 0.0);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> v(2 + i % 7);
    for (double& x : v) x = n(rng);
    CHECK(population_sigma(v) == doctest::Approx(textbook_sigma(v)).epsilon(1e-12));
  }
}

TEST_CASE("two actions give weight two") {
  const auto pairs = pairs_at_node("t", "ctx", stats_of({{"A", 3}, {"B", 1}}), PairingPolicy::all_strict_pairs);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].chosen == "A");
  CHECK(pairs[0].rejected == "B");
  CHECK(pairs[0].weight == 2.0);
}

TEST_CASE("three actions") {
  const auto stats = stats_of({{"A", 4}, {"B", 2}, {"C", 0}});
  const auto all = pairs_at_node("t", "ctx", stats, PairingPolicy::all_strict_pairs);
  REQUIRE(all.size() == 3);
  CHECK(all[0].chosen == "A");
  CHECK(all[0].rejected == "B");
  CHECK(all[1].rejected == "C");
  CHECK(all[1].weight == doctest::Approx(2.449489742783178).epsilon(1e-12));
  CHECK(all[2].chosen == "B");
  CHECK(all[0].weight == doctest::Approx(1.224744871391589).epsilon(1e-12));
  const auto best = pairs_at_node("t", "ctx", stats, PairingPolicy::best_vs_rest);
  REQUIRE(best.size() == 2);
  CHECK(best[0].chosen == "A");
  CHECK(best[1].chosen == "A");
}

TEST_CASE("ties yield nothing") {
  CHECK(pairs_at_node("t", "c", stats_of({{"A", 2}, {"B", 2}}), PairingPolicy::all_strict_pairs).empty());
  const auto some = pairs_at_node("t", "c", stats_of({{"A", 2}, {"B", 2}, {"C", 1}}), PairingPolicy::all_strict_pairs);
  CHECK(some.size() == 2);
}

TEST_CASE("cola pairs") {
  const Corpus c = annotated_cola();
  const ScoredGraph s = score_graph(build_graph(c[0].task, c[0].trajectories), RewardConfig{});
  const auto pairs = extract_pairs(s);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].node_id == kColaSorted);
  CHECK(pairs[0].chosen == "click|#add-to-cart-1");
  CHECK(pairs[0].rejected == "click|#item-2");
  CHECK(pairs[0].r_w == 5.0);
  CHECK(pairs[0].r_l == 2.0);
  CHECK(pairs[0].weight == 2.0);
  CHECK(pairs[0].context.find("Coca-Cola") != std::string::npos);
}

TEST_CASE("pairs round trip") {
  std::mt19937_64 rng(8);
  std::vector<PreferencePair> pairs;
  for (int i = 0; i < 10; ++i) {
    const RandomTask task = random_task(rng, i);
    const auto more = extract_pairs(score_graph(build_graph(task.group.task, task.group.trajectories), RewardConfig{}));
    pairs.insert(pairs.end(), more.begin(), more.end());
  }
  REQUIRE_FALSE(pairs.empty());
  std::ostringstream out;
  write_pairs(out, pairs);
  std::istringstream in(out.str());
  CHECK(read_pairs(in).pairs == pairs);
  std::istringstream bad(R"({"task_id":"t","node_id":0,"context":"","chosen":{"action":"a"},)"
                         R"("rejected":{"action":"b"},"r_w":1,"r_l":1,"weight":1})");
  CHECK_THROWS_AS(read_pairs(bad), MalformedRecord);
}

TEST_CASE("label conflicts on the cola corpus") {
  const Corpus c = annotated_cola();
  const auto report = label_conflicts(build_graph(c[0].task, c[0].trajectories));
  REQUIRE(report.conflicting.size() == 1);
  CHECK(report.conflicting[0].node_id == kColaResults);
  CHECK(report.conflicting[0].action_key == "click|#sort-price");
  CHECK(report.occurrences == 6);
  CHECK(report.conflicting_occurrences == 2);
  CHECK(report.conflict_percentage == doctest::Approx(100.0 / 3.0));
  CHECK(report.edge_conflict_percentage == doctest::Approx(20.0));
}

TEST_CASE("four of ten occurrences conflicting") {
  // #a is taken by two successes and two failures; every other key has one label
  auto url = [](std::string p) { return obs("https://f.org/" + p); };
  auto run = [&](std::string id, int label, std::string first, std::string second, std::string end) {
    return make_trajectory(id, "t", label,
                           {{url(""), click("#" + first), true}, {url(first), click("#" + second), true}}, url(end));
  };
  const std::vector<Trajectory> ts{run("s1", 1, "a", "b", "goal"), run("s2", 1, "a", "b", "goal"),
                                   run("f1", 0, "a", "x", "lost"), run("f2", 0, "a", "y", "gone"),
                                   run("s3", 1, "h", "i", "goal")};
  const auto report = label_conflicts(build_graph({"t", "i"}, ts));
  CHECK(report.occurrences == 10);
  CHECK(report.conflicting_occurrences == 4);
  CHECK(report.conflict_percentage == doctest::Approx(40.0));
  CHECK(report.conflicting.size() == 1);
}

TEST_CASE("identical outcomes never conflict") {
  std::mt19937_64 rng(4);
  const RandomTask task = random_task(rng, 0);
  auto ts = task.group.trajectories;
  for (Trajectory& t : ts) t.label = 1;
  CHECK(label_conflicts(build_graph(task.group.task, ts)).conflict_percentage == 0.0);
}

TEST_CASE("redundancy metrics") {
  TrajectoryWalk walk{"w", 1, {0, 1, 2, 1, 2, 3, 4}, std::vector<bool>(6, true)};
  const std::vector<TrajectoryWalk> one{walk};
  const auto m = redundancy_metrics(one);
  CHECK(m.avg_steps == 6.0);
  CHECK(m.redundant_steps == 2.0);
  TrajectoryWalk clean{"c", 1, {0, 1, 2, 3, 4, 5}, std::vector<bool>(5, true)};
  const std::vector<TrajectoryWalk> five{clean};
  CHECK(redundancy_metrics(five).redundant_steps == 0.0);
  CHECK(redundancy_metrics(five).avg_steps == 5.0);
  // ineffective steps count even without a revisit
  TrajectoryWalk idle{"i", 0, {0, 1, 2}, {true, false}};
  CHECK(step_is_redundant(idle, 1));
  CHECK_FALSE(step_is_redundant(idle, 0));
}

TEST_CASE("pairing policy names") {
  CHECK(parse_pairing_policy("all") == PairingPolicy::all_strict_pairs);
  CHECK(parse_pairing_policy("best") == PairingPolicy::best_vs_rest);
  CHECK_FALSE(parse_pairing_policy("some"));
}

}  // TEST_SUITE
