#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "support.hpp"
#include "tgpo/errors.hpp"
#include "tgpo/objective.hpp"
#include "tgpo/verifier.hpp"

using namespace testing;

namespace {

PreferencePair pair_at(int node, std::string chosen, std::string rejected, double weight = 1.0) {
  return PreferencePair{"t", node, "", std::move(chosen), std::move(rejected), 1.0, 0.0, weight};
}

PolicyTable two_action_table() {
  Vocabulary v;
  v[{"t", 0}] = {"a1", "a2"};
  return PolicyTable(v);
}

}  // namespace

TEST_SUITE("objective") {

TEST_CASE("stable scalar helpers") {
  CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
  CHECK(softplus(800.0) == 800.0);
  CHECK(softplus(-800.0) == 0.0);
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(-800.0) == 0.0);
  CHECK(sigmoid(800.0) == 1.0);
}

TEST_CASE("policy table basics") {
  PolicyTable table = two_action_table();
  const StateKey s{"t", 0};
  CHECK(table.size() == 2);
  CHECK(table.log_prob(s, "a1") == doctest::Approx(std::log(0.5)));
  CHECK(table.greedy_action(s) == "a1");
  table.set_logit(s, "a2", 0.5);
  CHECK(table.greedy_action(s) == "a2");
  CHECK_FALSE(table.greedy_action({"t", 9}));
  CHECK_THROWS_AS(table.log_prob(s, "a3"), Error);
  table.set_logit(s, "a1", 1000.0);
  CHECK(std::isfinite(table.log_prob(s, "a2")));
  CHECK(table.log_prob(s, "a2") == doctest::Approx(-999.5));
}

TEST_CASE("logit margin") {
  PolicyTable theta = two_action_table();
  const ReferencePolicy ref(theta, ReferenceMode::uniform);
  CHECK(logit_margin(pair_at(0, "a1", "a2"), theta, ref) == 0.0);
  theta.set_logit({"t", 0}, "a1", 1.0);
  CHECK(logit_margin(pair_at(0, "a1", "a2"), theta, ref) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(logit_margin(pair_at(0, "a2", "a1"), theta, ref) == doctest::Approx(-1.0).epsilon(1e-15));
  const ReferencePolicy copy(theta, ReferenceMode::copy_of_initial);
  CHECK(logit_margin(pair_at(0, "a1", "a2"), theta, copy) == 0.0);
}

TEST_CASE("loss values") {
  TrainConfig config;
  config.beta = 1.0;
  CHECK(tgpo_loss(pair_at(0, "a1", "a2", 1.0), 0.0, config) == doctest::Approx(0.6931472).epsilon(1e-7));
  config.beta = 0.1;
  // 2 * log(1 + exp(-0.5)) evaluated separately in arbitrary precision
  CHECK(tgpo_loss(pair_at(0, "a1", "a2", 2.0), 5.0, config) == doctest::Approx(0.9481539683602134).epsilon(1e-14));
  CHECK(tgpo_loss(pair_at(0, "a1", "a2", 2.0), 1e4, config) < 1e-300);
  CHECK(tgpo_loss(pair_at(0, "a1", "a2", 2.0), -1e4, config) == doctest::Approx(2.0 * 0.1 * 1e4));
  config.weighting = Weighting::unit;
  CHECK(tgpo_loss(pair_at(0, "a1", "a2", 2.0), 0.0, config) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("gradient at the reference point") {
  const PolicyTable theta = two_action_table();
  const ReferencePolicy ref(theta, ReferenceMode::uniform);
  TrainConfig config;
  config.beta = 1.0;
  const std::vector<PreferencePair> pairs{pair_at(0, "a1", "a2", 1.0)};
  const auto lg = loss_gradient(pairs, theta, ref, config);
  CHECK(loss_slope(1.0, 1.0, 0.0) == -0.5);
  CHECK(lg.gradient[0] == -0.5);
  CHECK(lg.gradient[1] == 0.5);
}

TEST_CASE("unit mode equals dynamic mode when weights are one") {
  Vocabulary v;
  v[{"t", 0}] = {"a", "b", "c"};
  v[{"t", 1}] = {"a", "b"};
  PolicyTable theta(v);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  for (double& x : theta.logits()) x = n(rng);
  const ReferencePolicy ref(theta, ReferenceMode::uniform);
  const std::vector<PreferencePair> pairs{pair_at(0, "a", "b"), pair_at(0, "c", "b"), pair_at(1, "b", "a")};
  TrainConfig dynamic, unit;
  unit.weighting = Weighting::unit;
  const auto a = loss_gradient(pairs, theta, ref, dynamic);
  const auto b = loss_gradient(pairs, theta, ref, unit);
  CHECK(a.loss == b.loss);
  CHECK(a.gradient == b.gradient);
}

TEST_CASE("analytic gradient matches finite differences") {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> n(0.0, 1.5);
  for (int trial = 0; trial < 20; ++trial) {
    Vocabulary v;
    for (int s = 0; s < 20; ++s)
      for (int a = 0; a < 2 + s % 4; ++a) v[{"t", s}].insert("a" + std::to_string(a));
    PolicyTable theta(v);
    for (double& x : theta.logits()) x = n(rng);
    PolicyTable initial(v);
    for (double& x : initial.logits()) x = n(rng);
    const ReferencePolicy ref(initial, ReferenceMode::copy_of_initial);
    std::vector<PreferencePair> pairs;
    for (int p = 0; p < 100; ++p) {
      const int s = static_cast<int>(rng() % 20);
      const int k = 2 + s % 4;
      const int w = static_cast<int>(rng() % k);
      const int l = (w + 1 + static_cast<int>(rng() % (k - 1))) % k;
      pairs.push_back(pair_at(s, "a" + std::to_string(w), "a" + std::to_string(l), 0.1 + (rng() % 1000) / 250.0));
    }
    TrainConfig config;
    config.beta = 0.5;
    const auto analytic = loss_gradient(pairs, theta, ref, config);
    std::vector<long double> z(theta.logits().begin(), theta.logits().end());
    const std::vector<long double> r(initial.logits().begin(), initial.logits().end());
    CHECK(analytic.loss == doctest::Approx(static_cast<double>(oracle_loss(pairs, theta, z, r, 0.5L, false))).epsilon(1e-12));
    const long double h = 1e-6L;
    for (std::size_t i = 0; i < z.size(); ++i) {
      auto zp = z, zm = z;
      zp[i] += h;
      zm[i] -= h;
      const long double fd = (oracle_loss(pairs, theta, zp, r, 0.5L, false) - oracle_loss(pairs, theta, zm, r, 0.5L, false)) / (2 * h);
      const double denom = std::max({std::abs(analytic.gradient[i]), static_cast<double>(std::fabs(fd)), 1e-6});
      CHECK(std::abs(analytic.gradient[i] - static_cast<double>(fd)) / denom < 1e-5);
    }
  }
}

TEST_CASE("training lowers the loss and is deterministic") {
  Corpus corpus = cola_corpus();
  annotate(corpus, ReferenceVerifier{});
  const ScoredGraph s = score_graph(build_graph(corpus[0].task, corpus[0].trajectories), RewardConfig{});
  const auto pairs = extract_pairs(s);
  Vocabulary v = vocabulary_from_graph(s.graph);
  const PolicyTable initial(v);
  const ReferencePolicy ref(initial, ReferenceMode::uniform);
  TrainConfig config;
  config.epochs = 25;
  const TrainResult a = train(pairs, initial, ref, config);
  const TrainResult b = train(pairs, initial, ref, config);
  CHECK(a.policy == b.policy);
  CHECK(a.trace == b.trace);
  for (std::size_t e = 1; e < a.trace.size(); ++e) CHECK(a.trace[e].mean_loss <= a.trace[e - 1].mean_loss);
  CHECK(a.final_loss < a.trace.front().mean_loss);
  const StateKey sorted{s.graph.task.task_id, kColaSorted};
  CHECK(a.policy.log_prob(sorted, "click|#add-to-cart-1") > a.policy.log_prob(sorted, "click|#item-2"));
}

TEST_CASE("mini-batches follow the seed") {
  std::vector<PreferencePair> pairs;
  Vocabulary v;
  for (int s = 0; s < 6; ++s) {
    v[{"t", s}] = {"a", "b", "c"};
    pairs.push_back(pair_at(s, "a", "b", 1.0 + s));
    pairs.push_back(pair_at(s, "c", "b", 0.5));
  }
  const PolicyTable initial(v);
  const ReferencePolicy ref(initial, ReferenceMode::uniform);
  TrainConfig config;
  config.batch_size = 3;
  config.epochs = 3;
  config.learning_rate = 0.5;
  config.seed = 11;
  const auto a = train(pairs, initial, ref, config);
  const auto b = train(pairs, initial, ref, config);
  CHECK(a.policy == b.policy);
  config.seed = 12;
  const auto c = train(pairs, initial, ref, config);
  CHECK_FALSE(a.policy == c.policy);
}

TEST_CASE("dynamic weights move a high-variance node further") {
  Vocabulary v;
  v[{"t", 0}] = {"a", "b"};
  v[{"t", 1}] = {"a", "b"};
  const std::vector<PreferencePair> pairs{pair_at(0, "a", "b", 2.0), pair_at(1, "a", "b", 0.25)};
  const PolicyTable initial(v);
  const ReferencePolicy ref(initial, ReferenceMode::uniform);
  TrainConfig dynamic;
  const auto g = loss_gradient(pairs, initial, ref, dynamic).gradient;
  CHECK(std::hypot(g[0], g[1]) > std::hypot(g[2], g[3]));
}

TEST_CASE("divergence is reported") {
  const PolicyTable initial = two_action_table();
  const ReferencePolicy ref(initial, ReferenceMode::uniform);
  TrainConfig config;
  config.learning_rate = 1e308;
  config.beta = 1.0;
  config.epochs = 5;
  const std::vector<PreferencePair> pairs{pair_at(0, "a1", "a2", 1e10)};
  try {
    train(pairs, initial, ref, config);
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::divergence_detected);
  }
}

TEST_CASE("unknown pair actions are rejected") {
  const PolicyTable initial = two_action_table();
  const ReferencePolicy ref(initial, ReferenceMode::uniform);
  const std::vector<PreferencePair> pairs{pair_at(0, "a1", "zz")};
  CHECK_THROWS_AS(loss_gradient(pairs, initial, ref, TrainConfig{}), Error);
}

TEST_CASE("policy dump round trip") {
  Vocabulary v;
  v[{"t", 0}] = {"a", "b"};
  v[{"u", 3}] = {"x|1", "y"};
  PolicyTable p(v);
  p.logits()[1] = 0.1 + 0.2;
  p.logits()[2] = -3e-17;
  std::ostringstream out;
  write_policy(out, p);
  std::istringstream in(out.str());
  CHECK(read_policy(in).policy == p);
}

}  // TEST_SUITE
