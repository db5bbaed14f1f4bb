#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "tgpo/preference.hpp"
#include "tgpo/records.hpp"
#include "tgpo/state_merge.hpp"

namespace tgpo {

struct StateKey {
  std::string task_id;
  int node_id = 0;

  auto operator<=>(const StateKey&) const = default;
  bool operator==(const StateKey&) const = default;
};

using Vocabulary = std::map<StateKey, std::set<std::string>>;

Vocabulary vocabulary_from_pairs(std::span<const PreferencePair> pairs);
/// Every outgoing action key of every node with outgoing edges.
Vocabulary vocabulary_from_graph(const TrajectoryGraph& graph);
void merge_into(Vocabulary& into, const Vocabulary& from);

/// Tabular softmax policy: one logit per (state, action); pi(a|s) is the softmax
/// over the state's block. Blocks are laid out contiguously in key order.
class PolicyTable {
 public:
  struct Block {
    std::vector<std::string> actions;  // sorted
    std::size_t offset = 0;

    bool operator==(const Block&) const = default;
  };

  PolicyTable() = default;
  /// All logits start at zero (uniform policy).
  explicit PolicyTable(const Vocabulary& vocabulary);

  std::size_t size() const { return logits_.size(); }
  std::span<double> logits() { return logits_; }
  std::span<const double> logits() const { return logits_; }
  const std::map<StateKey, Block>& blocks() const { return blocks_; }

  const Block* find(const StateKey& state) const;
  std::optional<std::size_t> index_of(const StateKey& state, std::string_view action) const;
  /// Throws UnknownStateOrAction.
  std::size_t require_index(const StateKey& state, std::string_view action) const;

  double logit(const StateKey& state, std::string_view action) const;
  void set_logit(const StateKey& state, std::string_view action, double value);

  std::vector<double> probabilities(const StateKey& state) const;
  /// log pi(a|s), computed with a max-shifted log-sum-exp. Throws UnknownStateOrAction.
  double log_prob(const StateKey& state, std::string_view action) const;

  /// Highest-logit action; ties go to the smallest key. nullopt for unknown states.
  std::optional<std::string> greedy_action(const StateKey& state) const;

  bool operator==(const PolicyTable&) const = default;

 private:
  double log_normalizer(const Block& block) const;

  std::map<StateKey, Block> blocks_;
  std::vector<double> logits_;
};

enum class ReferenceMode { uniform, copy_of_initial };

/// Frozen pi_ref. Uniform mode keeps the initial vocabulary with all-zero logits.
class ReferencePolicy {
 public:
  ReferencePolicy(const PolicyTable& initial, ReferenceMode mode);

  const PolicyTable& table() const { return table_; }
  ReferenceMode mode() const { return mode_; }
  double log_prob(const StateKey& state, std::string_view action) const { return table_.log_prob(state, action); }

 private:
  PolicyTable table_;
  ReferenceMode mode_;
};

enum class Weighting {
  dynamic,  // w = |r_w - r_l| / sigma(R_s)
  unit,     // w = 1, the plain DPO objective
};

std::string_view to_string(Weighting weighting);
std::optional<Weighting> parse_weighting(std::string_view name);
std::string_view to_string(ReferenceMode mode);
std::optional<ReferenceMode> parse_reference_mode(std::string_view name);

struct TrainConfig {
  double beta = 0.1;
  double learning_rate = 1e-2;
  int epochs = 2;
  std::uint64_t seed = 0;
  Weighting weighting = Weighting::dynamic;
  std::size_t batch_size = 0;  // 0 = full batch; otherwise mini-batches in seeded order
};

void validate(const TrainConfig& config);

/// log(1 + exp(x)) without overflow.
double softplus(double x);
/// 1 / (1 + exp(-x)) without overflow.
double sigmoid(double x);

/// Logit margin: [log pi(a_w|s) - log ref(a_w|s)] - [log pi(a_l|s) - log ref(a_l|s)].
double logit_margin(const PreferencePair& pair, const PolicyTable& theta, const ReferencePolicy& ref);

double pair_weight(const PreferencePair& pair, const TrainConfig& config);

/// -w * log sigmoid(beta * delta) = w * softplus(-beta * delta).
double tgpo_loss(const PreferencePair& pair, double delta, const TrainConfig& config);

/// dL/d(delta) = -w * beta * sigmoid(-beta * delta).
double loss_slope(double weight, double beta, double delta);

struct LossAndGradient {
  double loss = 0.0;              // mean over pairs
  std::vector<double> gradient;   // aligned with theta.logits()
};

/// Mean loss over the pairs and its analytic gradient, accumulated in pair order.
LossAndGradient loss_gradient(std::span<const PreferencePair> pairs, const PolicyTable& theta,
                              const ReferencePolicy& ref, const TrainConfig& config);

double mean_loss(std::span<const PreferencePair> pairs, const PolicyTable& theta, const ReferencePolicy& ref,
                 const TrainConfig& config);

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;  // full-batch loss at the start of the epoch
  double grad_norm = 0.0;  // Euclidean norm of the full-batch gradient at the same point

  bool operator==(const EpochStats&) const = default;
};

struct TrainResult {
  PolicyTable policy;
  std::vector<EpochStats> trace;
  double final_loss = 0.0;
};

/// Gradient descent from theta0. Deterministic for a fixed pair order and seed.
/// Throws DivergenceDetected when the loss or a logit becomes non-finite.
TrainResult train(std::span<const PreferencePair> pairs, PolicyTable theta0, const ReferencePolicy& ref,
                  const TrainConfig& config);

inline constexpr std::string_view kPolicyFormat = "tgpo-policy";
inline constexpr std::string_view kLossTraceFormat = "tgpo-loss-trace";

void write_policy(std::ostream& out, const PolicyTable& policy);
void write_loss_trace(std::ostream& out, std::span<const EpochStats> trace);

struct PolicyFile {
  std::optional<nlohmann::json> header;
  PolicyTable policy;
};

PolicyFile read_policy(std::istream& in);

}  // namespace tgpo
