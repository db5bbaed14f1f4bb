#include "tgpo/objective.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>

#include "tgpo/errors.hpp"

namespace tgpo {

Vocabulary vocabulary_from_pairs(std::span<const PreferencePair> pairs) {
  Vocabulary vocabulary;
  for (const PreferencePair& pair : pairs) {
    auto& actions = vocabulary[{pair.task_id, pair.node_id}];
    actions.insert(pair.chosen);
    actions.insert(pair.rejected);
  }
  return vocabulary;
}

Vocabulary vocabulary_from_graph(const TrajectoryGraph& graph) {
  Vocabulary vocabulary;
  for (const ActionEdge& edge : graph.edges) vocabulary[{graph.task.task_id, edge.from}].insert(edge.action_key);
  return vocabulary;
}

void merge_into(Vocabulary& into, const Vocabulary& from) {
  for (const auto& [state, actions] : from) into[state].insert(actions.begin(), actions.end());
}

PolicyTable::PolicyTable(const Vocabulary& vocabulary) {
  for (const auto& [state, actions] : vocabulary) {
    if (actions.empty()) continue;
    Block block{{actions.begin(), actions.end()}, logits_.size()};
    logits_.resize(logits_.size() + block.actions.size(), 0.0);
    blocks_.emplace(state, std::move(block));
  }
}

const PolicyTable::Block* PolicyTable::find(const StateKey& state) const {
  auto it = blocks_.find(state);
  return it == blocks_.end() ? nullptr : &it->second;
}

std::optional<std::size_t> PolicyTable::index_of(const StateKey& state, std::string_view action) const {
  const Block* block = find(state);
  if (!block) return std::nullopt;
  auto it = std::lower_bound(block->actions.begin(), block->actions.end(), action);
  if (it == block->actions.end() || *it != action) return std::nullopt;
  return block->offset + static_cast<std::size_t>(it - block->actions.begin());
}

std::size_t PolicyTable::require_index(const StateKey& state, std::string_view action) const {
  auto index = index_of(state, action);
  if (!index)
    fail(ErrorKind::unknown_state_or_action, "no action '" + std::string(action) + "' at node " +
                                                 std::to_string(state.node_id) + " of task '" + state.task_id + "'");
  return *index;
}

double PolicyTable::logit(const StateKey& state, std::string_view action) const {
  return logits_[require_index(state, action)];
}

void PolicyTable::set_logit(const StateKey& state, std::string_view action, double value) {
  logits_[require_index(state, action)] = value;
}

double PolicyTable::log_normalizer(const Block& block) const {
  const auto first = logits_.begin() + static_cast<std::ptrdiff_t>(block.offset);
  const auto last = first + static_cast<std::ptrdiff_t>(block.actions.size());
  const double top = *std::max_element(first, last);
  double sum = 0.0;
  for (auto it = first; it != last; ++it) sum += std::exp(*it - top);
  return top + std::log(sum);
}

std::vector<double> PolicyTable::probabilities(const StateKey& state) const {
  const Block* block = find(state);
  if (!block)
    fail(ErrorKind::unknown_state_or_action,
         "no node " + std::to_string(state.node_id) + " of task '" + state.task_id + "' in policy");
  const double z = log_normalizer(*block);
  std::vector<double> p(block->actions.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::exp(logits_[block->offset + i] - z);
  return p;
}

double PolicyTable::log_prob(const StateKey& state, std::string_view action) const {
  const std::size_t index = require_index(state, action);
  return logits_[index] - log_normalizer(*find(state));
}

std::optional<std::string> PolicyTable::greedy_action(const StateKey& state) const {
  const Block* block = find(state);
  if (!block) return std::nullopt;
  std::size_t best = 0;
  for (std::size_t i = 1; i < block->actions.size(); ++i)
    if (logits_[block->offset + i] > logits_[block->offset + best]) best = i;
  return block->actions[best];
}

ReferencePolicy::ReferencePolicy(const PolicyTable& initial, ReferenceMode mode) : table_(initial), mode_(mode) {
  if (mode == ReferenceMode::uniform) std::fill(table_.logits().begin(), table_.logits().end(), 0.0);
}

std::string_view to_string(Weighting weighting) { return weighting == Weighting::dynamic ? "dynamic" : "unit"; }

std::optional<Weighting> parse_weighting(std::string_view name) {
  if (name == "dynamic") return Weighting::dynamic;
  if (name == "unit") return Weighting::unit;
  return std::nullopt;
}

std::string_view to_string(ReferenceMode mode) { return mode == ReferenceMode::uniform ? "uniform" : "copy"; }

std::optional<ReferenceMode> parse_reference_mode(std::string_view name) {
  if (name == "uniform") return ReferenceMode::uniform;
  if (name == "copy" || name == "copy_of_initial") return ReferenceMode::copy_of_initial;
  return std::nullopt;
}

void validate(const TrainConfig& config) {
  if (!(config.beta > 0.0) || !std::isfinite(config.beta)) fail(ErrorKind::infeasible_parameters, "beta must be positive");
  if (!(config.learning_rate > 0.0) || !std::isfinite(config.learning_rate))
    fail(ErrorKind::infeasible_parameters, "learning rate must be positive");
  if (config.epochs < 0) fail(ErrorKind::infeasible_parameters, "epochs must be non-negative");
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit_margin(const PreferencePair& pair, const PolicyTable& theta, const ReferencePolicy& ref) {
  const StateKey state{pair.task_id, pair.node_id};
  return (theta.log_prob(state, pair.chosen) - ref.log_prob(state, pair.chosen)) -
         (theta.log_prob(state, pair.rejected) - ref.log_prob(state, pair.rejected));
}

double pair_weight(const PreferencePair& pair, const TrainConfig& config) {
  return config.weighting == Weighting::dynamic ? pair.weight : 1.0;
}

double tgpo_loss(const PreferencePair& pair, double delta, const TrainConfig& config) {
  return pair_weight(pair, config) * softplus(-config.beta * delta);
}

double loss_slope(double weight, double beta, double delta) { return -weight * beta * sigmoid(-beta * delta); }

LossAndGradient loss_gradient(std::span<const PreferencePair> pairs, const PolicyTable& theta,
                              const ReferencePolicy& ref, const TrainConfig& config) {
  LossAndGradient out;
  out.gradient.assign(theta.size(), 0.0);
  if (pairs.empty()) return out;
  const double scale = 1.0 / static_cast<double>(pairs.size());
  for (const PreferencePair& pair : pairs) {
    const StateKey state{pair.task_id, pair.node_id};
    const double delta = logit_margin(pair, theta, ref);
    out.loss += tgpo_loss(pair, delta, config) * scale;
    const double slope = loss_slope(pair_weight(pair, config), config.beta, delta) * scale;
    // d log pi(a|s) / d theta_b = [a == b] - pi(b|s); the pi(b|s) terms of chosen
    // and rejected share one block and cancel, leaving +1 / -1.
    out.gradient[theta.require_index(state, pair.chosen)] += slope;
    out.gradient[theta.require_index(state, pair.rejected)] -= slope;
  }
  return out;
}

double mean_loss(std::span<const PreferencePair> pairs, const PolicyTable& theta, const ReferencePolicy& ref,
                 const TrainConfig& config) {
  if (pairs.empty()) return 0.0;
  double loss = 0.0;
  const double scale = 1.0 / static_cast<double>(pairs.size());
  for (const PreferencePair& pair : pairs) loss += tgpo_loss(pair, logit_margin(pair, theta, ref), config) * scale;
  return loss;
}

namespace {

double norm(std::span<const double> v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  return std::sqrt(sq);
}

void check_finite(double loss, std::span<const double> logits, int epoch) {
  const bool finite = std::isfinite(loss) && std::all_of(logits.begin(), logits.end(), [](double x) { return std::isfinite(x); });
  if (!finite) fail(ErrorKind::divergence_detected, "non-finite loss or parameters at epoch " + std::to_string(epoch));
}

}  // namespace

TrainResult train(std::span<const PreferencePair> pairs, PolicyTable theta0, const ReferencePolicy& ref,
                  const TrainConfig& config) {
  validate(config);
  if (pairs.empty()) fail(ErrorKind::infeasible_parameters, "training needs at least one preference pair");

  TrainResult result{std::move(theta0), {}, 0.0};
  PolicyTable& theta = result.policy;
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    LossAndGradient full = loss_gradient(pairs, theta, ref, config);
    check_finite(full.loss, theta.logits(), epoch);
    result.trace.push_back({epoch, full.loss, norm(full.gradient)});

    if (config.batch_size == 0 || config.batch_size >= pairs.size()) {
      for (std::size_t i = 0; i < theta.size(); ++i) theta.logits()[i] -= config.learning_rate * full.gradient[i];
    } else {
      // Fisher-Yates with raw engine draws keeps the order identical across standard libraries.
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
      std::vector<PreferencePair> batch;
      for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
        batch.clear();
        for (std::size_t i = start; i < std::min(order.size(), start + config.batch_size); ++i)
          batch.push_back(pairs[order[i]]);
        const LossAndGradient step = loss_gradient(batch, theta, ref, config);
        for (std::size_t i = 0; i < theta.size(); ++i) theta.logits()[i] -= config.learning_rate * step.gradient[i];
      }
    }
    check_finite(0.0, theta.logits(), epoch);
  }
  result.final_loss = mean_loss(pairs, theta, ref, config);
  check_finite(result.final_loss, theta.logits(), config.epochs);
  return result;
}

void write_policy(std::ostream& out, const PolicyTable& policy) {
  for (const auto& [state, block] : policy.blocks()) {
    for (std::size_t i = 0; i < block.actions.size(); ++i) {
      ordered_json r;
      r["task_id"] = state.task_id;
      r["node_id"] = state.node_id;
      r["action"] = block.actions[i];
      r["logit"] = policy.logits()[block.offset + i];
      write_record(out, r);
    }
  }
}

void write_loss_trace(std::ostream& out, std::span<const EpochStats> trace) {
  for (const EpochStats& e : trace) {
    ordered_json r;
    r["epoch"] = e.epoch;
    r["mean_loss"] = e.mean_loss;
    r["grad_norm"] = e.grad_norm;
    write_record(out, r);
  }
}

PolicyFile read_policy(std::istream& in) {
  using json = nlohmann::json;
  PolicyFile file;
  Vocabulary vocabulary;
  std::vector<std::tuple<StateKey, std::string, double>> entries;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json record = json::parse(text);
      if (is_header_record(record)) {
        if (!entries.empty() || file.header) throw MalformedRecord(line, "header must be the first record");
        check_header(record, kPolicyFormat, line);
        file.header = record.at("header");
        continue;
      }
      StateKey state{record.at("task_id").get<std::string>(), record.at("node_id").get<int>()};
      std::string action = record.at("action").get<std::string>();
      if (!vocabulary[state].insert(action).second) throw MalformedRecord(line, "duplicate policy entry");
      entries.emplace_back(std::move(state), std::move(action), record.at("logit").get<double>());
    } catch (const json::exception& e) {
      throw MalformedRecord(line, e.what());
    }
  }
  file.policy = PolicyTable(vocabulary);
  for (const auto& [state, action, logit] : entries) file.policy.set_logit(state, action, logit);
  return file;
}

}  // namespace tgpo
