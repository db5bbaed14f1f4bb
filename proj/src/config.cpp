#include "tgpo/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <sstream>

#include "tgpo/graph_io.hpp"

namespace tgpo {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw ConfigError("invalid value '" + std::string(value) + "' for " + std::string(key) + ": expected " +
                    std::string(expected));
}

template <typename T>
T parse_number(std::string_view key, std::string_view value, std::string_view expected) {
  T out{};
  const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || end != value.data() + value.size()) bad_value(key, value, expected);
  if constexpr (std::is_floating_point_v<T>)
    if (!std::isfinite(out)) bad_value(key, value, expected);
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  bad_value(key, value, "true or false");
}

template <typename E>
E parse_enum(std::string_view key, std::string_view value, std::optional<E> parsed, std::string_view expected) {
  if (!parsed) bad_value(key, value, expected);
  return *parsed;
}

std::vector<std::string> parse_list(std::string_view value) {
  std::vector<std::string> out;
  while (!value.empty()) {
    const auto comma = value.find(',');
    const auto item = trim(value.substr(0, comma));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    value.remove_prefix(comma + 1);
  }
  return out;
}

using Setter = std::function<void(PipelineConfig&, std::string_view key, std::string_view value)>;

const std::vector<std::pair<std::string_view, Setter>>& setters() {
  static const std::vector<std::pair<std::string_view, Setter>> table = {
      {"alpha", [](auto& c, auto k, auto v) { c.reward.alpha = parse_number<double>(k, v, "a number"); }},
      {"redundancy_penalty",
       [](auto& c, auto k, auto v) { c.reward.redundancy_penalty = parse_number<double>(k, v, "a number"); }},
      {"accuracy_bonus", [](auto& c, auto k, auto v) { c.reward.accuracy_bonus = parse_number<double>(k, v, "a number"); }},
      {"format_bonus", [](auto& c, auto k, auto v) { c.reward.format_bonus = parse_number<double>(k, v, "a number"); }},
      {"unreachable_subgoal",
       [](auto& c, auto k, auto v) { c.reward.unreachable_subgoal = parse_number<double>(k, v, "a number"); }},
      {"aggregation",
       [](auto& c, auto k, auto v) {
         c.reward.aggregation = parse_enum(k, v, parse_aggregation(v), "mean or min_prefix");
       }},
      {"redundancy_scope",
       [](auto& c, auto k, auto v) {
         c.reward.redundancy_scope = parse_enum(k, v, parse_redundancy_scope(v), "closing_action or whole_cycle");
       }},
      {"pairing",
       [](auto& c, auto k, auto v) { c.pairing = parse_enum(k, v, parse_pairing_policy(v), "all or best"); }},
      {"beta", [](auto& c, auto k, auto v) { c.train.beta = parse_number<double>(k, v, "a number"); }},
      {"learning_rate", [](auto& c, auto k, auto v) { c.train.learning_rate = parse_number<double>(k, v, "a number"); }},
      {"epochs", [](auto& c, auto k, auto v) { c.train.epochs = parse_number<int>(k, v, "an integer"); }},
      {"batch_size", [](auto& c, auto k, auto v) { c.train.batch_size = parse_number<std::size_t>(k, v, "a count"); }},
      {"weighting",
       [](auto& c, auto k, auto v) { c.train.weighting = parse_enum(k, v, parse_weighting(v), "dynamic or unit"); }},
      {"reference",
       [](auto& c, auto k, auto v) {
         c.reference = parse_enum(k, v, parse_reference_mode(v), "uniform or copy_of_initial");
       }},
      {"url_drop_list", [](auto& c, auto, auto v) { c.url.drop_list = parse_list(v); }},
      {"strict", [](auto& c, auto k, auto v) { c.strict = parse_bool(k, v); }},
      {"seed", [](auto& c, auto k, auto v) { c.seed = parse_number<std::uint64_t>(k, v, "an unsigned integer"); }},
      {"tasks", [](auto& c, auto k, auto v) { c.simulation.tasks = parse_number<int>(k, v, "an integer"); }},
      {"trajectories",
       [](auto& c, auto k, auto v) { c.simulation.trajectories = parse_number<int>(k, v, "an integer"); }},
      {"nodes", [](auto& c, auto k, auto v) { c.simulation.world.nodes = parse_number<int>(k, v, "an integer"); }},
      {"branching",
       [](auto& c, auto k, auto v) { c.simulation.world.branching = parse_number<double>(k, v, "a number"); }},
      {"decoys", [](auto& c, auto k, auto v) { c.simulation.world.decoys = parse_number<int>(k, v, "an integer"); }},
      {"dynamic_fraction",
       [](auto& c, auto k, auto v) { c.simulation.world.dynamic_fraction = parse_number<double>(k, v, "a number"); }},
      {"competence",
       [](auto& c, auto k, auto v) { c.simulation.agent.competence = parse_number<double>(k, v, "a number"); }},
      {"loop_bias",
       [](auto& c, auto k, auto v) { c.simulation.agent.loop_bias = parse_number<double>(k, v, "a number"); }},
      {"max_steps",
       [](auto& c, auto k, auto v) { c.simulation.agent.max_steps = parse_number<int>(k, v, "an integer"); }},
  };
  return table;
}

}  // namespace

const std::vector<std::string_view>& config_keys() {
  static const std::vector<std::string_view> keys = [] {
    std::vector<std::string_view> out;
    for (const auto& [key, setter] : setters()) out.push_back(key);
    return out;
  }();
  return keys;
}

void set_option(PipelineConfig& config, std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  for (const auto& [name, setter] : setters())
    if (name == key) return setter(config, key, value);
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void load_config(PipelineConfig& config, std::istream& in, const std::string& source) {
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    std::string_view view = text;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(source + ":" + std::to_string(line) + ": expected key = value");
    try {
      set_option(config, view.substr(0, eq), view.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(line) + ": " + e.what());
    }
  }
}

void load_config_file(PipelineConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  load_config(config, in, path);
}

ordered_json to_json(const PipelineConfig& config) {
  ordered_json out;
  out["reward"] = to_json(config.reward);
  out["pairing"] = std::string(to_string(config.pairing));
  ordered_json train;
  train["beta"] = config.train.beta;
  train["learning_rate"] = config.train.learning_rate;
  train["epochs"] = config.train.epochs;
  train["batch_size"] = config.train.batch_size;
  train["weighting"] = std::string(to_string(config.train.weighting));
  train["reference"] = std::string(to_string(config.reference));
  out["train"] = std::move(train);
  out["url_drop_list"] = config.url.drop_list;
  out["strict"] = config.strict;
  ordered_json sim;
  sim["tasks"] = config.simulation.tasks;
  sim["trajectories"] = config.simulation.trajectories;
  sim["world"] = to_json(config.simulation.world);
  sim["world"].erase("seed");
  sim["agent"] = to_json(config.simulation.agent);
  sim["agent"].erase("seed");
  out["simulation"] = std::move(sim);
  out["seed"] = config.seed;
  return out;
}

}  // namespace tgpo
