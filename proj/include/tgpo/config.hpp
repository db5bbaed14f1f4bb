#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tgpo/objective.hpp"
#include "tgpo/preference.hpp"
#include "tgpo/process_reward.hpp"
#include "tgpo/records.hpp"
#include "tgpo/sim.hpp"
#include "tgpo/url.hpp"

namespace tgpo {

/// Every tunable of the pipeline in one place. Config files hold flat `key = value`
/// lines (`#` starts a comment); command-line flags are applied afterwards.
struct PipelineConfig {
  RewardConfig reward;
  TrainConfig train;
  ReferenceMode reference = ReferenceMode::uniform;
  PairingPolicy pairing = PairingPolicy::all_strict_pairs;
  UrlPolicy url;
  bool strict = true;
  SimulationConfig simulation;
  std::uint64_t seed = 0;
};

/// Bad key, bad value, or unreadable config file. The CLI maps it to a usage error.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Known keys in the order they are echoed.
const std::vector<std::string_view>& config_keys();

void set_option(PipelineConfig& config, std::string_view key, std::string_view value);
/// Applies `key=value` lines in order; `source` names the input in messages.
void load_config(PipelineConfig& config, std::istream& in, const std::string& source = "config");
void load_config_file(PipelineConfig& config, const std::string& path);

/// Resolved configuration as echoed into artifact headers.
ordered_json to_json(const PipelineConfig& config);

}  // namespace tgpo
