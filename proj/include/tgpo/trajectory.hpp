#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tgpo {

enum class ActionKind { click, type, scroll, navigate, stop, other };

std::string_view to_string(ActionKind kind);
std::optional<ActionKind> parse_action_kind(std::string_view name);

struct TaskSpec {
  std::string task_id;
  std::string instruction;

  bool operator==(const TaskSpec&) const = default;
};

struct Action {
  ActionKind kind = ActionKind::other;
  std::string target;
  std::optional<std::string> value;
  std::string raw;  // verbatim agent output

  bool operator==(const Action&) const = default;
};

/// Trims and collapses every whitespace run to a single space.
std::string collapse_whitespace(std::string_view text);

/// Identity of an action for merging and pairing: `kind|target` or
/// `kind|target|value`, whitespace-normalized, with `\` and `|` escaped.
/// An empty value is treated as absent. `raw` does not participate.
std::string canonical_key(const Action& action);

struct StateObservation {
  std::string url;
  std::optional<std::string> screenshot_hash;
  std::optional<std::string> dom_digest;

  bool operator==(const StateObservation&) const = default;
};

struct Step {
  int index = 0;
  StateObservation state;
  Action action;
  std::optional<bool> effective;
  std::optional<bool> format_valid;

  bool operator==(const Step&) const = default;
};

struct Trajectory {
  std::string trajectory_id;
  std::string task_id;
  int label = 0;
  std::vector<Step> steps;
  StateObservation final_state;

  /// s_t for t in [0, length()]; s_T is the final state.
  const StateObservation& state_at(std::size_t t) const;
  std::size_t length() const { return steps.size(); }

  bool operator==(const Trajectory&) const = default;
};

struct TaskGroup {
  TaskSpec task;
  std::vector<Trajectory> trajectories;

  bool operator==(const TaskGroup&) const = default;
};

using Corpus = std::vector<TaskGroup>;

/// Expected hex lengths for logger digests. Zero accepts any non-empty hex string.
struct DigestFormat {
  std::size_t screenshot_hash_length = 16;
  std::size_t dom_digest_length = 64;
};

bool is_hex_digest(std::string_view digest, std::size_t expected_length);

/// Returns the first invariant violation of the trajectory, or nullopt when valid.
std::optional<std::string> find_violation(const Trajectory& trajectory, const DigestFormat& digests = {});

}  // namespace tgpo
