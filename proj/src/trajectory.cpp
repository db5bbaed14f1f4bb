#include "tgpo/trajectory.hpp"

#include <array>
#include <cctype>
#include <utility>

namespace tgpo {

namespace {

constexpr std::array<std::pair<ActionKind, std::string_view>, 6> kKindNames{{
    {ActionKind::click, "click"},
    {ActionKind::type, "type"},
    {ActionKind::scroll, "scroll"},
    {ActionKind::navigate, "navigate"},
    {ActionKind::stop, "stop"},
    {ActionKind::other, "other"},
}};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

void append_escaped(std::string& out, std::string_view text) {
  for (char c : text) {
    if (c == '\\' || c == '|') out.push_back('\\');
    out.push_back(c);
  }
}

std::optional<std::string> check_observation(const StateObservation& obs, const DigestFormat& digests,
                                             std::string_view where) {
  if (obs.url.empty()) return std::string(where) + ": empty url";
  if (obs.screenshot_hash && !is_hex_digest(*obs.screenshot_hash, digests.screenshot_hash_length))
    return std::string(where) + ": screenshot_hash is not a " +
           std::to_string(digests.screenshot_hash_length) + "-digit hex digest";
  if (obs.dom_digest && !is_hex_digest(*obs.dom_digest, digests.dom_digest_length))
    return std::string(where) + ": dom_digest is not a " + std::to_string(digests.dom_digest_length) +
           "-digit hex digest";
  return std::nullopt;
}

}  // namespace

std::string_view to_string(ActionKind kind) {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "other";
}

std::optional<ActionKind> parse_action_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames)
    if (n == name) return k;
  return std::nullopt;
}

std::string collapse_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::string canonical_key(const Action& action) {
  std::string key(to_string(action.kind));
  key.push_back('|');
  append_escaped(key, collapse_whitespace(action.target));
  if (action.value) {
    const std::string value = collapse_whitespace(*action.value);
    if (!value.empty()) {
      key.push_back('|');
      append_escaped(key, value);
    }
  }
  return key;
}

const StateObservation& Trajectory::state_at(std::size_t t) const {
  return t < steps.size() ? steps[t].state : final_state;
}

bool is_hex_digest(std::string_view digest, std::size_t expected_length) {
  if (digest.empty()) return false;
  if (expected_length != 0 && digest.size() != expected_length) return false;
  for (char c : digest)
    if (std::isxdigit(static_cast<unsigned char>(c)) == 0) return false;
  return true;
}

std::optional<std::string> find_violation(const Trajectory& trajectory, const DigestFormat& digests) {
  if (trajectory.trajectory_id.empty()) return "empty trajectory_id";
  if (trajectory.task_id.empty()) return "empty task_id";
  if (trajectory.label != 0 && trajectory.label != 1)
    return "label must be 0 or 1, got " + std::to_string(trajectory.label);
  if (trajectory.steps.empty()) return "trajectory has no steps";
  for (std::size_t i = 0; i < trajectory.steps.size(); ++i) {
    const Step& step = trajectory.steps[i];
    if (step.index != static_cast<int>(i))
      return "step indices must be consecutive from 0; expected " + std::to_string(i) + ", got " +
             std::to_string(step.index);
    if (auto bad = check_observation(step.state, digests, "step " + std::to_string(i))) return bad;
  }
  return check_observation(trajectory.final_state, digests, "final_state");
}

}  // namespace tgpo
