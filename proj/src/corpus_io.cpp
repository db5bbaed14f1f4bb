#include "tgpo/corpus_io.hpp"

#include <istream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "tgpo/errors.hpp"

namespace tgpo {

namespace {

using json = nlohmann::json;

// Field access with line-numbered rejection of wrong or missing values.
class RecordReader {
 public:
  RecordReader(std::size_t line, const ParseOptions& options, std::vector<std::string>& warnings)
      : line_(line), options_(options), warnings_(warnings) {}

  [[noreturn]] void reject(const std::string& reason) const { throw MalformedRecord(line_, reason); }

  void check_fields(const json& object, std::initializer_list<std::string_view> allowed,
                    std::string_view where) const {
    if (!object.is_object()) reject(std::string(where) + " must be an object");
    for (const auto& [name, value] : object.items()) {
      bool known = false;
      for (auto a : allowed) known = known || a == name;
      if (known) continue;
      const std::string message = "unknown field '" + name + "' in " + std::string(where);
      if (options_.strict) reject(message);
      warnings_.push_back("line " + std::to_string(line_) + ": ignoring " + message);
    }
  }

  std::string string_field(const json& object, const char* name) const {
    auto it = object.find(name);
    if (it == object.end()) reject(std::string("missing field '") + name + "'");
    if (!it->is_string()) reject(std::string("field '") + name + "' must be a string");
    return it->get<std::string>();
  }

  std::optional<std::string> optional_string(const json& object, const char* name) const {
    auto it = object.find(name);
    if (it == object.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) reject(std::string("field '") + name + "' must be a string");
    return it->get<std::string>();
  }

  std::optional<bool> optional_bool(const json& object, const char* name) const {
    auto it = object.find(name);
    if (it == object.end() || it->is_null()) return std::nullopt;
    if (!it->is_boolean()) reject(std::string("field '") + name + "' must be a boolean");
    return it->get<bool>();
  }

  long long integer_field(const json& object, const char* name) const {
    auto it = object.find(name);
    if (it == object.end()) reject(std::string("missing field '") + name + "'");
    if (!it->is_number_integer()) reject(std::string("field '") + name + "' must be an integer");
    return it->get<long long>();
  }

  StateObservation observation(const json& object, bool with_step_fields) const {
    StateObservation obs;
    obs.url = string_field(object, "url");
    obs.screenshot_hash = optional_string(object, "screenshot_hash");
    obs.dom_digest = optional_string(object, "dom_digest");
    if (!with_step_fields) check_fields(object, {"url", "screenshot_hash", "dom_digest"}, "final_state");
    return obs;
  }

  Action action(const json& object) const {
    check_fields(object, {"kind", "target", "value", "raw"}, "action");
    Action action;
    const auto kind_name = string_field(object, "kind");
    const auto kind = parse_action_kind(kind_name);
    if (!kind) reject("unknown action kind '" + kind_name + "'");
    action.kind = *kind;
    action.target = string_field(object, "target");
    action.value = optional_string(object, "value");
    action.raw = string_field(object, "raw");
    return action;
  }

  Step step(const json& object) const {
    check_fields(object,
                 {"index", "url", "screenshot_hash", "dom_digest", "action", "effective", "format_valid"},
                 "step");
    Step step;
    const long long index = integer_field(object, "index");
    if (index < 0 || index > std::numeric_limits<int>::max()) reject("step index out of range");
    step.index = static_cast<int>(index);
    step.state = observation(object, true);
    auto it = object.find("action");
    if (it == object.end()) reject("missing field 'action'");
    step.action = action(*it);
    step.effective = optional_bool(object, "effective");
    step.format_valid = optional_bool(object, "format_valid");
    return step;
  }

 private:
  std::size_t line_;
  const ParseOptions& options_;
  std::vector<std::string>& warnings_;
};

ordered_json observation_fields(ordered_json record, const StateObservation& obs) {
  record["url"] = obs.url;
  if (obs.screenshot_hash) record["screenshot_hash"] = *obs.screenshot_hash;
  if (obs.dom_digest) record["dom_digest"] = *obs.dom_digest;
  return record;
}

}  // namespace

ParsedCorpus parse_corpus(std::istream& in, const ParseOptions& options) {
  ParsedCorpus result;
  std::map<std::string, std::size_t> group_of_task;
  std::set<std::string> seen_trajectories;

  std::string text;
  std::size_t line = 0;
  bool any_record = false;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;

    json record;
    try {
      record = json::parse(text);
    } catch (const json::parse_error& e) {
      throw MalformedRecord(line, std::string("invalid JSON: ") + e.what());
    }
    RecordReader reader(line, options, result.warnings);

    if (is_header_record(record)) {
      if (any_record) reader.reject("header must be the first record");
      check_header(record, kCorpusFormat, line);
      result.header = record.at("header");
      any_record = true;
      continue;
    }
    any_record = true;

    reader.check_fields(record, {"task_id", "instruction", "trajectory_id", "label", "steps", "final_state"},
                        "record");
    Trajectory trajectory;
    trajectory.task_id = reader.string_field(record, "task_id");
    trajectory.trajectory_id = reader.string_field(record, "trajectory_id");
    const long long label = reader.integer_field(record, "label");
    if (label != 0 && label != 1) reader.reject("label must be 0 or 1, got " + std::to_string(label));
    trajectory.label = static_cast<int>(label);

    auto steps = record.find("steps");
    if (steps == record.end() || !steps->is_array()) reader.reject("field 'steps' must be an array");
    for (const auto& s : *steps) trajectory.steps.push_back(reader.step(s));
    auto final_state = record.find("final_state");
    if (final_state == record.end()) reader.reject("missing field 'final_state'");
    if (!final_state->is_object()) reader.reject("final_state must be an object");
    trajectory.final_state = reader.observation(*final_state, false);

    if (auto violation = find_violation(trajectory, options.digests)) reader.reject(*violation);

    const auto instruction = reader.optional_string(record, "instruction");
    auto group = group_of_task.find(trajectory.task_id);
    if (group == group_of_task.end()) {
      if (!instruction)
        fail(ErrorKind::unknown_task, "line " + std::to_string(line) + ": task '" + trajectory.task_id +
                                          "' referenced before any record carrying its instruction");
      group = group_of_task.emplace(trajectory.task_id, result.groups.size()).first;
      result.groups.push_back(TaskGroup{TaskSpec{trajectory.task_id, *instruction}, {}});
    } else if (instruction && *instruction != result.groups[group->second].task.instruction) {
      reader.reject("instruction differs from earlier records of task '" + trajectory.task_id + "'");
    }

    if (!seen_trajectories.insert(trajectory.trajectory_id).second)
      fail(ErrorKind::duplicate_trajectory_id,
           "line " + std::to_string(line) + ": trajectory_id '" + trajectory.trajectory_id + "' repeated");
    result.groups[group->second].trajectories.push_back(std::move(trajectory));
  }
  return result;
}

ParsedCorpus parse_corpus_string(const std::string& text, const ParseOptions& options) {
  std::istringstream in(text);
  return parse_corpus(in, options);
}

ordered_json trajectory_to_record(const TaskSpec& task, const Trajectory& trajectory) {
  ordered_json record;
  record["task_id"] = task.task_id;
  record["instruction"] = task.instruction;
  record["trajectory_id"] = trajectory.trajectory_id;
  record["label"] = trajectory.label;
  ordered_json steps = ordered_json::array();
  for (const Step& step : trajectory.steps) {
    ordered_json s;
    s["index"] = step.index;
    s = observation_fields(std::move(s), step.state);
    ordered_json action;
    action["kind"] = std::string(to_string(step.action.kind));
    action["target"] = step.action.target;
    if (step.action.value) action["value"] = *step.action.value;
    action["raw"] = step.action.raw;
    s["action"] = std::move(action);
    if (step.effective) s["effective"] = *step.effective;
    if (step.format_valid) s["format_valid"] = *step.format_valid;
    steps.push_back(std::move(s));
  }
  record["steps"] = std::move(steps);
  record["final_state"] = observation_fields(ordered_json::object(), trajectory.final_state);
  return record;
}

void emit_corpus(std::ostream& out, const Corpus& corpus, const ordered_json* header) {
  if (header) write_record(out, *header);
  for (const TaskGroup& group : corpus)
    for (const Trajectory& trajectory : group.trajectories) write_record(out, trajectory_to_record(group.task, trajectory));
}

std::string emit_corpus(const Corpus& corpus) {
  std::ostringstream out;
  emit_corpus(out, corpus);
  return out.str();
}

}  // namespace tgpo
