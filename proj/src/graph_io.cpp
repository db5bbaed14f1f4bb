#include "tgpo/graph_io.hpp"

#include <istream>
#include <ostream>
#include <sstream>

#include "tgpo/errors.hpp"

namespace tgpo {

namespace {

using json = nlohmann::json;

ordered_json hops(const HopCount& h) { return h ? ordered_json(*h) : ordered_json(nullptr); }

ordered_json to_json(const RewardBreakdown& r) {
  ordered_json out;
  out["subgoal"] = r.subgoal;
  out["redundancy"] = r.redundancy;
  out["accuracy"] = r.accuracy;
  out["format"] = r.format;
  out["total"] = r.total;
  return out;
}

void write_task(std::ostream& out, const TrajectoryGraph& graph, const ScoredGraph* scored) {
  const std::string& task_id = graph.task.task_id;
  ordered_json task;
  task["type"] = "task";
  task["task_id"] = task_id;
  task["instruction"] = graph.task.instruction;
  task["root"] = graph.root_id;
  task["goals"] = graph.goal_ids;
  task["nodes"] = graph.nodes.size();
  task["edges"] = graph.edges.size();
  task["walks"] = graph.walks.size();
  if (scored) {
    task["l_min"] = hops(scored->distances.l_min);
    task["reward_config"] = to_json(scored->config);
  }
  write_record(out, task);

  for (const MergedNode& node : graph.nodes) {
    ordered_json r;
    r["type"] = "node";
    r["task_id"] = task_id;
    r["id"] = node.node_id;
    r["url"] = node.fingerprint.normalized_url;
    r["prefix"] = node.fingerprint.effective_prefix;
    r["screenshot_hash"] = node.fingerprint.screenshot_hash ? ordered_json(*node.fingerprint.screenshot_hash)
                                                            : ordered_json(nullptr);
    r["root"] = node.is_root;
    r["goal"] = node.is_goal;
    if (scored) {
      r["from_root"] = hops(scored->distances.from_root[node.node_id]);
      r["to_goal"] = hops(scored->distances.to_goal[node.node_id]);
    }
    ordered_json occurrences = ordered_json::array();
    for (const NodeOccurrence& o : node.occurrences)
      occurrences.push_back(ordered_json::array({o.trajectory_id, o.step, o.prefix_length}));
    r["occurrences"] = std::move(occurrences);
    write_record(out, r);
  }

  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const ActionEdge& edge = graph.edges[e];
    ordered_json r;
    r["type"] = "edge";
    r["task_id"] = task_id;
    r["from"] = edge.from;
    r["to"] = edge.to;
    r["action"] = edge.action_key;
    r["labels"] = edge.label_set;
    if (scored) r["reward"] = to_json(scored->edges[e].canonical);
    ordered_json occurrences = ordered_json::array();
    for (std::size_t i = 0; i < edge.occurrences.size(); ++i) {
      const EdgeOccurrence& o = edge.occurrences[i];
      ordered_json occ;
      occ["trajectory_id"] = o.trajectory_id;
      occ["step"] = o.step;
      occ["label"] = o.label;
      occ["effective"] = o.effective;
      occ["format_valid"] = o.format_valid;
      if (scored) occ["reward"] = to_json(scored->edges[e].occurrences[i]);
      occurrences.push_back(std::move(occ));
    }
    r["occurrences"] = std::move(occurrences);
    write_record(out, r);
  }

  for (const TrajectoryWalk& walk : graph.walks) {
    ordered_json r;
    r["type"] = "walk";
    r["task_id"] = task_id;
    r["trajectory_id"] = walk.trajectory_id;
    r["label"] = walk.label;
    r["nodes"] = walk.nodes;
    r["effective"] = walk.effective;
    write_record(out, r);
  }
}

// Parses the sequence of task blocks; scoring fields are read only when `scored` is set.
class DumpReader {
 public:
  DumpReader(std::istream& in, bool scored) : in_(in), scored_(scored) {}

  std::optional<json> header;
  std::vector<ScoredGraph> graphs;

  void run() {
    std::string text;
    bool any = false;
    while (std::getline(in_, text)) {
      ++line_;
      if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
      json record;
      try {
        record = json::parse(text);
      } catch (const json::parse_error& e) {
        reject(std::string("invalid JSON: ") + e.what());
      }
      if (is_header_record(record)) {
        if (any) reject("header must be the first record");
        const auto format = record.at("header").value("format", std::string{});
        check_header(record, scored_ || format == kScoredGraphFormat ? kScoredGraphFormat : kGraphFormat, line_);
        header = record.at("header");
        any = true;
        continue;
      }
      any = true;
      try {
        dispatch(record);
      } catch (const json::exception& e) {
        reject(std::string("bad field: ") + e.what());
      }
    }
    finish_task();
  }

 private:
  [[noreturn]] void reject(const std::string& why) const { throw MalformedRecord(line_, why); }

  static HopCount read_hops(const json& v) {
    if (v.is_null()) return std::nullopt;
    return v.get<int>();
  }

  static RewardBreakdown read_reward(const json& v) {
    return {v.at("subgoal").get<double>(), v.at("redundancy").get<double>(), v.at("accuracy").get<double>(),
            v.at("format").get<double>(), v.at("total").get<double>()};
  }

  void dispatch(const json& record) {
    if (!record.is_object()) reject("record must be an object");
    const std::string type = record.at("type").get<std::string>();
    if (type == "task") {
      finish_task();
      current_ = ScoredGraph{};
      open_ = true;
      TrajectoryGraph& g = current_.graph;
      g.task.task_id = record.at("task_id").get<std::string>();
      g.task.instruction = record.at("instruction").get<std::string>();
      g.root_id = record.at("root").get<int>();
      g.goal_ids = record.at("goals").get<std::vector<int>>();
      expected_nodes_ = record.at("nodes").get<std::size_t>();
      expected_edges_ = record.at("edges").get<std::size_t>();
      expected_walks_ = record.at("walks").get<std::size_t>();
      if (scored_) {
        current_.distances.l_min = read_hops(record.at("l_min"));
        current_.config = reward_config_from_json(record.at("reward_config"));
      }
      return;
    }
    if (!open_) reject("'" + type + "' record before any task record");
    TrajectoryGraph& g = current_.graph;
    if (record.at("task_id").get<std::string>() != g.task.task_id) reject("record belongs to another task");

    if (type == "node") {
      MergedNode node;
      node.node_id = record.at("id").get<int>();
      if (node.node_id != static_cast<int>(g.nodes.size())) reject("node ids must be dense and ordered");
      node.fingerprint.normalized_url = record.at("url").get<std::string>();
      node.fingerprint.effective_prefix = record.at("prefix").get<std::vector<std::string>>();
      const auto& hash = record.at("screenshot_hash");
      if (!hash.is_null()) node.fingerprint.screenshot_hash = hash.get<std::string>();
      node.is_root = record.at("root").get<bool>();
      node.is_goal = record.at("goal").get<bool>();
      for (const auto& o : record.at("occurrences"))
        node.occurrences.push_back({o.at(0).get<std::string>(), o.at(1).get<int>(), o.at(2).get<int>()});
      if (scored_) {
        current_.distances.from_root.push_back(read_hops(record.at("from_root")));
        current_.distances.to_goal.push_back(read_hops(record.at("to_goal")));
      }
      g.nodes.push_back(std::move(node));
    } else if (type == "edge") {
      ActionEdge edge;
      edge.from = record.at("from").get<int>();
      edge.to = record.at("to").get<int>();
      edge.action_key = record.at("action").get<std::string>();
      edge.label_set = record.at("labels").get<std::vector<int>>();
      ScoredEdge scored_edge;
      if (scored_) scored_edge.canonical = read_reward(record.at("reward"));
      for (const auto& o : record.at("occurrences")) {
        edge.occurrences.push_back({o.at("trajectory_id").get<std::string>(), o.at("step").get<int>(),
                                    o.at("label").get<int>(), o.at("effective").get<bool>(),
                                    o.at("format_valid").get<bool>()});
        if (scored_) scored_edge.occurrences.push_back(read_reward(o.at("reward")));
      }
      if (edge.occurrences.empty()) reject("edge without occurrences");
      g.edges.push_back(std::move(edge));
      if (scored_) current_.edges.push_back(std::move(scored_edge));
    } else if (type == "walk") {
      TrajectoryWalk walk;
      walk.trajectory_id = record.at("trajectory_id").get<std::string>();
      walk.label = record.at("label").get<int>();
      walk.nodes = record.at("nodes").get<std::vector<int>>();
      walk.effective = record.at("effective").get<std::vector<bool>>();
      if (walk.nodes.size() != walk.effective.size() + 1) reject("walk must have one more node than steps");
      g.walks.push_back(std::move(walk));
    } else {
      reject("unknown record type '" + type + "'");
    }
  }

  void finish_task() {
    if (!open_) return;
    open_ = false;
    const TrajectoryGraph& g = current_.graph;
    if (g.nodes.size() != expected_nodes_ || g.edges.size() != expected_edges_ || g.walks.size() != expected_walks_)
      reject("task '" + g.task.task_id + "' record counts do not match its header");
    const int n = static_cast<int>(g.nodes.size());
    auto in_range = [n](int id) { return id >= 0 && id < n; };
    if (!in_range(g.root_id)) reject("root id out of range in task '" + g.task.task_id + "'");
    for (int goal : g.goal_ids)
      if (!in_range(goal)) reject("goal id out of range in task '" + g.task.task_id + "'");
    for (const ActionEdge& e : g.edges)
      if (!in_range(e.from) || !in_range(e.to)) reject("edge endpoint out of range in task '" + g.task.task_id + "'");
    for (const TrajectoryWalk& w : g.walks)
      for (int v : w.nodes)
        if (!in_range(v)) reject("walk node out of range in task '" + g.task.task_id + "'");
    graphs.push_back(std::move(current_));
  }

  std::istream& in_;
  bool scored_;
  std::size_t line_ = 0;
  bool open_ = false;
  ScoredGraph current_;
  std::size_t expected_nodes_ = 0, expected_edges_ = 0, expected_walks_ = 0;
};

}  // namespace

ordered_json to_json(const RewardConfig& config) {
  ordered_json out;
  out["alpha"] = config.alpha;
  out["redundancy_penalty"] = config.redundancy_penalty;
  out["accuracy_bonus"] = config.accuracy_bonus;
  out["format_bonus"] = config.format_bonus;
  out["unreachable_subgoal"] = config.unreachable_subgoal;
  out["aggregation"] = std::string(to_string(config.aggregation));
  out["redundancy_scope"] = std::string(to_string(config.redundancy_scope));
  return out;
}

RewardConfig reward_config_from_json(const nlohmann::json& object) {
  RewardConfig config;
  config.alpha = object.at("alpha").get<double>();
  config.redundancy_penalty = object.at("redundancy_penalty").get<double>();
  config.accuracy_bonus = object.at("accuracy_bonus").get<double>();
  config.format_bonus = object.at("format_bonus").get<double>();
  config.unreachable_subgoal = object.at("unreachable_subgoal").get<double>();
  const auto aggregation = parse_aggregation(object.at("aggregation").get<std::string>());
  const auto scope = parse_redundancy_scope(object.at("redundancy_scope").get<std::string>());
  if (!aggregation || !scope) fail(ErrorKind::schema_mismatch, "unknown reward aggregation or redundancy scope");
  config.aggregation = *aggregation;
  config.redundancy_scope = *scope;
  return config;
}

void write_graph(std::ostream& out, const TrajectoryGraph& graph) { write_task(out, graph, nullptr); }

void write_scored_graph(std::ostream& out, const ScoredGraph& scored) { write_task(out, scored.graph, &scored); }

std::string dump_graph(const TrajectoryGraph& graph) {
  std::ostringstream out;
  write_graph(out, graph);
  return out.str();
}

std::string dump_scored_graph(const ScoredGraph& scored) {
  std::ostringstream out;
  write_scored_graph(out, scored);
  return out.str();
}

GraphFile read_graphs(std::istream& in) {
  DumpReader reader(in, false);
  reader.run();
  GraphFile file{reader.header, {}};
  for (ScoredGraph& s : reader.graphs) file.graphs.push_back(std::move(s.graph));
  return file;
}

ScoredGraphFile read_scored_graphs(std::istream& in) {
  DumpReader reader(in, true);
  reader.run();
  return {reader.header, std::move(reader.graphs)};
}

}  // namespace tgpo
