#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tgpo/records.hpp"
#include "tgpo/trajectory.hpp"

namespace tgpo {

inline constexpr std::string_view kCorpusFormat = "tgpo-corpus";

struct ParseOptions {
  /// Strict mode rejects unknown fields; lenient mode ignores them with a warning.
  bool strict = true;
  DigestFormat digests;
};

struct ParsedCorpus {
  Corpus groups;  // tasks in order of first appearance
  std::optional<nlohmann::json> header;
  std::vector<std::string> warnings;
};

/// Reads one trajectory record per line. Malformed records are rejected, never repaired.
/// A record may omit `instruction` only when its task was introduced by an earlier record.
ParsedCorpus parse_corpus(std::istream& in, const ParseOptions& options = {});
ParsedCorpus parse_corpus_string(const std::string& text, const ParseOptions& options = {});

ordered_json trajectory_to_record(const TaskSpec& task, const Trajectory& trajectory);

/// Deterministic serialization; an empty corpus without header emits nothing.
void emit_corpus(std::ostream& out, const Corpus& corpus, const ordered_json* header = nullptr);
std::string emit_corpus(const Corpus& corpus);

}  // namespace tgpo
