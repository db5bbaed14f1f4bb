#include "tgpo/records.hpp"

#include <ostream>

#include "tgpo/errors.hpp"

namespace tgpo {

ordered_json make_header(std::string_view format, const ordered_json& config) {
  ordered_json header;
  header["format"] = std::string(format);
  header["version"] = kSchemaVersion;
  header["config"] = config;
  ordered_json record;
  record["header"] = std::move(header);
  return record;
}

bool is_header_record(const nlohmann::json& record) {
  return record.is_object() && record.size() == 1 && record.contains("header");
}

void check_header(const nlohmann::json& record, std::string_view format, std::size_t line) {
  const auto& header = record.at("header");
  if (!header.is_object()) throw MalformedRecord(line, "header must be an object");
  const auto found_format = header.value("format", std::string{});
  if (found_format != format)
    fail(ErrorKind::schema_mismatch,
         "line " + std::to_string(line) + ": expected a " + std::string(format) + " file, found '" +
             found_format + "'");
  const int version = header.value("version", 0);
  if (version != kSchemaVersion)
    fail(ErrorKind::schema_mismatch, "line " + std::to_string(line) + ": unsupported schema version " +
                                         std::to_string(version));
}

void write_record(std::ostream& out, const ordered_json& record) { out << record.dump() << '\n'; }

}  // namespace tgpo
