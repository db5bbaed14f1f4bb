#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>

#include "json.hpp"

namespace tgpo {

using ordered_json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// Every artifact file may open with a single `{"header": {...}}` line naming its
/// format and echoing the configuration that produced it.
ordered_json make_header(std::string_view format, const ordered_json& config);

bool is_header_record(const nlohmann::json& record);

/// Throws SchemaMismatch when the header names another format or version.
void check_header(const nlohmann::json& record, std::string_view format, std::size_t line);

/// Writes one record per line, compact, with a trailing newline.
void write_record(std::ostream& out, const ordered_json& record);

}  // namespace tgpo
