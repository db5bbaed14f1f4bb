#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tgpo {

/// Query parameters removed during normalization. An entry ending in `*` drops
/// every parameter with that prefix; names are compared case-insensitively.
struct UrlPolicy {
  std::vector<std::string> drop_list = default_drop_list();

  static std::vector<std::string> default_drop_list();
  bool drops(std::string_view parameter_name) const;
};

/// Canonical form used for state identity: lowercase scheme and host, no fragment,
/// dropped tracking parameters, remaining parameters sorted by (name, value),
/// empty path as `/`, trailing slashes removed from non-root paths.
/// Idempotent. Throws UnparsableUrl.
std::string normalize_url(std::string_view raw, const UrlPolicy& policy = {});

}  // namespace tgpo
