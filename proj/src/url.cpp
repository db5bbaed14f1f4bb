#include "tgpo/url.hpp"

#include <algorithm>
#include <cctype>
#include <utility>

#include "tgpo/errors.hpp"

namespace tgpo {

namespace {

std::string lowercase(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool valid_scheme(std::string_view scheme) {
  if (scheme.empty() || std::isalpha(static_cast<unsigned char>(scheme.front())) == 0) return false;
  return std::all_of(scheme.begin(), scheme.end(), [](unsigned char c) {
    return std::isalnum(c) != 0 || c == '+' || c == '-' || c == '.';
  });
}

[[noreturn]] void unparsable(std::string_view raw, std::string_view why) {
  fail(ErrorKind::unparsable_url, "'" + std::string(raw) + "': " + std::string(why));
}

// userinfo is case-sensitive; only the host (and port) are folded.
std::string normalize_authority(std::string_view authority) {
  const auto at = authority.rfind('@');
  if (at == std::string_view::npos) return lowercase(authority);
  return std::string(authority.substr(0, at + 1)) + lowercase(authority.substr(at + 1));
}

}  // namespace

std::vector<std::string> UrlPolicy::default_drop_list() {
  return {"utm_*", "sid", "sessionid", "ref", "fbclid", "gclid", "t", "ts"};
}

bool UrlPolicy::drops(std::string_view parameter_name) const {
  const std::string name = lowercase(parameter_name);
  for (const std::string& entry : drop_list) {
    const std::string pattern = lowercase(entry);
    if (!pattern.empty() && pattern.back() == '*') {
      if (name.compare(0, pattern.size() - 1, pattern, 0, pattern.size() - 1) == 0 &&
          name.size() >= pattern.size() - 1)
        return true;
    } else if (name == pattern) {
      return true;
    }
  }
  return false;
}

std::string normalize_url(std::string_view raw, const UrlPolicy& policy) {
  const auto first = raw.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) unparsable(raw, "empty");
  std::string_view url = raw.substr(first, raw.find_last_not_of(" \t\r\n") - first + 1);
  for (unsigned char c : url)
    if (c < 0x20 || c == ' ' || c == 0x7f) unparsable(raw, "contains whitespace or control characters");

  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) unparsable(raw, "missing scheme");
  const auto scheme = url.substr(0, scheme_end);
  if (!valid_scheme(scheme)) unparsable(raw, "invalid scheme");

  std::string_view rest = url.substr(scheme_end + 3);
  rest = rest.substr(0, rest.find('#'));

  const auto authority_end = rest.find_first_of("/?");
  const auto authority = rest.substr(0, authority_end);
  if (authority.empty() || authority.back() == '@' || authority.front() == ':')
    unparsable(raw, "missing host");
  rest = authority_end == std::string_view::npos ? std::string_view{} : rest.substr(authority_end);

  const auto query_start = rest.find('?');
  std::string path(rest.substr(0, query_start));
  const std::string_view query =
      query_start == std::string_view::npos ? std::string_view{} : rest.substr(query_start + 1);

  if (path.empty()) path = "/";
  while (path.size() > 1 && path.back() == '/') path.pop_back();

  std::vector<std::pair<std::string, std::string>> params;
  std::size_t pos = 0;
  while (pos <= query.size() && !query.empty()) {
    const auto amp = query.find('&', pos);
    const auto segment = query.substr(pos, amp == std::string_view::npos ? std::string_view::npos : amp - pos);
    if (!segment.empty()) {
      const auto eq = segment.find('=');
      std::string name(segment.substr(0, eq));
      std::string value = eq == std::string_view::npos ? std::string{} : std::string(segment.substr(eq));
      if (!name.empty() && !policy.drops(name)) params.emplace_back(std::move(name), std::move(value));
    }
    if (amp == std::string_view::npos) break;
    pos = amp + 1;
  }
  std::sort(params.begin(), params.end());

  std::string out = lowercase(scheme) + "://" + normalize_authority(authority) + path;
  for (std::size_t i = 0; i < params.size(); ++i) {
    out.push_back(i == 0 ? '?' : '&');
    out += params[i].first;
    out += params[i].second;  // keeps the '=' so "a" and "a=" stay distinct
  }
  return out;
}

}  // namespace tgpo
