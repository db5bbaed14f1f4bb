#include "doctest.h"

#include "tgpo/errors.hpp"
#include "tgpo/url.hpp"

using tgpo::normalize_url;

TEST_SUITE("url") {

TEST_CASE("scheme and host are lowercased, path case kept") {
  CHECK(normalize_url("HTTPS://Shop.Example.COM/Cart") == "https://shop.example.com/Cart");
}

TEST_CASE("fragment dropped, empty path becomes root, trailing slash removed") {
  CHECK(normalize_url("https://a.org#top") == "https://a.org/");
  CHECK(normalize_url("https://a.org/x/y/#frag") == "https://a.org/x/y");
  CHECK(normalize_url("https://a.org/") == "https://a.org/");
}

TEST_CASE("tracking parameters dropped and the rest sorted") {
  CHECK(normalize_url("https://a.org/s?z=1&utm_source=m&a=2&sid=9&UTM_medium=e") == "https://a.org/s?a=2&z=1");
  CHECK(normalize_url("https://a.org/s?sid=1&gclid=2") == "https://a.org/s");
  CHECK(normalize_url("https://a.org/s?b=2&a=3&a=1") == "https://a.org/s?a=1&a=3&b=2");
  CHECK(normalize_url("https://a.org/s?flag&b=") == "https://a.org/s?b=&flag");
}

TEST_CASE("custom drop list") {
  tgpo::UrlPolicy policy;
  policy.drop_list = {"session*"};
  CHECK(normalize_url("https://a.org/?sessionKey=1&sid=2", policy) == "https://a.org/?sid=2");
  CHECK(policy.drops("SESSION_ID"));
  CHECK_FALSE(policy.drops("sid"));
}

TEST_CASE("idempotent") {
  for (const char* raw : {"HTTP://A.b/c/?y=2&x=1#f", "https://a.org", "https://u:p@Host.org/a//b/?ref=1&q=%20"}) {
    const auto once = normalize_url(raw);
    CHECK(normalize_url(once) == once);
  }
}

TEST_CASE("unparsable urls") {
  for (const char* raw : {"", "example.com/x", "https://", "ht tp://a.org", "https://a.org/has space", "1http://a"})
    CHECK_THROWS_AS(normalize_url(raw), tgpo::Error);
  try {
    normalize_url("nope");
  } catch (const tgpo::Error& e) {
    CHECK(e.kind() == tgpo::ErrorKind::unparsable_url);
  }
}

}  // TEST_SUITE
