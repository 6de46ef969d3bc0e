#include <gtest/gtest.h>

#include <random>

#include "tmlab/net/http.hpp"

namespace tmlab::net {
namespace {

TEST(Http, CanonicalGet) {
  auto req = build_http_get("twitter.com");
  EXPECT_EQ(to_string(req.raw()), "GET / HTTP/1.1\r\nHost: twitter.com\r\n\r\n");
  EXPECT_EQ(strict_http_host(req.raw()), "twitter.com");
  EXPECT_EQ(req.method(), "GET");
  EXPECT_EQ(req.version(), "HTTP/1.1");
  EXPECT_EQ(req.header_value("host"), "twitter.com");
}

TEST(Http, ShortHost) { EXPECT_EQ(strict_http_host(build_http_get("a.b").raw()), "a.b"); }

TEST(Http, PaddingHeaderGrowsByPaddingPlusOverhead) {
  auto base = build_http_get("example.com");
  auto padded = build_http_get("example.com", "/", "HTTP/1.1", {{"X-Pad", std::string(3391, ' ')}});
  // "X-Pad: " + padding + "\r\n"
  EXPECT_EQ(padded.raw().size(), base.raw().size() + 3391 + 9);
}

TEST(Http, ViewSerializesVerbatim) {
  std::vector<std::string> samples = {
      "GET / HTTP/1.1\r\nHost: twitter.com\r\n\r\n",
      "\r\nGET /x  HTTP/1.1 \n\t\r\nHost:\n\ttwitter.com \r\na: b\r\n\r\nbody",
      "GET / HTTP/1",
      ".1\r\nUser-Agent: x\r\n",
      "garbage without structure",
      "",
  };
  for (const auto& s : samples) {
    EXPECT_EQ(to_string(tokenize_http_request(as_view(s)).serialize()), s);
  }
}

TEST(Http, ViewSerializesRandomBytesVerbatim) {
  std::mt19937 rng(3);
  static constexpr char kAlpha[] = "GET /HTP1.\r\n\t :ahost";
  for (int i = 0; i < 10000; ++i) {
    std::string s(rng() % 60, ' ');
    for (auto& c : s) c = kAlpha[rng() % (sizeof(kAlpha) - 1)];
    ASSERT_EQ(to_string(tokenize_http_request(as_view(s)).serialize()), s);
  }
}

TEST(Http, AnchorsInsertAtNamedPoints) {
  auto req = build_http_get("twitter.com");
  EXPECT_EQ(req.anchor_offset(HttpAnchor::BeforeMethod), 0u);
  EXPECT_EQ(req.anchor_offset(HttpAnchor::AfterVersion), 14u);
  EXPECT_EQ(req.anchor_offset(HttpAnchor::BeforeHeader), 16u);
  EXPECT_EQ(req.anchor_offset(HttpAnchor::BeforeHostValue), 22u);
  EXPECT_EQ(req.anchor_offset(HttpAnchor::AfterHostValue), 33u);
  EXPECT_EQ(req.anchor_offset(HttpAnchor::AfterHeader), 35u);
  EXPECT_FALSE(req.anchor_offset(HttpAnchor::BeforeHostValue, "Cookie"));

  auto r = req;
  ASSERT_TRUE(r.insert(HttpAnchor::BeforeHostValue, as_view("\n\t")));
  EXPECT_EQ(to_string(r.raw()), "GET / HTTP/1.1\r\nHost: \n\ttwitter.com\r\n\r\n");
  EXPECT_EQ(r.view().serialize(), r.raw());
  EXPECT_EQ(strict_http_host(r.raw()), "twitter.com");

  r = req;
  r.insert(HttpAnchor::BeforeMethod, as_view("\n"));
  EXPECT_EQ(strict_http_host(r.raw()), "twitter.com");
  EXPECT_EQ(r.method(), "GET");

  r = req;
  r.insert(HttpAnchor::AfterVersion, as_view(" \n\t"));
  EXPECT_EQ(to_string(r.raw()), "GET / HTTP/1.1 \n\t\r\nHost: twitter.com\r\n\r\n");
  EXPECT_EQ(strict_http_host(r.raw()), "twitter.com");
}

TEST(Http, ReplaceHeaderKeepsViewConsistent) {
  auto req = build_http_get("twitter.com");
  auto idx = req.find_header("Host");
  ASSERT_TRUE(idx);
  auto h = req.view().headers[*idx];
  auto renamed = h;
  renamed.name = to_bytes("a");
  req.replace_header(*idx, {renamed, h});
  EXPECT_EQ(to_string(req.raw()), "GET / HTTP/1.1\r\na: twitter.com\r\nHost: twitter.com\r\n\r\n");
  EXPECT_EQ(req.find_header("Host"), 1u);
}

TEST(Http, StrictRejectsMalformed) {
  EXPECT_FALSE(strict_http_host(as_view("GET / HTTP/1.1\r\nHost: a.b\r\n")));  // incomplete
  EXPECT_FALSE(strict_http_host(as_view("GET / HTTP/1.1\r\n\r\n")));            // no Host
  EXPECT_FALSE(strict_http_host(as_view("GET / HTTP/1.1\r\nHost: a\r\nHost: b\r\n\r\n")));
  EXPECT_FALSE(strict_http_host(as_view("GET / HTTP/2\r\nHost: a\r\n\r\n")));
  EXPECT_FALSE(strict_http_host(as_view("GET / HTTP/1")));
  EXPECT_EQ(strict_http_host(as_view("GET / HTTP/1.1\r\nHost: a.b:8080\r\n\r\n")), "a.b");
}

TEST(Http, ObsFoldAfterRequestLineIsIgnored) {
  auto s = "GET / HTTP/1.1\r\n\tHost: x\r\nHost: y.z\r\n\r\n";
  EXPECT_EQ(strict_http_host(as_view(s)), "y.z");
}

TEST(Http, BuilderExtractorInverseOverVisibleAscii) {
  std::mt19937 rng(17);
  for (int i = 0; i < 5000; ++i) {
    std::string host(1 + rng() % 255, 'x');
    for (auto& c : host) {
      do {
        c = static_cast<char>(0x21 + rng() % 94);
      } while (c == ':');
    }
    ASSERT_EQ(strict_http_host(build_http_get(host).raw()), host) << host;
  }
}

}  // namespace
}  // namespace tmlab::net
