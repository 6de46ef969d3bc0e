#include "tmlab/evasion/evaluate.hpp"

#include <gtest/gtest.h>

#include "tmlab/evasion/builtins.hpp"
#include "tmlab/sim/endpoints.hpp"

namespace tmlab::evasion {
namespace {

using blocklist::parse_rule;

const net::Ipv4Address kWeb(95, 85, 96, 10);
const net::Ipv4Address kResolver(95, 85, 96, 53);

struct Range {
  std::unique_ptr<sim::World> world;
  TrialSetup setup;
};

Range range(Protocol protocol, bool legacy_dns = false) {
  sim::CensorConfig c;
  for (auto p : {Protocol::Dns, Protocol::Http, Protocol::Https}) {
    c.blocklists.for_protocol(p).add(parse_rule(".*twitter\\.com.*"));
  }
  c.legacy_dns_count_bug = legacy_dns;
  Range r{std::make_unique<sim::World>(c, sim::WorldOptions{.seed = 3}), {}};
  sim::PathConfig path{.prefix = net::Ipv4Prefix::from_string("95.85.96.0/24"), .censor_after_hop = 3};
  for (std::uint8_t i = 1; i <= 6; ++i) path.hops.push_back(net::Ipv4Address(10, 0, 0, i));
  r.world->add_path(path);
  r.world->add_host(kWeb, std::make_unique<sim::HttpServer>());
  r.world->add_host(kResolver, std::make_unique<sim::DnsResolver>(
                                   std::map<std::string, net::Ipv4Address>{{"twitter.com", {104, 244, 42, 1}}}));
  r.setup.server = protocol == Protocol::Dns ? kResolver : kWeb;
  return r;
}

EvasionReport eval(const Strategy& s, Protocol p, bool legacy_dns = false) {
  Range r = range(p, legacy_dns);
  return evaluate(s, p, "twitter.com", *r.world, r.setup);
}

bool evades(const Strategy& s, Protocol p, bool legacy_dns = false) { return eval(s, p, legacy_dns).successful(); }

TEST(Evaluate, EveryBuiltinEvadesWhereExpected) {
  for (const auto& info : builtin_catalog()) {
    for (Protocol p : info.protocols) {
      EvasionReport r = eval(builtin(info.name), p, info.name == "dns-duplicate-question");
      EXPECT_TRUE(r.baseline_censored) << info.name;
      EXPECT_TRUE(r.successful()) << info.name << " over " << blocklist::protocol_name(p);
      // The legacy censor still injects for a duplicated question; the reply is malformed.
      if (info.name != "dns-duplicate-question") {
        EXPECT_EQ(r.injections_observed, 0U) << info.name;
      }
      EXPECT_EQ(r.server_host, "twitter.com") << info.name;
    }
  }
}

TEST(Evaluate, DeliveryIsByteIdenticalExceptWhitespaceStrategies) {
  for (const char* name : {"segmentation-http", "tcb-teardown-rst", "tcb-teardown-fin", "tcb-teardown-nonsense-flags",
                           "free-pass-client", "free-pass-server-elicited"}) {
    for (Protocol p : {Protocol::Http, Protocol::Https}) {
      EXPECT_TRUE(eval(builtin(name), p).request_intact) << name;
    }
  }
  EXPECT_TRUE(eval(builtin("segmentation-tls-sni"), Protocol::Https).request_intact);
  EXPECT_FALSE(eval(builtin("http-host-whitespace"), Protocol::Http).request_intact);
}

TEST(Evaluate, NoStrategyIsNotAnEvasion) {
  EvasionReport r = eval(parse_strategy("\\/"), Protocol::Http);
  EXPECT_TRUE(r.baseline_censored);
  EXPECT_FALSE(r.with_strategy_delivered);
  EXPECT_GE(r.injections_observed, 1U);
}

TEST(Evaluate, UncensoredBaselineIsInvalid) {
  Range r = range(Protocol::Http);
  EXPECT_THROW(evaluate(builtin("segmentation-http"), Protocol::Http, "example.com", *r.world, r.setup), InvalidTrial);
  r.setup.server = net::Ipv4Address(95, 85, 96, 99);
  EXPECT_THROW(evaluate(builtin("segmentation-http"), Protocol::Http, "twitter.com", *r.world, r.setup), InvalidTrial);
}

TEST(Evaluate, FreePassBoundary) {
  for (Protocol p : {Protocol::Http, Protocol::Https}) {
    EXPECT_TRUE(evades(builtin("free-pass-client", {.delay = sim::millis(4999)}), p));
    EXPECT_FALSE(evades(builtin("free-pass-client", {.delay = sim::secs(5)}), p));
    EXPECT_FALSE(evades(builtin("free-pass-client", {.delay = sim::secs(6)}), p));
    // The window opens when the server's RST passes the censor, a few
    // milliseconds after the PSH+ACK did.
    EXPECT_TRUE(evades(builtin("free-pass-server-elicited", {.delay = sim::millis(4990)}), p));
    EXPECT_FALSE(evades(builtin("free-pass-server-elicited", {.delay = sim::millis(5100)}), p));
  }
}

TEST(Evaluate, TlsSplitIndices) {
  for (std::size_t i = 1; i <= 12; ++i) {
    bool expected = i >= 3 && i <= 8;
    EXPECT_EQ(evades(builtin("segmentation-tls-record", {.split_index = i}), Protocol::Https), expected) << i;
  }
  // The server name "twitter.com" occupies bytes 67..77.
  EXPECT_FALSE(evades(builtin("segmentation-tls-sni", {.split_index = 67}), Protocol::Https));
  for (std::size_t i = 68; i <= 77; ++i) {
    EXPECT_TRUE(evades(builtin("segmentation-tls-sni", {.split_index = i}), Protocol::Https)) << i;
  }
  EXPECT_FALSE(evades(builtin("segmentation-tls-sni", {.split_index = 78}), Protocol::Https));
}

TEST(Evaluate, HttpSplitOnlyInsideVersion) {
  // "GET / HTTP/1.1": the version token spans bytes 6..13.
  for (std::size_t i = 1; i <= 30; ++i) {
    bool expected = i >= 7 && i <= 13;
    EXPECT_EQ(evades(builtin("segmentation-http", {.split_index = i}), Protocol::Http), expected) << i;
  }
}

TEST(Evaluate, DnsCountThreshold) {
  for (const char* field : {"qdcount", "ancount", "nscount", "arcount"}) {
    const std::string name = std::string("dns-elevated-count-") + field;
    EXPECT_FALSE(evades(builtin(name, {.count_value = 25}), Protocol::Dns)) << field;
    for (std::uint32_t v : {26U, 32U, 1000U, 65535U}) {
      EXPECT_TRUE(evades(builtin(name, {.count_value = v}), Protocol::Dns)) << field << " " << v;
    }
  }
}

TEST(Evaluate, DuplicateQuestionDependsOnLegacyCensor) {
  EvasionReport legacy = eval(builtin("dns-duplicate-question"), Protocol::Dns, true);
  EXPECT_TRUE(legacy.successful());
  EXPECT_EQ(legacy.injections_observed, 1U);  // injected, but malformed
  EvasionReport fixed = eval(builtin("dns-duplicate-question"), Protocol::Dns, false);
  EXPECT_FALSE(fixed.successful());
  EXPECT_EQ(fixed.injections_observed, 1U);
}

TEST(Evaluate, SandwichPaddingIsMonotone) {
  bool seen_success = false;
  for (std::size_t pad : {1, 100, 500, 1000, 1200, 1300, 1400, 1500, 2000, 3000, 3391, 5000}) {
    bool ok = evades(builtin("sandwich-v1", {.padding = pad}), Protocol::Http);
    EXPECT_TRUE(!seen_success || ok) << "padding " << pad << " failed after a smaller padding succeeded";
    seen_success = seen_success || ok;
    EXPECT_EQ(evades(builtin("sandwich-v2", {.padding = pad}), Protocol::Http), ok) << pad;
  }
  EXPECT_FALSE(evades(builtin("sandwich-v1", {.padding = 1}), Protocol::Http));
  EXPECT_TRUE(evades(builtin("sandwich-v1", {.padding = 3391}), Protocol::Http));
}

TEST(Evaluate, StrategiesDoNotCarryOverProtocols) {
  EXPECT_FALSE(evades(builtin("http-host-whitespace"), Protocol::Https));
  EXPECT_FALSE(evades(builtin("segmentation-tls-sni"), Protocol::Http));
}

TEST(Evaluate, ReportJson) {
  EvasionReport r = eval(builtin("segmentation-http"), Protocol::Http);
  std::string j = report_json(r);
  EXPECT_NE(j.find("\"successful\": true"), std::string::npos) << j;
  EXPECT_NE(j.find("\"strategy\": \"[TCP:flags:PA]-fragment{tcp:8:True}-| \\\\/\""), std::string::npos) << j;
  EXPECT_LT(r.trace_begin, r.trace_end);
}

}  // namespace
}  // namespace tmlab::evasion
