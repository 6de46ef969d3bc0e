#include "tmlab/evasion/strategy.hpp"

#include <gtest/gtest.h>

#include "tmlab/evasion/builtins.hpp"

namespace tmlab::evasion {
namespace {

std::string squeeze(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) out += c;
  }
  return out;
}

// Strategy boxes as printed, line breaks and indentation included.
const char* kPrinted[] = {
    " [TCP:flags:PA]-fragment{tcp:8:True}-| \\/",
    " [TCP:flags:S]-duplicate(,\n   duplicate(tamper{TCP:flags:replace:R}(\n     tamper{TCP:chksum:corrupt},),))-| \\/",
    " [TCP:flags:S]-duplicate(\n   tamper{TCP:flags:replace:R},)-| \\/",
    " [DNS:*:*]-tamper{DNS:ancount:replace:32}-| \\/",
    "[HTTP:host:*]-insert{%0A%09:start:value:1}-| \\/",
    "[HTTP:version:*]-insert{%20%0A%09:end:value:1}-| \\/",
    "[HTTP:method:*]-insert{%0A:start:value:1}-| \\/",
    "[HTTP:host:*]-insert{%20:end:value:3391}(\n   duplicate(duplicate(,\n      replace{a:name:1}),\n"
    "         insert{%09:start:name:1}),)-| \\/",
    "[HTTP:host:*]-insert{%20:end:value:3391}(\n   duplicate(duplicate(\n      insert{%09:start:name:1},),\n"
    "         replace{a:name:1}),)-|\\/",
};

TEST(StrategyText, RoundTripsPrintedBoxes) {
  for (const char* text : kPrinted) {
    Strategy s = parse_strategy(text);
    EXPECT_EQ(squeeze(strategy_text(s)), squeeze(text)) << text;
    EXPECT_EQ(parse_strategy(strategy_text(s)), s) << text;
  }
}

TEST(StrategyText, CanonicalForm) {
  EXPECT_EQ(strategy_text(parse_strategy(kPrinted[1])),
            "[TCP:flags:S]-duplicate(,duplicate(tamper{TCP:flags:replace:R}(tamper{TCP:chksum:corrupt},),))-| \\/");
  EXPECT_EQ(strategy_text(parse_strategy(kPrinted[8])),
            "[HTTP:host:*]-insert{%20:end:value:3391}(duplicate(duplicate(insert{%09:start:name:1},),"
            "replace{a:name:1}),)-| \\/");
  EXPECT_EQ(strategy_text(parse_strategy("[TCP:flags:S]-| \\/")), "[TCP:flags:S]-| \\/");
  EXPECT_EQ(strategy_text(parse_strategy("\\/ [TCP:flags:SA]-drop-|")), "\\/ [TCP:flags:SA]-drop-|");
}

TEST(StrategyParse, Segmentation) {
  Strategy s = parse_strategy(kPrinted[0]);
  ASSERT_EQ(s.outbound.size(), 1U);
  EXPECT_TRUE(s.inbound.empty());
  EXPECT_EQ(s.outbound[0].trigger, (Trigger{"TCP", "flags", "PA"}));
  const Action& a = s.outbound[0].action;
  EXPECT_EQ(a.kind, Action::Kind::Fragment);
  EXPECT_EQ(a.layer, "tcp");
  EXPECT_EQ(a.index, 8U);
  EXPECT_TRUE(a.in_order);
  EXPECT_EQ(leaf_count(a), 2U);
}

TEST(StrategyParse, DnsCount) {
  Strategy s = parse_strategy(kPrinted[3]);
  EXPECT_EQ(s.outbound[0].trigger, (Trigger{"DNS", "*", "*"}));
  const Action& a = s.outbound[0].action;
  EXPECT_EQ(a.kind, Action::Kind::Tamper);
  EXPECT_EQ(a.field, "ancount");
  EXPECT_EQ(a.op, "replace");
  EXPECT_EQ(a.value, "32");
}

TEST(StrategyParse, FreePassTree) {
  Strategy s = parse_strategy(kPrinted[2]);
  const Action& a = s.outbound[0].action;
  ASSERT_EQ(a.kind, Action::Kind::Duplicate);
  EXPECT_EQ(a.children[0].kind, Action::Kind::Tamper);
  EXPECT_EQ(a.children[0].value, "R");
  EXPECT_EQ(a.children[1].kind, Action::Kind::Send);
  EXPECT_EQ(leaf_count(a), 2U);
}

TEST(StrategyParse, InsertBytesAreDecoded) {
  Strategy s = parse_strategy(kPrinted[5]);
  EXPECT_EQ(s.outbound[0].action.bytes, net::to_bytes(" \n\t"));
  EXPECT_EQ(s.outbound[0].action.position, "end");
  EXPECT_EQ(s.outbound[0].action.component, "value");
  Strategy v1 = parse_strategy(kPrinted[7]);
  EXPECT_EQ(v1.outbound[0].action.count, 3391U);
  EXPECT_EQ(leaf_count(v1.outbound[0].action), 3U);
}

TEST(StrategyParse, ErrorsCarryOffsets) {
  struct Case {
    const char* text;
    std::size_t offset;
  };
  for (auto c : {Case{"[TCP:flags:PA]-explode{1}-| \\/", 15}, Case{"[TCP:flags:PA]-fragment{tcp:x:True}-| \\/", 24},
                 Case{"[TCP:flags:PA]-fragment{tcp:8:True}-|", 37}, Case{"[UDP:*:*]-| \\/", 1},
                 Case{"[TCP:flags:S]-insert{%20:end:value:1}-| \\/", 14},
                 Case{"[HTTP:host:*]-tamper{TCP:flags:replace:R}-| \\/", 14},
                 Case{"[TCP:flags:S]-tamper{TCP:flags:replace:R}(,drop)-| \\/", 14}}) {
    try {
      parse_strategy(c.text);
      ADD_FAILURE() << "accepted " << c.text;
    } catch (const StrategyParseError& e) {
      EXPECT_EQ(e.offset(), c.offset) << c.text << ": " << e.what();
    }
  }
}

TEST(StrategyBytes, PercentCoding) {
  EXPECT_EQ(encode_bytes(net::to_bytes(" \n\ta.b")), "%20%0A%09a.b");
  EXPECT_EQ(decode_bytes("%41b%zz%"), net::to_bytes("Ab%zz%"));
  for (int c = 0; c < 256; ++c) {
    net::Bytes b{static_cast<std::uint8_t>(c)};
    EXPECT_EQ(decode_bytes(encode_bytes(b)), b);
  }
}

TEST(Builtins, CountStrategyMatchesPrintedBox) {
  EXPECT_EQ(strategy_text(builtin("dns-elevated-count-ancount")), "[DNS:*:*]-tamper{DNS:ancount:replace:32}-| \\/");
  EXPECT_EQ(strategy_text(builtin("dns-elevated-count-arcount", {.count_value = 26})),
            "[DNS:*:*]-tamper{DNS:arcount:replace:26}-| \\/");
}

TEST(Builtins, PrintedStrategies) {
  EXPECT_EQ(squeeze(strategy_text(builtin("segmentation-http"))), squeeze(kPrinted[0]));
  EXPECT_EQ(squeeze(strategy_text(builtin("tcb-teardown-rst"))), squeeze(kPrinted[1]));
  EXPECT_EQ(squeeze(strategy_text(builtin("free-pass-client"))), squeeze(kPrinted[2]));
  EXPECT_EQ(squeeze(strategy_text(builtin("http-ws-after-version"))), squeeze(kPrinted[5]));
  EXPECT_EQ(squeeze(strategy_text(builtin("http-nl-before-method"))), squeeze(kPrinted[6]));
  EXPECT_EQ(squeeze(strategy_text(builtin("sandwich-v1"))), squeeze(kPrinted[7]));
  EXPECT_EQ(squeeze(strategy_text(builtin("sandwich-v2"))), squeeze(kPrinted[8]));
}

TEST(Builtins, FreePassDelay) {
  EXPECT_EQ(builtin("free-pass-client").outbound[0].leaf_delays.at(1), sim::secs(1));
  EXPECT_EQ(builtin("free-pass-client", {.delay = sim::secs(6)}).outbound[0].leaf_delays.at(1), sim::secs(6));
  EXPECT_TRUE(builtin("tcb-teardown-fin").outbound[0].leaf_delays.empty());
}

TEST(Builtins, EveryEntryParsesAndUnknownListsCatalog) {
  for (const auto& info : builtin_catalog()) {
    Strategy s = builtin(info.name);
    EXPECT_EQ(parse_strategy(strategy_text(s)).outbound[0].action, s.outbound[0].action) << info.name;
    EXPECT_FALSE(info.protocols.empty());
  }
  try {
    builtin("nope");
    FAIL();
  } catch (const UnknownBuiltin& e) {
    EXPECT_NE(std::string(e.what()).find("sandwich-v2"), std::string::npos);
  }
}

}  // namespace
}  // namespace tmlab::evasion
