#include "tmlab/inference/impact.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace tmlab::inference {
namespace {

using blocklist::parse_rule;

ImpactReport run(std::vector<ImpactRule> rules, const std::string& corpus) {
  std::istringstream in(corpus);
  return impact_report(rules, in);
}

TEST(Impact, CyouZoneIsFullyMatched) {
  auto r = run({{parse_rule(".*\\.cyou.*"), "starlink.cyou"}},
               "committee.cyou\nmovizland.cyou\nstarlink.cyou\nexample.org\n");
  ASSERT_EQ(r.entries.size(), 1U);
  EXPECT_EQ(r.entries[0].count, 3U);
  EXPECT_EQ(r.entries[0].sample_witnesses, (std::vector<std::string>{"committee.cyou", "movizland.cyou", "starlink.cyou"}));
  EXPECT_TRUE(r.entries[0].overblocking);
  EXPECT_EQ(r.entries[0].overblocking_witnesses, (std::vector<std::string>{"committee.cyou", "movizland.cyou"}));
}

TEST(Impact, TwitterSubstring) {
  auto r = run({{parse_rule(".*twitter\\.com.*"), std::nullopt}}, "financetwitter.com\nexample.org\n");
  EXPECT_EQ(r.entries[0].count, 1U);
  EXPECT_EQ(r.entries[0].seed_domain, "twitter.com");
  EXPECT_TRUE(r.entries[0].overblocking);
  EXPECT_EQ(r.entries[0].overblocking_witnesses, std::vector<std::string>{"financetwitter.com"});
}

TEST(Impact, RanksByCountThenText) {
  auto r = run({{parse_rule(".*a.*"), std::nullopt}, {parse_rule(".*\\.org.*"), std::nullopt},
                {parse_rule(".*b.*"), std::nullopt}},
               "a.org\nb.org\nab.com\nzz.org\n");
  ASSERT_EQ(r.entries.size(), 3U);
  EXPECT_EQ(blocklist::rule_text(r.entries[0].rule), ".*\\.org.*");
  EXPECT_EQ(blocklist::rule_text(r.entries[1].rule), ".*a.*");
  EXPECT_EQ(blocklist::rule_text(r.entries[2].rule), ".*b.*");
  EXPECT_EQ(r.entries[1].count, r.entries[2].count);
}

TEST(Impact, SampleWitnessesCappedAtTen) {
  std::string corpus;
  for (int i = 0; i < 25; ++i) corpus += "host" + std::to_string(100 + i) + ".trendmicro.com\n";
  auto r = run({{parse_rule(".*\\.trendmicro\\.com.*"), "account.trendmicro.com"}}, corpus);
  EXPECT_EQ(r.entries[0].count, 25U);
  EXPECT_EQ(r.entries[0].sample_witnesses.size(), 10U);
  EXPECT_EQ(r.entries[0].sample_witnesses.front(), "host100.trendmicro.com");
  EXPECT_FALSE(r.entries[0].overblocking);
}

TEST(Impact, EmptyRulesGiveEmptyReport) {
  auto r = run({}, "a.com\n");
  EXPECT_TRUE(r.entries.empty());
  EXPECT_EQ(impact_jsonl(r), "");
}

TEST(Impact, MissingCorpusThrows) {
  EXPECT_THROW(impact_report({}, std::filesystem::path("/nonexistent/corpus.txt")), std::runtime_error);
}

TEST(Impact, JsonLines) {
  auto r = run({{parse_rule(".*wn\\.com.*"), "wn.com"}}, "dawn.com\nwn.com\n");
  EXPECT_EQ(impact_jsonl(r),
            "{\"rule\":\".*wn\\\\.com.*\",\"count\":2,\"sample_witnesses\":[\"dawn.com\",\"wn.com\"],"
            "\"seed_domain\":\"wn.com\",\"overblocking\":true,\"overblocking_witnesses\":[\"dawn.com\"]}\n");
}

TEST(Impact, ApproximateSeed) {
  EXPECT_EQ(approximate_seed(parse_rule(".*\\.trendmicro\\.com.*")), "trendmicro.com");
  EXPECT_EQ(approximate_seed(parse_rule("^doh\\..*")), "doh");
  EXPECT_EQ(approximate_seed(parse_rule(".*\\..*")), ".");
}

}  // namespace
}  // namespace tmlab::inference
