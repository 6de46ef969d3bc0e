#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

#include "tmlab/blocklist/corpus.hpp"

namespace tmlab::blocklist {
namespace {

CorpusMatch run(const std::vector<std::string>& rule_texts, const std::string& corpus) {
  std::vector<BlockRule> rules;
  for (const auto& t : rule_texts) rules.push_back(parse_rule(t));
  std::istringstream in(corpus);
  return match_corpus(rules, in);
}

TEST(Corpus, ShortRuleHitsUnrelatedDomain) {
  auto m = run({R"(.*w\.org.*)"}, "tensorflow.org\nexample.com\n");
  ASSERT_EQ(m.per_rule.size(), 1u);
  EXPECT_EQ(m.per_rule[0].names, (std::vector<std::string>{"tensorflow.org"}));
}

TEST(Corpus, EmptyCorpusGivesZeroCounts) {
  auto m = run({R"(.*\.cyou.*)", "^doh\\..*"}, "");
  for (const auto& r : m.per_rule) EXPECT_EQ(r.count(), 0u);
  EXPECT_EQ(m.lines, 0u);
}

TEST(Corpus, MalformedLinesSkippedAndCounted) {
  auto m = run({".*a.*"}, "# comment\nabc.com\nnot a name\n\n-bad..\nABC.COM.\n");
  EXPECT_EQ(m.lines, 4u);
  EXPECT_EQ(m.malformed, 2u);
  EXPECT_EQ(m.per_rule[0].names, (std::vector<std::string>{"abc.com"}));
}

TEST(Corpus, OverlappingCoresAndAnchors) {
  auto m = run({".*ab.*", ".*b.*", "^abc$", R"(.*c$)", R"(^b.*)"}, "abc\nbca\ncab\n");
  EXPECT_EQ(m.per_rule[0].names, (std::vector<std::string>{"abc", "cab"}));
  EXPECT_EQ(m.per_rule[1].count(), 3u);
  EXPECT_EQ(m.per_rule[2].names, (std::vector<std::string>{"abc"}));
  EXPECT_EQ(m.per_rule[3].names, (std::vector<std::string>{"abc"}));
  EXPECT_EQ(m.per_rule[4].names, (std::vector<std::string>{"bca"}));
}

// Single-pass matcher against a per-rule rescan on a seeded fixture.
TEST(Corpus, EqualsNaivePerRuleScan) {
  std::mt19937 rng(50);
  constexpr std::string_view kAlpha = "abcdeo.-";
  std::vector<BlockRule> rules;
  while (rules.size() < 50) {
    BlockRule r;
    std::size_t len = 2 + rng() % 4;
    for (std::size_t i = 0; i < len; ++i) r.core.push_back(kAlpha[rng() % 6]);
    r.prefix_anchored = rng() % 4 == 0;
    r.suffix_anchored = rng() % 4 == 0;
    rules.push_back(r);
  }
  std::ostringstream corpus;
  std::vector<std::string> names;
  for (int i = 0; i < 100000; ++i) {
    std::string label(3 + rng() % 10, 'a');
    for (auto& c : label) c = kAlpha[rng() % 6];
    std::string name = label + (rng() % 2 ? ".com" : ".org");
    names.push_back(name);
    corpus << name << '\n';
  }
  std::istringstream in(corpus.str());
  auto m = match_corpus(rules, in);
  ASSERT_EQ(m.malformed, 0u);
  for (std::size_t r = 0; r < rules.size(); ++r) {
    std::set<std::string> expected;
    for (const auto& n : names) {
      if (matches(rules[r], n)) expected.insert(n);
    }
    ASSERT_EQ(m.per_rule[r].names, std::vector<std::string>(expected.begin(), expected.end())) << r;
  }
}

TEST(Corpus, MultiMatcherReportsEachRuleOnce) {
  MultiMatcher mm({parse_rule(".*a.*"), parse_rule(".*aa.*"), parse_rule(".*a.*")});
  EXPECT_EQ(mm.match("aaaa"), (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_TRUE(mm.match("bbb").empty());
  EXPECT_EQ(mm.match("AA"), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Overblocking, RegisteredDomainIsLastTwoLabels) {
  EXPECT_EQ(registered_domain("account.trendmicro.com"), "trendmicro.com");
  EXPECT_EQ(registered_domain("dawn.com"), "dawn.com");
  EXPECT_EQ(registered_domain("com"), "com");
}

TEST(Overblocking, SameRegisteredDomainIsNotOverblocking) {
  auto r = classify_overblocking(parse_rule(R"(.*\.trendmicro\.com.*)"), "account.trendmicro.com",
                                 {"www.trendmicro.com", "a.b.trendmicro.com", "example.org"});
  EXPECT_FALSE(r.overblocking);
  EXPECT_TRUE(r.witnesses.empty());
}

TEST(Overblocking, ShortRuleHitsUnrelatedSld) {
  auto r = classify_overblocking(parse_rule(R"(.*wn\.com.*)"), "wn.com", {"dawn.com"});
  EXPECT_TRUE(r.overblocking);
  EXPECT_EQ(r.witnesses, (std::vector<std::string>{"dawn.com"}));
}

TEST(Overblocking, WitnessesAgreeWithMatcher) {
  auto rule = parse_rule(R"(.*\.cyou.*)");
  std::vector<std::string> sample = {"starlink.cyou", "committee.cyou", "x.cyoux.example", "xcyoux.example",
                                     "a.cyou.example", "cyou.example"};
  auto r = classify_overblocking(rule, "starlink.cyou", sample);
  EXPECT_TRUE(r.overblocking);
  std::vector<std::string> expected;
  for (const auto& n : sample) {
    if (matches(rule, n) && registered_domain(n) != "starlink.cyou") expected.push_back(n);
  }
  std::sort(expected.begin(), expected.end());
  EXPECT_EQ(r.witnesses, expected);
  EXPECT_NE(std::find(r.witnesses.begin(), r.witnesses.end(), "x.cyoux.example"), r.witnesses.end());
}

}  // namespace
}  // namespace tmlab::blocklist
