#include "tmlab/cli/loaders.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "tmlab/blocklist/rule.hpp"

namespace tmlab::cli {
namespace {

const std::string kFixtures = TMLAB_FIXTURES;

TEST(LoadPfx2As, ParsesCaidaLine) {
  std::istringstream in("95.85.96.0\t19\t20661\n");
  auto t = load_pfx2as(in);
  ASSERT_EQ(t.items.size(), 1U);
  EXPECT_EQ(t.items[0].prefix.network(), net::Ipv4Address(95, 85, 96, 0));
  EXPECT_EQ(t.items[0].prefix.length(), 19);
  EXPECT_EQ(t.items[0].asn, "20661");
  EXPECT_EQ(t.skipped, 0U);
}

TEST(LoadPfx2As, KeepsMultiOriginAsns) {
  std::istringstream in("10.0.0.0\t8\t64500_64501\n10.0.0.0\t16\t64500,64502\n");
  auto t = load_pfx2as(in);
  ASSERT_EQ(t.items.size(), 2U);
  EXPECT_EQ(t.items[0].asn, "64500_64501");
  EXPECT_EQ(t.items[1].asn, "64500,64502");
}

TEST(LoadPfx2As, CountsMalformedLinesUpToTheLimit) {
  std::ostringstream text;
  for (int i = 0; i < 10; ++i) text << "95.85." << 96 + i << ".0\t24\t20661\n";
  text << "95.85.96.1\t24\t20661\n";  // host bits set
  std::istringstream in(text.str());
  auto t = load_pfx2as(in);
  EXPECT_EQ(t.items.size(), 10U);
  EXPECT_EQ(t.lines, 11U);
  EXPECT_EQ(t.skipped, 1U);
}

TEST(LoadPfx2As, RejectsFilesWithMoreThanTenPercentMalformed) {
  std::ostringstream text;
  for (int i = 0; i < 8; ++i) text << "95.85." << 96 + i << ".0\t24\t20661\n";
  text << "95.85.96.0 24 20661\n"   // spaces, not tabs
       << "95.85.96.0\t33\t20661\n";  // length out of range
  std::istringstream in(text.str());
  EXPECT_THROW(load_pfx2as(in), LoadError);
}

TEST(LoadPfx2As, ReadsTheFullPrefixTable) {
  auto t = load_pfx2as(kFixtures + "/pfx2as_tm.txt");
  EXPECT_EQ(t.items.size(), 24U);
  EXPECT_EQ(t.skipped, 0U);
}

TEST(LoadDomains, SkipsCommentsAndBlankLines) {
  std::istringstream in("#comment\n\ntwitter.com\n  Example.COM.  \n");
  auto d = load_domains(in);
  EXPECT_EQ(d.items, (std::vector<std::string>{"twitter.com", "example.com"}));
  EXPECT_EQ(d.lines, 2U);
  EXPECT_EQ(d.skipped, 0U);
}

TEST(LoadDomains, ExactlyTenPercentMalformedIsTolerated) {
  std::ostringstream text;
  for (int i = 0; i < 9; ++i) text << "d" << i << ".com\n";
  text << "not a name\n";
  std::istringstream in(text.str());
  auto d = load_domains(in);
  EXPECT_EQ(d.items.size(), 9U);
  EXPECT_EQ(d.skipped, 1U);
}

TEST(LoadRules, ReadsTheTenWidestRules) {
  auto r = load_rules(kFixtures + "/top_rules.txt");
  ASSERT_EQ(r.items.size(), 10U);
  EXPECT_EQ(blocklist::rule_text(r.items.front()), ".*\\.cyou.*");
  EXPECT_EQ(blocklist::rule_text(r.items.back()), ".*yy\\.com.*");
}

TEST(LoadRules, UnsupportedRegexCountsAsMalformed) {
  std::istringstream in(".*a.*\n.*b.*\n.*c.*\n.*d.*\n.*e.*\n.*f.*\n.*g.*\n.*h.*\n.*i.*\n(x|y)\n");
  auto r = load_rules(in);
  EXPECT_EQ(r.items.size(), 9U);
  EXPECT_EQ(r.skipped, 1U);
}

TEST(Loaders, UnreadableFileIsALoadError) {
  EXPECT_THROW(load_domains(std::filesystem::path("/nonexistent/domains.txt")), LoadError);
  EXPECT_THROW(load_pfx2as(std::filesystem::path("/nonexistent/pfx2as.txt")), LoadError);
  EXPECT_THROW(load_rules(std::filesystem::path("/nonexistent/rules.txt")), LoadError);
}

}  // namespace
}  // namespace tmlab::cli
