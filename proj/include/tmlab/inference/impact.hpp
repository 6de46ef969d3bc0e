#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "tmlab/blocklist/corpus.hpp"

namespace tmlab::inference {

struct ImpactRule {
  blocklist::BlockRule rule;
  std::optional<std::string> seed_domain;  // the censored name the rule came from, if known
};

struct ImpactEntry {
  blocklist::BlockRule rule;
  std::string seed_domain;  // given, or approximated from the core
  std::size_t count = 0;
  std::vector<std::string> sample_witnesses;  // first matches in name order, at most 10
  bool overblocking = false;
  std::vector<std::string> overblocking_witnesses;
};

struct ImpactReport {
  std::vector<ImpactEntry> entries;  // by count descending, then rule text
  std::size_t lines = 0;
  std::size_t malformed = 0;
};

// Without a known seed, the core with its outer dots removed stands in for
// it ("\.trendmicro\.com" -> "trendmicro.com").
std::string approximate_seed(const blocklist::BlockRule& rule);

ImpactReport impact_report(const std::vector<ImpactRule>& rules, std::istream& corpus);
// Throws std::runtime_error if the corpus cannot be opened.
ImpactReport impact_report(const std::vector<ImpactRule>& rules, const std::filesystem::path& corpus);

// One JSON object per entry, one per line.
std::string impact_jsonl(const ImpactReport& report);

}  // namespace tmlab::inference
