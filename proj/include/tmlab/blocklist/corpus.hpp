#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tmlab/blocklist/rule.hpp"

namespace tmlab::blocklist {

// Aho-Corasick automaton over the rule cores, matching every rule against
// a name in one left-to-right pass. Anchors are checked on each hit.
// match() reuses per-instance scratch space, so one instance must not be
// shared between threads.
class MultiMatcher {
 public:
  explicit MultiMatcher(const std::vector<BlockRule>& rules);

  // Calls on_match(rule_index) once per matching rule, in ascending index
  // order. `name` is compared case-insensitively.
  void match(std::string_view name, const std::function<void(std::size_t)>& on_match) const;
  std::vector<std::size_t> match(std::string_view name) const;

  std::size_t state_count() const { return fail_.size(); }

 private:
  std::uint16_t symbol(unsigned char c) const { return alphabet_[c]; }

  std::vector<BlockRule> rules_;
  std::array<std::uint16_t, 256> alphabet_{};  // byte -> compact symbol, 0 = not in any core
  std::size_t symbols_ = 1;
  std::vector<std::int32_t> next_;              // state * symbols_ + symbol
  std::vector<std::int32_t> fail_;
  std::vector<std::int32_t> output_link_;       // nearest proper suffix state with outputs, or -1
  std::vector<std::vector<std::uint32_t>> outputs_;  // rule indices ending here
  mutable std::vector<std::uint32_t> seen_stamp_;
  mutable std::uint32_t stamp_ = 0;
};

struct RuleImpact {
  BlockRule rule;
  std::vector<std::string> names;  // sorted, distinct

  std::size_t count() const { return names.size(); }
};

struct CorpusMatch {
  std::vector<RuleImpact> per_rule;  // same order as the input rules
  std::size_t lines = 0;             // non-blank, non-comment lines
  std::size_t malformed = 0;         // lines that are not host names
};

// Host-name normalization used for corpus lines: trimmed, lowercased, one
// trailing dot dropped. nullopt when the result is not a host name.
std::optional<std::string> normalize_fqdn(std::string_view line);

// Single pass over the stream. Only matching names are retained, so memory
// tracks the size of the result; duplicates in the corpus count once.
CorpusMatch match_corpus(const std::vector<BlockRule>& rules, std::istream& fqdns);
// Throws std::runtime_error if the file cannot be opened.
CorpusMatch match_corpus_file(const std::vector<BlockRule>& rules, const std::filesystem::path& path);

// Last two labels, lowercased; a public-suffix list is deliberately not used.
std::string registered_domain(std::string_view fqdn);

struct OverblockingResult {
  bool overblocking = false;
  std::vector<std::string> witnesses;  // matching names with a foreign registered domain, sorted
};

// Over-blocking iff some matching name in the sample has a registered
// domain different from the seed's.
OverblockingResult classify_overblocking(const BlockRule& rule, std::string_view seed_domain,
                                         const std::vector<std::string>& corpus_sample,
                                         std::size_t max_witnesses = 10);

}  // namespace tmlab::blocklist
