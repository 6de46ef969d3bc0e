#pragma once

#include <filesystem>
#include <istream>
#include <string_view>
#include <vector>

#include "tmlab/blocklist/rule.hpp"

namespace tmlab::blocklist {

// Sorted, duplicate-free rule set.
class RuleSet {
 public:
  RuleSet() = default;
  explicit RuleSet(std::vector<BlockRule> rules);

  void add(BlockRule rule);
  bool matches_any(std::string_view name) const;
  const std::vector<BlockRule>& rules() const { return rules_; }
  std::size_t size() const { return rules_.size(); }
  bool empty() const { return rules_.empty(); }

  bool operator==(const RuleSet&) const = default;

 private:
  std::vector<BlockRule> rules_;
};

// One independent rule set per protocol.
struct Blocklists {
  RuleSet dns;
  RuleSet http;
  RuleSet https;

  const RuleSet& for_protocol(Protocol p) const;
  RuleSet& for_protocol(Protocol p);
  bool blocked(Protocol p, std::string_view name) const { return for_protocol(p).matches_any(name); }
};

struct RuleFile {
  std::vector<BlockRule> rules;  // file order
  std::size_t skipped = 0;       // lines that failed to parse
  std::size_t lines = 0;         // non-blank, non-comment lines
};

// One canonical rule per line; '#' starts a comment, blank lines ignored.
RuleFile read_rules(std::istream& in);
// Throws std::runtime_error if the file cannot be opened.
RuleFile read_rules_file(const std::filesystem::path& path);

}  // namespace tmlab::blocklist
