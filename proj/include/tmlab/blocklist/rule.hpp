#pragma once

#include <compare>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tmlab::blocklist {

enum class Protocol { Dns, Http, Https };

std::string_view protocol_name(Protocol p);  // "dns" / "http" / "https"
std::optional<Protocol> parse_protocol(std::string_view text);  // case-insensitive

class UnsupportedRule : public std::invalid_argument {
 public:
  UnsupportedRule(const std::string& what, std::size_t offset)
      : std::invalid_argument(what), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// An anchored substring: optional '^', a literal core, optional '$'; an
// unanchored side carries an implicit ".*". The core is stored lowercase.
struct BlockRule {
  std::string core;
  bool prefix_anchored = false;
  bool suffix_anchored = false;

  auto operator<=>(const BlockRule&) const = default;
};

// Accepts exactly ".*E.*", "^E.*", ".*E$" and "^E$", where E is a nonempty
// literal with regex metacharacters backslash-escaped. Anything else throws
// UnsupportedRule.
BlockRule parse_rule(std::string_view text);

// Canonical text; metacharacters in the core (in practice '.') are escaped.
std::string rule_text(const BlockRule& rule);

// Case-insensitive anchored substring test.
bool matches(const BlockRule& rule, std::string_view name);

}  // namespace tmlab::blocklist
