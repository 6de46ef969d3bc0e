#include "tmlab/blocklist/rule.hpp"

#include <cctype>

namespace tmlab::blocklist {
namespace {

constexpr std::string_view kMeta = ".*+?()[]{}|^$\\";

bool is_meta(char c) { return kMeta.find(c) != std::string_view::npos; }

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

bool iequal_at(std::string_view hay, std::size_t at, std::string_view needle) {
  for (std::size_t i = 0; i < needle.size(); ++i) {
    if (lower(hay[at + i]) != needle[i]) return false;
  }
  return true;
}

}  // namespace

std::string_view protocol_name(Protocol p) {
  switch (p) {
    case Protocol::Dns:
      return "dns";
    case Protocol::Http:
      return "http";
    case Protocol::Https:
      return "https";
  }
  return "?";
}

std::optional<Protocol> parse_protocol(std::string_view text) {
  std::string t;
  for (char c : text) t.push_back(lower(c));
  if (t == "dns") return Protocol::Dns;
  if (t == "http") return Protocol::Http;
  if (t == "https" || t == "tls") return Protocol::Https;
  return std::nullopt;
}

BlockRule parse_rule(std::string_view text) {
  BlockRule rule;
  std::size_t i = 0;
  if (text.starts_with("^")) {
    rule.prefix_anchored = true;
    i = 1;
  } else if (text.starts_with(".*")) {
    i = 2;
  } else {
    throw UnsupportedRule("rule must start with '^' or '.*'", 0);
  }

  std::size_t end = text.size();
  if (text.size() >= i + 1 && text.back() == '$' && !(text.size() >= 2 && text[text.size() - 2] == '\\')) {
    rule.suffix_anchored = true;
    end = text.size() - 1;
  } else if (text.size() >= i + 2 && text.ends_with(".*") &&
             !(text.size() >= 3 && text[text.size() - 3] == '\\')) {
    end = text.size() - 2;
  } else {
    throw UnsupportedRule("rule must end with '$' or '.*'", text.size());
  }

  for (std::size_t p = i; p < end; ++p) {
    char c = text[p];
    if (c == '\\') {
      if (p + 1 >= end) throw UnsupportedRule("dangling escape", p);
      char next = text[p + 1];
      if (std::isalnum(static_cast<unsigned char>(next))) {
        throw UnsupportedRule("character-class escape is not a literal", p);
      }
      rule.core.push_back(lower(next));
      ++p;
      continue;
    }
    if (is_meta(c)) throw UnsupportedRule(std::string("unsupported regex syntax '") + c + "'", p);
    rule.core.push_back(lower(c));
  }
  if (rule.core.empty()) throw UnsupportedRule("empty core", i);
  return rule;
}

std::string rule_text(const BlockRule& rule) {
  std::string out = rule.prefix_anchored ? "^" : ".*";
  for (char c : rule.core) {
    if (is_meta(c)) out.push_back('\\');
    out.push_back(c);
  }
  out += rule.suffix_anchored ? "$" : ".*";
  return out;
}

bool matches(const BlockRule& rule, std::string_view name) {
  const auto& core = rule.core;
  if (core.size() > name.size()) return false;
  if (rule.prefix_anchored && rule.suffix_anchored) {
    return core.size() == name.size() && iequal_at(name, 0, core);
  }
  if (rule.prefix_anchored) return iequal_at(name, 0, core);
  if (rule.suffix_anchored) return iequal_at(name, name.size() - core.size(), core);
  for (std::size_t at = 0; at + core.size() <= name.size(); ++at) {
    if (iequal_at(name, at, core)) return true;
  }
  return false;
}

}  // namespace tmlab::blocklist
