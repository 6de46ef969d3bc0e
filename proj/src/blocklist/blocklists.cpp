#include "tmlab/blocklist/blocklists.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <string>

namespace tmlab::blocklist {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

RuleSet::RuleSet(std::vector<BlockRule> rules) : rules_(std::move(rules)) {
  std::sort(rules_.begin(), rules_.end());
  rules_.erase(std::unique(rules_.begin(), rules_.end()), rules_.end());
}

void RuleSet::add(BlockRule rule) {
  auto it = std::lower_bound(rules_.begin(), rules_.end(), rule);
  if (it == rules_.end() || *it != rule) rules_.insert(it, std::move(rule));
}

bool RuleSet::matches_any(std::string_view name) const {
  return std::any_of(rules_.begin(), rules_.end(), [&](const BlockRule& r) { return matches(r, name); });
}

const RuleSet& Blocklists::for_protocol(Protocol p) const {
  switch (p) {
    case Protocol::Dns:
      return dns;
    case Protocol::Http:
      return http;
    case Protocol::Https:
      break;
  }
  return https;
}

RuleSet& Blocklists::for_protocol(Protocol p) {
  return const_cast<RuleSet&>(static_cast<const Blocklists&>(*this).for_protocol(p));
}

RuleFile read_rules(std::istream& in) {
  RuleFile out;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view body = line;
    if (auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
    body = trim(body);
    if (body.empty()) continue;
    ++out.lines;
    try {
      out.rules.push_back(parse_rule(body));
    } catch (const UnsupportedRule&) {
      ++out.skipped;
    }
  }
  return out;
}

RuleFile read_rules_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open rules file " + path.string());
  return read_rules(in);
}

}  // namespace tmlab::blocklist
