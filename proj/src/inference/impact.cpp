#include "tmlab/inference/impact.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

namespace tmlab::inference {

std::string approximate_seed(const blocklist::BlockRule& rule) {
  std::string_view core = rule.core;
  while (core.starts_with('.')) core.remove_prefix(1);
  while (core.ends_with('.')) core.remove_suffix(1);
  return std::string(core.empty() ? rule.core : core);
}

ImpactReport impact_report(const std::vector<ImpactRule>& rules, std::istream& corpus) {
  std::vector<blocklist::BlockRule> plain;
  for (const auto& r : rules) plain.push_back(r.rule);
  auto matched = blocklist::match_corpus(plain, corpus);

  ImpactReport out{.lines = matched.lines, .malformed = matched.malformed};
  for (std::size_t i = 0; i < rules.size(); ++i) {
    auto& names = matched.per_rule[i].names;
    ImpactEntry e{.rule = rules[i].rule, .seed_domain = rules[i].seed_domain.value_or(approximate_seed(rules[i].rule)),
                  .count = names.size()};
    e.sample_witnesses.assign(names.begin(), names.begin() + std::min<std::size_t>(10, names.size()));
    auto ob = blocklist::classify_overblocking(e.rule, e.seed_domain, names);
    e.overblocking = ob.overblocking;
    e.overblocking_witnesses = std::move(ob.witnesses);
    out.entries.push_back(std::move(e));
  }
  std::stable_sort(out.entries.begin(), out.entries.end(), [](const ImpactEntry& a, const ImpactEntry& b) {
    if (a.count != b.count) return a.count > b.count;
    return blocklist::rule_text(a.rule) < blocklist::rule_text(b.rule);
  });
  return out;
}

ImpactReport impact_report(const std::vector<ImpactRule>& rules, const std::filesystem::path& corpus) {
  std::ifstream in(corpus);
  if (!in) throw std::runtime_error("cannot open corpus " + corpus.string());
  return impact_report(rules, in);
}

std::string impact_jsonl(const ImpactReport& report) {
  std::string out;
  for (const auto& e : report.entries) {
    nlohmann::ordered_json j;
    j["rule"] = blocklist::rule_text(e.rule);
    j["count"] = e.count;
    j["sample_witnesses"] = e.sample_witnesses;
    j["seed_domain"] = e.seed_domain;
    j["overblocking"] = e.overblocking;
    j["overblocking_witnesses"] = e.overblocking_witnesses;
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace tmlab::inference
