#include "tmlab/blocklist/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <fstream>
#include <set>
#include <stdexcept>

#include "tmlab/net/http.hpp"

namespace tmlab::blocklist {

MultiMatcher::MultiMatcher(const std::vector<BlockRule>& rules) : rules_(rules) {
  for (const auto& r : rules_) {
    for (char c : r.core) {
      auto& slot = alphabet_[static_cast<unsigned char>(c)];
      if (slot == 0) slot = static_cast<std::uint16_t>(symbols_++);
    }
  }
  // Cores are lowercase; map uppercase input onto the same symbols.
  for (int c = 'A'; c <= 'Z'; ++c) alphabet_[c] = alphabet_[c - 'A' + 'a'];

  auto add_state = [&] {
    next_.resize(next_.size() + symbols_, -1);
    fail_.push_back(0);
    output_link_.push_back(-1);
    outputs_.emplace_back();
    return static_cast<std::int32_t>(fail_.size() - 1);
  };
  add_state();
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    std::int32_t s = 0;
    for (char c : rules_[i].core) {
      auto& edge = next_[static_cast<std::size_t>(s) * symbols_ + symbol(static_cast<unsigned char>(c))];
      if (edge < 0) {
        std::int32_t fresh = add_state();
        // add_state may have reallocated next_
        next_[static_cast<std::size_t>(s) * symbols_ + symbol(static_cast<unsigned char>(c))] = fresh;
        s = fresh;
      } else {
        s = edge;
      }
    }
    outputs_[static_cast<std::size_t>(s)].push_back(static_cast<std::uint32_t>(i));
  }

  std::deque<std::int32_t> queue;
  for (std::size_t a = 0; a < symbols_; ++a) {
    auto& edge = next_[a];
    if (edge < 0) {
      edge = 0;
    } else {
      fail_[static_cast<std::size_t>(edge)] = 0;
      queue.push_back(edge);
    }
  }
  while (!queue.empty()) {
    std::int32_t s = queue.front();
    queue.pop_front();
    auto su = static_cast<std::size_t>(s);
    std::int32_t f = fail_[su];
    output_link_[su] = outputs_[static_cast<std::size_t>(f)].empty() ? output_link_[static_cast<std::size_t>(f)] : f;
    for (std::size_t a = 0; a < symbols_; ++a) {
      auto& edge = next_[su * symbols_ + a];
      std::int32_t via_fail = next_[static_cast<std::size_t>(f) * symbols_ + a];
      if (edge < 0) {
        edge = via_fail;
      } else {
        fail_[static_cast<std::size_t>(edge)] = via_fail;
        queue.push_back(edge);
      }
    }
  }
  seen_stamp_.assign(rules_.size(), 0);
}

void MultiMatcher::match(std::string_view name, const std::function<void(std::size_t)>& on_match) const {
  for (auto i : match(name)) on_match(i);
}

std::vector<std::size_t> MultiMatcher::match(std::string_view name) const {
  std::vector<std::size_t> hits;
  if (++stamp_ == 0) {
    std::fill(seen_stamp_.begin(), seen_stamp_.end(), 0);
    stamp_ = 1;
  }
  std::int32_t s = 0;
  for (std::size_t pos = 0; pos < name.size(); ++pos) {
    s = next_[static_cast<std::size_t>(s) * symbols_ + symbol(static_cast<unsigned char>(name[pos]))];
    for (std::int32_t o = s; o > 0; o = output_link_[static_cast<std::size_t>(o)]) {
      for (auto idx : outputs_[static_cast<std::size_t>(o)]) {
        if (seen_stamp_[idx] == stamp_) continue;
        const auto& rule = rules_[idx];
        std::size_t start = pos + 1 - rule.core.size();
        if (rule.prefix_anchored && start != 0) continue;
        if (rule.suffix_anchored && pos + 1 != name.size()) continue;
        seen_stamp_[idx] = stamp_;
        hits.push_back(idx);
      }
    }
  }
  std::sort(hits.begin(), hits.end());
  return hits;
}

std::optional<std::string> normalize_fqdn(std::string_view line) {
  while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front()))) line.remove_prefix(1);
  while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.remove_suffix(1);
  if (line.ends_with('.')) line.remove_suffix(1);
  std::string name = net::to_lower(line);
  if (!net::is_host_name(name)) return std::nullopt;
  return name;
}

CorpusMatch match_corpus(const std::vector<BlockRule>& rules, std::istream& fqdns) {
  MultiMatcher matcher(rules);
  std::vector<std::set<std::string>> sets(rules.size());
  CorpusMatch out;
  std::string line;
  while (std::getline(fqdns, line)) {
    std::string_view body = line;
    auto first = body.find_first_not_of(" \t\r");
    if (first == std::string_view::npos || body[first] == '#') continue;
    ++out.lines;
    auto name = normalize_fqdn(body);
    if (!name) {
      ++out.malformed;
      continue;
    }
    for (auto idx : matcher.match(*name)) sets[idx].insert(*name);
  }
  out.per_rule.reserve(rules.size());
  for (std::size_t i = 0; i < rules.size(); ++i) {
    out.per_rule.push_back({rules[i], std::vector<std::string>(sets[i].begin(), sets[i].end())});
  }
  return out;
}

CorpusMatch match_corpus_file(const std::vector<BlockRule>& rules, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus " + path.string());
  return match_corpus(rules, in);
}

std::string registered_domain(std::string_view fqdn) {
  std::string name = net::to_lower(fqdn);
  if (name.ends_with('.')) name.pop_back();
  auto last = name.rfind('.');
  if (last == std::string::npos || last == 0) return name;
  auto second = name.rfind('.', last - 1);
  return second == std::string::npos ? name : name.substr(second + 1);
}

OverblockingResult classify_overblocking(const BlockRule& rule, std::string_view seed_domain,
                                         const std::vector<std::string>& corpus_sample,
                                         std::size_t max_witnesses) {
  OverblockingResult out;
  std::string seed = registered_domain(seed_domain);
  std::set<std::string> witnesses;
  for (const auto& name : corpus_sample) {
    if (!matches(rule, name) || registered_domain(name) == seed) continue;
    out.overblocking = true;
    witnesses.insert(net::to_lower(name));
  }
  for (const auto& w : witnesses) {
    if (out.witnesses.size() >= max_witnesses) break;
    out.witnesses.push_back(w);
  }
  return out;
}

}  // namespace tmlab::blocklist
