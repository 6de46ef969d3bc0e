#include "tmlab/cli/loaders.hpp"

#include <fstream>
#include <optional>
#include <sstream>

#include "tmlab/blocklist/corpus.hpp"

namespace tmlab::cli {
namespace {

std::string_view trim(std::string_view s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

// Feeds every content line to `parse`; nullopt counts as malformed.
template <class T, class Parse>
Loaded<T> load_lines(std::istream& in, const std::string& name, Parse parse) {
  Loaded<T> out;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    ++out.lines;
    if (std::optional<T> item = parse(t)) {
      out.items.push_back(std::move(*item));
    } else {
      ++out.skipped;
    }
  }
  if (in.bad()) throw LoadError(name + ": read error");
  if (out.lines > 0 && static_cast<double>(out.skipped) > kMaxMalformedShare * static_cast<double>(out.lines)) {
    throw LoadError(name + ": " + std::to_string(out.skipped) + " of " + std::to_string(out.lines) +
                    " lines are malformed");
  }
  return out;
}

template <class Fn>
auto from_file(const std::filesystem::path& path, Fn fn) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot read " + path.string());
  return fn(in, path.string());
}

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

std::optional<std::uint64_t> number(std::string_view s) {
  if (!all_digits(s) || s.size() > 10) return std::nullopt;
  return std::stoull(std::string(s));
}

std::optional<Pfx2AsEntry> pfx2as_line(std::string_view line) {
  std::vector<std::string_view> f;
  std::size_t start = 0;
  for (;;) {
    auto tab = line.find('\t', start);
    f.push_back(trim(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start)));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  if (f.size() != 3) return std::nullopt;
  auto network = net::Ipv4Address::parse(f[0]);
  auto length = number(f[1]);
  if (!network || !length || *length > 32) return std::nullopt;
  // ASN list: digits separated by '_' (multi-origin) or ',' (AS set).
  std::string_view asn = f[2];
  std::size_t from = 0;
  for (std::size_t i = 0; i <= asn.size(); ++i) {
    if (i == asn.size() || asn[i] == '_' || asn[i] == ',') {
      auto part = number(asn.substr(from, i - from));
      if (!part || *part > 0xFFFFFFFFull) return std::nullopt;
      from = i + 1;
    }
  }
  net::Ipv4Prefix prefix(*network, static_cast<int>(*length));
  if (prefix.network() != *network) return std::nullopt;
  return Pfx2AsEntry{prefix, std::string(asn)};
}

}  // namespace

Loaded<std::string> load_domains(std::istream& in, const std::string& name) {
  return load_lines<std::string>(in, name, [](std::string_view t) { return blocklist::normalize_fqdn(t); });
}

Loaded<std::string> load_domains(const std::filesystem::path& path) {
  return from_file(path, [](std::istream& in, const std::string& n) { return load_domains(in, n); });
}

Loaded<Pfx2AsEntry> load_pfx2as(std::istream& in, const std::string& name) {
  return load_lines<Pfx2AsEntry>(in, name, pfx2as_line);
}

Loaded<Pfx2AsEntry> load_pfx2as(const std::filesystem::path& path) {
  return from_file(path, [](std::istream& in, const std::string& n) { return load_pfx2as(in, n); });
}

Loaded<blocklist::BlockRule> load_rules(std::istream& in, const std::string& name) {
  return load_lines<blocklist::BlockRule>(in, name, [](std::string_view t) -> std::optional<blocklist::BlockRule> {
    try {
      return blocklist::parse_rule(t);
    } catch (const blocklist::UnsupportedRule&) {
      return std::nullopt;
    }
  });
}

Loaded<blocklist::BlockRule> load_rules(const std::filesystem::path& path) {
  return from_file(path, [](std::istream& in, const std::string& n) { return load_rules(in, n); });
}

Loaded<net::Ipv4Address> load_addresses(std::istream& in, const std::string& name) {
  return load_lines<net::Ipv4Address>(in, name, [](std::string_view t) { return net::Ipv4Address::parse(t); });
}

Loaded<net::Ipv4Address> load_addresses(const std::filesystem::path& path) {
  return from_file(path, [](std::istream& in, const std::string& n) { return load_addresses(in, n); });
}

}  // namespace tmlab::cli
