#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tmlab/blocklist/rule.hpp"
#include "tmlab/net/address.hpp"

namespace tmlab::cli {

// Unreadable input or too many malformed lines.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A line-oriented file may have at most this share of malformed lines.
inline constexpr double kMaxMalformedShare = 0.10;

template <class T>
struct Loaded {
  std::vector<T> items;   // file order
  std::size_t lines = 0;  // non-blank, non-comment lines
  std::size_t skipped = 0;
};

struct Pfx2AsEntry {
  net::Ipv4Prefix prefix;
  // Origin AS as written; multi-origin entries keep CAIDA's "_" and ","
  // separators.
  std::string asn;
};

// '#' starts a comment; blank lines are ignored. Each loader throws
// LoadError naming the file when it cannot be read or when more than
// kMaxMalformedShare of its lines are malformed.
Loaded<std::string> load_domains(std::istream& in, const std::string& name = "<stream>");
Loaded<std::string> load_domains(const std::filesystem::path& path);

// Tab-separated network, length, ASN. The network must carry no host bits.
Loaded<Pfx2AsEntry> load_pfx2as(std::istream& in, const std::string& name = "<stream>");
Loaded<Pfx2AsEntry> load_pfx2as(const std::filesystem::path& path);

Loaded<blocklist::BlockRule> load_rules(std::istream& in, const std::string& name = "<stream>");
Loaded<blocklist::BlockRule> load_rules(const std::filesystem::path& path);

// One dotted quad per line; the target-pool format written by `scan`.
Loaded<net::Ipv4Address> load_addresses(std::istream& in, const std::string& name = "<stream>");
Loaded<net::Ipv4Address> load_addresses(const std::filesystem::path& path);

}  // namespace tmlab::cli
