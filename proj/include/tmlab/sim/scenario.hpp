#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "tmlab/sim/world.hpp"

namespace tmlab::sim {

struct HostSpec {
  net::Ipv4Prefix addresses;  // a single host is a /32
  std::string kind;           // http_server, dns_resolver, echo_tcp, unresponsive
  std::map<std::string, net::Ipv4Address> zone;
};

struct Scenario {
  std::uint64_t seed = 0;
  CensorConfig censor;
  std::vector<PathConfig> paths;
  std::vector<HostSpec> hosts;
};

// Exactly round(fraction * size) addresses of `prefix`, chosen by a
// seeded shuffle; the same (prefix, fraction, seed) always gives the same set.
std::vector<net::Ipv4Address> sample_addresses(const net::Ipv4Prefix& prefix, double fraction, std::uint64_t seed);

// JSON scenario document. Durations are in seconds; blocklist entries are
// either inline rule lists or rule-file paths resolved against `base_dir`.
// Throws std::invalid_argument with the offending key on schema errors.
Scenario parse_scenario(const std::string& json_text, const std::filesystem::path& base_dir = ".");
Scenario load_scenario(const std::filesystem::path& path);

std::unique_ptr<World> build_world(const Scenario& scenario, bool trace = true);

// One JSON object per line: {t, hop, direction, packet, action}; t in
// integer microseconds.
void write_trace_jsonl(const std::vector<TraceEvent>& trace, std::ostream& out);

}  // namespace tmlab::sim
