#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tmlab/prober/engine.hpp"

namespace tmlab::prober {

struct LocalizeResult {
  bool filtered = false;
  std::optional<int> censor_hop;  // smallest initial TTL that drew a signed injection
  std::vector<std::optional<net::Ipv4Address>> path;  // path[k]: Time Exceeded source for TTL k+1
  std::optional<Evidence> evidence;
  // The injection's observed TTL equals 128 minus the hops back from the
  // censor (censor_hop - 1).
  bool consistent = false;
  std::vector<ProbeRecord> records;
};

// Two-packet probes with TTL 1..max_ttl, all in flight together.
LocalizeResult localize(Prober& prober, net::Ipv4Address target, const std::string& known_blocked, int max_ttl = 30,
                        Protocol protocol = Protocol::Http, ProbeOptions options = {});

}  // namespace tmlab::prober
