#pragma once

#include <map>
#include <string>
#include <vector>

#include "tmlab/net/address.hpp"
#include "tmlab/prober/engine.hpp"

namespace tmlab::prober {

enum class IpStatus { Filtered, NotFiltered, ResponsiveExcluded, Inconclusive };
std::string_view ip_status_name(IpStatus s);

struct ScanPlan {
  std::string known_blocked = "twitter.com";
  std::string innocuous = "example.com";
  std::string optout = "optout.example.org";
  std::vector<Protocol> protocols = {Protocol::Http};
  double pacing = 1000.0;  // probe starts per virtual second
  int retries = 3;          // extra attempts for Inconclusive known-blocked probes
  ProbeOptions options;
};

struct IpClassification {
  net::Ipv4Address ip;
  std::map<Protocol, IpStatus> status;
  int trials = 0;  // probes sent to this address

  bool filtered_any() const;
  bool excluded() const;
};

struct PrefixFraction {
  net::Ipv4Prefix prefix;
  std::size_t probed = 0;    // addresses not excluded as responsive
  std::size_t filtered = 0;  // Filtered for at least one protocol
  std::size_t excluded = 0;

  double fraction() const { return probed ? static_cast<double>(filtered) / static_cast<double>(probed) : 0.0; }
};

struct ScanResult {
  std::vector<IpClassification> ips;  // address order
  std::vector<PrefixFraction> prefixes;
  std::vector<ProbeRecord> records;
};

// Probes every address of every prefix with the known-blocked, innocuous
// and opt-out domains for each protocol. An address answering the
// innocuous or opt-out probe itself is Responsive-Excluded.
ScanResult scan_prefixes(Prober& prober, const std::vector<net::Ipv4Prefix>& prefixes, const ScanPlan& plan);

}  // namespace tmlab::prober
