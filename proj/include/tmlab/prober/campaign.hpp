#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "tmlab/prober/engine.hpp"

namespace tmlab::prober {

struct DomainSelection {
  std::string domain;
  std::vector<Protocol> protocols;
};

struct CampaignControls {
  std::string known_blocked = "twitter.com";
  std::string innocuous = "example.com";
  std::string optout = "optout.example.org";
};

struct CampaignPlan {
  std::vector<DomainSelection> domains;
  std::vector<net::Ipv4Address> targets;  // confirmed filtered, unresponsive addresses
  CampaignControls controls;
  double pacing = 200.0;        // probe starts per virtual second
  std::size_t batch_size = 100;  // probes per control probe
  int retries = 3;               // extra attempts for Inconclusive probes
  ProbeOptions options;
  // Naive plans use a single source and no controls, so a ban silently
  // turns into false negatives.
  bool naive = false;
};

// Throws std::invalid_argument for sleep outside [5 s, 29 s], an empty
// target pool or a zero batch size.
void validate(const CampaignPlan& plan);

struct CampaignSummary {
  std::map<Protocol, std::size_t> censored;
  std::map<Protocol, std::size_t> not_censored;
  std::map<Protocol, std::size_t> inconclusive;
  std::size_t probes_sent = 0;
  std::size_t controls_sent = 0;
  std::size_t requeued = 0;
  std::vector<net::Ipv4Address> banned_sources;
  bool halted = false;  // every source banned before the work ran out
};

struct CampaignResult {
  std::vector<ProbeRecord> records;  // every probe, controls included, in completion order
  std::vector<ProbeRecord> final;    // one per (domain, protocol) that reached a verdict
  CampaignSummary summary;
};

// Runs the plan in batches. Each batch goes out from one source and ends
// with a known-blocked control; if the control is not censored the source
// is retired, the batch's uncensored probes are marked SourceBanSuspected
// and re-issued from another source.
CampaignResult run_campaign(Prober& prober, const CampaignPlan& plan,
                            const std::function<void(const ProbeRecord&)>& sink = {});

}  // namespace tmlab::prober
