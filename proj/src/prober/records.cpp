#include "tmlab/prober/records.hpp"

#include <json.hpp>

namespace tmlab::prober {

std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Censored:
      return "censored";
    case Verdict::NotCensored:
      return "not_censored";
    case Verdict::Inconclusive:
      return "inconclusive";
    case Verdict::SourceBanSuspected:
      return "source_ban_suspected";
  }
  return "?";
}

std::string record_json(const ProbeRecord& r) {
  nlohmann::ordered_json j;
  j["probe_id"] = r.probe_id;
  j["protocol"] = std::string(blocklist::protocol_name(r.protocol));
  j["domain"] = r.domain;
  j["target_ip"] = r.target_ip.to_string();
  j["target_port"] = r.target_port;
  j["src_ip"] = r.src_ip.to_string();
  j["src_port"] = r.src_port;
  j["t_sent_us"] = r.t_sent.count();
  j["t_second_us"] = r.t_second ? nlohmann::ordered_json(r.t_second->count()) : nlohmann::ordered_json();
  j["t_verdict_us"] = r.t_verdict.count();
  j["verdict"] = std::string(verdict_name(r.verdict));
  if (r.evidence) {
    j["evidence"] = {{"ip_id", r.evidence->ip_id}, {"observed_ttl", r.evidence->observed_ttl}, {"kind", r.evidence->kind}};
  } else {
    j["evidence"] = nullptr;
  }
  j["responsive"] = r.responsive;
  if (r.is_control) j["control"] = true;
  if (!r.time_exceeded_from.empty()) {
    auto& hops = j["time_exceeded_from"] = nlohmann::ordered_json::array();
    for (auto ip : r.time_exceeded_from) hops.push_back(ip.to_string());
  }
  return j.dump() + "\n";
}

void write_records_jsonl(const std::vector<ProbeRecord>& records, std::ostream& out) {
  for (const auto& r : records) out << record_json(r);
}

}  // namespace tmlab::prober
