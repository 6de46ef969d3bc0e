#include "tmlab/sim/scenario.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "tmlab/sim/endpoints.hpp"

namespace tmlab::sim {
namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  throw std::invalid_argument("scenario: " + key + ": " + why);
}

SimDuration seconds_at(const json& obj, const char* key, SimDuration fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) bad(key, "expected seconds");
  return secs_f(obj[key].get<double>());
}

template <class T>
T value_at(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj[key].get<T>();
  } catch (const json::exception& e) {
    bad(key, e.what());
  }
}

net::Ipv4Address address(const json& v, const std::string& key) {
  if (!v.is_string()) bad(key, "expected dotted quad");
  auto a = net::Ipv4Address::parse(v.get<std::string>());
  if (!a) bad(key, "bad address '" + v.get<std::string>() + "'");
  return *a;
}

net::Ipv4Prefix prefix(const json& v, const std::string& key) {
  if (!v.is_string()) bad(key, "expected prefix");
  auto p = net::Ipv4Prefix::parse(v.get<std::string>());
  if (!p) bad(key, "bad prefix '" + v.get<std::string>() + "'");
  return *p;
}

blocklist::RuleSet rules(const json& v, const std::filesystem::path& base, const std::string& key) {
  blocklist::RuleSet set;
  if (v.is_string()) {
    for (auto& r : blocklist::read_rules_file(base / v.get<std::string>()).rules) set.add(std::move(r));
  } else if (v.is_array()) {
    for (const auto& item : v) {
      try {
        set.add(blocklist::parse_rule(item.get<std::string>()));
      } catch (const std::exception& e) {
        bad(key, e.what());
      }
    }
  } else {
    bad(key, "expected a rule list or a file path");
  }
  return set;
}

CensorConfig censor_config(const json& c, const std::filesystem::path& base, std::uint64_t seed) {
  CensorConfig cfg;
  cfg.rng_seed = value_at<std::uint64_t>(c, "rng_seed", seed);
  cfg.residual_window = seconds_at(c, "residual_window", cfg.residual_window);
  cfg.trigger_min = seconds_at(c, "trigger_min", cfg.trigger_min);
  cfg.trigger_max = seconds_at(c, "trigger_max", cfg.trigger_max);
  cfg.freepass_window = seconds_at(c, "freepass_window", cfg.freepass_window);
  cfg.injection_ip_id = value_at<std::uint16_t>(c, "injection_ip_id", cfg.injection_ip_id);
  cfg.injection_ttl = value_at<std::uint8_t>(c, "injection_ttl", cfg.injection_ttl);
  cfg.dns_count_threshold = value_at<std::size_t>(c, "dns_count_threshold", cfg.dns_count_threshold);
  cfg.inspect_byte_limit = value_at<std::size_t>(c, "inspect_byte_limit", cfg.inspect_byte_limit);
  cfg.legacy_dns_count_bug = value_at<bool>(c, "legacy_dns_count_bug", cfg.legacy_dns_count_bug);
  if (c.contains("ban_policy")) {
    const json& b = c["ban_policy"];
    cfg.ban_policy.enabled = value_at<bool>(b, "enabled", true);
    cfg.ban_policy.max_injections_per_source =
        value_at<std::size_t>(b, "max_injections_per_source", cfg.ban_policy.max_injections_per_source);
    cfg.ban_policy.window = seconds_at(b, "window", cfg.ban_policy.window);
    if (b.contains("ban_duration") && !b["ban_duration"].is_null()) {
      cfg.ban_policy.ban_duration = seconds_at(b, "ban_duration", SimDuration{});
    }
  }
  if (c.contains("blocklists")) {
    const json& bl = c["blocklists"];
    for (auto p : {blocklist::Protocol::Dns, blocklist::Protocol::Http, blocklist::Protocol::Https}) {
      std::string name(blocklist::protocol_name(p));
      if (bl.contains(name)) cfg.blocklists.for_protocol(p) = rules(bl[name], base, "blocklists." + name);
    }
  }
  if (c.contains("filtered")) {
    cfg.filtered_ips = FilterSet{};
    for (const auto& entry : c["filtered"]) {
      if (entry.contains("ip")) {
        cfg.filtered_ips.add(address(entry["ip"], "filtered.ip"));
        continue;
      }
      net::Ipv4Prefix p = prefix(entry.value("prefix", json()), "filtered.prefix");
      double fraction = value_at<double>(entry, "fraction", 1.0);
      if (fraction < 0.0 || fraction > 1.0) bad("filtered.fraction", "outside [0, 1]");
      if (fraction == 1.0) {
        cfg.filtered_ips.add(p);
      } else {
        for (auto ip : sample_addresses(p, fraction, cfg.rng_seed)) cfg.filtered_ips.add(ip);
      }
    }
  }
  validate(cfg);
  return cfg;
}

std::unique_ptr<Endpoint> make_endpoint(const HostSpec& h) {
  if (h.kind == "http_server") return std::make_unique<HttpServer>();
  if (h.kind == "echo_tcp") return std::make_unique<EchoTcp>();
  if (h.kind == "dns_resolver") return std::make_unique<DnsResolver>(h.zone);
  if (h.kind == "unresponsive") return std::make_unique<Unresponsive>();
  bad("hosts.kind", "unknown endpoint kind '" + h.kind + "'");
}

}  // namespace

std::vector<net::Ipv4Address> sample_addresses(const net::Ipv4Prefix& p, double fraction, std::uint64_t seed) {
  const std::uint64_t n = p.size();
  const auto want = static_cast<std::uint64_t>(std::llround(fraction * static_cast<double>(n)));
  std::vector<std::uint32_t> idx(n);
  for (std::uint64_t i = 0; i < n; ++i) idx[i] = static_cast<std::uint32_t>(i);
  std::mt19937_64 rng(seed ^ (std::uint64_t{p.network().value()} << 8) ^ static_cast<std::uint64_t>(p.length()));
  // Partial Fisher-Yates with plain modulo so the selection does not depend
  // on the standard library's distribution implementation.
  for (std::uint64_t i = 0; i < want; ++i) {
    std::uint64_t j = i + rng() % (n - i);
    std::swap(idx[i], idx[j]);
  }
  std::vector<net::Ipv4Address> out;
  out.reserve(want);
  for (std::uint64_t i = 0; i < want; ++i) out.push_back(p.at(idx[i]));
  std::sort(out.begin(), out.end());
  return out;
}

Scenario parse_scenario(const std::string& text, const std::filesystem::path& base) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("scenario: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) bad("<root>", "expected an object");
  Scenario s;
  s.seed = value_at<std::uint64_t>(doc, "seed", 0);
  s.censor = censor_config(doc.value("censor", json::object()), base, s.seed);
  for (const auto& p : doc.value("paths", json::array())) {
    PathConfig path;
    path.prefix = prefix(p.value("prefix", json()), "paths.prefix");
    for (const auto& hop : p.value("hops", json::array())) path.hops.push_back(address(hop, "paths.hops"));
    path.censor_after_hop = value_at<int>(p, "censor_after_hop", 0);
    path.gateway = value_at<std::string>(p, "gateway", "gw0");
    if (path.censor_after_hop < 0 || path.censor_after_hop > static_cast<int>(path.hops.size())) {
      bad("paths.censor_after_hop", "outside the hop list");
    }
    s.paths.push_back(std::move(path));
  }
  for (const auto& h : doc.value("hosts", json::array())) {
    HostSpec spec;
    if (h.contains("ip")) {
      spec.addresses = net::Ipv4Prefix(address(h["ip"], "hosts.ip"), 32);
    } else {
      spec.addresses = prefix(h.value("prefix", json()), "hosts.prefix");
    }
    spec.kind = value_at<std::string>(h, "kind", "unresponsive");
    const json zone = h.value("zone", json::object());
    for (auto it = zone.begin(); it != zone.end(); ++it) spec.zone[it.key()] = address(it.value(), "hosts.zone");
    make_endpoint(spec);  // rejects unknown kinds now rather than at build time
    s.hosts.push_back(std::move(spec));
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.parent_path());
}

std::unique_ptr<World> build_world(const Scenario& s, bool trace) {
  auto world = std::make_unique<World>(s.censor, WorldOptions{.seed = s.seed, .trace = trace});
  for (const auto& p : s.paths) world->add_path(p);
  for (const auto& h : s.hosts) {
    for (std::uint64_t i = 0; i < h.addresses.size(); ++i) world->add_host(h.addresses.at(i), make_endpoint(h));
  }
  return world;
}

void write_trace_jsonl(const std::vector<TraceEvent>& trace, std::ostream& out) {
  for (const auto& e : trace) {
    nlohmann::ordered_json line = {{"t", e.t.count()},
                 {"hop", e.hop},
                 {"direction", e.direction},
                 {"packet", e.packet},
                 {"action", e.action}};
    out << line.dump() << '\n';
  }
}

}  // namespace tmlab::sim
