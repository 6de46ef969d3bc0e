#include "tmlab/cli/commands.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tmlab/cli/loaders.hpp"
#include "tmlab/evasion/builtins.hpp"
#include "tmlab/evasion/evaluate.hpp"
#include "tmlab/inference/impact.hpp"
#include "tmlab/inference/inference.hpp"
#include "tmlab/prober/campaign.hpp"
#include "tmlab/prober/localize.hpp"
#include "tmlab/prober/scan.hpp"
#include "tmlab/sim/endpoints.hpp"
#include "tmlab/sim/scenario.hpp"

namespace tmlab::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;
using blocklist::Protocol;

// Operational failure with a message for the user.
class Failure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A usage problem CLI11 cannot express (cross-flag requirements).
class UsageFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::uint64_t seed = 0;
  std::string out_dir;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Seed for every random choice (default 0)");
  sub->add_option("--out", c.out_dir, "Directory for outputs and manifest.json");
}

std::string read_text(const fs::path& path, const std::string& what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure("cannot read " + what + " " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json read_json(const fs::path& path, const std::string& what) {
  try {
    json doc = json::parse(read_text(path, what));
    if (!doc.is_object()) throw Failure(what + " " + path.string() + ": expected a JSON object");
    return doc;
  } catch (const json::parse_error& e) {
    throw Failure(what + " " + path.string() + ": invalid JSON: " + e.what());
  }
}

std::string utc_now() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Collects a subcommand's outputs. Without --out only the primary output is
// produced, on stdout; with --out each output is a file and the run ends
// with manifest.json, the only place the wall clock appears.
class Run {
 public:
  Run(std::string subcommand, const Common& common, std::vector<std::string> argv, std::ostream& out)
      : subcommand_(std::move(subcommand)), common_(common), argv_(std::move(argv)), out_(out) {
    if (!common_.out_dir.empty()) {
      std::error_code ec;
      fs::create_directories(common_.out_dir, ec);
      if (ec) throw Failure("cannot create output directory " + common_.out_dir + ": " + ec.message());
    }
  }

  bool to_files() const { return !common_.out_dir.empty(); }
  void config(const std::string& name, const std::string& path) { config_[name] = path; }
  void span(sim::SimTime start, sim::SimTime end) {
    start_ = start;
    end_ = end;
  }

  void emit(const std::string& file, const std::string& content, bool primary) {
    if (!to_files()) {
      if (primary) out_ << content;
      return;
    }
    fs::path path = fs::path(common_.out_dir) / file;
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << content;
    if (!f) throw Failure("cannot write " + path.string());
    outputs_.push_back(file);
  }

  void finish() {
    if (!to_files()) return;
    ordered_json m;
    m["subcommand"] = subcommand_;
    m["version"] = std::string(kVersion);
    m["argv"] = argv_;
    m["seed"] = common_.seed;
    ordered_json cfg = ordered_json::object();
    for (const auto& [k, v] : config_) cfg[k] = v;
    m["config"] = cfg;
    m["virtual_start_us"] = start_.count();
    m["virtual_end_us"] = end_.count();
    m["outputs"] = outputs_;
    m["wall_clock_utc"] = utc_now();
    emit_manifest(m.dump(2) + "\n");
  }

 private:
  void emit_manifest(const std::string& text) {
    fs::path path = fs::path(common_.out_dir) / "manifest.json";
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << text;
    if (!f) throw Failure("cannot write " + path.string());
  }

  std::string subcommand_;
  Common common_;
  std::vector<std::string> argv_;
  std::ostream& out_;
  std::map<std::string, std::string> config_;
  std::vector<std::string> outputs_;
  sim::SimTime start_{}, end_{};
};

Protocol protocol_arg(const std::string& text) {
  auto p = blocklist::parse_protocol(text);
  if (!p) throw UsageFailure("unknown protocol '" + text + "' (dns, http or https)");
  return *p;
}

std::vector<Protocol> protocol_list(const std::vector<std::string>& names) {
  std::vector<Protocol> out;
  for (const auto& n : names) out.push_back(protocol_arg(n));
  return out;
}

net::Ipv4Address address_arg(const std::string& text, const std::string& what) {
  auto a = net::Ipv4Address::parse(text);
  if (!a) throw UsageFailure(what + ": bad address '" + text + "'");
  return *a;
}

// The scenario's own seed key is replaced by --seed so that all randomness
// in a run follows from one number.
sim::Scenario scenario_arg(const std::string& path, std::uint64_t seed) {
  json doc = read_json(path, "scenario");
  doc["seed"] = seed;
  try {
    return sim::parse_scenario(doc.dump(), fs::path(path).parent_path());
  } catch (const std::exception& e) {
    throw Failure(path + ": " + e.what());
  }
}

struct SourceArgs {
  std::vector<std::string> addresses;
  int count = 4;

  void add(CLI::App* sub) {
    sub->add_option("--sources", addresses, "Probe source addresses (comma separated)")->delimiter(',');
    sub->add_option("--source-count", count, "Sources taken from 203.0.113.10 upward when --sources is absent")
        ->check(CLI::Range(1, 200));
  }

  std::vector<net::Ipv4Address> resolve(const json* plan = nullptr) const {
    std::vector<net::Ipv4Address> out;
    if (!addresses.empty()) {
      for (const auto& a : addresses) out.push_back(address_arg(a, "--sources"));
    } else if (plan && plan->contains("sources")) {
      for (const auto& a : (*plan)["sources"]) out.push_back(address_arg(a.get<std::string>(), "plan sources"));
    } else {
      for (int i = 0; i < count; ++i) out.push_back(net::Ipv4Address(203, 0, 113, static_cast<std::uint8_t>(10 + i)));
    }
    return out;
  }
};

// World, allocator and prober for one run.
struct Bench {
  std::unique_ptr<sim::World> world;
  std::unique_ptr<prober::FlowAllocator> allocator;
  std::unique_ptr<prober::Prober> prober;
};

Bench make_bench(const sim::Scenario& scenario, std::vector<net::Ipv4Address> sources, std::uint64_t seed,
                 bool trace, sim::SimDuration quarantine = sim::secs(35)) {
  Bench b;
  b.world = sim::build_world(scenario, trace);
  try {
    b.allocator = std::make_unique<prober::FlowAllocator>(
        prober::AllocatorConfig{.sources = std::move(sources), .quarantine = quarantine, .seed = seed});
  } catch (const std::invalid_argument& e) {
    throw Failure(std::string("flow allocator: ") + e.what());
  }
  b.prober = std::make_unique<prober::Prober>(*b.world, *b.allocator);
  return b;
}

std::string records_jsonl(const std::vector<prober::ProbeRecord>& records) {
  std::ostringstream s;
  prober::write_records_jsonl(records, s);
  return s.str();
}

std::string trace_jsonl(const std::vector<sim::TraceEvent>& trace, std::size_t begin, std::size_t end) {
  std::vector<sim::TraceEvent> slice(trace.begin() + static_cast<std::ptrdiff_t>(begin),
                                     trace.begin() + static_cast<std::ptrdiff_t>(end));
  std::ostringstream s;
  sim::write_trace_jsonl(slice, s);
  return s.str();
}

// Plan keys shared by scan and probe; flags given on the command line win.
struct PacingArgs {
  std::optional<double> sleep_s;
  std::optional<double> pacing;
  std::optional<int> retries;

  void add(CLI::App* sub) {
    sub->add_option("--sleep", sleep_s, "Seconds between the two TCP probe packets, in [5, 29]");
    sub->add_option("--pacing", pacing, "Probe starts per virtual second");
    sub->add_option("--retries", retries, "Extra attempts for inconclusive probes");
  }

  template <class Plan>
  void apply(const json& doc, Plan& plan) const {
    auto pick = [&](const std::optional<double>& flag, const char* key, double fallback) {
      if (flag) return *flag;
      if (doc.contains(key)) return doc[key].get<double>();
      return fallback;
    };
    plan.options.sleep = sim::secs_f(pick(sleep_s, "sleep_s", sim::to_seconds(plan.options.sleep)));
    plan.pacing = pick(pacing, "pacing", plan.pacing);
    plan.retries = retries ? *retries : doc.value("retries", plan.retries);
    if (plan.options.sleep < sim::secs(5) || plan.options.sleep > sim::secs(29)) {
      throw Failure("sleep must lie in [5, 29] s, got " + std::to_string(sim::to_seconds(plan.options.sleep)));
    }
    if (!(plan.pacing > 0.0)) throw Failure("pacing must be positive");
  }
};

template <class Controls>
void apply_controls(const json& doc, Controls& c) {
  if (!doc.contains("controls")) return;
  const json& k = doc["controls"];
  c.known_blocked = k.value("known_blocked_domain", c.known_blocked);
  c.innocuous = k.value("innocuous_domain", c.innocuous);
  c.optout = k.value("optout_domain", c.optout);
}

fs::path relative_to(const std::string& base_file, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : fs::path(base_file).parent_path() / path;
}

void warn_skipped(std::ostream& err, const std::string& what, std::size_t skipped, std::size_t lines) {
  if (skipped) err << "warning: " << what << ": skipped " << skipped << " of " << lines << " lines\n";
}

// ---- scan ----------------------------------------------------------------

struct ScanArgs {
  Common common;
  std::string pfx2as, scenario, plan;
  std::vector<std::string> asns;
  std::vector<std::string> protocols;
  PacingArgs pacing;
  SourceArgs sources;
};

int run_scan(const ScanArgs& a, const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  Run run("scan", a.common, argv, out);
  run.config("pfx2as", a.pfx2as);
  run.config("scenario", a.scenario);
  json doc = json::object();
  if (!a.plan.empty()) {
    doc = read_json(a.plan, "plan");
    run.config("plan", a.plan);
  }
  auto table = load_pfx2as(fs::path(a.pfx2as));
  warn_skipped(err, a.pfx2as, table.skipped, table.lines);

  std::vector<net::Ipv4Prefix> prefixes;
  std::map<net::Ipv4Prefix, std::string> asn_of;
  for (const auto& e : table.items) {
    if (!a.asns.empty() && std::find(a.asns.begin(), a.asns.end(), e.asn) == a.asns.end()) continue;
    if (asn_of.emplace(e.prefix, e.asn).second) prefixes.push_back(e.prefix);
  }
  if (prefixes.empty()) throw Failure(a.pfx2as + ": no prefixes selected");

  prober::ScanPlan plan;
  apply_controls(doc, plan);
  a.pacing.apply(doc, plan);
  if (!a.protocols.empty()) {
    plan.protocols = protocol_list(a.protocols);
  } else if (doc.contains("protocols")) {
    plan.protocols = protocol_list(doc["protocols"].get<std::vector<std::string>>());
  }

  Bench bench = make_bench(scenario_arg(a.scenario, a.common.seed), a.sources.resolve(&doc), a.common.seed, false);
  prober::ScanResult result = prober::scan_prefixes(*bench.prober, prefixes, plan);
  run.span(sim::SimTime{}, bench.world->now());

  std::string fractions, ips, targets;
  for (const auto& p : result.prefixes) {
    ordered_json line = {{"prefix", p.prefix.to_string()}, {"asn", asn_of[p.prefix]},   {"probed", p.probed},
                         {"filtered", p.filtered},          {"excluded", p.excluded}, {"fraction", p.fraction()}};
    fractions += line.dump() + "\n";
  }
  for (const auto& c : result.ips) {
    ordered_json status = ordered_json::object();
    for (const auto& [proto, s] : c.status) status[std::string(blocklist::protocol_name(proto))] = prober::ip_status_name(s);
    ordered_json line = {{"ip", c.ip.to_string()}, {"status", status}, {"trials", c.trials}};
    ips += line.dump() + "\n";
    if (c.filtered_any() && !c.excluded()) targets += c.ip.to_string() + "\n";
  }
  run.emit("prefixes.jsonl", fractions, true);
  run.emit("ips.jsonl", ips, false);
  run.emit("targets.txt", targets, false);
  run.emit("records.jsonl", records_jsonl(result.records), false);
  run.finish();
  return kExitOk;
}

// ---- probe ---------------------------------------------------------------

struct ProbeArgs {
  Common common;
  std::string plan, scenario, domains, targets;
  PacingArgs pacing;
  SourceArgs sources;
  std::optional<std::size_t> batch_size;
};

std::vector<net::Ipv4Address> target_pool(const ProbeArgs& a, const json& doc, Run& run) {
  std::string path = a.targets;
  if (path.empty() && doc.contains("targets")) {
    const json& t = doc["targets"];
    if (t.is_array()) {
      std::vector<net::Ipv4Address> out;
      for (const auto& ip : t) out.push_back(address_arg(ip.get<std::string>(), "plan targets"));
      if (out.empty()) throw Failure("plan " + a.plan + ": target pool 'targets' is empty");
      return out;
    }
    path = relative_to(a.plan, t.get<std::string>()).string();
  }
  if (path.empty()) {
    throw Failure("plan " + a.plan + " names no target pool ('targets'); run scan and pass its targets.txt");
  }
  if (!fs::exists(path)) {
    throw Failure("target pool " + path + " does not exist; run scan to produce it");
  }
  run.config("targets", path);
  auto pool = load_addresses(fs::path(path));
  if (pool.items.empty()) throw Failure("target pool " + path + " is empty");
  return pool.items;
}

ordered_json per_protocol(const std::map<Protocol, std::size_t>& m) {
  ordered_json o = ordered_json::object();
  for (auto p : {Protocol::Dns, Protocol::Http, Protocol::Https}) {
    auto it = m.find(p);
    o[std::string(blocklist::protocol_name(p))] = it == m.end() ? 0 : it->second;
  }
  return o;
}

int run_probe(const ProbeArgs& a, const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  Run run("probe", a.common, argv, out);
  run.config("plan", a.plan);
  run.config("scenario", a.scenario);
  json doc = read_json(a.plan, "plan");

  std::string domains_path = a.domains;
  if (domains_path.empty() && doc.contains("domains")) {
    domains_path = relative_to(a.plan, doc["domains"].get<std::string>()).string();
  }
  if (domains_path.empty()) throw Failure("plan " + a.plan + " names no domain list; pass --domains");
  run.config("domains", domains_path);

  prober::CampaignPlan plan;
  plan.targets = target_pool(a, doc, run);
  auto domains = load_domains(fs::path(domains_path));
  warn_skipped(err, domains_path, domains.skipped, domains.lines);
  std::vector<Protocol> protocols = {Protocol::Dns, Protocol::Http, Protocol::Https};
  if (doc.contains("protocols")) protocols = protocol_list(doc["protocols"].get<std::vector<std::string>>());
  for (const auto& d : domains.items) plan.domains.push_back({d, protocols});
  apply_controls(doc, plan.controls);
  a.pacing.apply(doc, plan);
  plan.batch_size = a.batch_size ? *a.batch_size : doc.value("batch_size", plan.batch_size);
  plan.naive = doc.value("naive", false);
  sim::SimDuration quarantine = sim::secs_f(doc.value("quarantine_s", 35.0));
  if (quarantine < sim::secs(35)) throw Failure("quarantine_s must be at least 35");
  try {
    prober::validate(plan);
  } catch (const std::invalid_argument& e) {
    throw Failure(std::string("plan: ") + e.what());
  }

  Bench bench =
      make_bench(scenario_arg(a.scenario, a.common.seed), a.sources.resolve(&doc), a.common.seed, false, quarantine);
  prober::CampaignResult result = prober::run_campaign(*bench.prober, plan);
  run.span(sim::SimTime{}, bench.world->now());

  const auto& s = result.summary;
  ordered_json summary;
  summary["censored"] = per_protocol(s.censored);
  summary["not_censored"] = per_protocol(s.not_censored);
  summary["inconclusive"] = per_protocol(s.inconclusive);
  summary["probes_sent"] = s.probes_sent;
  summary["controls_sent"] = s.controls_sent;
  summary["requeued"] = s.requeued;
  std::vector<std::string> banned;
  for (auto ip : s.banned_sources) banned.push_back(ip.to_string());
  summary["banned_sources"] = banned;
  summary["halted"] = s.halted;

  run.emit("records.jsonl", records_jsonl(result.records), true);
  run.emit("final.jsonl", records_jsonl(result.final), false);
  run.emit("summary.json", summary.dump(2) + "\n", false);
  run.finish();
  if (s.halted) {
    err << "error: every source was banned; results are partial\n";
    return kExitOperational;
  }
  return kExitOk;
}

// ---- infer ---------------------------------------------------------------

struct InferArgs {
  Common common;
  std::string domain, protocol, scenario, target;
  std::optional<std::size_t> budget;
  std::optional<double> sleep_s;
  SourceArgs sources;
};

int run_infer(const InferArgs& a, const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  Run run("infer", a.common, argv, out);
  run.config("scenario", a.scenario);
  Protocol protocol = protocol_arg(a.protocol);
  net::Ipv4Address target = address_arg(a.target, "--target");
  Bench bench = make_bench(scenario_arg(a.scenario, a.common.seed), a.sources.resolve(), a.common.seed, false);
  prober::ProbeOptions options;
  if (a.sleep_s) options.sleep = sim::secs_f(*a.sleep_s);
  if (options.sleep < sim::secs(5) || options.sleep > sim::secs(29)) throw Failure("sleep must lie in [5, 29] s");

  std::size_t budget = a.budget ? *a.budget : inference::default_budget(a.domain);
  std::optional<inference::InferenceSession> session;
  try {
    session.emplace(a.domain, protocol, budget, a.common.seed,
                    inference::prober_oracle(*bench.prober, protocol, target, options));
  } catch (const std::invalid_argument& e) {
    throw Failure(std::string("infer: ") + e.what());
  }
  int status = kExitOk;
  std::optional<inference::InferenceResult> result;
  try {
    result = inference::infer_rule(*session);
  } catch (const inference::InferenceError& e) {
    err << "error: " << inference::error_kind_name(e.kind()) << ": " << e.what() << "\n";
    status = kExitOperational;
  }
  run.span(sim::SimTime{}, bench.world->now());
  run.emit("transcript.json", inference::transcript_json(*session, result ? &*result : nullptr), true);
  if (result) run.emit("rule.txt", blocklist::rule_text(result->rule) + "\n", false);
  run.finish();
  return status;
}

// ---- impact --------------------------------------------------------------

struct ImpactArgs {
  Common common;
  std::string rules, corpus;
};

int run_impact(const ImpactArgs& a, const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  Run run("impact", a.common, argv, out);
  run.config("rules", a.rules);
  run.config("corpus", a.corpus);
  auto rules = load_rules(fs::path(a.rules));
  warn_skipped(err, a.rules, rules.skipped, rules.lines);
  std::vector<inference::ImpactRule> input;
  for (const auto& r : rules.items) input.push_back({r, std::nullopt});
  inference::ImpactReport report;
  try {
    report = inference::impact_report(input, fs::path(a.corpus));
  } catch (const std::runtime_error& e) {
    throw Failure(e.what());
  }
  warn_skipped(err, a.corpus, report.malformed, report.lines);
  run.emit("impact.jsonl", inference::impact_jsonl(report), true);
  run.finish();
  return kExitOk;
}

// ---- evade ---------------------------------------------------------------

struct EvadeArgs {
  Common common;
  std::string strategy, builtin, protocol, domain, scenario, server;
  bool trace = false;
  bool list = false;
  std::optional<double> delay_s;
  std::optional<std::size_t> padding;
  std::optional<std::uint32_t> count;
  std::optional<std::size_t> split;
};

std::optional<net::Ipv4Address> default_server(const sim::Scenario& s, Protocol p) {
  const char* kind = p == Protocol::Dns ? "dns_resolver" : "http_server";
  for (const auto& h : s.hosts) {
    if (h.kind == kind) return h.addresses.at(0);
  }
  return std::nullopt;
}

int run_evade(const EvadeArgs& a, const std::vector<std::string>& argv, std::ostream& out, std::ostream&) {
  if (a.list) {
    for (const auto& info : evasion::builtin_catalog()) {
      std::string protos;
      for (auto p : info.protocols) protos += (protos.empty() ? "" : ",") + std::string(blocklist::protocol_name(p));
      out << info.name << "\t" << protos << "\t" << info.summary << "\n";
    }
    return kExitOk;
  }
  if (a.strategy.empty() == a.builtin.empty()) throw UsageFailure("give exactly one of --strategy and --builtin");
  if (a.protocol.empty() || a.domain.empty() || a.scenario.empty()) {
    throw UsageFailure("evade needs --protocol, --domain and --scenario");
  }
  if (a.trace && a.common.out_dir.empty()) throw UsageFailure("--trace needs --out");

  Run run("evade", a.common, argv, out);
  run.config("scenario", a.scenario);
  Protocol protocol = protocol_arg(a.protocol);
  evasion::Strategy strategy;
  try {
    if (!a.builtin.empty()) {
      evasion::BuiltinParams params;
      if (a.delay_s) params.delay = sim::secs_f(*a.delay_s);
      params.padding = a.padding;
      params.count_value = a.count;
      params.split_index = a.split;
      strategy = evasion::builtin(a.builtin, params);
    } else {
      strategy = evasion::parse_strategy(a.strategy);
    }
  } catch (const evasion::StrategyParseError& e) {
    throw Failure("strategy: " + std::string(e.what()) + " at offset " + std::to_string(e.offset()));
  } catch (const std::invalid_argument& e) {
    throw Failure(std::string("strategy: ") + e.what());
  }

  sim::Scenario scenario = scenario_arg(a.scenario, a.common.seed);
  evasion::TrialSetup setup;
  setup.seed = a.common.seed;
  if (!a.server.empty()) {
    setup.server = address_arg(a.server, "--server");
  } else if (auto s = default_server(scenario, protocol)) {
    setup.server = *s;
  } else {
    throw Failure("scenario " + a.scenario + " has no " +
                  (protocol == Protocol::Dns ? std::string("dns_resolver") : std::string("http_server")) + " host");
  }
  auto world = sim::build_world(scenario, a.trace);
  evasion::EvasionReport report;
  try {
    report = evasion::evaluate(strategy, protocol, a.domain, *world, setup);
  } catch (const evasion::InvalidTrial& e) {
    throw Failure(std::string("evade: ") + e.what());
  }
  run.span(sim::SimTime{}, world->now());
  run.emit("report.json", evasion::report_json(report), true);
  if (a.trace) run.emit("trace.jsonl", trace_jsonl(world->trace(), report.trace_begin, report.trace_end), false);
  run.finish();
  return kExitOk;
}

// ---- localize ------------------------------------------------------------

struct LocalizeArgs {
  Common common;
  std::string scenario, target, domain = "twitter.com", protocol = "http";
  int max_ttl = 30;
  SourceArgs sources;
};

int run_localize(const LocalizeArgs& a, const std::vector<std::string>& argv, std::ostream& out, std::ostream&) {
  Run run("localize", a.common, argv, out);
  run.config("scenario", a.scenario);
  Protocol protocol = protocol_arg(a.protocol);
  net::Ipv4Address target = address_arg(a.target, "--target");
  Bench bench = make_bench(scenario_arg(a.scenario, a.common.seed), a.sources.resolve(), a.common.seed, false);
  prober::LocalizeResult r = prober::localize(*bench.prober, target, a.domain, a.max_ttl, protocol);
  run.span(sim::SimTime{}, bench.world->now());

  ordered_json doc;
  doc["target"] = target.to_string();
  doc["filtered"] = r.filtered;
  doc["censor_hop"] = r.censor_hop ? ordered_json(*r.censor_hop) : ordered_json(nullptr);
  ordered_json path = ordered_json::array();
  for (const auto& hop : r.path) path.push_back(hop ? ordered_json(hop->to_string()) : ordered_json(nullptr));
  doc["path"] = path;
  if (r.evidence) {
    doc["evidence"] = {{"ip_id", r.evidence->ip_id}, {"observed_ttl", r.evidence->observed_ttl}, {"kind", r.evidence->kind}};
  } else {
    doc["evidence"] = nullptr;
  }
  doc["consistent"] = r.consistent;
  run.emit("localize.json", doc.dump(2) + "\n", true);
  run.emit("records.jsonl", records_jsonl(r.records), false);
  run.finish();
  return kExitOk;
}

// ---- simulate ------------------------------------------------------------

struct SimulateArgs {
  Common common;
  std::string scenario;
  SourceArgs sources;
};

// The scenario's optional "traffic" list: probes started at fixed virtual
// times, e.g. {"at_s": 0, "protocol": "http", "domain": "twitter.com",
// "target": "95.85.96.36", "port": 8080, "sleep_s": 9}.
int run_simulate(const SimulateArgs& a, const std::vector<std::string>& argv, std::ostream& out, std::ostream&) {
  Run run("simulate", a.common, argv, out);
  run.config("scenario", a.scenario);
  json doc = read_json(a.scenario, "scenario");
  Bench bench = make_bench(scenario_arg(a.scenario, a.common.seed), a.sources.resolve(), a.common.seed, true);

  std::vector<prober::ProbeRecord> records;
  for (const auto& t : doc.value("traffic", json::array())) {
    prober::ProbeRequest req;
    try {
      req.protocol = protocol_arg(t.at("protocol").get<std::string>());
      req.domain = t.at("domain").get<std::string>();
      req.target = address_arg(t.at("target").get<std::string>(), "traffic.target");
      req.port = t.value("port", std::uint16_t{0});
      req.options.sleep = sim::secs_f(t.value("sleep_s", 9.0));
      req.options.ttl = t.value("ttl", std::uint8_t{64});
    } catch (const json::exception& e) {
      throw Failure(a.scenario + ": traffic: " + e.what());
    }
    sim::SimTime at = sim::secs_f(t.value("at_s", 0.0));
    bench.world->schedule(at, [&bench, &records, req] {
      bool started = bench.prober->start(req, [&records](const prober::ProbeRecord& r) { records.push_back(r); });
      if (!started) throw Failure("flow allocator exhausted at " + std::to_string(bench.world->now().count()) + " us");
    });
  }
  bench.world->run();
  run.span(sim::SimTime{}, bench.world->now());
  run.emit("trace.jsonl", trace_jsonl(bench.world->trace(), 0, bench.world->trace().size()), true);
  run.emit("records.jsonl", records_jsonl(records), false);
  run.finish();
  return kExitOk;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Deterministic censorship measurement laboratory", "tmlab"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", std::string(kVersion));

  ScanArgs scan;
  auto* sc = app.add_subcommand("scan", "Classify every address of announced prefixes as filtered or not");
  add_common(sc, scan.common);
  sc->add_option("--pfx2as", scan.pfx2as, "Prefix-to-AS file: network<TAB>length<TAB>asn")->required();
  sc->add_option("--scenario", scan.scenario, "Scenario JSON")->required();
  sc->add_option("--plan", scan.plan, "Plan JSON (controls, pacing, sleep_s, retries, sources, protocols)");
  sc->add_option("--asn", scan.asns, "Only prefixes originated by these ASNs")->delimiter(',');
  sc->add_option("--protocols", scan.protocols, "Protocols to test (default http)")->delimiter(',');
  scan.pacing.add(sc);
  scan.sources.add(sc);

  ProbeArgs probe;
  auto* pr = app.add_subcommand("probe", "Run a domain campaign against a confirmed target pool");
  add_common(pr, probe.common);
  pr->add_option("--plan", probe.plan, "Campaign plan JSON")->required();
  pr->add_option("--scenario", probe.scenario, "Scenario JSON")->required();
  pr->add_option("--domains", probe.domains, "Domain list, one name per line");
  pr->add_option("--targets", probe.targets, "Target pool file written by scan");
  pr->add_option("--batch-size", probe.batch_size, "Probes per control probe");
  probe.pacing.add(pr);
  probe.sources.add(pr);

  InferArgs infer;
  auto* in = app.add_subcommand("infer", "Reconstruct the blocking rule behind a censored name");
  add_common(in, infer.common);
  in->add_option("--domain", infer.domain, "Censored seed name")->required();
  in->add_option("--protocol", infer.protocol, "dns, http or https")->required();
  in->add_option("--budget", infer.budget, "Probe budget (default 4*len+8)");
  in->add_option("--scenario", infer.scenario, "Scenario JSON")->required();
  in->add_option("--target", infer.target, "Filtered address to probe")->required();
  in->add_option("--sleep", infer.sleep_s, "Seconds between the two TCP probe packets");
  infer.sources.add(in);

  ImpactArgs impact;
  auto* im = app.add_subcommand("impact", "Count corpus names matched by each rule");
  add_common(im, impact.common);
  im->add_option("--rules", impact.rules, "Rule file, one rule per line")->required();
  im->add_option("--corpus", impact.corpus, "Name corpus, one name per line")->required();

  EvadeArgs evade;
  auto* ev = app.add_subcommand("evade", "Evaluate an evasion strategy against the simulated censor");
  add_common(ev, evade.common);
  auto* strat = ev->add_option("--strategy", evade.strategy, "Strategy text");
  auto* bi = ev->add_option("--builtin", evade.builtin, "Catalog strategy name");
  strat->excludes(bi);
  ev->add_option("--protocol", evade.protocol, "dns, http or https");
  ev->add_option("--domain", evade.domain, "Censored name to request");
  ev->add_option("--scenario", evade.scenario, "Scenario JSON");
  ev->add_option("--server", evade.server, "Server address (default: first matching host in the scenario)");
  ev->add_flag("--trace", evade.trace, "Write the strategy trial's packet trace as trace.jsonl");
  ev->add_flag("--list", evade.list, "Print the builtin catalog and exit");
  ev->add_option("--delay", evade.delay_s, "Builtin free-pass delay in seconds");
  ev->add_option("--padding", evade.padding, "Builtin sandwich padding");
  ev->add_option("--count", evade.count, "Builtin DNS count value");
  ev->add_option("--split", evade.split, "Builtin segmentation index");

  LocalizeArgs loc;
  auto* lo = app.add_subcommand("localize", "Find the censor's hop with TTL-limited probes");
  add_common(lo, loc.common);
  lo->add_option("--scenario", loc.scenario, "Scenario JSON")->required();
  lo->add_option("--target", loc.target, "Filtered address")->required();
  lo->add_option("--domain", loc.domain, "Known-blocked name");
  lo->add_option("--protocol", loc.protocol, "http or https");
  lo->add_option("--max-ttl", loc.max_ttl, "Largest TTL tried")->check(CLI::Range(1, 255));
  loc.sources.add(lo);

  SimulateArgs simulate;
  auto* si = app.add_subcommand("simulate", "Replay a scenario's traffic list and write the packet trace");
  add_common(si, simulate.common);
  si->add_option("--scenario", simulate.scenario, "Scenario JSON")->required();
  simulate.sources.add(si);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    if (*sc) return run_scan(scan, args, out, err);
    if (*pr) return run_probe(probe, args, out, err);
    if (*in) return run_infer(infer, args, out, err);
    if (*im) return run_impact(impact, args, out, err);
    if (*ev) return run_evade(evade, args, out, err);
    if (*lo) return run_localize(loc, args, out, err);
    if (*si) return run_simulate(simulate, args, out, err);
  } catch (const UsageFailure& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitOperational;
  }
  return kExitUsage;
}

}  // namespace tmlab::cli
