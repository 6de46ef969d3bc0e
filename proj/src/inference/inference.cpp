#include "tmlab/inference/inference.hpp"

#include <json.hpp>

#include "tmlab/net/http.hpp"

namespace tmlab::inference {

std::string_view error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::SeedNotCensored:
      return "seed_not_censored";
    case ErrorKind::Inconclusive:
      return "inconclusive";
    case ErrorKind::HypothesisViolation:
      return "hypothesis_violation";
    case ErrorKind::BudgetExhausted:
      return "budget_exhausted";
  }
  return "unknown";
}

InferenceSession::InferenceSession(std::string seed_domain, Protocol protocol, std::size_t probe_budget,
                                   std::uint64_t rng_seed, Oracle oracle)
    : seed_(net::to_lower(seed_domain)),
      protocol_(protocol),
      budget_(probe_budget),
      rng_seed_(rng_seed),
      oracle_(std::move(oracle)),
      rng_(rng_seed) {
  if (seed_.empty()) throw std::invalid_argument("empty seed domain");
  for (char c : std::string_view("abcdefghijklmnopqrstuvwxyz0123456789")) {
    if (seed_.find(c) == std::string::npos) alphabet_ += c;
  }
  if (alphabet_.empty()) throw std::invalid_argument("seed uses every context character: " + seed_);
}

bool InferenceSession::probe(const std::string& name) {
  if (transcript_.size() >= budget_) {
    throw InferenceError(ErrorKind::BudgetExhausted, "probe budget of " + std::to_string(budget_) + " exhausted");
  }
  bool censored = oracle_(name);
  transcript_.push_back({name, censored});
  return censored;
}

std::string InferenceSession::context(std::size_t length) {
  std::string out;
  for (std::size_t i = 0; i < length; ++i) out += alphabet_[rng_() % alphabet_.size()];
  return out;
}

std::size_t default_budget(const std::string& seed_domain) { return 4 * seed_domain.size() + 8; }

namespace {

bool side_anchored(InferenceSession& s, bool prefix) {
  bool answers[2];
  for (bool& anchored : answers) {
    const std::string ctx = s.context();
    anchored = !s.probe(prefix ? ctx + s.seed_domain() : s.seed_domain() + ctx);
  }
  if (answers[0] != answers[1]) {
    throw InferenceError(ErrorKind::Inconclusive,
                         std::string("flaky ") + (prefix ? "prefix" : "suffix") + " anchor test for " + s.seed_domain());
  }
  return answers[0];
}

}  // namespace

Anchors detect_anchors(InferenceSession& session) {
  Anchors a;
  a.prefix_anchored = side_anchored(session, true);
  a.suffix_anchored = side_anchored(session, false);
  return a;
}

std::string embed(InferenceSession& session, const std::string& core, Anchors anchors) {
  std::string name = anchors.prefix_anchored ? "" : session.context();
  name += core;
  if (!anchors.suffix_anchored) name += session.context();
  return name;
}

CoreResult minimize_core(InferenceSession& session, Anchors anchors) {
  const std::string& seed = session.seed_domain();
  std::size_t lo = 0, hi = seed.size();
  try {
    if (!anchors.prefix_anchored) {
      while (hi - lo > 1 && session.probe(embed(session, seed.substr(lo + 1, hi - lo - 1), anchors))) ++lo;
    }
    if (!anchors.suffix_anchored) {
      while (hi - lo > 1 && session.probe(embed(session, seed.substr(lo, hi - lo - 1), anchors))) --hi;
    }
  } catch (const InferenceError& e) {
    if (e.kind() != ErrorKind::BudgetExhausted) throw;
    return {seed.substr(lo, hi - lo), false};
  }
  return {seed.substr(lo, hi - lo), true};
}

InferenceResult infer_rule(InferenceSession& session) {
  if (!session.probe(session.seed_domain())) {
    throw InferenceError(ErrorKind::SeedNotCensored, session.seed_domain() + " is not censored");
  }
  const Anchors anchors = detect_anchors(session);
  const CoreResult core = minimize_core(session, anchors);
  InferenceResult out{.rule = {.core = core.core, .prefix_anchored = anchors.prefix_anchored,
                               .suffix_anchored = anchors.suffix_anchored},
                      .complete = core.complete};
  if (!out.complete) return out;
  try {
    if (!session.probe(embed(session, core.core, anchors))) {
      throw InferenceError(ErrorKind::Inconclusive, "core " + core.core + " does not trigger in fresh context");
    }
    for (int i = 0; i < 2; ++i) {
      if (session.probe(session.context(session.seed_domain().size()))) {
        throw InferenceError(ErrorKind::Inconclusive, "a name without the core triggered");
      }
    }
  } catch (const InferenceError& e) {
    if (e.kind() != ErrorKind::BudgetExhausted) throw;
    out.complete = false;
  }
  return out;
}

Oracle prober_oracle(prober::Prober& prober, Protocol protocol, net::Ipv4Address target, prober::ProbeOptions options,
                     int retries) {
  return [&prober, protocol, target, options, retries](const std::string& name) {
    for (int attempt = 0; attempt <= retries; ++attempt) {
      auto r = prober.run({.protocol = protocol, .domain = name, .target = target, .options = options});
      if (r.verdict == prober::Verdict::Censored) return true;
      if (r.verdict == prober::Verdict::NotCensored) return false;
    }
    throw InferenceError(ErrorKind::Inconclusive, "no conclusive verdict for " + name);
  };
}

std::string transcript_json(const InferenceSession& session, const InferenceResult* result) {
  nlohmann::ordered_json doc;
  doc["seed_domain"] = session.seed_domain();
  doc["protocol"] = blocklist::protocol_name(session.protocol());
  doc["probe_budget"] = session.probe_budget();
  doc["rng_seed"] = session.rng_seed();
  doc["probes_used"] = session.probes_used();
  auto& probes = doc["transcript"] = nlohmann::ordered_json::array();
  for (const auto& e : session.transcript()) probes.push_back({{"probe", e.name}, {"censored", e.censored}});
  if (result) {
    doc["rule"] = blocklist::rule_text(result->rule);
    doc["complete"] = result->complete;
  }
  return doc.dump(2) + "\n";
}

}  // namespace tmlab::inference
