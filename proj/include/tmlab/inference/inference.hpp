#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "tmlab/blocklist/rule.hpp"
#include "tmlab/prober/engine.hpp"

namespace tmlab::inference {

using blocklist::BlockRule;
using blocklist::Protocol;

// Answers "is this name censored?" with one probe.
using Oracle = std::function<bool(const std::string& name)>;

enum class ErrorKind { SeedNotCensored, Inconclusive, HypothesisViolation, BudgetExhausted };
std::string_view error_kind_name(ErrorKind k);

class InferenceError : public std::runtime_error {
 public:
  InferenceError(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct TranscriptEntry {
  std::string name;
  bool censored = false;
  auto operator<=>(const TranscriptEntry&) const = default;
};

// Sequential probing state for one seed domain. Every query goes through
// probe(), which enforces the budget and records the transcript. Random
// context is drawn from lowercase alphanumerics that do not occur in the
// seed, so a context byte can never be part of an occurrence of a core
// taken from the seed.
class InferenceSession {
 public:
  InferenceSession(std::string seed_domain, Protocol protocol, std::size_t probe_budget, std::uint64_t rng_seed,
                   Oracle oracle);

  // Throws InferenceError(BudgetExhausted) once the budget is spent.
  bool probe(const std::string& name);
  std::string context(std::size_t length = 8);

  const std::string& seed_domain() const { return seed_; }
  Protocol protocol() const { return protocol_; }
  std::size_t probe_budget() const { return budget_; }
  std::uint64_t rng_seed() const { return rng_seed_; }
  std::size_t probes_used() const { return transcript_.size(); }
  const std::vector<TranscriptEntry>& transcript() const { return transcript_; }
  const std::string& context_alphabet() const { return alphabet_; }

 private:
  std::string seed_;
  Protocol protocol_;
  std::size_t budget_;
  std::uint64_t rng_seed_;
  Oracle oracle_;
  std::mt19937_64 rng_;
  std::string alphabet_;
  std::vector<TranscriptEntry> transcript_;
};

// 4·len + 8: anchor tests, two linear trims, validation, with slack.
std::size_t default_budget(const std::string& seed_domain);

struct Anchors {
  bool prefix_anchored = false;
  bool suffix_anchored = false;
};

// Two independent context draws per side; disagreement is Inconclusive.
// Does not probe the bare seed; infer_rule does.
Anchors detect_anchors(InferenceSession& session);

struct CoreResult {
  std::string core;
  bool complete = true;  // false: budget ran out mid-trim, core is an upper bound
};

// Linear trims of the unanchored sides. Each candidate is embedded in fresh
// context on its unanchored sides.
CoreResult minimize_core(InferenceSession& session, Anchors anchors);

// Query name for `core` under `anchors`, with fresh context on unanchored sides.
std::string embed(InferenceSession& session, const std::string& core, Anchors anchors);

struct InferenceResult {
  BlockRule rule;
  bool complete = true;
};

// Confirms the seed, detects anchors, minimizes the core and validates it:
// the embedded core must trigger and two context-only names must not.
InferenceResult infer_rule(InferenceSession& session);

// Adapts a prober to an Oracle. Censored maps to true, NotCensored to
// false; anything else is retried, then raises Inconclusive.
Oracle prober_oracle(prober::Prober& prober, Protocol protocol, net::Ipv4Address target,
                     prober::ProbeOptions options = {}, int retries = 2);

// JSON document with the session parameters, every probe and, if given, the
// inferred rule.
std::string transcript_json(const InferenceSession& session, const InferenceResult* result = nullptr);

}  // namespace tmlab::inference
