#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tmlab/blocklist/rule.hpp"
#include "tmlab/evasion/strategy.hpp"

namespace tmlab::evasion {

// Overrides for the catalog's default parameters. Each applies only to the
// entries that have that parameter.
struct BuiltinParams {
  std::optional<sim::SimDuration> delay;     // free-pass: RST/PSH+ACK to SYN, default 1 s
  std::optional<std::size_t> padding;        // sandwich: spaces after the Host value, default 3391
  std::optional<std::uint32_t> count_value;  // dns-elevated-count: default 32
  std::optional<std::size_t> split_index;    // segmentation: default 8 / 5 / 70
};

struct BuiltinInfo {
  std::string name;
  std::vector<blocklist::Protocol> protocols;  // where the strategy is expected to evade
  std::string summary;
};

class UnknownBuiltin : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

const std::vector<BuiltinInfo>& builtin_catalog();
const BuiltinInfo& builtin_info(const std::string& name);
// Throws UnknownBuiltin, listing the catalog.
Strategy builtin(const std::string& name, const BuiltinParams& params = {});

}  // namespace tmlab::evasion
