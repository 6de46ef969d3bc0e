#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tmlab/net/bytes.hpp"
#include "tmlab/sim/time.hpp"

namespace tmlab::evasion {

// "[PROTO:field:value]"; "*" is a wildcard for field or value.
struct Trigger {
  std::string protocol;  // TCP, DNS or HTTP
  std::string field;
  std::string value;
  bool operator==(const Trigger&) const = default;
};

// One node of an action tree. Empty branches are explicit Send leaves, so
// every tree has a fixed set of leaves (numbered in pre-order) that
// schedule annotations can refer to.
struct Action {
  enum class Kind { Send, Drop, Duplicate, Fragment, Tamper, Insert, Replace };
  Kind kind = Kind::Send;

  // fragment{layer:index:in_order}
  std::string layer;
  std::size_t index = 0;
  bool in_order = true;
  // tamper{protocol:field:op[:value]}, op is replace or corrupt (DNS also
  // accepts duplicate on the question field)
  std::string protocol;
  std::string field;
  std::string op;
  std::string value;
  // insert{bytes:position:component:count}, replace{bytes:component:count}
  net::Bytes bytes;
  std::string position;   // start or end
  std::string component;  // name or value
  std::size_t count = 1;

  // Duplicate and Fragment: two; Tamper, Insert, Replace: one; leaves: none.
  std::vector<Action> children;

  bool operator==(const Action&) const = default;
  bool is_leaf() const { return kind == Kind::Send || kind == Kind::Drop; }
};

struct Tree {
  Trigger trigger;
  Action action;
  // Delay of the packet leaving leaf i (pre-order), relative to the trigger
  // packet. Not part of the text form.
  std::map<std::size_t, sim::SimDuration> leaf_delays;
  bool operator==(const Tree&) const = default;
};

struct Strategy {
  std::vector<Tree> outbound;
  std::vector<Tree> inbound;
  bool operator==(const Strategy&) const = default;
};

class StrategyParseError : public std::invalid_argument {
 public:
  StrategyParseError(const std::string& what, std::size_t offset)
      : std::invalid_argument(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Whitespace between tokens is insignificant. HTTP triggers take only
// duplicate/insert/replace actions; TCP and DNS triggers take only
// duplicate/fragment/tamper.
Strategy parse_strategy(std::string_view text);
// Canonical text: trees joined by single spaces, outbound and inbound forests
// separated by " \/", no other whitespace.
std::string strategy_text(const Strategy& s);
std::string action_text(const Action& a);

// Leaves of `a` in pre-order.
std::size_t leaf_count(const Action& a);

// Percent-encoding used for insert/replace byte strings: alphanumerics and
// "-._~" stay literal, everything else becomes %XX.
std::string encode_bytes(net::ByteView b);
net::Bytes decode_bytes(std::string_view text);

}  // namespace tmlab::evasion
