#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace tmlab::net {

class Ipv4Address {
 public:
  constexpr Ipv4Address() = default;
  constexpr explicit Ipv4Address(std::uint32_t host_order) : value_(host_order) {}
  constexpr Ipv4Address(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d)
      : value_((std::uint32_t{a} << 24) | (std::uint32_t{b} << 16) | (std::uint32_t{c} << 8) | d) {}

  // Dotted quad; nullopt on anything else.
  static std::optional<Ipv4Address> parse(std::string_view text);
  // Like parse() but throws std::invalid_argument.
  static Ipv4Address from_string(std::string_view text);

  constexpr std::uint32_t value() const { return value_; }
  std::string to_string() const;

  constexpr auto operator<=>(const Ipv4Address&) const = default;

 private:
  std::uint32_t value_ = 0;
};

class Ipv4Prefix {
 public:
  Ipv4Prefix() = default;
  Ipv4Prefix(Ipv4Address network, int length);

  // "a.b.c.d/len" or a bare address (taken as /32).
  static std::optional<Ipv4Prefix> parse(std::string_view text);
  static Ipv4Prefix from_string(std::string_view text);

  Ipv4Address network() const { return network_; }
  int length() const { return length_; }
  std::uint64_t size() const { return std::uint64_t{1} << (32 - length_); }
  Ipv4Address at(std::uint64_t index) const {
    return Ipv4Address(network_.value() + static_cast<std::uint32_t>(index));
  }
  bool contains(Ipv4Address addr) const {
    return length_ == 0 || ((addr.value() ^ network_.value()) >> (32 - length_)) == 0;
  }
  std::string to_string() const;

  auto operator<=>(const Ipv4Prefix&) const = default;

 private:
  Ipv4Address network_;
  int length_ = 32;
};

}  // namespace tmlab::net

template <>
struct std::hash<tmlab::net::Ipv4Address> {
  std::size_t operator()(const tmlab::net::Ipv4Address& a) const noexcept {
    return std::hash<std::uint32_t>{}(a.value());
  }
};
