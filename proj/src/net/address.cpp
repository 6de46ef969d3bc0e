#include "tmlab/net/address.hpp"

#include <charconv>
#include <stdexcept>

namespace tmlab::net {

std::optional<Ipv4Address> Ipv4Address::parse(std::string_view text) {
  std::uint32_t value = 0;
  const char* p = text.data();
  const char* end = text.data() + text.size();
  for (int octet = 0; octet < 4; ++octet) {
    if (octet > 0) {
      if (p == end || *p != '.') return std::nullopt;
      ++p;
    }
    if (p == end || *p < '0' || *p > '9') return std::nullopt;
    unsigned part = 0;
    auto [next, ec] = std::from_chars(p, end, part);
    if (ec != std::errc{} || part > 255 || next - p > 3) return std::nullopt;
    p = next;
    value = (value << 8) | part;
  }
  if (p != end) return std::nullopt;
  return Ipv4Address(value);
}

Ipv4Address Ipv4Address::from_string(std::string_view text) {
  auto a = parse(text);
  if (!a) throw std::invalid_argument("invalid IPv4 address: " + std::string(text));
  return *a;
}

std::string Ipv4Address::to_string() const {
  return std::to_string(value_ >> 24) + '.' + std::to_string((value_ >> 16) & 0xff) + '.' +
         std::to_string((value_ >> 8) & 0xff) + '.' + std::to_string(value_ & 0xff);
}

Ipv4Prefix::Ipv4Prefix(Ipv4Address network, int length) : length_(length) {
  if (length < 0 || length > 32) throw std::invalid_argument("prefix length out of range");
  std::uint32_t mask = length == 0 ? 0 : ~std::uint32_t{0} << (32 - length);
  network_ = Ipv4Address(network.value() & mask);
}

std::optional<Ipv4Prefix> Ipv4Prefix::parse(std::string_view text) {
  auto slash = text.find('/');
  auto addr = Ipv4Address::parse(text.substr(0, slash));
  if (!addr) return std::nullopt;
  int len = 32;
  if (slash != std::string_view::npos) {
    auto digits = text.substr(slash + 1);
    auto [next, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), len);
    if (ec != std::errc{} || next != digits.data() + digits.size() || len < 0 || len > 32) {
      return std::nullopt;
    }
  }
  return Ipv4Prefix(*addr, len);
}

Ipv4Prefix Ipv4Prefix::from_string(std::string_view text) {
  auto p = parse(text);
  if (!p) throw std::invalid_argument("invalid IPv4 prefix: " + std::string(text));
  return *p;
}

std::string Ipv4Prefix::to_string() const {
  return network_.to_string() + '/' + std::to_string(length_);
}

}  // namespace tmlab::net
