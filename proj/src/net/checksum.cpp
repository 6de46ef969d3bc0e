#include "tmlab/net/checksum.hpp"

namespace tmlab::net {
namespace {

std::uint32_t fold(std::uint64_t sum) {
  while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
  return static_cast<std::uint32_t>(sum);
}

std::uint64_t add_words(ByteView data, std::uint64_t sum) {
  std::size_t i = 0;
  for (; i + 1 < data.size(); i += 2) sum += (std::uint32_t{data[i]} << 8) | data[i + 1];
  if (i < data.size()) sum += std::uint32_t{data[i]} << 8;
  return sum;
}

}  // namespace

std::uint32_t pseudo_header_sum(Ipv4Address src, Ipv4Address dst, std::uint8_t protocol,
                                std::uint16_t transport_length) {
  std::uint64_t sum = 0;
  sum += src.value() >> 16;
  sum += src.value() & 0xffff;
  sum += dst.value() >> 16;
  sum += dst.value() & 0xffff;
  sum += protocol;
  sum += transport_length;
  return static_cast<std::uint32_t>(sum);
}

std::uint16_t ones_complement_checksum(ByteView data, std::uint32_t pseudo_header) {
  return static_cast<std::uint16_t>(~fold(add_words(data, pseudo_header)) & 0xffff);
}

bool checksum_verifies(ByteView data, std::uint32_t pseudo_header) {
  return fold(add_words(data, pseudo_header)) == 0xffff;
}

}  // namespace tmlab::net
