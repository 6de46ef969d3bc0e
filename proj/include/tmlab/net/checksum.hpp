#pragma once

#include <cstdint>

#include "tmlab/net/address.hpp"
#include "tmlab/net/bytes.hpp"

namespace tmlab::net {

// Sum of the IPv4 pseudo header as 16-bit words, not yet folded.
std::uint32_t pseudo_header_sum(Ipv4Address src, Ipv4Address dst, std::uint8_t protocol,
                                std::uint16_t transport_length);

// RFC 1071 Internet checksum of `data`, seeded with an unfolded partial sum
// (typically a pseudo header). Odd-length input is padded with a zero byte.
std::uint16_t ones_complement_checksum(ByteView data, std::uint32_t pseudo_header = 0);

// True iff `data`, which already embeds its checksum, sums to 0xFFFF.
bool checksum_verifies(ByteView data, std::uint32_t pseudo_header = 0);

}  // namespace tmlab::net
