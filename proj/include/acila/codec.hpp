#pragma once

// Wire format for SACL ids.
//
// Both ids travel in a single Hop-by-Hop option directly after the fixed
// IPv6 header:
//
//  +--------+--------+--------+--------+
//  |  Next  |HdrExtLn| 0x1E   |   16   |
//  +--------+--------+--------+--------+
//  |      client SACL id (64 bit)      |
//  |                                   |
//  +--------+--------+--------+--------+
//  |      server SACL id (64 bit)      |
//  |                                   |
//  +--------+--------+--------+--------+
//  | PadN=1 |   2    |   00   |   00   |
//  +--------+--------+--------+--------+
//
// The option type has its two high-order bits clear, so a node that does not
// know it skips it and keeps processing the packet. A packet with no ids
// carries no Hop-by-Hop header at all.

#include "acila/model.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace acila::codec {

inline constexpr std::uint8_t kSaclOptionType = 0x1E;
inline constexpr std::uint8_t kSaclOptionDataLen = 16;
inline constexpr std::uint8_t kPad1 = 0;
inline constexpr std::uint8_t kPadN = 1;
inline constexpr std::uint8_t kNextHeaderHopByHop = 0;
inline constexpr std::size_t kIpv6HeaderLen = 40;
inline constexpr std::size_t kTcpHeaderLen = 20;
inline constexpr std::size_t kUdpHeaderLen = 8;
inline constexpr std::uint8_t kDefaultHopLimit = 64;
inline constexpr std::uint8_t kLidBandLow = 100;
inline constexpr std::uint8_t kLidBandHigh = 227;

using WireBytes = std::vector<std::uint8_t>;

struct SaclPacket {
  Ipv6Address src_ip{};
  Ipv6Address dst_ip{};
  std::uint8_t hop_limit = kDefaultHopLimit;
  Proto proto = Proto::tcp;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  SaclId client_sacl;
  SaclId server_sacl;
  std::vector<std::uint8_t> payload;

  std::size_t payload_len() const noexcept { return payload.size(); }
  bool has_ids() const noexcept { return client_sacl.present() && server_sacl.present(); }
  SaclPair ids() const { return {client_sacl, server_sacl}; }
  FiveTuple tuple() const { return {src_ip, dst_ip, src_port, dst_port, proto}; }

  bool operator==(const SaclPacket&) const = default;
};

enum class CodecErrc {
  truncated,          // buffer ends before a header does
  length_mismatch,    // a length field disagrees with the buffer
  bad_version,        // not an IPv6 packet
  unsupported_header, // next header other than Hop-by-Hop, TCP, UDP
  malformed_option,   // SACL option with wrong length, or repeated
  would_discard,      // unknown option whose type asks for the packet to be dropped
  half_id,            // exactly one of the two ids is zero
};

std::string_view to_string(CodecErrc code);

class CodecError : public std::runtime_error {
public:
  CodecError(CodecErrc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  CodecErrc code() const noexcept { return code_; }

private:
  CodecErrc code_;
};

// A raw Hop-by-Hop TLV. Pad1 is represented with empty data and never
// produced by the encoder as an "extra" option.
struct HopByHopOption {
  std::uint8_t type = 0;
  std::vector<std::uint8_t> data;

  bool operator==(const HopByHopOption&) const = default;
};

struct DecodeOptions {
  // When false the SACL option is treated like any other unknown option:
  // skipped according to its type bits. Models a node that has never heard
  // of SACL ids.
  bool recognize_sacl_option = true;
};

WireBytes encode(const SaclPacket& pkt);

// Same, with extra options placed in front of the SACL option. Extras are
// emitted even when the packet carries no ids.
WireBytes encode(const SaclPacket& pkt, std::span<const HopByHopOption> extra_options);

SaclPacket decode(std::span<const std::uint8_t> wire, DecodeOptions opts = {});

// Non-padding options found in the Hop-by-Hop header, in wire order.
// Empty when the packet has no Hop-by-Hop header.
std::vector<HopByHopOption> hop_by_hop_options(std::span<const std::uint8_t> wire);

bool has_sacl_option(std::span<const std::uint8_t> wire);

// Removes the SACL option. Drops the whole Hop-by-Hop header if nothing else
// remains in it. A packet without the option is returned unchanged.
WireBytes strip(std::span<const std::uint8_t> wire);

// Hop Limit value a LID marker writes for `lid`: lid % 128 + 100.
constexpr std::uint8_t mark_lid(std::uint32_t lid) noexcept {
  return static_cast<std::uint8_t>(lid % 128 + kLidBandLow);
}

// Inverse of mark_lid for Hop Limit values inside the LID band.
constexpr std::optional<std::uint32_t> read_lid(std::uint8_t hop_limit) noexcept {
  if (hop_limit < kLidBandLow || hop_limit > kLidBandHigh)
    return std::nullopt;
  return static_cast<std::uint32_t>(hop_limit - kLidBandLow);
}

} // namespace acila::codec
