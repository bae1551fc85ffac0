#include "acila/codec.hpp"

#include <algorithm>
#include <cstring>
#include <string>

namespace acila::codec {

namespace {

void store16(std::uint8_t* p, std::uint16_t v) {
  p[0] = static_cast<std::uint8_t>(v >> 8);
  p[1] = static_cast<std::uint8_t>(v);
}

void store64(std::uint8_t* p, std::uint64_t v) {
  for (int i = 0; i < 8; ++i)
    p[i] = static_cast<std::uint8_t>(v >> (56 - 8 * i));
}

std::uint16_t get16(std::span<const std::uint8_t> b, std::size_t off) {
  return static_cast<std::uint16_t>((b[off] << 8) | b[off + 1]);
}

std::uint64_t get64(std::span<const std::uint8_t> b, std::size_t off) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < 8; ++i)
    v = (v << 8) | b[off + i];
  return v;
}

[[noreturn]] void fail(CodecErrc code, const std::string& what) {
  throw CodecError(code, what);
}

struct OptionSpan {
  std::uint8_t type;
  std::size_t offset; // of the type byte
  std::size_t size;   // total bytes including type/len
};

// Result of walking the header chain without interpreting the payload.
struct Layout {
  std::uint8_t first_next_header = 0;
  std::size_t hbh_len = 0; // 0 when absent
  std::uint8_t transport_proto = 0;
  std::size_t transport_offset = 0;
};

// Validates the header chain and calls `visit(OptionSpan)` for every
// Hop-by-Hop option, padding included, in wire order.
template <class Visit>
Layout walk(std::span<const std::uint8_t> wire, Visit&& visit) {
  if (wire.size() < kIpv6HeaderLen)
    fail(CodecErrc::truncated, "buffer shorter than an IPv6 header");
  if ((wire[0] >> 4) != 6)
    fail(CodecErrc::bad_version, "IP version is not 6");
  if (get16(wire, 4) != wire.size() - kIpv6HeaderLen)
    fail(CodecErrc::length_mismatch, "IPv6 payload length disagrees with buffer size");

  Layout l;
  l.first_next_header = wire[6];
  std::uint8_t nh = wire[6];
  std::size_t off = kIpv6HeaderLen;
  if (nh == kNextHeaderHopByHop) {
    if (wire.size() < off + 2)
      fail(CodecErrc::truncated, "Hop-by-Hop header truncated");
    nh = wire[off];
    l.hbh_len = (static_cast<std::size_t>(wire[off + 1]) + 1) * 8;
    if (wire.size() < off + l.hbh_len)
      fail(CodecErrc::truncated, "Hop-by-Hop length overruns the packet");
    std::size_t p = off + 2;
    const std::size_t end = off + l.hbh_len;
    while (p < end) {
      if (wire[p] == kPad1) {
        visit(OptionSpan{kPad1, p, 1});
        ++p;
        continue;
      }
      if (p + 2 > end)
        fail(CodecErrc::length_mismatch, "option header crosses the Hop-by-Hop boundary");
      std::size_t size = 2 + static_cast<std::size_t>(wire[p + 1]);
      if (p + size > end)
        fail(CodecErrc::length_mismatch, "option data crosses the Hop-by-Hop boundary");
      visit(OptionSpan{wire[p], p, size});
      p += size;
    }
    off = end;
  }
  l.transport_proto = nh;
  l.transport_offset = off;
  return l;
}

Layout walk(std::span<const std::uint8_t> wire, std::vector<OptionSpan>& options) {
  return walk(wire, [&](const OptionSpan& o) { options.push_back(o); });
}

void append_option(WireBytes& out, const HopByHopOption& opt) {
  out.push_back(opt.type);
  out.push_back(static_cast<std::uint8_t>(opt.data.size()));
  out.insert(out.end(), opt.data.begin(), opt.data.end());
}

// Pads a Hop-by-Hop header that starts at `start` to a multiple of 8 octets
// and fills in Hdr Ext Len.
void finish_hop_by_hop(WireBytes& out, std::size_t start) {
  std::size_t used = out.size() - start;
  std::size_t pad = (8 - used % 8) % 8;
  if (pad == 1) {
    out.push_back(kPad1);
  } else if (pad >= 2) {
    out.push_back(kPadN);
    out.push_back(static_cast<std::uint8_t>(pad - 2));
    out.insert(out.end(), pad - 2, 0);
  }
  out[start + 1] = static_cast<std::uint8_t>((out.size() - start) / 8 - 1);
}

void write_ipv6_header(WireBytes& out, const SaclPacket& pkt, std::uint8_t next_header) {
  std::uint8_t h[kIpv6HeaderLen] = {0x60};
  // payload length (bytes 4-5) is patched at the end
  h[6] = next_header;
  h[7] = pkt.hop_limit;
  std::memcpy(h + 8, pkt.src_ip.data(), 16);
  std::memcpy(h + 24, pkt.dst_ip.data(), 16);
  out.insert(out.end(), h, h + kIpv6HeaderLen);
}

void write_sacl_option(WireBytes& out, SaclPair ids) {
  std::uint8_t o[2 + kSaclOptionDataLen] = {kSaclOptionType, kSaclOptionDataLen};
  store64(o + 2, ids.first.value);
  store64(o + 10, ids.second.value);
  out.insert(out.end(), o, o + sizeof o);
}

void write_transport(WireBytes& out, const SaclPacket& pkt) {
  std::uint8_t h[kTcpHeaderLen] = {};
  store16(h, pkt.src_port);
  store16(h + 2, pkt.dst_port);
  std::size_t len = kTcpHeaderLen;
  if (pkt.proto == Proto::udp) {
    store16(h + 4, static_cast<std::uint16_t>(kUdpHeaderLen + pkt.payload.size()));
    len = kUdpHeaderLen; // checksum stays 0
  } else {
    h[12] = 0x50; // data offset 5; seq, ack, checksum and urgent stay 0
    store16(h + 14, 0xffff);
  }
  out.insert(out.end(), h, h + len);
  out.insert(out.end(), pkt.payload.begin(), pkt.payload.end());
}

void patch_payload_length(WireBytes& out) {
  std::size_t len = out.size() - kIpv6HeaderLen;
  if (len > 0xffff)
    fail(CodecErrc::length_mismatch, "packet exceeds the IPv6 payload length range");
  out[4] = static_cast<std::uint8_t>(len >> 8);
  out[5] = static_cast<std::uint8_t>(len);
}

} // namespace

std::string_view to_string(CodecErrc code) {
  switch (code) {
  case CodecErrc::truncated: return "truncated";
  case CodecErrc::length_mismatch: return "length_mismatch";
  case CodecErrc::bad_version: return "bad_version";
  case CodecErrc::unsupported_header: return "unsupported_header";
  case CodecErrc::malformed_option: return "malformed_option";
  case CodecErrc::would_discard: return "would_discard";
  case CodecErrc::half_id: return "half_id";
  }
  return "unknown";
}

WireBytes encode(const SaclPacket& pkt) {
  return encode(pkt, {});
}

WireBytes encode(const SaclPacket& pkt, std::span<const HopByHopOption> extra_options) {
  if (pkt.client_sacl.present() != pkt.server_sacl.present())
    fail(CodecErrc::half_id, "exactly one SACL id is zero");
  const bool hbh = pkt.has_ids() || !extra_options.empty();
  const auto transport = static_cast<std::uint8_t>(pkt.proto);

  WireBytes out;
  out.reserve(kIpv6HeaderLen + 24 + kTcpHeaderLen + pkt.payload.size());
  write_ipv6_header(out, pkt, hbh ? kNextHeaderHopByHop : transport);
  if (hbh) {
    const std::size_t start = out.size();
    out.push_back(transport);
    out.push_back(0);
    for (const auto& opt : extra_options)
      append_option(out, opt);
    if (pkt.has_ids())
      write_sacl_option(out, pkt.ids());
    finish_hop_by_hop(out, start);
  }
  write_transport(out, pkt);
  patch_payload_length(out);
  return out;
}

SaclPacket decode(std::span<const std::uint8_t> wire, DecodeOptions opts) {
  SaclPacket pkt;
  bool seen_sacl = false;
  const Layout l = walk(wire, [&](const OptionSpan& o) {
    if (o.type == kPad1 || o.type == kPadN)
      return;
    if (o.type == kSaclOptionType && opts.recognize_sacl_option) {
      if (seen_sacl)
        fail(CodecErrc::malformed_option, "SACL option repeated");
      if (o.size != 2u + kSaclOptionDataLen)
        fail(CodecErrc::malformed_option, "SACL option data length is not 16");
      seen_sacl = true;
      pkt.client_sacl = SaclId{get64(wire, o.offset + 2)};
      pkt.server_sacl = SaclId{get64(wire, o.offset + 10)};
      if (pkt.client_sacl.present() != pkt.server_sacl.present())
        fail(CodecErrc::half_id, "SACL option carries exactly one zero id");
      return;
    }
    // RFC 8200 4.2: the two high-order bits choose the action for an
    // unrecognized option; only 00 means "skip and continue".
    if ((o.type >> 6) != 0)
      fail(CodecErrc::would_discard,
           "unrecognized option type " + std::to_string(o.type) + " requests discard");
  });

  std::memcpy(pkt.src_ip.data(), wire.data() + 8, 16);
  std::memcpy(pkt.dst_ip.data(), wire.data() + 24, 16);
  pkt.hop_limit = wire[7];

  std::size_t off = l.transport_offset;
  if (l.transport_proto == static_cast<std::uint8_t>(Proto::tcp)) {
    pkt.proto = Proto::tcp;
    if (wire.size() < off + kTcpHeaderLen)
      fail(CodecErrc::truncated, "TCP header truncated");
    std::size_t hlen = static_cast<std::size_t>(wire[off + 12] >> 4) * 4;
    if (hlen < kTcpHeaderLen || wire.size() < off + hlen)
      fail(CodecErrc::length_mismatch, "TCP data offset is inconsistent");
    pkt.src_port = get16(wire, off);
    pkt.dst_port = get16(wire, off + 2);
    off += hlen;
  } else if (l.transport_proto == static_cast<std::uint8_t>(Proto::udp)) {
    pkt.proto = Proto::udp;
    if (wire.size() < off + kUdpHeaderLen)
      fail(CodecErrc::truncated, "UDP header truncated");
    if (get16(wire, off + 4) != wire.size() - off)
      fail(CodecErrc::length_mismatch, "UDP length disagrees with buffer size");
    pkt.src_port = get16(wire, off);
    pkt.dst_port = get16(wire, off + 2);
    off += kUdpHeaderLen;
  } else {
    fail(CodecErrc::unsupported_header,
         "unsupported next header " + std::to_string(l.transport_proto));
  }
  pkt.payload.assign(wire.begin() + static_cast<std::ptrdiff_t>(off), wire.end());
  return pkt;
}

std::vector<HopByHopOption> hop_by_hop_options(std::span<const std::uint8_t> wire) {
  std::vector<OptionSpan> options;
  walk(wire, options);
  std::vector<HopByHopOption> out;
  for (const auto& o : options) {
    if (o.type == kPad1 || o.type == kPadN)
      continue;
    auto first = wire.begin() + static_cast<std::ptrdiff_t>(o.offset + 2);
    out.push_back({o.type, std::vector<std::uint8_t>(first, first + static_cast<std::ptrdiff_t>(o.size - 2))});
  }
  return out;
}

bool has_sacl_option(std::span<const std::uint8_t> wire) {
  bool found = false;
  walk(wire, [&](const OptionSpan& o) { found = found || o.type == kSaclOptionType; });
  return found;
}

WireBytes strip(std::span<const std::uint8_t> wire) {
  (void)decode(wire); // full validation
  std::vector<OptionSpan> options;
  const Layout l = walk(wire, options);
  const bool present = std::any_of(options.begin(), options.end(),
                                   [](const OptionSpan& o) { return o.type == kSaclOptionType; });
  if (!present)
    return WireBytes(wire.begin(), wire.end());

  std::vector<HopByHopOption> keep;
  for (const auto& o : options) {
    if (o.type == kPad1 || o.type == kPadN || o.type == kSaclOptionType)
      continue;
    auto first = wire.begin() + static_cast<std::ptrdiff_t>(o.offset + 2);
    keep.push_back({o.type, std::vector<std::uint8_t>(first, first + static_cast<std::ptrdiff_t>(o.size - 2))});
  }

  WireBytes out(wire.begin(), wire.begin() + kIpv6HeaderLen);
  if (keep.empty()) {
    out[6] = l.transport_proto;
  } else {
    const std::size_t start = out.size();
    out.push_back(l.transport_proto);
    out.push_back(0);
    for (const auto& opt : keep)
      append_option(out, opt);
    finish_hop_by_hop(out, start);
  }
  out.insert(out.end(), wire.begin() + static_cast<std::ptrdiff_t>(l.transport_offset), wire.end());
  patch_payload_length(out);
  return out;
}

} // namespace acila::codec
