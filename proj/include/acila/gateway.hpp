#pragma once

// SACL Gateway data plane.
//
// A gateway sits on one physical server. Packets leaving a local workload get
// both SACL ids attached (egress_client for new flows, egress_server for
// replies). Packets arriving for a local workload are filtered and delivered
// with the ids removed (ingress_server, ingress_client).

#include "acila/codec.hpp"
#include "acila/conntrack.hpp"
#include "acila/model.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>

namespace acila {

enum class DefaultAction : std::uint8_t { deny, allow };

struct ClientKey {
  Ipv6Address ip{};
  std::optional<std::uint32_t> lid;

  auto operator<=>(const ClientKey&) const = default;
  bool operator==(const ClientKey&) const = default;
};

struct ServerKey {
  Ipv6Address ip{};
  std::uint16_t port = 0;

  auto operator<=>(const ServerKey&) const = default;
  bool operator==(const ServerKey&) const = default;
};

struct GatewayTables {
  std::map<ClientKey, SaclId> client_map;
  std::map<ServerKey, SaclId> server_map;
  std::set<SaclPair> filter_rules;
  DefaultAction default_action = DefaultAction::deny;

  bool operator==(const GatewayTables&) const = default;
};

struct GatewayConfig {
  std::size_t conntrack_capacity = std::size_t{1} << 20;
  LogicalTime conntrack_ttl = 1000;
  std::uint8_t default_hop_limit = codec::kDefaultHopLimit;
};

using Verdict = std::optional<codec::SaclPacket>; // nullopt = dropped

class Gateway {
public:
  explicit Gateway(GatewayId id, GatewayConfig config = {});

  GatewayId id() const noexcept { return id_; }

  // Replaces the table snapshot in one step. Packets already being processed
  // keep the snapshot they started with.
  void install(std::shared_ptr<const GatewayTables> tables);
  void install(GatewayTables tables) { install(std::make_shared<const GatewayTables>(std::move(tables))); }
  std::shared_ptr<const GatewayTables> tables() const;

  // New flow from a local workload.
  Verdict egress_client(codec::SaclPacket pkt);
  // Packet from the fabric addressed to a local server workload.
  Verdict ingress_server(codec::SaclPacket pkt);
  // Reply from a local server workload.
  Verdict egress_server(codec::SaclPacket pkt);
  // Reply from the fabric addressed to a local client workload.
  Verdict ingress_client(codec::SaclPacket pkt);

  // Picks egress_server when the packet answers a tracked inbound flow,
  // egress_client otherwise.
  Verdict egress(codec::SaclPacket pkt);
  // Picks ingress_client when the packet answers a flow this gateway
  // originated, ingress_server otherwise.
  Verdict ingress(codec::SaclPacket pkt);

  // Key egress_client uses for the client map. When the source address hosts
  // LID-marked workloads the Hop Limit LID is part of the key; otherwise the
  // Hop Limit is an ordinary TTL and ignored.
  static ClientKey client_key(const GatewayTables& tables, const codec::SaclPacket& pkt);

  LogicalTime now() const noexcept { return now_; }
  void set_time(LogicalTime t) noexcept { now_ = t; }
  void advance(LogicalTime dt) noexcept { now_ += dt; }

  std::size_t conntrack_gc();

  // Flows this gateway originated (client side).
  const ConntrackTable& client_conntrack() const noexcept { return client_ct_; }
  // Flows accepted for local server workloads.
  const ConntrackTable& server_conntrack() const noexcept { return server_ct_; }

private:
  Verdict fallback(codec::SaclPacket pkt, const GatewayTables& t) const;

  GatewayId id_;
  GatewayConfig config_;
  mutable std::mutex tables_mu_;
  std::shared_ptr<const GatewayTables> tables_;
  ConntrackTable client_ct_;
  ConntrackTable server_ct_;
  LogicalTime now_ = 0;
};

} // namespace acila
