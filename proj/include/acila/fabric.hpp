#pragma once

// Leaf-spine fabric simulator. Each rack has one ToR wired to a single leaf;
// every leaf connects to every spine. A SACL Gateway runs on every physical
// server. Packets are carried between devices as encoded IPv6 bytes.

#include "acila/codec.hpp"
#include "acila/controller.hpp"
#include "acila/gateway.hpp"
#include "acila/model.hpp"

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace acila {

struct TopologySpec {
  std::uint32_t racks = 1;
  std::uint32_t servers_per_rack = 1;
  std::uint32_t vms_per_server = 1;
  std::uint32_t leaves = 1;
  std::uint32_t spines = 1;
};

struct VmNode {
  std::uint32_t id = 0;
  std::vector<std::string> workload_ids;
};

struct ServerNode {
  GatewayId id = 0;
  std::vector<VmNode> vms;
};

struct RackNode {
  std::uint32_t id = 0;
  std::uint32_t leaf = 0; // the leaf this rack's ToR uplinks to
  std::vector<ServerNode> servers;
};

class Topology {
public:
  const std::vector<RackNode>& racks() const noexcept { return racks_; }
  std::uint32_t leaf_count() const noexcept { return leaves_; }
  std::uint32_t spine_count() const noexcept { return spines_; }

  bool has_server(GatewayId server) const noexcept { return server_rack_.count(server) != 0; }
  std::uint32_t rack_of(GatewayId server) const;
  std::vector<GatewayId> servers() const;

  bool leaf_spine_link(std::uint32_t leaf, std::uint32_t spine) const;

  static std::string tor_id(std::uint32_t rack) { return "tor-" + std::to_string(rack); }
  static std::string leaf_id(std::uint32_t leaf) { return "leaf-" + std::to_string(leaf); }
  static std::string spine_id(std::uint32_t spine) { return "spine-" + std::to_string(spine); }
  static std::string gateway_id(GatewayId server) { return "gw-" + std::to_string(server); }

  std::vector<std::string> switch_ids() const;
  std::vector<std::string> spine_ids() const;

  // Checks the placement against the topology and records the workload on
  // its VM.
  void place(const Workload& w);
  void unplace(const Workload& w);

  enum class Tier : std::uint8_t { tor, leaf, spine };
  struct SwitchRef {
    Tier tier = Tier::tor;
    std::uint32_t index = 0;
  };
  struct Route {
    std::array<SwitchRef, 5> hops{};
    std::size_t size = 0;
  };

  // Switches a packet crosses between two servers, in order. Cross-rack
  // traffic always climbs to exactly one spine, chosen by `ecmp_hash`.
  Route route(GatewayId src, GatewayId dst, std::uint64_t ecmp_hash) const;
  std::vector<std::string> path(GatewayId src, GatewayId dst, std::uint64_t ecmp_hash) const;
  static std::string switch_id(SwitchRef ref);

private:
  friend Topology build_topology(const TopologySpec& spec);

  std::vector<RackNode> racks_;
  std::map<GatewayId, std::uint32_t> server_rack_;
  std::uint32_t leaves_ = 0;
  std::uint32_t spines_ = 0;
  std::vector<std::vector<bool>> leaf_spine_;
};

// Servers are numbered globally: rack r, slot i -> r * servers_per_rack + i.
// Rack r uplinks to leaf r % leaves.
Topology build_topology(const TopologySpec& spec);

enum class SwitchMode : std::uint8_t { priority_only, priority_and_filter };

struct SwitchTable {
  std::vector<Rule> entries;
  SwitchMode mode = SwitchMode::priority_only;

  const Rule* match(SaclPair ids) const;

private:
  friend class Fabric;
  std::map<SaclPair, Rule> index_;
};

enum class TraceAction : std::uint8_t {
  forwarded,
  priority_set,
  dropped,
  id_attached,
  id_stripped,
  delivered,
};

std::string_view to_string(TraceAction a);

struct TraceEvent {
  std::string hop;
  TraceAction action = TraceAction::forwarded;
  std::optional<std::uint8_t> value; // set for priority_set
  SaclPair ids;                      // ids visible on the wire at this hop

  bool operator==(const TraceEvent&) const = default;
};

using Trace = std::vector<TraceEvent>;

enum class Direction : std::uint8_t { forward, reply };

// A flow is named by its client and server workloads; `tuple` is always the
// client-to-server five-tuple.
struct Flow {
  std::string client;
  std::string server;
  FiveTuple tuple;
};

enum class FilterMode : std::uint8_t { gateway, gateway_and_fabric };

struct FabricConfig {
  FilterMode filter_mode = FilterMode::gateway;
  // In gateway_and_fabric mode only these switches filter; empty means all.
  std::set<std::string> border_switches;
  GatewayConfig gateway;
};

class Fabric {
public:
  Fabric(Topology topology, FabricConfig config = {});

  const Topology& topology() const noexcept { return topology_; }

  void add_workload(const Workload& w);
  void remove_workload(const std::string& workload_id);
  const Workload& workload(const std::string& workload_id) const;

  // Swaps in new tables on every gateway and switch named in the plan.
  void install(const DistributionPlan& plan);

  Trace send(const Flow& flow, Direction direction, std::span<const std::uint8_t> payload = {});

  Gateway& gateway(GatewayId server);
  const Gateway& gateway(GatewayId server) const;
  const SwitchTable& switch_table(const std::string& switch_id) const;

  // Rules on a switch; client map + server map + accepted-flow conntrack on
  // a gateway ("gw-<server>").
  std::size_t count_installed_entries(const std::string& device) const;

  void advance(LogicalTime dt);

  // Encoded bytes of the most recent packet as seen on the fabric (after
  // egress, before ingress). Empty if the last packet never left its gateway.
  const codec::WireBytes& last_wire() const noexcept { return last_wire_; }
  // Encoded bytes handed to the destination workload by the last send, or
  // empty if it was dropped.
  const codec::WireBytes& last_delivered() const noexcept { return last_delivered_; }

private:
  bool filters(const std::string& switch_id) const;

  using SwitchSlot = std::pair<const std::string, SwitchTable>;
  SwitchSlot& slot(Topology::SwitchRef ref);

  Topology topology_;
  FabricConfig config_;
  std::map<GatewayId, std::unique_ptr<Gateway>> gateways_;
  std::unordered_map<std::string, SwitchTable> switches_;
  std::array<std::vector<SwitchSlot*>, 3> by_tier_; // tor, leaf, spine
  std::unordered_map<std::string, Workload> workloads_;
  codec::WireBytes last_wire_;
  codec::WireBytes last_delivered_;
};

// One line per event: "hop_index device_id action [value]".
std::string format_trace(const Trace& trace);

bool delivered(const Trace& trace);

} // namespace acila
