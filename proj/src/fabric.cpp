#include "acila/fabric.hpp"

#include <sstream>

namespace acila {

std::uint32_t Topology::rack_of(GatewayId server) const {
  auto it = server_rack_.find(server);
  if (it == server_rack_.end())
    throw ModelError("unknown server " + std::to_string(server));
  return it->second;
}

std::vector<GatewayId> Topology::servers() const {
  std::vector<GatewayId> out;
  for (const auto& [s, r] : server_rack_)
    out.push_back(s);
  return out;
}

bool Topology::leaf_spine_link(std::uint32_t leaf, std::uint32_t spine) const {
  return leaf < leaves_ && spine < spines_ && leaf_spine_[leaf][spine];
}

std::vector<std::string> Topology::switch_ids() const {
  std::vector<std::string> out;
  for (const auto& r : racks_)
    out.push_back(tor_id(r.id));
  for (std::uint32_t i = 0; i < leaves_; ++i)
    out.push_back(leaf_id(i));
  for (std::uint32_t i = 0; i < spines_; ++i)
    out.push_back(spine_id(i));
  return out;
}

std::vector<std::string> Topology::spine_ids() const {
  std::vector<std::string> out;
  for (std::uint32_t i = 0; i < spines_; ++i)
    out.push_back(spine_id(i));
  return out;
}

void Topology::place(const Workload& w) {
  const auto& p = w.placement;
  auto rit = server_rack_.find(p.server);
  if (rit == server_rack_.end())
    throw ModelError("workload '" + w.id + "' placed on unknown server " + std::to_string(p.server));
  if (rit->second != p.rack)
    throw ModelError("workload '" + w.id + "': server " + std::to_string(p.server) +
                     " is not in rack " + std::to_string(p.rack));
  for (auto& server : racks_[p.rack].servers) {
    if (server.id != p.server)
      continue;
    if (p.vm >= server.vms.size())
      throw ModelError("workload '" + w.id + "' placed on unknown vm " + std::to_string(p.vm));
    server.vms[p.vm].workload_ids.push_back(w.id);
    return;
  }
}

void Topology::unplace(const Workload& w) {
  for (auto& server : racks_.at(w.placement.rack).servers) {
    if (server.id != w.placement.server)
      continue;
    auto& ids = server.vms.at(w.placement.vm).workload_ids;
    std::erase(ids, w.id);
  }
}

Topology::Route Topology::route(GatewayId src, GatewayId dst, std::uint64_t ecmp_hash) const {
  Route r;
  if (src == dst)
    return r;
  const auto ra = rack_of(src);
  const auto rb = rack_of(dst);
  if (ra == rb) {
    r.hops[r.size++] = {Tier::tor, ra};
    return r;
  }
  const auto spine = static_cast<std::uint32_t>(ecmp_hash % spines_);
  r.hops = {SwitchRef{Tier::tor, ra}, {Tier::leaf, racks_[ra].leaf}, {Tier::spine, spine},
            {Tier::leaf, racks_[rb].leaf}, {Tier::tor, rb}};
  r.size = 5;
  return r;
}

std::vector<std::string> Topology::path(GatewayId src, GatewayId dst, std::uint64_t ecmp_hash) const {
  const Route r = route(src, dst, ecmp_hash);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < r.size; ++i)
    out.push_back(switch_id(r.hops[i]));
  return out;
}

std::string Topology::switch_id(SwitchRef ref) {
  switch (ref.tier) {
  case Tier::tor: return tor_id(ref.index);
  case Tier::leaf: return leaf_id(ref.index);
  case Tier::spine: return spine_id(ref.index);
  }
  return {};
}

Topology build_topology(const TopologySpec& spec) {
  if (spec.racks == 0 || spec.servers_per_rack == 0 || spec.vms_per_server == 0 ||
      spec.leaves == 0 || spec.spines == 0)
    throw ModelError("every topology count must be at least 1");
  Topology t;
  t.leaves_ = spec.leaves;
  t.spines_ = spec.spines;
  t.leaf_spine_.assign(spec.leaves, std::vector<bool>(spec.spines, true));
  for (std::uint32_t r = 0; r < spec.racks; ++r) {
    RackNode rack{r, r % spec.leaves, {}};
    for (std::uint32_t i = 0; i < spec.servers_per_rack; ++i) {
      ServerNode server{r * spec.servers_per_rack + i, {}};
      for (std::uint32_t v = 0; v < spec.vms_per_server; ++v)
        server.vms.push_back({v, {}});
      t.server_rack_.emplace(server.id, r);
      rack.servers.push_back(std::move(server));
    }
    t.racks_.push_back(std::move(rack));
  }
  return t;
}

const Rule* SwitchTable::match(SaclPair ids) const {
  auto it = index_.find(ids);
  return it == index_.end() ? nullptr : &it->second;
}

std::string_view to_string(TraceAction a) {
  switch (a) {
  case TraceAction::forwarded: return "forwarded";
  case TraceAction::priority_set: return "priority_set";
  case TraceAction::dropped: return "dropped";
  case TraceAction::id_attached: return "id_attached";
  case TraceAction::id_stripped: return "id_stripped";
  case TraceAction::delivered: return "delivered";
  }
  return "unknown";
}

Fabric::Fabric(Topology topology, FabricConfig config)
    : topology_(std::move(topology)), config_(std::move(config)) {
  for (auto s : topology_.servers())
    gateways_.emplace(s, std::make_unique<Gateway>(s, config_.gateway));
  for (const auto& id : topology_.switch_ids()) {
    SwitchTable t;
    t.mode = filters(id) ? SwitchMode::priority_and_filter : SwitchMode::priority_only;
    switches_.emplace(id, std::move(t));
  }
  by_tier_[0].resize(topology_.racks().size());
  by_tier_[1].resize(topology_.leaf_count());
  by_tier_[2].resize(topology_.spine_count());
  for (std::size_t tier = 0; tier < by_tier_.size(); ++tier)
    for (std::uint32_t i = 0; i < by_tier_[tier].size(); ++i)
      by_tier_[tier][i] = &*switches_.find(
          Topology::switch_id({static_cast<Topology::Tier>(tier), i}));
}

Fabric::SwitchSlot& Fabric::slot(Topology::SwitchRef ref) {
  return *by_tier_[static_cast<std::size_t>(ref.tier)][ref.index];
}

bool Fabric::filters(const std::string& switch_id) const {
  if (config_.filter_mode != FilterMode::gateway_and_fabric)
    return false;
  return config_.border_switches.empty() || config_.border_switches.count(switch_id) != 0;
}

void Fabric::add_workload(const Workload& w) {
  if (workloads_.count(w.id))
    throw ModelError("workload '" + w.id + "' already present in the fabric");
  topology_.place(w);
  workloads_.emplace(w.id, w);
}

void Fabric::remove_workload(const std::string& workload_id) {
  auto it = workloads_.find(workload_id);
  if (it == workloads_.end())
    throw ModelError("workload '" + workload_id + "' is not in the fabric");
  topology_.unplace(it->second);
  workloads_.erase(it);
}

const Workload& Fabric::workload(const std::string& workload_id) const {
  auto it = workloads_.find(workload_id);
  if (it == workloads_.end())
    throw ModelError("unknown workload '" + workload_id + "'");
  return it->second;
}

void Fabric::install(const DistributionPlan& plan) {
  for (const auto& [gid, tables] : plan.gateway_entries)
    gateway(gid).install(tables);
  for (const auto& [sid, rules] : plan.switch_entries) {
    auto it = switches_.find(sid);
    if (it == switches_.end())
      throw ModelError("plan names unknown switch '" + sid + "'");
    it->second.entries = rules;
    it->second.index_.clear();
    for (const auto& r : rules)
      it->second.index_.emplace(r.pair(), r);
  }
}

Gateway& Fabric::gateway(GatewayId server) {
  auto it = gateways_.find(server);
  if (it == gateways_.end())
    throw ModelError("unknown gateway " + std::to_string(server));
  return *it->second;
}

const Gateway& Fabric::gateway(GatewayId server) const {
  auto it = gateways_.find(server);
  if (it == gateways_.end())
    throw ModelError("unknown gateway " + std::to_string(server));
  return *it->second;
}

const SwitchTable& Fabric::switch_table(const std::string& switch_id) const {
  auto it = switches_.find(switch_id);
  if (it == switches_.end())
    throw ModelError("unknown switch '" + switch_id + "'");
  return it->second;
}

std::size_t Fabric::count_installed_entries(const std::string& device) const {
  if (auto it = switches_.find(device); it != switches_.end())
    return it->second.entries.size();
  if (device.rfind("gw-", 0) == 0) {
    const auto& g = gateway(static_cast<GatewayId>(std::stoul(device.substr(3))));
    const auto t = g.tables();
    return t->client_map.size() + t->server_map.size() + g.server_conntrack().size();
  }
  throw ModelError("unknown device '" + device + "'");
}

void Fabric::advance(LogicalTime dt) {
  for (auto& [id, g] : gateways_)
    g->advance(dt);
}

Trace Fabric::send(const Flow& flow, Direction direction, std::span<const std::uint8_t> payload) {
  const Workload& client = workload(flow.client);
  const Workload& server = workload(flow.server);
  if (!server.is_server())
    throw ModelError("workload '" + server.id + "' does not listen");
  if (flow.tuple.src_ip != client.ip || flow.tuple.dst_ip != server.ip ||
      flow.tuple.dst_port != *server.listen_port)
    throw ModelError("flow tuple does not match workloads '" + client.id + "' -> '" + server.id + "'");
  flow.tuple.validate();

  const bool fwd = direction == Direction::forward;
  const Workload& from = fwd ? client : server;
  const Workload& to = fwd ? server : client;
  const FiveTuple tuple = fwd ? flow.tuple : flow.tuple.reversed();

  codec::SaclPacket pkt;
  pkt.src_ip = tuple.src_ip;
  pkt.dst_ip = tuple.dst_ip;
  pkt.src_port = tuple.src_port;
  pkt.dst_port = tuple.dst_port;
  pkt.proto = tuple.proto;
  pkt.hop_limit = from.lid ? codec::mark_lid(*from.lid) : codec::kDefaultHopLimit;
  pkt.payload.assign(payload.begin(), payload.end());

  Trace trace;
  trace.reserve(8);
  last_wire_.clear();
  last_delivered_.clear();
  Gateway& src_gw = gateway(from.placement.server);
  const std::string src_name = Topology::gateway_id(src_gw.id());
  Verdict out = fwd ? src_gw.egress_client(std::move(pkt)) : src_gw.egress_server(std::move(pkt));
  if (!out) {
    trace.push_back({src_name, TraceAction::dropped, std::nullopt, {}});
    return trace;
  }
  trace.push_back({src_name, out->has_ids() ? TraceAction::id_attached : TraceAction::forwarded,
                   std::nullopt, out->ids()});

  last_wire_ = codec::encode(*out);
  const auto route = topology_.route(from.placement.server, to.placement.server, stable_hash(flow.tuple));
  // Switches only read the packet, so one parse serves every hop.
  const auto seen = codec::decode(last_wire_);
  for (std::size_t i = 0; i < route.size; ++i) {
    const auto& [hop, table] = slot(route.hops[i]);
    const Rule* rule = seen.has_ids() ? table.match(seen.ids()) : nullptr;
    if (table.mode == SwitchMode::priority_and_filter && !rule) {
      trace.push_back({hop, TraceAction::dropped, std::nullopt, seen.ids()});
      return trace;
    }
    if (rule && rule->action == Action::priority)
      trace.push_back({hop, TraceAction::priority_set, rule->value, seen.ids()});
    else
      trace.push_back({hop, TraceAction::forwarded, std::nullopt, seen.ids()});
  }

  Gateway& dst_gw = gateway(to.placement.server);
  const std::string dst_name = Topology::gateway_id(dst_gw.id());
  auto arriving = codec::decode(last_wire_);
  const SaclPair arriving_ids = arriving.ids();
  Verdict in = fwd ? dst_gw.ingress_server(std::move(arriving)) : dst_gw.ingress_client(std::move(arriving));
  if (!in) {
    trace.push_back({dst_name, TraceAction::dropped, std::nullopt, arriving_ids});
    return trace;
  }
  last_delivered_ = codec::encode(*in);
  trace.push_back({dst_name, TraceAction::id_stripped, std::nullopt, arriving_ids});
  trace.push_back({to.id, TraceAction::delivered, std::nullopt, in->ids()});
  return trace;
}

std::string format_trace(const Trace& trace) {
  std::ostringstream os;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& e = trace[i];
    os << i << ' ' << e.hop << ' ' << to_string(e.action);
    if (e.value)
      os << ' ' << static_cast<unsigned>(*e.value);
    os << '\n';
  }
  return os.str();
}

bool delivered(const Trace& trace) {
  return !trace.empty() && trace.back().action == TraceAction::delivered;
}

} // namespace acila
