#include "acila/gateway.hpp"

namespace acila {

namespace {

void clear_ids(codec::SaclPacket& pkt) {
  pkt.client_sacl = {};
  pkt.server_sacl = {};
}

void attach(codec::SaclPacket& pkt, SaclPair ids) {
  pkt.client_sacl = ids.first;
  pkt.server_sacl = ids.second;
}

} // namespace

Gateway::Gateway(GatewayId id, GatewayConfig config)
    : id_(id),
      config_(config),
      tables_(std::make_shared<const GatewayTables>()),
      client_ct_(config.conntrack_capacity, config.conntrack_ttl),
      server_ct_(config.conntrack_capacity, config.conntrack_ttl) {}

void Gateway::install(std::shared_ptr<const GatewayTables> tables) {
  if (!tables)
    throw ModelError("gateway tables must not be null");
  std::lock_guard lock(tables_mu_);
  tables_ = std::move(tables);
}

std::shared_ptr<const GatewayTables> Gateway::tables() const {
  std::lock_guard lock(tables_mu_);
  return tables_;
}

ClientKey Gateway::client_key(const GatewayTables& tables, const codec::SaclPacket& pkt) {
  // Keys for one ip are contiguous and (ip, nullopt) sorts first, so any
  // LID-keyed entry for this ip follows it.
  auto it = tables.client_map.lower_bound(ClientKey{pkt.src_ip, std::nullopt});
  if (it != tables.client_map.end() && it->first.ip == pkt.src_ip && !it->first.lid)
    ++it;
  const bool lid_marked = it != tables.client_map.end() && it->first.ip == pkt.src_ip;
  if (!lid_marked)
    return {pkt.src_ip, std::nullopt};
  return {pkt.src_ip, codec::read_lid(pkt.hop_limit)};
}

Verdict Gateway::fallback(codec::SaclPacket pkt, const GatewayTables& t) const {
  if (t.default_action == DefaultAction::deny)
    return std::nullopt;
  clear_ids(pkt);
  return pkt;
}

Verdict Gateway::egress_client(codec::SaclPacket pkt) {
  const auto t = tables();
  clear_ids(pkt); // workloads never get to choose their own ids
  const ClientKey key = client_key(*t, pkt);
  const FiveTuple tuple = pkt.tuple();

  if (const auto* e = client_ct_.lookup(tuple, now_); e && e->lid == key.lid) {
    attach(pkt, e->ids);
    pkt.hop_limit = config_.default_hop_limit;
    return pkt;
  }

  auto client = t->client_map.find(key);
  auto server = t->server_map.find(ServerKey{pkt.dst_ip, pkt.dst_port});
  if (client == t->client_map.end() || server == t->server_map.end())
    return fallback(std::move(pkt), *t);

  const SaclPair ids{client->second, server->second};
  attach(pkt, ids);
  pkt.hop_limit = config_.default_hop_limit;
  client_ct_.upsert(tuple, ids, now_, key.lid);
  return pkt;
}

Verdict Gateway::ingress_server(codec::SaclPacket pkt) {
  const auto t = tables();
  const FiveTuple tuple = pkt.tuple();
  if (pkt.has_ids() && t->filter_rules.count(pkt.ids()) != 0) {
    server_ct_.upsert(tuple, pkt.ids(), now_);
    clear_ids(pkt);
    return pkt;
  }
  if (const auto* e = server_ct_.lookup(tuple, now_); e && (!pkt.has_ids() || e->ids == pkt.ids())) {
    clear_ids(pkt);
    return pkt;
  }
  return fallback(std::move(pkt), *t);
}

Verdict Gateway::egress_server(codec::SaclPacket pkt) {
  const auto t = tables();
  clear_ids(pkt);
  if (const auto* e = server_ct_.lookup(pkt.tuple().reversed(), now_)) {
    attach(pkt, e->ids);
    return pkt;
  }
  return fallback(std::move(pkt), *t);
}

Verdict Gateway::ingress_client(codec::SaclPacket pkt) {
  const auto t = tables();
  const auto* e = client_ct_.lookup(pkt.tuple().reversed(), now_);
  if (e && (!pkt.has_ids() || e->ids == pkt.ids())) {
    clear_ids(pkt);
    return pkt;
  }
  return fallback(std::move(pkt), *t);
}

Verdict Gateway::egress(codec::SaclPacket pkt) {
  if (server_ct_.peek(pkt.tuple().reversed(), now_))
    return egress_server(std::move(pkt));
  return egress_client(std::move(pkt));
}

Verdict Gateway::ingress(codec::SaclPacket pkt) {
  if (client_ct_.peek(pkt.tuple().reversed(), now_))
    return ingress_client(std::move(pkt));
  return ingress_server(std::move(pkt));
}

std::size_t Gateway::conntrack_gc() {
  return client_ct_.gc(now_) + server_ct_.gc(now_);
}

} // namespace acila
