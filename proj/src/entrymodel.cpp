#include "acila/entrymodel.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

namespace acila::entry {

namespace {

struct Adjacency {
  std::map<SaclId, std::vector<SaclId>> out, in;
  std::map<SaclId, std::set<SaclId>> undirected;

  explicit Adjacency(const Scenario& sc) {
    for (const auto& [pair, rule] : sc.edges) {
      out[pair.first].push_back(pair.second);
      in[pair.second].push_back(pair.first);
      if (pair.first != pair.second) {
        undirected[pair.first].insert(pair.second);
        undirected[pair.second].insert(pair.first);
      }
    }
  }

  template <class M>
  static const typename M::mapped_type& at(const M& m, SaclId s) {
    static const typename M::mapped_type none{};
    auto it = m.find(s);
    return it == m.end() ? none : it->second;
  }
};

std::unordered_map<std::string_view, SaclId> service_index(const Scenario& sc) {
  std::unordered_map<std::string_view, SaclId> out(sc.service_of.size());
  for (const auto& [id, s] : sc.service_of)
    out.emplace(id, s);
  return out;
}

Count sum_sizes(const Scenario& sc, const auto& services) {
  Count n = 0;
  for (auto s : services)
    n += sc.size(s);
  return n;
}

Count elu_workload_in(const Scenario& sc, const Adjacency& adj, SaclId s) {
  std::vector<Count> sizes;
  for (auto k : Adjacency::at(adj.undirected, s))
    sizes.push_back(sc.size(k));
  // Undirected closure: the server and client neighborhoods are the same set.
  return elu_workload_formula(sizes, sizes);
}

} // namespace

Scenario Scenario::from_controller(const Controller& c, std::map<WorkloadPair, Count> connections) {
  Scenario sc;
  for (const auto& [id, w] : c.workloads()) {
    sc.placement.emplace(id, w.placement.server);
    sc.service_of.emplace(id, c.service_of(id).id);
    if (w.is_server())
      sc.listeners.insert(id);
  }
  for (const auto& s : c.services())
    sc.members.emplace(s.id, c.members(s.id));
  for (const auto& r : c.all_rules())
    sc.edges.emplace(r.pair(), r);
  sc.connections = std::move(connections);
  sc.gateways = c.gateways();
  sc.validate();
  return sc;
}

void Scenario::validate() const {
  for (const auto& [pair, rule] : edges)
    if (!members.count(pair.first) || !members.count(pair.second))
      throw ModelError("service graph edge names an unknown service");
  for (const auto& [id, s] : service_of)
    if (!members.count(s))
      throw ModelError("workload '" + id + "' belongs to an unknown service");
  const auto index = service_index(*this);
  for (const auto& [pair, n] : connections) {
    auto a = index.find(pair.first);
    auto b = index.find(pair.second);
    if (a == index.end() || b == index.end())
      throw ModelError("connection names an unknown workload");
    if (!listeners.count(pair.second))
      throw ModelError("connection target '" + pair.second + "' does not listen");
    if (!edges.count({a->second, b->second}))
      throw ModelError("connection " + pair.first + " -> " + pair.second +
                       " runs between services without a rule");
  }
}

Count Scenario::size(SaclId s) const {
  auto it = members.find(s);
  return it == members.end() ? 0 : it->second.size();
}

std::vector<SaclId> Scenario::server_services(SaclId s) const {
  std::vector<SaclId> out;
  for (const auto& [pair, r] : edges)
    if (pair.first == s)
      out.push_back(pair.second);
  return out;
}

std::vector<SaclId> Scenario::client_services(SaclId s) const {
  std::vector<SaclId> out;
  for (const auto& [pair, r] : edges)
    if (pair.second == s)
      out.push_back(pair.first);
  return out;
}

std::vector<SaclId> Scenario::neighbors(SaclId s) const {
  std::set<SaclId> out;
  for (const auto& [pair, r] : edges) {
    if (pair.first == pair.second)
      continue;
    if (pair.first == s)
      out.insert(pair.second);
    if (pair.second == s)
      out.insert(pair.first);
  }
  return {out.begin(), out.end()};
}

std::vector<std::string> Scenario::workloads_on(GatewayId g) const {
  std::vector<std::string> out;
  for (const auto& [id, gw] : placement)
    if (gw == g)
      out.push_back(id);
  return out;
}

bool Scenario::has_self_edges() const {
  return std::any_of(edges.begin(), edges.end(),
                     [](const auto& e) { return e.first.first == e.first.second; });
}

Count conventional_spine_entries(const Scenario& sc) {
  const Adjacency adj(sc);
  Count el = 0;
  for (const auto& [w, s] : sc.service_of)
    el += sum_sizes(sc, Adjacency::at(adj.undirected, s));
  return el;
}

Count elu_workload_formula(std::span<const Count> server_sizes, std::span<const Count> client_sizes) {
  return std::accumulate(server_sizes.begin(), server_sizes.end(), Count{0}) +
         std::accumulate(client_sizes.begin(), client_sizes.end(), Count{0});
}

Count proposed_spine_entries(const Scenario& sc) {
  return sc.edges.size();
}

Count inbound_connections(const Scenario& sc, const std::string& workload) {
  const SaclId s = sc.service_of.at(workload);
  Count c = 0;
  for (auto k : sc.client_services(s)) {
    auto it = sc.members.find(k);
    if (it == sc.members.end())
      continue;
    for (const auto& client : it->second) {
      auto conn = sc.connections.find({client, workload});
      if (conn != sc.connections.end())
        c += conn->second;
    }
  }
  return c;
}

GatewayCounts gateway_entry_counts(const Scenario& sc, GatewayId gateway) {
  const Adjacency adj(sc);
  GatewayCounts out;
  for (const auto& w : sc.workloads_on(gateway)) {
    const SaclId s = sc.service_of.at(w);
    ++out.escc;
    out.escs += sum_sizes(sc, Adjacency::at(adj.out, s));
    out.ess += inbound_connections(sc, w);
  }
  return out;
}

Count conventional_update_count(const Scenario& sc, const Change& change) {
  const Adjacency adj(sc);
  switch (change.kind) {
  case Change::Kind::workload: {
    auto it = sc.service_of.find(change.workload);
    if (it == sc.service_of.end())
      throw ModelError("unknown workload '" + change.workload + "'");
    return elu_workload_in(sc, adj, it->second);
  }
  case Change::Kind::service: {
    auto it = sc.members.find(change.service);
    if (it == sc.members.end())
      throw ModelError("unknown service " + std::to_string(change.service.value));
    return it->second.size() * elu_workload_in(sc, adj, change.service);
  }
  case Change::Kind::priority:
    if (!sc.members.count(change.pair.first) || !sc.members.count(change.pair.second))
      throw ModelError("priority change names an unknown service");
    return elu_service_pair_formula(sc.size(change.pair.first), sc.size(change.pair.second));
  }
  return 0;
}

Count proposed_update_count(const Scenario& sc, const Change& change) {
  switch (change.kind) {
  case Change::Kind::workload:
    if (!sc.service_of.count(change.workload))
      throw ModelError("unknown workload '" + change.workload + "'");
    return 0;
  case Change::Kind::service: {
    if (!sc.members.count(change.service))
      throw ModelError("unknown service " + std::to_string(change.service.value));
    const Adjacency adj(sc);
    return Adjacency::at(adj.out, change.service).size() + Adjacency::at(adj.in, change.service).size();
  }
  case Change::Kind::priority:
    if (!sc.members.count(change.pair.first) || !sc.members.count(change.pair.second))
      throw ModelError("priority change names an unknown service");
    return 1;
  }
  return 0;
}

GatewayCounts EntryReport::totals() const {
  GatewayCounts t;
  for (const auto& [g, c] : gateways) {
    t.escc += c.escc;
    t.escs += c.escs;
    t.ess += c.ess;
  }
  return t;
}

EntryReport comparison_report(const Scenario& sc) {
  EntryReport r;
  r.el = conventional_spine_entries(sc);
  r.es = proposed_spine_entries(sc);

  // One pass over all workloads and connections instead of one per gateway.
  const Adjacency adj(sc);
  const auto index = service_index(sc);
  std::unordered_map<std::string_view, Count> inbound;
  for (const auto& [pair, n] : sc.connections) {
    const auto c = index.find(pair.first);
    const auto s = index.find(pair.second);
    if (c != index.end() && s != index.end() && sc.edges.count({c->second, s->second}))
      inbound[pair.second] += n;
  }
  for (auto g : sc.gateways)
    r.gateways.emplace(g, GatewayCounts{});
  for (const auto& [w, g] : sc.placement) {
    auto it = r.gateways.find(g);
    if (it == r.gateways.end())
      continue;
    auto& out = it->second;
    ++out.escc;
    out.escs += sum_sizes(sc, Adjacency::at(adj.out, sc.service_of.at(w)));
    if (auto in = inbound.find(w); in != inbound.end())
      out.ess += in->second;
  }
  r.reduction_holds = r.es <= r.el;
  r.strict_expected = std::any_of(sc.edges.begin(), sc.edges.end(), [&](const auto& e) {
    const auto a = sc.size(e.first.first);
    const auto b = sc.size(e.first.second);
    return e.first.first != e.first.second && a >= 1 && b >= 1 && (a >= 2 || b >= 2);
  });
  r.strict_holds = !r.strict_expected || r.es < r.el;
  return r;
}

std::set<WorkloadPair> conventional_entry_set(const Scenario& sc) {
  const Adjacency adj(sc);
  std::set<WorkloadPair> out;
  for (const auto& [src, s] : sc.service_of)
    for (auto k : Adjacency::at(adj.undirected, s))
      for (const auto& dst : sc.members.at(k))
        out.emplace(src, dst);
  return out;
}

Count conventional_entry_count(const Scenario& sc) {
  const Adjacency adj(sc);
  std::map<std::string_view, std::uint64_t> index;
  for (const auto& [id, s] : sc.service_of)
    index.emplace(id, index.size());
  std::map<SaclId, std::vector<std::uint64_t>> members;
  for (const auto& [s, ids] : sc.members)
    for (const auto& id : ids)
      members[s].push_back(index.at(id));
  std::vector<std::uint64_t> pairs;
  for (const auto& [src, s] : sc.service_of) {
    const std::uint64_t i = index.at(src);
    for (auto k : Adjacency::at(adj.undirected, s))
      for (auto j : members[k])
        pairs.push_back(i << 32 | j);
  }
  std::sort(pairs.begin(), pairs.end());
  return static_cast<Count>(std::unique(pairs.begin(), pairs.end()) - pairs.begin());
}

} // namespace acila::entry
