#pragma once

// Closed-form entry counts for priority control in a leaf-spine fabric.
//
// Two approaches are modeled:
//  - conventional: every spine holds one entry per prioritized
//    (source workload, destination workload) pair. Because a switch cannot
//    tell requests from replies, the Service graph is made undirected first.
//  - proposed: every spine holds one (client Service, server Service) entry
//    per directed edge of the Service graph; gateways hold per-workload
//    tables instead.
//
// Notation used below: W_s is the set of workloads of Service s, SS(s) the
// server Services s has an edge to, CS(s) the client Services with an edge
// to s, c(a, b) the number of live connections from workload a to b.

#include "acila/controller.hpp"
#include "acila/model.hpp"

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace acila::entry {

using Count = std::uint64_t;
using WorkloadPair = std::pair<std::string, std::string>;

struct Scenario {
  std::map<std::string, GatewayId> placement;
  std::map<std::string, SaclId> service_of;
  std::set<std::string> listeners; // workloads with a listen port
  // Every Service, including ones that currently have no workloads.
  std::map<SaclId, std::vector<std::string>> members;
  // Service graph: one merged Rule per directed (client, server) edge.
  std::map<SaclPair, Rule> edges;
  std::map<WorkloadPair, Count> connections;
  std::set<GatewayId> gateways;

  static Scenario from_controller(const Controller& c, std::map<WorkloadPair, Count> connections = {});

  // Throws ModelError when edges or connections name unknown Services or
  // workloads, or a connection runs between unrelated Services.
  void validate() const;

  Count size(SaclId s) const;
  std::vector<SaclId> server_services(SaclId s) const; // SS(s)
  std::vector<SaclId> client_services(SaclId s) const; // CS(s)
  // SS(s) and CS(s) of the undirected closure, which coincide.
  std::vector<SaclId> neighbors(SaclId s) const;
  std::vector<std::string> workloads_on(GatewayId g) const;
  bool has_self_edges() const;
};

// ---- Conventional approach ----

// el: sum over workloads w of sum over s_k in SS(s(w)) of |W_{s_k}|, on the
// undirected closure of the Service graph.
Count conventional_spine_entries(const Scenario& sc);

// Raw formulas, for callers that already have the neighborhood sizes.
Count elu_workload_formula(std::span<const Count> server_sizes, std::span<const Count> client_sizes);
constexpr Count elu_service_pair_formula(Count client_size, Count server_size) {
  return client_size * server_size;
}

// ---- Proposed approach ----

// es: number of directed Service-graph edges.
Count proposed_spine_entries(const Scenario& sc);

struct GatewayCounts {
  Count escc = 0; // client id attachment: one per local workload
  Count escs = 0; // server id attachment, worst case without overlap
  Count ess = 0;  // conntrack entries for accepted connections

  Count total() const noexcept { return escc + escs + ess; }
  bool operator==(const GatewayCounts&) const = default;
};

GatewayCounts gateway_entry_counts(const Scenario& sc, GatewayId gateway);

// c(w): live connections into server workload w from its client Services.
Count inbound_connections(const Scenario& sc, const std::string& workload);

// ---- Update counts ----

struct Change {
  enum class Kind : std::uint8_t { workload, service, priority };
  Kind kind = Kind::workload;
  std::string workload;        // Kind::workload
  SaclId service;              // Kind::service
  SaclPair pair;               // Kind::priority: (client, server)

  static Change of_workload(std::string id) { return {Kind::workload, std::move(id), {}, {}}; }
  static Change of_service(SaclId s) { return {Kind::service, {}, s, {}}; }
  static Change of_priority(SaclId client, SaclId server) { return {Kind::priority, {}, {}, {client, server}}; }
};

// elu_w, elu_s or elu_{s_i s_j}, evaluated on the scenario that contains the
// changed element. The priority value is per direction.
Count conventional_update_count(const Scenario& sc, const Change& change);

// esu_w (always 0), esu_s = |SS(s)| + |CS(s)|, esu_{s_i s_j} = 1.
Count proposed_update_count(const Scenario& sc, const Change& change);

// ---- Report ----

struct EntryReport {
  Count el = 0;
  Count es = 0;
  std::map<GatewayId, GatewayCounts> gateways;
  bool reduction_holds = true;  // es <= el
  bool strict_expected = false; // some edge joins a Service with >= 2 workloads
  bool strict_holds = true;     // es < el whenever strict_expected

  GatewayCounts totals() const;
};

EntryReport comparison_report(const Scenario& sc);

// ---- Measurement ----

// Concrete conventional spine entries: ordered (source, destination)
// workload pairs that need a priority entry.
std::set<WorkloadPair> conventional_entry_set(const Scenario& sc);

// Size of conventional_entry_set, enumerated over integer indices.
Count conventional_entry_count(const Scenario& sc);

template <class T>
Count symmetric_difference_size(const std::set<T>& a, const std::set<T>& b) {
  Count n = 0;
  for (const auto& x : a)
    n += b.count(x) == 0;
  for (const auto& x : b)
    n += a.count(x) == 0;
  return n;
}

} // namespace acila::entry
