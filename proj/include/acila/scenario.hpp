#pragma once

// Scenario files: line-oriented text, '#' starts a comment.
//
//   acila-scenario 1
//   topology racks=2 servers_per_rack=2 vms_per_server=2 leaves=2 spines=2
//   border spine-0 leaf-1
//   filter_mode gateway+fabric
//   default_action deny
//   conntrack ttl=1000 capacity=65536
//   workload id=w1 labels=app:web,env:prod ip=fd00::1 port=8080 lid=5 place=0/1/0
//   policy id=p1 action=priority value=7 client=app:in:web|api;env:not_in:dev server=app:in:db
//   connection client=w1 server=w2 count=1
//   flow client=w1 server=w2 proto=tcp sport=40000 direction=forward
//   tick 10
//   change add-workload <workload fields>
//   change remove-workload id=w1
//   change delete-service labels=app:web
//   change add-policy <policy fields>
//   change remove-policy id=p1
//   generate assumption alpha=1
//
// place= is rack/server/vm with a global server number. The first
// non-comment line must be the schema header.

#include "acila/fabric.hpp"
#include "acila/gateway.hpp"
#include "acila/model.hpp"

#include <cstdint>
#include <istream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace acila::cli {

inline constexpr int kSchemaVersion = 1;

class ScenarioError : public std::runtime_error {
public:
  ScenarioError(std::string source, int line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

private:
  int line_;
};

struct WorkloadDecl {
  Workload workload;
  int line = 0;
};

struct PolicyDecl {
  Policy policy;
  int line = 0;
};

struct ConnectionDecl {
  std::string client;
  std::string server;
  std::uint64_t count = 1;
  int line = 0;
};

struct TrafficDecl {
  enum class Kind : std::uint8_t { flow, tick };
  Kind kind = Kind::flow;
  std::string client;
  std::string server;
  Proto proto = Proto::tcp;
  std::uint16_t src_port = 0;
  std::optional<std::uint16_t> dst_port;
  Direction direction = Direction::forward;
  LogicalTime ticks = 0;
  int line = 0;
};

struct ChangeDecl {
  enum class Kind : std::uint8_t { add_workload, remove_workload, delete_service, add_policy, remove_policy };
  Kind kind = Kind::add_workload;
  Workload workload; // add_workload
  Policy policy;     // add_policy
  std::string id;    // remove_workload, remove_policy
  LabelSet labels;   // delete_service
  int line = 0;

  std::string describe() const;
};

struct AssumptionParams {
  double alpha = 1.0;
  std::uint32_t vms_per_server = 8;
  std::uint32_t service_size = 15;
  std::uint64_t connections_per_pair = 1;
  std::uint8_t priority = 7;
};

struct ScenarioFile {
  std::string source = "<memory>";
  int schema_version = kSchemaVersion;
  TopologySpec topology;
  std::set<std::string> border_switches;
  std::optional<FilterMode> filter_mode; // the command line may override
  DefaultAction default_action = DefaultAction::deny;
  GatewayConfig gateway;
  std::vector<WorkloadDecl> workloads;
  std::vector<PolicyDecl> policies;
  std::vector<ConnectionDecl> connections;
  std::vector<TrafficDecl> traffic;
  std::vector<ChangeDecl> changes;
  std::optional<AssumptionParams> assumption;
};

ScenarioFile parse_scenario(std::istream& in, std::string source);
ScenarioFile load_scenario(const std::string& path);

// Workloads, policies and connections for the reference sizing: every
// server runs 8 VMs, Services have 15 workloads, each Service has priority
// edges to 2 others, one connection per related workload pair.
//
// alpha scales the workloads per server, floor(128 * alpha) (at least 2).
// With m workloads per server there are 2m Services; Service s has edges to
// s+1 and s+m+1 (mod 2m). Servers 0..14 host one workload of each Service
// 0..m-1, servers 15..29 one of each Service m..2m-1. Every gateway then
// sees m distinct Services whose server Services do not overlap, so the
// worst-case server-table count is exact.
ScenarioFile generate_assumption(const AssumptionParams& params);

// Workloads per server the generator uses for alpha.
std::uint32_t assumption_workloads_per_server(double alpha);

} // namespace acila::cli
