#pragma once

// Controller: owns workloads, Services and Policies, compiles Policies into
// Rules and computes what every gateway and fabric switch must hold.
//
// Plans are always recomputed from scratch. Update costs are measured by
// diffing two successive plans (see plan_diff).

#include "acila/gateway.hpp"
#include "acila/model.hpp"

#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace acila {

class ControllerError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

enum class AssignEvent : std::uint8_t { assigned_existing, created_new };

struct Assignment {
  Service service;
  AssignEvent event;
};

enum class ControllerEvent : std::uint8_t {
  service_created,
  service_deleted,
  policy_upserted,
  policy_deleted,
};

struct DistributionPlan {
  std::map<GatewayId, GatewayTables> gateway_entries;
  std::map<std::string, std::vector<Rule>> switch_entries;

  bool operator==(const DistributionPlan&) const = default;
};

class Controller {
public:
  Controller() = default;
  Controller(std::set<GatewayId> gateways, std::vector<std::string> switches);

  void add_gateway(GatewayId id) { gateways_.insert(id); }
  void add_switch(std::string id);
  const std::set<GatewayId>& gateways() const noexcept { return gateways_; }
  const std::vector<std::string>& switches() const noexcept { return switches_; }

  void set_default_action(DefaultAction a) noexcept { default_action_ = a; }

  Assignment register_workload(Workload w);
  Workload deregister_workload(const std::string& workload_id);

  // Removes a Service together with every workload still assigned to it.
  // Returns the removed workloads. Its SaclId is never issued again.
  std::vector<Workload> delete_service(SaclId id);

  void upsert_policy(Policy p);
  Policy remove_policy(const std::string& policy_id);

  // One Rule per (client Service, server Service) matched by the Policy,
  // sorted by (client, server).
  std::vector<Rule> compile_policy(const Policy& p) const;

  // Rules of every policy merged per (client, server) pair: priority beats
  // allow, and the highest priority value wins. Sorted by (client, server).
  std::vector<Rule> all_rules() const;

  DistributionPlan recompile_on_event(ControllerEvent event) const;
  DistributionPlan plan() const;

  GatewayTables build_gateway_tables(GatewayId gateway) const;

  const Service* find_service(SaclId id) const;
  const Service* find_service(const LabelSet& labels) const;
  const Service& service_of(const std::string& workload_id) const;
  std::vector<Service> services() const;
  std::vector<std::string> members(SaclId id) const;

  const std::map<std::string, Workload>& workloads() const noexcept { return workloads_; }
  const std::map<std::string, Policy>& policies() const noexcept { return policies_; }
  std::uint64_t next_sacl_id() const noexcept { return next_id_; }

private:
  GatewayTables build_gateway_tables(GatewayId gateway, const std::vector<Rule>& rules) const;
  void index_add(const Workload& w);
  void index_remove(const Workload& w);

  using ListenKey = std::pair<Ipv6Address, std::uint16_t>;
  using LocalKey = std::tuple<GatewayId, Ipv6Address, std::optional<std::uint32_t>>;

  std::map<LabelSet, Service> services_;
  std::map<SaclId, LabelSet> labels_by_id_;
  std::map<SaclId, std::set<std::string>> members_;
  std::map<std::string, Workload> workloads_;
  std::map<ListenKey, std::string> by_listen_;
  std::map<LocalKey, std::string> by_local_;
  std::map<std::string, Policy> policies_;
  std::set<GatewayId> gateways_;
  std::vector<std::string> switches_;
  DefaultAction default_action_ = DefaultAction::deny;
  std::uint64_t next_id_ = 1;
};

// Number of (client, server) keys whose switch entry was added, removed or
// changed between two rule lists.
std::size_t rule_diff(const std::vector<Rule>& before, const std::vector<Rule>& after);

// rule_diff for one switch of two plans.
std::size_t plan_diff(const DistributionPlan& before, const DistributionPlan& after,
                      const std::string& switch_id);

} // namespace acila
