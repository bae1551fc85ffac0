#include "acila/controller.hpp"

#include <algorithm>

namespace acila {

namespace {

using RuleIndex = std::map<SaclId, std::vector<SaclId>>; // client -> servers

bool better(const Rule& a, const Rule& b) {
  if (a.action != b.action)
    return a.action == Action::priority;
  return a.value.value_or(0) > b.value.value_or(0);
}

} // namespace

Controller::Controller(std::set<GatewayId> gateways, std::vector<std::string> switches)
    : gateways_(std::move(gateways)) {
  for (auto& s : switches)
    add_switch(std::move(s));
}

void Controller::add_switch(std::string id) {
  if (std::find(switches_.begin(), switches_.end(), id) != switches_.end())
    throw ControllerError("switch '" + id + "' declared twice");
  switches_.push_back(std::move(id));
}

Assignment Controller::register_workload(Workload w) {
  w.validate();
  if (workloads_.count(w.id))
    throw ControllerError("workload '" + w.id + "' is already registered");
  if (!gateways_.count(w.placement.server))
    throw ControllerError("workload '" + w.id + "' is placed on unknown gateway " +
                          std::to_string(w.placement.server));
  if (w.is_server())
    if (auto it = by_listen_.find({w.ip, *w.listen_port}); it != by_listen_.end())
      throw ControllerError("workload '" + w.id + "' reuses the listen address of '" + it->second + "'");
  if (auto it = by_local_.find({w.placement.server, w.ip, w.lid}); it != by_local_.end())
    throw ControllerError("workload '" + w.id + "' has the same (ip, lid) as '" + it->second + "'");

  Assignment result{};
  if (auto it = services_.find(w.labels); it != services_.end()) {
    result = {it->second, AssignEvent::assigned_existing};
  } else {
    Service s{SaclId{next_id_++}, w.labels};
    services_.emplace(s.labels, s);
    labels_by_id_.emplace(s.id, s.labels);
    members_[s.id];
    result = {std::move(s), AssignEvent::created_new};
  }
  members_[result.service.id].insert(w.id);
  index_add(w);
  workloads_.emplace(w.id, std::move(w));
  return result;
}

Workload Controller::deregister_workload(const std::string& workload_id) {
  auto it = workloads_.find(workload_id);
  if (it == workloads_.end())
    throw ControllerError("workload '" + workload_id + "' is not registered");
  const SaclId sid = services_.at(it->second.labels).id;
  members_[sid].erase(workload_id);
  index_remove(it->second);
  Workload removed = std::move(it->second);
  workloads_.erase(it);
  return removed;
}

std::vector<Workload> Controller::delete_service(SaclId id) {
  auto lit = labels_by_id_.find(id);
  if (lit == labels_by_id_.end())
    throw ControllerError("unknown service " + std::to_string(id.value));
  std::vector<Workload> removed;
  for (const auto& wid : members_[id]) {
    index_remove(workloads_.at(wid));
    removed.push_back(std::move(workloads_.at(wid)));
    workloads_.erase(wid);
  }
  members_.erase(id);
  services_.erase(lit->second);
  labels_by_id_.erase(lit);
  return removed;
}

void Controller::index_add(const Workload& w) {
  if (w.is_server())
    by_listen_.emplace(ListenKey{w.ip, *w.listen_port}, w.id);
  by_local_.emplace(LocalKey{w.placement.server, w.ip, w.lid}, w.id);
}

void Controller::index_remove(const Workload& w) {
  if (w.is_server())
    by_listen_.erase({w.ip, *w.listen_port});
  by_local_.erase({w.placement.server, w.ip, w.lid});
}

void Controller::upsert_policy(Policy p) {
  p.validate();
  policies_[p.id] = std::move(p);
}

Policy Controller::remove_policy(const std::string& policy_id) {
  auto it = policies_.find(policy_id);
  if (it == policies_.end())
    throw ControllerError("policy '" + policy_id + "' is not registered");
  Policy p = std::move(it->second);
  policies_.erase(it);
  return p;
}

std::vector<Rule> Controller::compile_policy(const Policy& p) const {
  std::vector<SaclId> clients, servers;
  for (const auto& [labels, svc] : services_) {
    if (labelset_matches(p.client_selectors, labels))
      clients.push_back(svc.id);
    if (labelset_matches(p.server_selectors, labels))
      servers.push_back(svc.id);
  }
  std::sort(clients.begin(), clients.end());
  std::sort(servers.begin(), servers.end());
  std::vector<Rule> rules;
  rules.reserve(clients.size() * servers.size());
  for (auto c : clients)
    for (auto s : servers)
      rules.push_back({c, s, p.action, p.value});
  return rules;
}

std::vector<Rule> Controller::all_rules() const {
  std::map<SaclPair, Rule> merged;
  for (const auto& [id, p] : policies_) {
    for (auto& r : compile_policy(p)) {
      auto [it, fresh] = merged.emplace(r.pair(), r);
      if (!fresh && better(r, it->second))
        it->second = r;
    }
  }
  std::vector<Rule> out;
  out.reserve(merged.size());
  for (auto& [k, r] : merged)
    out.push_back(r);
  return out;
}

DistributionPlan Controller::recompile_on_event(ControllerEvent) const {
  return plan();
}

DistributionPlan Controller::plan() const {
  DistributionPlan out;
  const auto rules = all_rules();
  for (const auto& sw : switches_)
    out.switch_entries.emplace(sw, rules);
  for (auto g : gateways_)
    out.gateway_entries.emplace(g, build_gateway_tables(g, rules));
  return out;
}

GatewayTables Controller::build_gateway_tables(GatewayId gateway) const {
  return build_gateway_tables(gateway, all_rules());
}

GatewayTables Controller::build_gateway_tables(GatewayId gateway, const std::vector<Rule>& rules) const {
  if (!gateways_.count(gateway))
    throw ControllerError("unknown gateway " + std::to_string(gateway));
  GatewayTables t;
  t.default_action = default_action_;

  std::set<SaclId> local_services;
  for (const auto& [id, w] : workloads_) {
    if (w.placement.server != gateway)
      continue;
    const SaclId sid = services_.at(w.labels).id;
    local_services.insert(sid);
    t.client_map.emplace(ClientKey{w.ip, w.lid}, sid);
  }
  if (local_services.empty())
    return t;

  std::set<SaclId> reachable;
  for (const auto& r : rules) {
    if (local_services.count(r.client))
      reachable.insert(r.server);
    if (local_services.count(r.server))
      t.filter_rules.insert(r.pair());
  }
  for (auto sid : reachable) {
    for (const auto& wid : members_.at(sid)) {
      const auto& w = workloads_.at(wid);
      if (w.is_server())
        t.server_map.emplace(ServerKey{w.ip, *w.listen_port}, sid);
    }
  }
  return t;
}

const Service* Controller::find_service(SaclId id) const {
  auto it = labels_by_id_.find(id);
  return it == labels_by_id_.end() ? nullptr : &services_.at(it->second);
}

const Service* Controller::find_service(const LabelSet& labels) const {
  auto it = services_.find(labels);
  return it == services_.end() ? nullptr : &it->second;
}

const Service& Controller::service_of(const std::string& workload_id) const {
  auto it = workloads_.find(workload_id);
  if (it == workloads_.end())
    throw ControllerError("workload '" + workload_id + "' is not registered");
  return services_.at(it->second.labels);
}

std::vector<Service> Controller::services() const {
  std::vector<Service> out;
  for (const auto& [id, labels] : labels_by_id_)
    out.push_back(services_.at(labels));
  return out;
}

std::vector<std::string> Controller::members(SaclId id) const {
  auto it = members_.find(id);
  if (it == members_.end())
    throw ControllerError("unknown service " + std::to_string(id.value));
  return {it->second.begin(), it->second.end()};
}

std::size_t rule_diff(const std::vector<Rule>& before, const std::vector<Rule>& after) {
  std::map<SaclPair, const Rule*> a, b;
  for (const auto& r : before)
    a.emplace(r.pair(), &r);
  for (const auto& r : after)
    b.emplace(r.pair(), &r);
  std::size_t diff = 0;
  for (const auto& [k, r] : a) {
    auto it = b.find(k);
    if (it == b.end() || !(*it->second == *r))
      ++diff;
  }
  for (const auto& [k, r] : b)
    if (!a.count(k))
      ++diff;
  return diff;
}

std::size_t plan_diff(const DistributionPlan& before, const DistributionPlan& after,
                      const std::string& switch_id) {
  static const std::vector<Rule> none;
  auto pick = [&](const DistributionPlan& p) -> const std::vector<Rule>& {
    auto it = p.switch_entries.find(switch_id);
    return it == p.switch_entries.end() ? none : it->second;
  };
  return rule_diff(pick(before), pick(after));
}

} // namespace acila
