#include "acila/runner.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <tuple>
#include <unordered_map>

namespace acila::cli {

namespace {

constexpr std::uint16_t kFirstEphemeralPort = 10000;

[[noreturn]] void invalid(const ScenarioFile& sf, int line, const std::string& what) {
  throw ScenarioError(sf.source, line, what);
}

class Checker {
public:
  explicit Checker(const RunOptions& opts) : fault_(opts.inject_fault) {}

  void add(std::string device, std::string metric, entry::Count analytic, entry::Count concrete,
           bool upper_bound = false) {
    if (fault_ && *fault_ == device)
      ++concrete;
    CrossCheck c{std::move(device), std::move(metric), analytic, concrete, upper_bound, true};
    c.ok = upper_bound ? concrete <= analytic : concrete == analytic;
    checks.push_back(std::move(c));
  }

  std::vector<CrossCheck> checks;

private:
  std::optional<std::string> fault_;
};

FiveTuple tuple_for(const Workload& client, const Workload& server, Proto proto, std::uint16_t sport,
                    std::optional<std::uint16_t> dport) {
  return {client.ip, server.ip, sport, dport.value_or(*server.listen_port), proto};
}

std::size_t priority_hops(const Trace& t) {
  return static_cast<std::size_t>(std::count_if(t.begin(), t.end(), [](const TraceEvent& e) {
    return e.action == TraceAction::priority_set;
  }));
}

void append_rows(std::vector<std::tuple<std::string, std::string, entry::Count>>& rows,
                 const RunReport& r) {
  rows.emplace_back("spine", "el", r.entries.el);
  rows.emplace_back("spine", "es", r.entries.es);
  for (const auto& [g, c] : r.entries.gateways) {
    const auto dev = Topology::gateway_id(g);
    rows.emplace_back(dev, "escc", c.escc);
    rows.emplace_back(dev, "escs", c.escs);
    rows.emplace_back(dev, "ess", c.ess);
    rows.emplace_back(dev, "es_g", c.total());
  }
  const auto t = r.entries.totals();
  rows.emplace_back("gateway_total", "escc", t.escc);
  rows.emplace_back("gateway_total", "escs", t.escs);
  rows.emplace_back("gateway_total", "ess", t.ess);
  rows.emplace_back("gateway_total", "es_g", t.total());
}

} // namespace

bool RunReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CrossCheck& c) { return c.ok; });
}

std::vector<CrossCheck> RunReport::failures() const {
  std::vector<CrossCheck> out;
  std::copy_if(checks.begin(), checks.end(), std::back_inserter(out), [](const CrossCheck& c) { return !c.ok; });
  return out;
}

ScenarioFile expand(const ScenarioFile& sf, const RunOptions& opts) {
  if (!sf.assumption && !opts.scale)
    return sf;
  AssumptionParams params = sf.assumption.value_or(AssumptionParams{});
  if (opts.scale)
    params.alpha = *opts.scale;
  ScenarioFile out;
  try {
    out = generate_assumption(params);
  } catch (const ModelError& e) {
    invalid(sf, 0, e.what());
  }
  out.source = sf.source;
  out.border_switches = sf.border_switches;
  out.filter_mode = sf.filter_mode;
  out.default_action = sf.default_action;
  out.gateway = sf.gateway;
  out.workloads.insert(out.workloads.end(), sf.workloads.begin(), sf.workloads.end());
  out.policies.insert(out.policies.end(), sf.policies.begin(), sf.policies.end());
  out.connections.insert(out.connections.end(), sf.connections.begin(), sf.connections.end());
  out.traffic = sf.traffic;
  out.changes = sf.changes;
  return out;
}

RunReport run(const ScenarioFile& input, const RunOptions& opts) {
  const ScenarioFile sf = expand(input, opts);

  Topology topology;
  try {
    topology = build_topology(sf.topology);
  } catch (const ModelError& e) {
    invalid(sf, 0, e.what());
  }
  const auto switch_ids = topology.switch_ids();
  for (const auto& b : sf.border_switches)
    if (std::find(switch_ids.begin(), switch_ids.end(), b) == switch_ids.end())
      invalid(sf, 0, "border switch '" + b + "' does not exist");

  const auto servers = topology.servers();
  const FilterMode mode = opts.filter_mode.value_or(sf.filter_mode.value_or(FilterMode::gateway));
  Fabric fabric(topology, {mode, sf.border_switches, sf.gateway});
  Controller ctl(std::set<GatewayId>(servers.begin(), servers.end()), switch_ids);
  ctl.set_default_action(sf.default_action);

  auto register_one = [&](const Workload& w, int line) {
    try {
      fabric.add_workload(w);
    } catch (const ModelError& e) {
      invalid(sf, line, e.what());
    }
    try {
      return ctl.register_workload(w);
    } catch (const std::invalid_argument& e) {
      fabric.remove_workload(w.id);
      invalid(sf, line, e.what());
    }
  };

  for (const auto& d : sf.workloads)
    register_one(d.workload, d.line);
  for (const auto& d : sf.policies) {
    if (ctl.policies().count(d.policy.id))
      invalid(sf, d.line, "policy '" + d.policy.id + "' declared twice");
    ctl.upsert_policy(d.policy);
  }
  fabric.install(ctl.plan());

  // Connections: validate, then replay the first packet of each one.
  std::set<SaclPair> related;
  for (const auto& r : ctl.all_rules())
    related.insert(r.pair());
  std::unordered_map<std::string_view, const Workload*> by_id;
  std::unordered_map<std::string_view, SaclId> service_of;
  for (const auto& [id, w] : ctl.workloads()) {
    by_id.emplace(id, &w);
    service_of.emplace(id, ctl.service_of(id).id);
  }
  std::vector<const ConnectionDecl*> decls;
  decls.reserve(sf.connections.size());
  for (const auto& c : sf.connections) {
    auto client = by_id.find(c.client);
    auto server = by_id.find(c.server);
    if (client == by_id.end() || server == by_id.end())
      invalid(sf, c.line, "connection names an unknown workload");
    if (!server->second->is_server())
      invalid(sf, c.line, "connection target '" + c.server + "' does not listen");
    if (!related.count({service_of.at(c.client), service_of.at(c.server)}))
      invalid(sf, c.line, "no rule relates the services of '" + c.client + "' and '" + c.server + "'");
    decls.push_back(&c);
  }
  std::stable_sort(decls.begin(), decls.end(), [](const ConnectionDecl* a, const ConnectionDecl* b) {
    return std::tie(a->client, a->server) < std::tie(b->client, b->server);
  });
  std::map<entry::WorkloadPair, entry::Count> connections;
  for (const auto* c : decls) {
    auto it = connections.end();
    if (!connections.empty() && std::prev(it)->first == entry::WorkloadPair{c->client, c->server})
      --it;
    else
      it = connections.emplace_hint(it, entry::WorkloadPair{c->client, c->server}, 0);
    it->second += c->count;
    if (it->second > 65535u - kFirstEphemeralPort)
      invalid(sf, c->line, "too many connections between one workload pair");
  }

  struct Pending {
    const Workload* client;
    const Workload* server;
    std::uint16_t sport;
  };
  std::vector<Pending> pending;
  for (const auto& [pair, n] : connections) {
    const Workload* client = by_id.at(pair.first);
    const Workload* server = by_id.at(pair.second);
    for (entry::Count i = 0; i < n; ++i)
      pending.push_back({client, server, static_cast<std::uint16_t>(kFirstEphemeralPort + i)});
  }
  std::mt19937_64 rng(opts.seed);
  std::shuffle(pending.begin(), pending.end(), rng);
  // Seeded order within each source server; grouping keeps one gateway's
  // tables hot.
  std::stable_sort(pending.begin(), pending.end(), [](const Pending& a, const Pending& b) {
    return a.client->placement.server < b.client->placement.server;
  });
  for (const auto& p : pending)
    fabric.send({p.client->id, p.server->id, tuple_for(*p.client, *p.server, Proto::tcp, p.sport, std::nullopt)},
                Direction::forward);

  RunReport report;
  const auto sc = entry::Scenario::from_controller(ctl, std::move(connections));
  report.entries = entry::comparison_report(sc);

  Checker check(opts);
  check.add("spine", "el", report.entries.el, entry::conventional_entry_count(sc));
  for (const auto& spine : topology.spine_ids())
    check.add(spine, "es", report.entries.es, fabric.count_installed_entries(spine));
  for (const auto& [g, counts] : report.entries.gateways) {
    const auto& gw = fabric.gateway(g);
    const auto tables = gw.tables();
    const auto dev = Topology::gateway_id(g);
    check.add(dev, "escc", counts.escc, tables->client_map.size());
    check.add(dev, "escs", counts.escs, tables->server_map.size(), true);
    check.add(dev, "ess", counts.ess, gw.server_conntrack().size());
  }

  for (const auto& t : sf.traffic) {
    if (t.kind == TrafficDecl::Kind::tick) {
      fabric.advance(t.ticks);
      continue;
    }
    const auto& wl = ctl.workloads();
    if (!wl.count(t.client) || !wl.count(t.server))
      invalid(sf, t.line, "flow names an unknown workload");
    const auto& client = wl.at(t.client);
    const auto& server = wl.at(t.server);
    if (!server.is_server())
      invalid(sf, t.line, "flow target '" + t.server + "' does not listen");
    FlowSummary f{t.client, t.server, t.direction, false, 0, {}};
    try {
      f.trace = fabric.send({t.client, t.server, tuple_for(client, server, t.proto, t.src_port, t.dst_port)},
                            t.direction);
    } catch (const ModelError& e) {
      invalid(sf, t.line, e.what());
    }
    f.delivered = delivered(f.trace);
    f.priority_hops = priority_hops(f.trace);
    report.flows.push_back(std::move(f));
  }

  const auto spines = topology.spine_ids();
  for (std::size_t i = 0; i < sf.changes.size(); ++i) {
    const auto& c = sf.changes[i];
    const auto plan_before = ctl.plan();
    const auto sc_before = entry::Scenario::from_controller(ctl);
    ChangeSummary s;
    s.description = c.describe();
    bool check_elu = true;

    try {
      switch (c.kind) {
      case ChangeDecl::Kind::add_workload: {
        const auto a = register_one(c.workload, c.line);
        const auto sc_after = entry::Scenario::from_controller(ctl);
        s.esu = a.event == AssignEvent::created_new
                    ? entry::proposed_update_count(sc_after, entry::Change::of_service(a.service.id))
                    : entry::proposed_update_count(sc_after, entry::Change::of_workload(c.workload.id));
        s.elu = entry::conventional_update_count(sc_after, entry::Change::of_workload(c.workload.id));
        break;
      }
      case ChangeDecl::Kind::remove_workload: {
        if (!ctl.workloads().count(c.id))
          invalid(sf, c.line, "unknown workload '" + c.id + "'");
        s.esu = entry::proposed_update_count(sc_before, entry::Change::of_workload(c.id));
        s.elu = entry::conventional_update_count(sc_before, entry::Change::of_workload(c.id));
        ctl.deregister_workload(c.id);
        fabric.remove_workload(c.id);
        break;
      }
      case ChangeDecl::Kind::delete_service: {
        const Service* svc = ctl.find_service(c.labels);
        if (!svc)
          invalid(sf, c.line, "no service with labels " + c.labels.to_string());
        const SaclId id = svc->id;
        s.esu = entry::proposed_update_count(sc_before, entry::Change::of_service(id));
        s.elu = entry::conventional_update_count(sc_before, entry::Change::of_service(id));
        for (const auto& w : ctl.delete_service(id))
          fabric.remove_workload(w.id);
        break;
      }
      case ChangeDecl::Kind::add_policy:
      case ChangeDecl::Kind::remove_policy: {
        if (c.kind == ChangeDecl::Kind::add_policy)
          ctl.upsert_policy(c.policy);
        else if (!ctl.policies().count(c.id))
          invalid(sf, c.line, "unknown policy '" + c.id + "'");
        else
          ctl.remove_policy(c.id);
        const auto sc_after = entry::Scenario::from_controller(ctl);
        // Each changed Service-graph edge is one priority update; the
        // conventional side pays for both directions.
        std::set<SaclPair> keys;
        for (const auto& [k, r] : sc_before.edges)
          keys.insert(k);
        for (const auto& [k, r] : sc_after.edges)
          keys.insert(k);
        for (const auto& k : keys) {
          auto a = sc_before.edges.find(k);
          auto b = sc_after.edges.find(k);
          const bool changed = a == sc_before.edges.end() || b == sc_after.edges.end() || !(a->second == b->second);
          if (!changed)
            continue;
          const auto& ref = b != sc_after.edges.end() ? sc_after : sc_before;
          const auto ch = entry::Change::of_priority(k.first, k.second);
          s.esu += entry::proposed_update_count(ref, ch);
          s.elu += 2 * entry::conventional_update_count(ref, ch);
        }
        check_elu = false;
        break;
      }
      }
    } catch (const std::invalid_argument& e) {
      invalid(sf, c.line, e.what());
    }

    const auto plan_after = ctl.plan();
    fabric.install(plan_after);
    const auto sc_after = entry::Scenario::from_controller(ctl);
    s.plan_diff = plan_diff(plan_before, plan_after, spines.front());
    s.elu_measured = entry::symmetric_difference_size(entry::conventional_entry_set(sc_before),
                                                      entry::conventional_entry_set(sc_after));
    const auto dev = "change-" + std::to_string(i);
    for (const auto& spine : spines) {
      const auto d = plan_diff(plan_before, plan_after, spine);
      check.add(dev, "esu@" + spine, s.esu, d);
    }
    if (check_elu)
      check.add(dev, "elu", s.elu, s.elu_measured);
    report.changes.push_back(std::move(s));
  }

  report.checks = std::move(check.checks);
  return report;
}

std::string emit(const RunReport& r, Format format) {
  std::ostringstream os;
  std::vector<std::tuple<std::string, std::string, entry::Count>> rows;
  append_rows(rows, r);

  if (format == Format::csv) {
    os << "device_class,metric,value\n";
    for (const auto& [d, m, v] : rows)
      os << d << ',' << m << ',' << v << '\n';
    for (std::size_t i = 0; i < r.flows.size(); ++i) {
      os << "flow-" << i << ",delivered," << (r.flows[i].delivered ? 1 : 0) << '\n';
      os << "flow-" << i << ",priority_hops," << r.flows[i].priority_hops << '\n';
    }
    for (std::size_t i = 0; i < r.changes.size(); ++i) {
      const auto& c = r.changes[i];
      os << "change-" << i << ",esu," << c.esu << '\n';
      os << "change-" << i << ",plan_diff," << c.plan_diff << '\n';
      os << "change-" << i << ",elu," << c.elu << '\n';
      os << "change-" << i << ",elu_measured," << c.elu_measured << '\n';
    }
    os << "crosscheck,failures," << r.failures().size() << '\n';
    return os.str();
  }

  if (format == Format::trace_lines) {
    for (std::size_t i = 0; i < r.flows.size(); ++i) {
      const auto& f = r.flows[i];
      os << "# flow " << i << ' ' << f.client << " -> " << f.server << ' '
         << (f.direction == Direction::forward ? "forward" : "reply") << '\n';
      os << format_trace(f.trace);
    }
    return os.str();
  }

  os << "entries\n";
  for (const auto& [d, m, v] : rows)
    os << "  " << d << ' ' << m << ' ' << v << '\n';
  os << "flows\n";
  for (std::size_t i = 0; i < r.flows.size(); ++i) {
    const auto& f = r.flows[i];
    os << "  flow " << i << ' ' << f.client << " -> " << f.server << ' '
       << (f.direction == Direction::forward ? "forward" : "reply") << ' '
       << (f.delivered ? "delivered" : "dropped") << " priority_hops=" << f.priority_hops << '\n';
  }
  os << "changes\n";
  for (std::size_t i = 0; i < r.changes.size(); ++i) {
    const auto& c = r.changes[i];
    os << "  change " << i << ' ' << c.description << " esu=" << c.esu << " plan_diff=" << c.plan_diff
       << " elu=" << c.elu << " elu_measured=" << c.elu_measured << '\n';
  }
  os << "crosscheck\n";
  for (const auto& c : r.checks) {
    os << "  " << c.device << ' ' << c.metric << " analytic=" << c.analytic << " concrete=" << c.concrete
       << (c.upper_bound ? " (bound)" : "") << (c.ok ? " ok" : " MISMATCH") << '\n';
  }
  os << "result " << (r.passed() ? "PASS" : "FAIL") << '\n';
  return os.str();
}

std::size_t emit_to(const RunReport& report, Format format, const std::string& path) {
  const auto text = emit(report, format);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out)
    throw std::runtime_error("write to '" + path + "' failed");
  return text.size();
}

} // namespace acila::cli
