#include "acila/scenario.hpp"

#include <cmath>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace acila::cli {

namespace {

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos)
      break;
    start = pos + 1;
  }
  return out;
}

class LineReader {
public:
  LineReader(const std::string& source, int line, const std::vector<std::string>& tokens, std::size_t first)
      : source_(source), line_(line) {
    for (std::size_t i = first; i < tokens.size(); ++i) {
      auto eq = tokens[i].find('=');
      if (eq == std::string::npos || eq == 0)
        fail("expected key=value, got '" + tokens[i] + "'");
      auto [it, fresh] = fields_.emplace(tokens[i].substr(0, eq), tokens[i].substr(eq + 1));
      if (!fresh)
        fail("field '" + it->first + "' given twice");
    }
  }

  [[noreturn]] void fail(const std::string& what) const { throw ScenarioError(source_, line_, what); }

  std::optional<std::string> opt(const std::string& key) {
    auto it = fields_.find(key);
    if (it == fields_.end())
      return std::nullopt;
    used_.insert(key);
    return it->second;
  }

  std::string req(const std::string& key) {
    auto v = opt(key);
    if (!v)
      fail("missing field '" + key + "'");
    return *v;
  }

  template <class T>
  T number(const std::string& text, const std::string& key) const {
    T v{};
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || p != text.data() + text.size())
      fail("field '" + key + "' is not a valid number: '" + text + "'");
    return v;
  }

  template <class T>
  T num(const std::string& key) { return number<T>(req(key), key); }

  template <class T>
  std::optional<T> opt_num(const std::string& key) {
    auto v = opt(key);
    if (!v)
      return std::nullopt;
    return number<T>(*v, key);
  }

  void done() const {
    for (const auto& [k, v] : fields_)
      if (!used_.count(k))
        fail("unknown field '" + k + "'");
  }

private:
  const std::string& source_;
  int line_;
  std::map<std::string, std::string> fields_;
  std::set<std::string> used_;
};

std::uint16_t port(LineReader& r, const std::string& key, const std::string& text) {
  auto v = r.number<std::uint32_t>(text, key);
  if (v == 0 || v > 65535)
    r.fail("field '" + key + "' must be a port in 1..65535");
  return static_cast<std::uint16_t>(v);
}

std::vector<Selector> parse_selectors(LineReader& r, const std::string& text) {
  std::vector<Selector> out;
  for (const auto& part : split(text, ';')) {
    auto f = split(part, ':');
    if (f.size() != 3)
      r.fail("selector '" + part + "' is not key:op:values");
    Selector s;
    s.key = f[0];
    if (f[1] == "in")
      s.op = SelectorOp::op_in;
    else if (f[1] == "not_in")
      s.op = SelectorOp::op_not_in;
    else
      r.fail("selector operator must be in or not_in, got '" + f[1] + "'");
    for (auto& v : split(f[2], '|'))
      if (!v.empty())
        s.values.insert(v);
    out.push_back(std::move(s));
  }
  return out;
}

Workload parse_workload(LineReader& r) {
  Workload w;
  w.id = r.req("id");
  w.labels = LabelSet::parse(r.req("labels"));
  w.ip = parse_ipv6(r.req("ip"));
  if (auto p = r.opt("port")) {
    w.listen_port = port(r, "port", *p);
    w.kind = WorkloadKind::client_and_server;
  }
  w.lid = r.opt_num<std::uint32_t>("lid");
  auto place = split(r.req("place"), '/');
  if (place.size() != 3)
    r.fail("place must be rack/server/vm");
  w.placement = {r.number<std::uint32_t>(place[0], "place"), r.number<std::uint32_t>(place[1], "place"),
                 r.number<std::uint32_t>(place[2], "place")};
  w.validate();
  return w;
}

Policy parse_policy(LineReader& r) {
  Policy p;
  p.id = r.req("id");
  auto action = r.req("action");
  if (action == "allow")
    p.action = Action::allow;
  else if (action == "priority")
    p.action = Action::priority;
  else
    r.fail("action must be allow or priority");
  if (auto v = r.opt_num<std::uint32_t>("value")) {
    if (*v > 255)
      r.fail("priority value must fit in 8 bits");
    p.value = static_cast<std::uint8_t>(*v);
  }
  p.client_selectors = parse_selectors(r, r.req("client"));
  p.server_selectors = parse_selectors(r, r.req("server"));
  p.validate();
  return p;
}

} // namespace

std::string ChangeDecl::describe() const {
  switch (kind) {
  case Kind::add_workload: return "add-workload " + workload.id;
  case Kind::remove_workload: return "remove-workload " + id;
  case Kind::delete_service: return "delete-service " + labels.to_string();
  case Kind::add_policy: return "add-policy " + policy.id;
  case Kind::remove_policy: return "remove-policy " + id;
  }
  return "?";
}

ScenarioFile parse_scenario(std::istream& in, std::string source) {
  ScenarioFile sf;
  sf.source = std::move(source);
  bool have_header = false;
  bool have_topology = false;
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    if (auto hash = raw.find('#'); hash != std::string::npos)
      raw.erase(hash);
    std::istringstream ls(raw);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;)
      tok.push_back(t);
    if (tok.empty())
      continue;

    auto fail = [&](const std::string& what) -> void { throw ScenarioError(sf.source, lineno, what); };
    if (!have_header) {
      if (tok[0] != "acila-scenario" || tok.size() != 2)
        fail("first line must be 'acila-scenario <version>'");
      if (tok[1] != std::to_string(kSchemaVersion))
        fail("unsupported schema version '" + tok[1] + "'");
      have_header = true;
      continue;
    }

    try {
      const auto& kw = tok[0];
      if (kw == "topology") {
        LineReader r(sf.source, lineno, tok, 1);
        sf.topology.racks = r.num<std::uint32_t>("racks");
        sf.topology.servers_per_rack = r.num<std::uint32_t>("servers_per_rack");
        sf.topology.vms_per_server = r.opt_num<std::uint32_t>("vms_per_server").value_or(1);
        sf.topology.leaves = r.num<std::uint32_t>("leaves");
        sf.topology.spines = r.num<std::uint32_t>("spines");
        r.done();
        have_topology = true;
      } else if (kw == "border") {
        if (tok.size() < 2)
          fail("border needs at least one switch id");
        sf.border_switches.insert(tok.begin() + 1, tok.end());
      } else if (kw == "filter_mode") {
        if (tok.size() != 2 || (tok[1] != "gateway" && tok[1] != "gateway+fabric"))
          fail("filter_mode must be gateway or gateway+fabric");
        sf.filter_mode = tok[1] == "gateway" ? FilterMode::gateway : FilterMode::gateway_and_fabric;
      } else if (kw == "default_action") {
        if (tok.size() != 2 || (tok[1] != "deny" && tok[1] != "allow"))
          fail("default_action must be deny or allow");
        sf.default_action = tok[1] == "deny" ? DefaultAction::deny : DefaultAction::allow;
      } else if (kw == "conntrack") {
        LineReader r(sf.source, lineno, tok, 1);
        if (auto ttl = r.opt_num<LogicalTime>("ttl"))
          sf.gateway.conntrack_ttl = *ttl;
        if (auto cap = r.opt_num<std::size_t>("capacity"))
          sf.gateway.conntrack_capacity = *cap;
        r.done();
      } else if (kw == "workload") {
        LineReader r(sf.source, lineno, tok, 1);
        auto w = parse_workload(r);
        r.done();
        sf.workloads.push_back({std::move(w), lineno});
      } else if (kw == "policy") {
        LineReader r(sf.source, lineno, tok, 1);
        auto p = parse_policy(r);
        r.done();
        sf.policies.push_back({std::move(p), lineno});
      } else if (kw == "connection") {
        LineReader r(sf.source, lineno, tok, 1);
        ConnectionDecl c{r.req("client"), r.req("server"), r.opt_num<std::uint64_t>("count").value_or(1), lineno};
        r.done();
        sf.connections.push_back(std::move(c));
      } else if (kw == "flow") {
        LineReader r(sf.source, lineno, tok, 1);
        TrafficDecl t;
        t.line = lineno;
        t.client = r.req("client");
        t.server = r.req("server");
        auto proto = r.opt("proto").value_or("tcp");
        if (proto != "tcp" && proto != "udp")
          r.fail("proto must be tcp or udp");
        t.proto = proto == "tcp" ? Proto::tcp : Proto::udp;
        t.src_port = port(r, "sport", r.req("sport"));
        if (auto d = r.opt("dport"))
          t.dst_port = port(r, "dport", *d);
        auto dir = r.opt("direction").value_or("forward");
        if (dir != "forward" && dir != "reply")
          r.fail("direction must be forward or reply");
        t.direction = dir == "forward" ? Direction::forward : Direction::reply;
        r.done();
        sf.traffic.push_back(std::move(t));
      } else if (kw == "tick") {
        if (tok.size() != 2)
          fail("tick takes one duration");
        TrafficDecl t;
        t.kind = TrafficDecl::Kind::tick;
        t.line = lineno;
        LineReader r(sf.source, lineno, {}, 0);
        t.ticks = r.number<LogicalTime>(tok[1], "tick");
        sf.traffic.push_back(std::move(t));
      } else if (kw == "change") {
        if (tok.size() < 2)
          fail("change needs a kind");
        LineReader r(sf.source, lineno, tok, 2);
        ChangeDecl c;
        c.line = lineno;
        const auto& kind = tok[1];
        if (kind == "add-workload") {
          c.kind = ChangeDecl::Kind::add_workload;
          c.workload = parse_workload(r);
        } else if (kind == "remove-workload") {
          c.kind = ChangeDecl::Kind::remove_workload;
          c.id = r.req("id");
        } else if (kind == "delete-service") {
          c.kind = ChangeDecl::Kind::delete_service;
          c.labels = LabelSet::parse(r.req("labels"));
        } else if (kind == "add-policy") {
          c.kind = ChangeDecl::Kind::add_policy;
          c.policy = parse_policy(r);
        } else if (kind == "remove-policy") {
          c.kind = ChangeDecl::Kind::remove_policy;
          c.id = r.req("id");
        } else {
          fail("unknown change kind '" + kind + "'");
        }
        r.done();
        sf.changes.push_back(std::move(c));
      } else if (kw == "generate") {
        if (tok.size() < 2 || tok[1] != "assumption")
          fail("only 'generate assumption' is supported");
        LineReader r(sf.source, lineno, tok, 2);
        AssumptionParams a;
        if (auto alpha = r.opt("alpha")) {
          try {
            a.alpha = std::stod(*alpha);
          } catch (const std::exception&) {
            r.fail("alpha is not a number");
          }
        }
        if (auto v = r.opt_num<std::uint32_t>("vms_per_server"))
          a.vms_per_server = *v;
        if (auto v = r.opt_num<std::uint32_t>("service_size"))
          a.service_size = *v;
        if (auto v = r.opt_num<std::uint64_t>("connections"))
          a.connections_per_pair = *v;
        r.done();
        sf.assumption = a;
      } else {
        fail("unknown directive '" + kw + "'");
      }
    } catch (const ModelError& e) {
      throw ScenarioError(sf.source, lineno, e.what());
    }
  }
  if (!have_header)
    throw ScenarioError(sf.source, lineno, "missing 'acila-scenario' header");
  if (!have_topology && !sf.assumption)
    throw ScenarioError(sf.source, lineno, "missing topology line");
  return sf;
}

ScenarioFile load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw ScenarioError(path, 0, "cannot open scenario file");
  return parse_scenario(in, path);
}

std::uint32_t assumption_workloads_per_server(double alpha) {
  if (!(alpha > 0))
    throw ModelError("alpha must be positive");
  auto m = static_cast<std::uint32_t>(std::floor(128.0 * alpha));
  return std::max<std::uint32_t>(m, 2);
}

ScenarioFile generate_assumption(const AssumptionParams& params) {
  const std::uint32_t m = assumption_workloads_per_server(params.alpha);
  if (m > 0xffff)
    throw ModelError("alpha too large for the generator's address plan");
  const std::uint32_t services = 2 * m;
  const std::uint32_t half = params.service_size; // servers per half
  if (half == 0 || params.vms_per_server == 0)
    throw ModelError("service size and VM count must be positive");

  ScenarioFile sf;
  sf.source = "<assumption alpha=" + std::to_string(params.alpha) + ">";
  sf.assumption = params;
  const std::uint32_t servers = 2 * half;
  // 6 servers per rack when it divides evenly, else one rack per server.
  const std::uint32_t per_rack = servers % 6 == 0 ? 6 : 1;
  sf.topology = {servers / per_rack, per_rack, params.vms_per_server, servers / per_rack, 4};

  auto svc_label = [](std::uint32_t s) { return LabelSet{{"svc", "s" + std::to_string(s)}}; };
  std::vector<std::vector<std::string>> members(services);
  for (std::uint32_t server = 0; server < servers; ++server) {
    const std::uint32_t base = server < half ? 0 : m;
    for (std::uint32_t k = 0; k < m; ++k) {
      const std::uint32_t s = base + k;
      Workload w;
      w.id = "w" + std::to_string(server) + "-" + std::to_string(k);
      w.labels = svc_label(s);
      w.kind = WorkloadKind::client_and_server;
      w.listen_port = 8000;
      w.ip = Ipv6Address{0xfd};
      w.ip[12] = static_cast<std::uint8_t>(server >> 8);
      w.ip[13] = static_cast<std::uint8_t>(server);
      w.ip[14] = static_cast<std::uint8_t>(k >> 8);
      w.ip[15] = static_cast<std::uint8_t>(k);
      w.placement = {server / per_rack, server, k % params.vms_per_server};
      members[s].push_back(w.id);
      sf.workloads.push_back({std::move(w), 0});
    }
  }

  for (std::uint32_t s = 0; s < services; ++s) {
    for (std::uint32_t t : {(s + 1) % services, (s + m + 1) % services}) {
      Policy p;
      p.id = "p" + std::to_string(s) + "-" + std::to_string(t);
      p.action = Action::priority;
      p.value = params.priority;
      p.client_selectors = {{"svc", SelectorOp::op_in, {"s" + std::to_string(s)}}};
      p.server_selectors = {{"svc", SelectorOp::op_in, {"s" + std::to_string(t)}}};
      sf.policies.push_back({std::move(p), 0});
      if (params.connections_per_pair == 0)
        continue;
      for (const auto& c : members[s])
        for (const auto& srv : members[t])
          sf.connections.push_back({c, srv, params.connections_per_pair, 0});
    }
  }
  return sf;
}

} // namespace acila::cli
