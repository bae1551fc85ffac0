#include "acila/model.hpp"

#include <algorithm>
#include <arpa/inet.h>
#include <cctype>

namespace acila {

namespace {

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

void check_label(const Label& l) {
  if (l.key.empty() || blank(l.key))
    throw ModelError("label key must be non-empty");
  if (l.value.empty() || blank(l.value))
    throw ModelError("label value must be non-empty for key '" + l.key + "'");
  if (l.key.find_first_of(":,") != std::string::npos || l.value.find(',') != std::string::npos)
    throw ModelError("label '" + l.key + "' contains a reserved separator");
}

} // namespace

LabelSet::LabelSet(std::initializer_list<Label> labels)
    : LabelSet(std::vector<Label>(labels)) {}

LabelSet::LabelSet(std::vector<Label> labels) : labels_(std::move(labels)) {
  for (const auto& l : labels_)
    check_label(l);
  std::sort(labels_.begin(), labels_.end());
  auto dup = std::adjacent_find(labels_.begin(), labels_.end(),
                                [](const Label& a, const Label& b) { return a.key == b.key; });
  if (dup != labels_.end())
    throw ModelError("duplicate label key '" + dup->key + "'");
}

LabelSet LabelSet::parse(std::string_view text) {
  std::vector<Label> out;
  while (!text.empty()) {
    auto comma = text.find(',');
    auto item = text.substr(0, comma);
    auto colon = item.find(':');
    if (colon == std::string_view::npos)
      throw ModelError("label '" + std::string(item) + "' is not key:value");
    out.push_back({std::string(item.substr(0, colon)), std::string(item.substr(colon + 1))});
    if (comma == std::string_view::npos)
      break;
    text.remove_prefix(comma + 1);
  }
  return LabelSet(std::move(out));
}

std::optional<std::string_view> LabelSet::value_of(std::string_view key) const {
  auto it = std::lower_bound(labels_.begin(), labels_.end(), key,
                             [](const Label& l, std::string_view k) { return l.key < k; });
  if (it == labels_.end() || it->key != key)
    return std::nullopt;
  return it->value;
}

bool LabelSet::contains(std::string_view key, std::string_view value) const {
  auto v = value_of(key);
  return v && *v == value;
}

std::string LabelSet::to_string() const {
  std::string out;
  for (const auto& l : labels_) {
    if (!out.empty())
      out += ',';
    out += l.key;
    out += ':';
    out += l.value;
  }
  return out;
}

Ipv6Address parse_ipv6(std::string_view text) {
  Ipv6Address addr{};
  std::string buf(text);
  if (inet_pton(AF_INET6, buf.c_str(), addr.data()) != 1)
    throw ModelError("invalid IPv6 address '" + buf + "'");
  return addr;
}

std::string format_ipv6(const Ipv6Address& addr) {
  char buf[INET6_ADDRSTRLEN];
  inet_ntop(AF_INET6, addr.data(), buf, sizeof(buf));
  return buf;
}

void Workload::validate() const {
  if (id.empty())
    throw ModelError("workload id must be non-empty");
  if (is_server() != listen_port.has_value())
    throw ModelError("workload '" + id + "': listen_port must be present iff it is a server");
  if (listen_port && *listen_port == 0)
    throw ModelError("workload '" + id + "': listen_port 0 is not a valid port");
}

bool Selector::holds(const LabelSet& labels) const {
  auto v = labels.value_of(key);
  bool hit = v && values.find(*v) != values.end();
  return op == SelectorOp::op_in ? hit : !hit;
}

void Selector::validate() const {
  if (key.empty())
    throw ModelError("selector key must be non-empty");
  if (values.empty())
    throw ModelError("selector on '" + key + "' has no values");
}

std::string_view to_string(Action action) {
  return action == Action::allow ? "allow" : "priority";
}

void Policy::validate() const {
  if (id.empty())
    throw ModelError("policy id must be non-empty");
  if (client_selectors.empty() || server_selectors.empty())
    throw ModelError("policy '" + id + "' needs client and server selectors");
  for (const auto& s : client_selectors)
    s.validate();
  for (const auto& s : server_selectors)
    s.validate();
  if ((action == Action::priority) != value.has_value())
    throw ModelError("policy '" + id + "': value must be present iff action is priority");
}

void Rule::validate() const {
  if (!client.present() || !server.present())
    throw ModelError("rule endpoints must be non-zero SACL ids");
  if ((action == Action::priority) != value.has_value())
    throw ModelError("rule value must be present iff action is priority");
}

std::string_view to_string(Proto proto) {
  return proto == Proto::tcp ? "tcp" : "udp";
}

void FiveTuple::validate() const {
  if (src_port == 0 || dst_port == 0)
    throw ModelError("five-tuple ports must be in 1..65535");
}

std::uint64_t stable_hash(const FiveTuple& t) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint8_t b) {
    h ^= b;
    h *= 0x100000001b3ULL;
  };
  for (auto b : t.src_ip)
    mix(b);
  for (auto b : t.dst_ip)
    mix(b);
  mix(static_cast<std::uint8_t>(t.src_port >> 8));
  mix(static_cast<std::uint8_t>(t.src_port));
  mix(static_cast<std::uint8_t>(t.dst_port >> 8));
  mix(static_cast<std::uint8_t>(t.dst_port));
  mix(static_cast<std::uint8_t>(t.proto));
  return h;
}

bool labelset_matches(std::span<const Selector> selectors, const LabelSet& labels) {
  if (selectors.empty())
    throw ModelError("labelset_matches requires at least one selector");
  return std::all_of(selectors.begin(), selectors.end(),
                     [&](const Selector& s) { return s.holds(labels); });
}

} // namespace acila
