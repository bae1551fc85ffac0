#pragma once

// Domain types shared by the controller, gateways, fabric and entry model.
// Everything here is a plain value type; the only behavior is validation
// and label/selector matching.

#include <array>
#include <compare>
#include <cstdint>
#include <cstring>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace acila {

// Thrown when a value violates a domain invariant (bad label, duplicate key,
// empty selector values, ...).
class ModelError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

struct Label {
  std::string key;
  std::string value;

  auto operator<=>(const Label&) const = default;
  bool operator==(const Label&) const = default;
};

// A set of labels with at most one value per key. Stored sorted by key so
// that equality and ordering do not depend on insertion order.
class LabelSet {
public:
  LabelSet() = default;
  LabelSet(std::initializer_list<Label> labels);
  explicit LabelSet(std::vector<Label> labels);

  // Parses "k1:v1,k2:v2". An empty string yields the empty set.
  static LabelSet parse(std::string_view text);

  std::optional<std::string_view> value_of(std::string_view key) const;
  bool contains(std::string_view key, std::string_view value) const;

  const std::vector<Label>& labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }

  std::string to_string() const;

  auto operator<=>(const LabelSet&) const = default;
  bool operator==(const LabelSet&) const = default;

private:
  std::vector<Label> labels_;
};

// Identifier of a Service. Zero means "no id attached".
struct SaclId {
  std::uint64_t value = 0;

  constexpr bool present() const noexcept { return value != 0; }

  auto operator<=>(const SaclId&) const = default;
  bool operator==(const SaclId&) const = default;
};

using SaclPair = std::pair<SaclId, SaclId>;

struct Service {
  SaclId id;
  LabelSet labels;

  bool operator==(const Service&) const = default;
};

using Ipv6Address = std::array<std::uint8_t, 16>;

// inet_pton/inet_ntop wrappers. parse_ipv6 throws ModelError on bad input.
Ipv6Address parse_ipv6(std::string_view text);
std::string format_ipv6(const Ipv6Address& addr);

using GatewayId = std::uint32_t;

struct Placement {
  std::uint32_t rack = 0;
  GatewayId server = 0; // globally unique server id; the gateway runs here
  std::uint32_t vm = 0;

  auto operator<=>(const Placement&) const = default;
  bool operator==(const Placement&) const = default;
};

enum class WorkloadKind : std::uint8_t { client_only, client_and_server };

struct Workload {
  std::string id;
  LabelSet labels;
  WorkloadKind kind = WorkloadKind::client_only;
  Ipv6Address ip{};
  std::optional<std::uint16_t> listen_port;
  std::optional<std::uint32_t> lid;
  Placement placement;

  bool is_server() const noexcept { return kind == WorkloadKind::client_and_server; }

  // Checks kind/listen_port consistency, non-empty id and port range.
  void validate() const;

  bool operator==(const Workload&) const = default;
};

enum class SelectorOp : std::uint8_t { op_in, op_not_in };

struct Selector {
  std::string key;
  SelectorOp op = SelectorOp::op_in;
  std::set<std::string, std::less<>> values;

  bool holds(const LabelSet& labels) const;
  void validate() const;

  bool operator==(const Selector&) const = default;
};

enum class Action : std::uint8_t { allow, priority };

std::string_view to_string(Action action);

struct Policy {
  std::string id;
  std::vector<Selector> client_selectors;
  std::vector<Selector> server_selectors;
  Action action = Action::allow;
  std::optional<std::uint8_t> value;

  void validate() const;

  bool operator==(const Policy&) const = default;
};

struct Rule {
  SaclId client;
  SaclId server;
  Action action = Action::allow;
  std::optional<std::uint8_t> value;

  SaclPair pair() const { return {client, server}; }
  void validate() const;

  auto operator<=>(const Rule&) const = default;
  bool operator==(const Rule&) const = default;
};

enum class Proto : std::uint8_t { tcp = 6, udp = 17 };

std::string_view to_string(Proto proto);

struct FiveTuple {
  Ipv6Address src_ip{};
  Ipv6Address dst_ip{};
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  Proto proto = Proto::tcp;

  FiveTuple reversed() const { return {dst_ip, src_ip, dst_port, src_port, proto}; }
  void validate() const;

  auto operator<=>(const FiveTuple&) const = default;
  bool operator==(const FiveTuple&) const = default;
};

// FNV-1a over the tuple fields in wire order. Stable across platforms, so it
// is also used for ECMP path selection.
std::uint64_t stable_hash(const FiveTuple& t) noexcept;

// Table hash: word-wise multiply-xorshift, cheaper than stable_hash.
struct FiveTupleHash {
  std::size_t operator()(const FiveTuple& t) const noexcept {
    std::uint64_t w[4];
    std::memcpy(w, t.src_ip.data(), 16);
    std::memcpy(w + 2, t.dst_ip.data(), 16);
    std::uint64_t h = (std::uint64_t{t.src_port} << 24) ^ (std::uint64_t{t.dst_port} << 8) ^
                      static_cast<std::uint8_t>(t.proto);
    for (auto x : w) {
      h = (h ^ x) * 0x9e3779b97f4a7c15ULL;
      h ^= h >> 29;
    }
    return static_cast<std::size_t>(h);
  }
};

// AND over all selectors. Requires a non-empty list.
bool labelset_matches(std::span<const Selector> selectors, const LabelSet& labels);

} // namespace acila
