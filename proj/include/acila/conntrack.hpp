#pragma once

#include "acila/model.hpp"

#include <cstdint>
#include <list>
#include <optional>
#include <unordered_map>
#include <vector>

namespace acila {

using LogicalTime = std::uint64_t;

struct ConntrackEntry {
  SaclPair ids;
  // LID the client-side entry was created under; unused on the server side.
  std::optional<std::uint32_t> lid;
  LogicalTime last_seen = 0;

  bool operator==(const ConntrackEntry&) const = default;
};

// Flow table keyed on the five-tuple. An entry is live while
// last_seen + ttl >= now. When the table is full, inserting a new flow
// evicts the least recently seen one.
class ConntrackTable {
public:
  ConntrackTable(std::size_t capacity, LogicalTime ttl);

  // Inserts or refreshes a flow. Returns how many entries were evicted to
  // make room (0 or 1).
  std::size_t upsert(const FiveTuple& tuple, SaclPair ids, LogicalTime now,
                     std::optional<std::uint32_t> lid = std::nullopt);

  // Live entry for `tuple`, refreshed to `now`; nullptr on miss. An expired
  // entry found here is erased.
  const ConntrackEntry* lookup(const FiveTuple& tuple, LogicalTime now);

  // Like lookup but without touching last_seen or erasing anything.
  const ConntrackEntry* peek(const FiveTuple& tuple, LogicalTime now) const;

  bool erase(const FiveTuple& tuple);

  // Removes every entry with last_seen + ttl < now.
  std::size_t gc(LogicalTime now);

  std::size_t size() const noexcept { return index_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  LogicalTime ttl() const noexcept { return ttl_; }

  // All entries, least recently seen first.
  std::vector<std::pair<FiveTuple, ConntrackEntry>> snapshot() const;

private:
  struct Slot {
    ConntrackEntry entry;
    std::list<FiveTuple>::iterator lru;
  };

  bool expired(const ConntrackEntry& e, LogicalTime now) const noexcept {
    return e.last_seen + ttl_ < now;
  }

  std::size_t capacity_;
  LogicalTime ttl_;
  std::list<FiveTuple> lru_; // front = least recently seen
  std::unordered_map<FiveTuple, Slot, FiveTupleHash> index_;
};

} // namespace acila
