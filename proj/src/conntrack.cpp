#include "acila/conntrack.hpp"

namespace acila {

ConntrackTable::ConntrackTable(std::size_t capacity, LogicalTime ttl)
    : capacity_(capacity), ttl_(ttl) {
  if (capacity_ == 0)
    throw ModelError("conntrack capacity must be positive");
}

std::size_t ConntrackTable::upsert(const FiveTuple& tuple, SaclPair ids, LogicalTime now,
                                   std::optional<std::uint32_t> lid) {
  if (auto it = index_.find(tuple); it != index_.end()) {
    it->second.entry = {ids, lid, now};
    lru_.splice(lru_.end(), lru_, it->second.lru);
    return 0;
  }
  std::size_t evicted = 0;
  if (index_.size() == capacity_) {
    index_.erase(lru_.front());
    lru_.pop_front();
    evicted = 1;
  }
  lru_.push_back(tuple);
  index_.emplace(tuple, Slot{{ids, lid, now}, std::prev(lru_.end())});
  return evicted;
}

const ConntrackEntry* ConntrackTable::lookup(const FiveTuple& tuple, LogicalTime now) {
  auto it = index_.find(tuple);
  if (it == index_.end())
    return nullptr;
  if (expired(it->second.entry, now)) {
    lru_.erase(it->second.lru);
    index_.erase(it);
    return nullptr;
  }
  it->second.entry.last_seen = now;
  lru_.splice(lru_.end(), lru_, it->second.lru);
  return &it->second.entry;
}

const ConntrackEntry* ConntrackTable::peek(const FiveTuple& tuple, LogicalTime now) const {
  auto it = index_.find(tuple);
  if (it == index_.end() || expired(it->second.entry, now))
    return nullptr;
  return &it->second.entry;
}

bool ConntrackTable::erase(const FiveTuple& tuple) {
  auto it = index_.find(tuple);
  if (it == index_.end())
    return false;
  lru_.erase(it->second.lru);
  index_.erase(it);
  return true;
}

std::size_t ConntrackTable::gc(LogicalTime now) {
  // The LRU list is ordered by last_seen, so expired entries sit at the front.
  std::size_t evicted = 0;
  while (!lru_.empty()) {
    auto it = index_.find(lru_.front());
    if (!expired(it->second.entry, now))
      break;
    index_.erase(it);
    lru_.pop_front();
    ++evicted;
  }
  return evicted;
}

std::vector<std::pair<FiveTuple, ConntrackEntry>> ConntrackTable::snapshot() const {
  std::vector<std::pair<FiveTuple, ConntrackEntry>> out;
  out.reserve(index_.size());
  for (const auto& t : lru_)
    out.emplace_back(t, index_.at(t).entry);
  return out;
}

} // namespace acila
