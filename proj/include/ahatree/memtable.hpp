/*
 * Copyright 2026 The AHA-tree Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef AHATREE_MEMTABLE_HPP
#define AHATREE_MEMTABLE_HPP

#include <map>
#include <mutex>
#include <shared_mutex>
#include <vector>

#include "ahatree/core.hpp"

namespace ahatree
{
/**
 * @brief The sorted in-memory write buffer in front of every LSM component.
 *
 * One resident version per key: a newer put overwrites the older one in place. Size
 * accounting counts raw key+value bytes only. Readers may run concurrently with a
 * single writer.
 */
class MemTable
{
 public:
  explicit MemTable(std::uint64_t capacity) : capacity_{capacity} {}

  /// Insert or overwrite; returns true when the table has reached its capacity.
  bool
  Put(Entry e)
  {
    std::unique_lock guard{mu_};
    auto [it, inserted] = map_.try_emplace(std::move(e.key));
    if (!inserted) {
      if (it->second.seq > e.seq) return bytes_ >= capacity_;
      bytes_ -= it->first.size() + it->second.value.size();
    }
    bytes_ += it->first.size() + e.value.size();
    it->second.value = std::move(e.value);
    it->second.seq = e.seq;
    return bytes_ >= capacity_;
  }

  [[nodiscard]] std::vector<Entry>
  Scan(const Interval &r) const
  {
    std::shared_lock guard{mu_};
    std::vector<Entry> out;
    for (auto it = map_.lower_bound(r.lo); it != map_.end() && r.contains(it->first); ++it) {
      out.push_back({it->first, it->second.value, it->second.seq});
    }
    return out;
  }

  [[nodiscard]] std::vector<Entry>
  Scan(const KeyRange &r) const
  {
    return Scan(Interval::of(r));
  }

  [[nodiscard]] std::optional<Entry>
  Get(const Key &k) const
  {
    std::shared_lock guard{mu_};
    auto it = map_.find(k);
    if (it == map_.end()) return std::nullopt;
    return Entry{it->first, it->second.value, it->second.seq};
  }

  [[nodiscard]] bool
  Overlaps(const Interval &r) const
  {
    std::shared_lock guard{mu_};
    auto it = map_.lower_bound(r.lo);
    return it != map_.end() && r.contains(it->first);
  }

  /// Return every resident entry in ascending order and leave the table empty.
  std::vector<Entry>
  FreezeDrain()
  {
    std::unique_lock guard{mu_};
    std::vector<Entry> out;
    out.reserve(map_.size());
    for (auto &[k, v] : map_) out.push_back({k, std::move(v.value), v.seq});
    map_.clear();
    bytes_ = 0;
    return out;
  }

  /**
   * @brief Remove entries whose key and seq match a previously taken copy.
   *
   * Entries overwritten since the copy was taken carry a newer seq and are kept.
   */
  void
  EraseIfUnchanged(const std::vector<Entry> &taken)
  {
    std::unique_lock guard{mu_};
    for (const auto &e : taken) {
      auto it = map_.find(e.key);
      if (it == map_.end() || it->second.seq != e.seq) continue;
      bytes_ -= it->first.size() + it->second.value.size();
      map_.erase(it);
    }
  }

  [[nodiscard]] std::uint64_t
  ApproxBytes() const
  {
    std::shared_lock guard{mu_};
    return bytes_;
  }

  [[nodiscard]] std::size_t
  Size() const
  {
    std::shared_lock guard{mu_};
    return map_.size();
  }

  [[nodiscard]] bool
  Empty() const
  {
    return Size() == 0;
  }

  [[nodiscard]] std::uint64_t
  Capacity() const noexcept
  {
    return capacity_;
  }

 private:
  struct Slot {
    Value value{};
    SeqNo seq{0};
  };

  mutable std::shared_mutex mu_{};
  std::map<Key, Slot> map_{};
  std::uint64_t bytes_{0};
  std::uint64_t capacity_;
};

}  // namespace ahatree

#endif  // AHATREE_MEMTABLE_HPP
