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

#ifndef AHATREE_ADAPTATION_HPP
#define AHATREE_ADAPTATION_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <optional>
#include <vector>

#include "ahatree/core.hpp"

namespace ahatree
{
enum class RangeState { kQueued, kInProgress, kComplete };

/**
 * @brief A key interval targeted for adaptation.
 *
 * complete means no buffer on any path overlapping the range holds a key in it and every
 * leaf overlapping it is paged. An inactive range waits for read evidence before the
 * worker picks it up again (writes deactivate completed ranges they land in).
 */
struct HotspotRange {
  KeyRange range{};
  std::vector<std::uint64_t> pending_nodes{};
  RangeState state{RangeState::kQueued};
  bool active{true};
  /// Writes knocked this range out of completion; it runs only while reads dominate.
  bool write_stale{false};
  std::uint64_t order{0};
  /// Key-space measure of the part already adapted, refreshed by the tree.
  long double done_measure{0};
};

struct AdaptationStats {
  std::uint64_t ranges_completed{0};
  std::uint64_t entries_flushed{0};
  std::uint64_t pages_created{0};
  std::uint64_t cold_bytes_coflushed{0};
  std::uint64_t leaf_transforms{0};
  /// Bytes pushed through multi-source merges by leaf transforms.
  std::uint64_t transform_bytes_rewritten{0};
  std::uint64_t page_bytes_rewritten{0};
  std::uint64_t page_splits{0};
  std::uint64_t steps{0};
};

struct AdaptationProgress {
  double fraction{1.0};
  AdaptationStats stats{};
};

/// Key-space measure of an inclusive range over the encoded-integer domain.
[[nodiscard]] inline long double
RangeMeasure(const KeyRange &r)
{
  return static_cast<long double>(decode_key(r.hi)) - static_cast<long double>(decode_key(r.lo)) + 1.0L;
}

/**
 * @brief The set of hotspot ranges, pairwise disjoint, served in arrival order.
 *
 * Lazy intake merges a scanned range with every overlapping queued range; adjacent but
 * disjoint ranges stay separate. Eager intake only reactivates declared ranges. A range
 * that writes made stale wakes only once recent traffic is mostly reads.
 */
class HotspotQueue
{
 public:
  /// Declare a range up front (eager mode).
  void
  Declare(const KeyRange &r)
  {
    std::lock_guard guard{mu_};
    InsertMerged(r, true);
  }

  /// Fold in read evidence; returns whether any range became runnable.
  bool
  Submit(const KeyRange &r, AdaptMode mode)
  {
    Bump(reads_);
    const bool read_heavy = ReadDominant();
    std::lock_guard guard{mu_};
    const auto wake = [&](HotspotRange &h) {
      if (h.state == RangeState::kComplete || h.active) return false;
      if (h.write_stale && !read_heavy) return false;
      h.active = true;
      return true;
    };
    // A worker that found only gated ranges is parked until the mix turns.
    const bool ungated = read_heavy && gated_.exchange(false);
    if (mode == AdaptMode::kEager) {
      bool woke = ungated;
      for (auto &[lo, h] : ranges_) {
        if (h.range.overlaps(r) && wake(h)) woke = true;
      }
      return woke;
    }
    for (auto &[lo, h] : ranges_) {
      if (h.range.covers(r)) return wake(h) || ungated;
    }
    InsertMerged(r, true);
    return true;
  }

  /// The oldest runnable range, if any.
  [[nodiscard]] std::optional<HotspotRange>
  Front() const
  {
    const bool read_heavy = ReadDominant();
    std::lock_guard guard{mu_};
    const HotspotRange *best = nullptr;
    bool gated = false;
    for (const auto &[lo, h] : ranges_) {
      if (h.state == RangeState::kComplete || !h.active) continue;
      if (h.write_stale && !read_heavy) {
        gated = true;
        continue;
      }
      if (!best || h.order < best->order) best = &h;
    }
    if (gated) gated_.store(true);
    if (!best) return std::nullopt;
    return *best;
  }

  void
  SetState(const KeyRange &r, RangeState s, std::vector<std::uint64_t> pending = {})
  {
    std::lock_guard guard{mu_};
    auto it = ranges_.find(r.lo);
    if (it == ranges_.end() || it->second.range != r) return;
    if (s == RangeState::kComplete && it->second.state != RangeState::kComplete) ++completed_;
    it->second.state = s;
    it->second.pending_nodes = std::move(pending);
    if (s == RangeState::kComplete) {
      it->second.done_measure = RangeMeasure(r);
      it->second.write_stale = false;
    }
    RecountIncomplete();
  }

  /**
   * @brief A buffered write landed at k: a completed range holding k falls back to
   *        queued and sleeps until reads arrive. Returns whether a range changed.
   */
  bool
  MarkStale(const Key &k)
  {
    if (complete_count_.load(std::memory_order_acquire) == 0) return false;
    std::lock_guard guard{mu_};
    auto *h = Owning(k);
    if (!h || h->state != RangeState::kComplete) return false;
    h->state = RangeState::kQueued;
    h->active = false;
    h->write_stale = true;
    reads_.store(0, std::memory_order_relaxed);
    writes_.store(0, std::memory_order_relaxed);
    RecountIncomplete();
    return true;
  }

  /// Count one write toward the read/write mix.
  void NoteWrite() noexcept { Bump(writes_); }

  /// Whether reads outnumber writes in the recent, exponentially decayed op mix.
  [[nodiscard]] bool
  ReadDominant() const noexcept
  {
    return reads_.load(std::memory_order_relaxed) > writes_.load(std::memory_order_relaxed);
  }

  /// Whether k lies in a completed range.
  [[nodiscard]] bool
  InComplete(const Key &k) const
  {
    if (complete_count_.load(std::memory_order_acquire) == 0) return false;
    std::lock_guard guard{mu_};
    const auto *h = const_cast<HotspotQueue *>(this)->Owning(k);
    return h && h->state == RangeState::kComplete;
  }

  [[nodiscard]] bool
  AllComplete() const noexcept
  {
    return incomplete_.load(std::memory_order_acquire) == 0;
  }

  [[nodiscard]] bool
  HasRunnable() const
  {
    return Front().has_value();
  }

  [[nodiscard]] std::vector<HotspotRange>
  Ranges() const
  {
    std::lock_guard guard{mu_};
    std::vector<HotspotRange> out;
    for (const auto &[lo, h] : ranges_) out.push_back(h);
    std::sort(out.begin(), out.end(), [](const auto &a, const auto &b) { return a.order < b.order; });
    return out;
  }

  void
  SetDoneMeasure(const KeyRange &r, long double m)
  {
    std::lock_guard guard{mu_};
    auto it = ranges_.find(r.lo);
    if (it != ranges_.end() && it->second.range == r && it->second.state != RangeState::kComplete) {
      it->second.done_measure = m;
    }
  }

  /// Completed measure over enqueued measure; 1.0 when nothing is enqueued.
  [[nodiscard]] double
  Fraction() const
  {
    std::lock_guard guard{mu_};
    long double total = 0, done = 0;
    for (const auto &[lo, h] : ranges_) {
      const auto m = RangeMeasure(h.range);
      total += m;
      done += h.state == RangeState::kComplete ? m : std::min(h.done_measure, m);
    }
    if (total <= 0) return 1.0;
    if (incomplete_.load() == 0) return 1.0;
    return std::min(static_cast<double>(done / total), std::nextafter(1.0, 0.0));
  }

  [[nodiscard]] std::uint64_t
  completed_count() const noexcept
  {
    return completed_.load();
  }

 private:
  static constexpr std::uint32_t kMixWindow = 4096;

  // Racy halving is fine: the mix is a heuristic and both counters decay together.
  void
  Bump(std::atomic<std::uint32_t> &c) noexcept
  {
    c.fetch_add(1, std::memory_order_relaxed);
    if (reads_.load(std::memory_order_relaxed) + writes_.load(std::memory_order_relaxed) > kMixWindow) {
      reads_.store(reads_.load(std::memory_order_relaxed) / 2, std::memory_order_relaxed);
      writes_.store(writes_.load(std::memory_order_relaxed) / 2, std::memory_order_relaxed);
    }
  }

  void
  InsertMerged(const KeyRange &r, bool active)
  {
    KeyRange merged = r;
    std::uint64_t order = next_order_++;
    for (auto it = ranges_.begin(); it != ranges_.end();) {
      if (it->second.range.overlaps(merged)) {
        merged.lo = std::min(merged.lo, it->second.range.lo);
        merged.hi = std::max(merged.hi, it->second.range.hi);
        order = std::min(order, it->second.order);
        it = ranges_.erase(it);
        it = ranges_.begin();
      } else {
        ++it;
      }
    }
    HotspotRange h;
    h.range = merged;
    h.active = active;
    h.order = order;
    ranges_[merged.lo] = std::move(h);
    RecountIncomplete();
  }

  HotspotRange *
  Owning(const Key &k)
  {
    auto it = ranges_.upper_bound(k);
    if (it == ranges_.begin()) return nullptr;
    --it;
    return it->second.range.contains(k) ? &it->second : nullptr;
  }

  void
  RecountIncomplete()
  {
    std::size_t incomplete = 0, complete = 0;
    for (const auto &[lo, h] : ranges_) {
      (h.state == RangeState::kComplete ? complete : incomplete) += 1;
    }
    incomplete_.store(incomplete, std::memory_order_release);
    complete_count_.store(complete, std::memory_order_release);
  }

  mutable std::mutex mu_{};
  std::map<Key, HotspotRange> ranges_{};
  std::uint64_t next_order_{0};
  std::atomic<std::size_t> incomplete_{0};
  std::atomic<std::size_t> complete_count_{0};
  std::atomic<std::uint64_t> completed_{0};
  std::atomic<std::uint32_t> reads_{0};
  std::atomic<std::uint32_t> writes_{0};
  mutable std::atomic<bool> gated_{false};
};

}  // namespace ahatree

#endif  // AHATREE_ADAPTATION_HPP
