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

#ifndef AHATREE_MERGE_HPP
#define AHATREE_MERGE_HPP

#include <algorithm>
#include <cstring>
#include <memory>
#include <queue>
#include <span>
#include <vector>

#include "ahatree/core.hpp"

namespace ahatree
{
enum class SourceKind { kMemTable, kFile, kPage };

/// One source a read consulted; collected only when a trace is requested.
struct SourceHit {
  std::uint64_t node_id{0};
  SourceKind kind{SourceKind::kMemTable};
  int level{-1};
  std::uint64_t file_id{0};
  std::size_t entries{0};
};

struct ScanTrace {
  std::vector<SourceHit> hits{};

  [[nodiscard]] std::size_t
  files_touched() const
  {
    return static_cast<std::size_t>(std::count_if(hits.begin(), hits.end(), [](const auto &h) {
      return h.kind == SourceKind::kFile;
    }));
  }
};

namespace detail
{
/// First eight key bytes as a big-endian integer; ties fall back to the full key.
[[nodiscard]] inline std::uint64_t
KeyPrefix(const Key &k) noexcept
{
  if (k.size() < 8) return decode_key(k);
  std::uint64_t v;
  std::memcpy(&v, k.data(), 8);
  return __builtin_bswap64(v);
}

/// Position of one surviving entry: run index and offset within the run.
struct Pick {
  std::uint32_t run;
  std::uint32_t pos;
};

/**
 * @brief Choose the newest entry per key across ascending runs, in key order.
 *
 * Runs that are pairwise disjoint are chained so the heap holds one head per chain,
 * and the front chain keeps emitting while it stays below every other head.
 */
inline void
PickNewest(const std::vector<std::span<const Entry>> &runs, std::vector<Pick> &out)
{
  std::vector<std::uint32_t> order;
  order.reserve(runs.size());
  std::size_t total = 0;
  for (std::uint32_t i = 0; i < runs.size(); ++i) {
    if (runs[i].empty()) continue;
    order.push_back(i);
    total += runs[i].size();
  }
  out.reserve(total);
  std::sort(order.begin(), order.end(), [&runs](auto a, auto b) { return runs[a].front().key < runs[b].front().key; });

  // First fit: a run joins the first chain whose tail ends below the run's head.
  std::vector<std::vector<std::uint32_t>> chains;
  for (const auto i : order) {
    auto fit = std::find_if(chains.begin(), chains.end(), [&](const auto &c) {
      return runs[c.back()].back().key < runs[i].front().key;
    });
    if (fit == chains.end()) {
      chains.push_back({i});
    } else {
      fit->push_back(i);
    }
  }
  if (chains.size() == 1) {
    for (const auto i : chains.front()) {
      for (std::uint32_t p = 0; p < runs[i].size(); ++p) {
        if ((p & 255U) == 0) yield_point();
        out.push_back({i, p});
      }
    }
    return;
  }

  struct Cursor {
    const Entry *cur;
    const Entry *end;
    std::uint64_t prefix;
    std::uint32_t chain;
    std::uint32_t seg;
  };
  const auto load = [&](Cursor &c) {
    const auto &run = runs[chains[c.chain][c.seg]];
    c.cur = run.data();
    c.end = run.data() + run.size();
    c.prefix = KeyPrefix(c.cur->key);
  };
  const auto advance = [&](Cursor &c) {
    if (++c.cur != c.end) {
      c.prefix = KeyPrefix(c.cur->key);
      return true;
    }
    if (++c.seg == chains[c.chain].size()) return false;
    load(c);
    return true;
  };
  const auto less = [](const Cursor &a, const Cursor &b) {
    return a.prefix != b.prefix ? a.prefix < b.prefix : a.cur->key < b.cur->key;
  };
  // Min-heap on key; on equal keys the higher seq surfaces first.
  const auto later = [&](const Cursor &a, const Cursor &b) {
    if (a.prefix != b.prefix) return a.prefix > b.prefix;
    const auto c = a.cur->key.compare(b.cur->key);
    return c != 0 ? c > 0 : a.cur->seq < b.cur->seq;
  };
  std::vector<Cursor> heap(chains.size());
  for (std::uint32_t c = 0; c < chains.size(); ++c) {
    heap[c].chain = c;
    heap[c].seg = 0;
    load(heap[c]);
  }
  std::make_heap(heap.begin(), heap.end(), later);

  const Key *last = nullptr;
  std::uint64_t last_prefix = 0;
  const auto emit = [&](const Cursor &c) {
    if (last && last_prefix == c.prefix && *last == c.cur->key) return;
    const auto run = chains[c.chain][c.seg];
    out.push_back({run, static_cast<std::uint32_t>(c.cur - runs[run].data())});
    last = &c.cur->key;
    last_prefix = c.prefix;
  };
  while (!heap.empty()) {
    yield_point();
    std::pop_heap(heap.begin(), heap.end(), later);
    auto cur = heap.back();
    heap.pop_back();
    emit(cur);
    bool live = advance(cur);
    // Keys within a chain are strictly ascending, so a strict bound keeps ties in the heap.
    while (live && (heap.empty() || less(cur, heap.front()))) {
      yield_point();
      emit(cur);
      live = advance(cur);
    }
    if (live) {
      heap.push_back(cur);
      std::push_heap(heap.begin(), heap.end(), later);
    }
  }
}
}  // namespace detail

/**
 * @brief Merge ascending runs into one ascending run, keeping the highest seq per key.
 *
 * Inputs are moved from. Runs may come from any mix of memtables, files, and pages;
 * freshness is decided by seq alone, never by source order.
 */
[[nodiscard]] inline std::vector<Entry>
MergeNewest(std::vector<std::vector<Entry>> runs)
{
  std::erase_if(runs, [](const auto &r) { return r.empty(); });
  if (runs.empty()) return {};
  if (runs.size() == 1) return std::move(runs.front());
  std::vector<std::span<const Entry>> views(runs.begin(), runs.end());
  std::vector<detail::Pick> picks;
  detail::PickNewest(views, picks);
  std::vector<Entry> out;
  out.reserve(picks.size());
  for (std::size_t i = 0; i < picks.size(); ++i) {
    if ((i & 255U) == 0) yield_point();
    out.push_back(std::move(runs[picks[i].run][picks[i].pos]));
  }
  // Superseded versions still own their strings.
  for (auto &r : runs) paced_clear(r);
  return out;
}

/**
 * @brief Read-path runs: views into immutable file images (pinned until the merge is
 *        done) plus owned copies for sources that can change under the reader.
 */
struct RunViews {
  std::vector<std::span<const Entry>> runs{};

  void
  Own(std::vector<Entry> run)
  {
    if (run.empty()) return;
    // Moving a vector keeps its buffer, so earlier spans stay valid.
    owned_.push_back(std::move(run));
    runs.emplace_back(owned_.back());
  }

  void
  View(std::span<const Entry> run, std::shared_ptr<const void> pin)
  {
    if (run.empty()) return;
    runs.push_back(run);
    pins_.push_back(std::move(pin));
  }

  [[nodiscard]] std::size_t size() const noexcept { return runs.size(); }

 private:
  std::vector<std::vector<Entry>> owned_{};
  std::vector<std::shared_ptr<const void>> pins_{};
};

/// MergeNewest over views; copies only the surviving entries.
[[nodiscard]] inline std::vector<Entry>
MergeNewest(const RunViews &views)
{
  if (views.runs.empty()) return {};
  std::vector<Entry> out;
  if (views.runs.size() == 1) {
    out.reserve(views.runs.front().size());
    for (const auto &e : views.runs.front()) {
      if ((out.size() & 255U) == 0) yield_point();
      out.push_back(e);
    }
    return out;
  }
  std::vector<detail::Pick> picks;
  detail::PickNewest(views.runs, picks);
  out.reserve(picks.size());
  for (const auto &p : picks) {
    if ((out.size() & 255U) == 0) yield_point();
    out.push_back(views.runs[p.run][p.pos]);
  }
  return out;
}

/// Keep only entries inside r (input ascending).
[[nodiscard]] inline std::vector<Entry>
FilterRange(std::vector<Entry> run, const Interval &r)
{
  std::erase_if(run, [&r](const Entry &e) { return !r.contains(e.key); });
  return run;
}

/// Split an ascending run by a predicate into (inside, outside) preserving order.
inline std::pair<std::vector<Entry>, std::vector<Entry>>
PartitionRun(std::vector<Entry> run, const Interval &r)
{
  std::vector<Entry> in, out;
  for (auto &e : run) (r.contains(e.key) ? in : out).push_back(std::move(e));
  return {std::move(in), std::move(out)};
}

}  // namespace ahatree

#endif  // AHATREE_MERGE_HPP
