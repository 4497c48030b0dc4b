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

#ifndef AHATREE_PAGES_HPP
#define AHATREE_PAGES_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "ahatree/core.hpp"
#include "ahatree/env.hpp"
#include "ahatree/merge.hpp"
#include "ahatree/sstable.hpp"

namespace ahatree
{
/// Golden-ratio step of the sound-remedy fill schedule.
inline constexpr double kFillStep = std::numbers::phi - 1.0;

/**
 * @brief Fill fraction of the i-th page (0-based) created by one sound-remedy packing.
 *
 * A low-discrepancy walk over [0.5, 0.9]: neighbouring pages never share a fill level,
 * so later inserts do not drive them to split in lockstep.
 */
[[nodiscard]] inline double
SoundRemedyFill(std::size_t i) noexcept
{
  const double x = static_cast<double>(i) * kFillStep;
  return 0.5 + 0.4 * (x - std::floor(x));
}

/// Entry count the schedule assigns to page i.
[[nodiscard]] inline std::size_t
SoundRemedyCount(std::size_t i, std::size_t capacity) noexcept
{
  const auto n = static_cast<std::size_t>(std::floor(SoundRemedyFill(i) * static_cast<double>(capacity)));
  return std::max<std::size_t>(n, 1);
}

struct PageSpec {
  std::vector<Entry> entries{};
  double fill_target{1.0};
};

/**
 * @brief Cut an ascending stream into leaf pages.
 *
 * Even: ceil(N / capacity) pages whose sizes differ by at most one (larger pages first).
 * Sound remedy: page i takes SoundRemedyCount(i) entries; the last takes the remainder.
 * Either way the concatenation of the pages is the input stream.
 */
[[nodiscard]] inline std::vector<PageSpec>
PackPages(std::vector<Entry> stream, Packing policy, std::size_t capacity)
{
  std::vector<PageSpec> pages;
  const std::size_t n = stream.size();
  if (n == 0) return pages;
  std::size_t pos = 0;
  auto emit = [&](std::size_t count, double fill) {
    yield_point();
    PageSpec p;
    p.fill_target = fill;
    p.entries.assign(std::make_move_iterator(stream.begin() + static_cast<std::ptrdiff_t>(pos)),
                     std::make_move_iterator(stream.begin() + static_cast<std::ptrdiff_t>(pos + count)));
    pos += count;
    pages.push_back(std::move(p));
  };
  if (policy == Packing::kEven) {
    const std::size_t pages_n = (n + capacity - 1) / capacity;
    const std::size_t base = n / pages_n, extra = n % pages_n;
    for (std::size_t i = 0; i < pages_n; ++i) {
      const auto count = base + (i < extra ? 1 : 0);
      emit(count, static_cast<double>(count) / static_cast<double>(capacity));
    }
  } else {
    for (std::size_t i = 0; pos < n; ++i) {
      emit(std::min(SoundRemedyCount(i, capacity), n - pos), SoundRemedyFill(i));
    }
  }
  return pages;
}

/// A fixed-capacity leaf page persisted as its own immutable file.
struct LeafPage {
  SstFile::Ptr file{};
  double fill_target{1.0};

  [[nodiscard]] std::size_t size() const noexcept { return file->entry_count(); }
  [[nodiscard]] const Key &min_key() const noexcept { return file->min_key(); }
  [[nodiscard]] const Key &max_key() const noexcept { return file->max_key(); }
  [[nodiscard]] const std::vector<Entry> &entries() const noexcept { return file->entries(); }
};

using PageRun = std::vector<LeafPage>;

/// Index of the page that owns k: the last page whose min_key <= k (or the first).
[[nodiscard]] inline std::size_t
OwningPage(const PageRun &run, const Key &k)
{
  auto it = std::upper_bound(run.begin(), run.end(), k,
                             [](const Key &key, const LeafPage &p) { return key < p.min_key(); });
  return it == run.begin() ? 0 : static_cast<std::size_t>(it - run.begin() - 1);
}

/// Pages of run overlapping r, as ascending entry runs.
inline void
CollectPageRuns(const PageRun &run,
                const Interval &r,
                RunViews &out,
                std::uint64_t node_id = 0,
                ScanTrace *trace = nullptr)
{
  if (run.empty()) return;
  for (std::size_t i = OwningPage(run, r.lo); i < run.size(); ++i) {
    const auto &p = run[i];
    if (r.hi && !(p.min_key() < *r.hi)) break;
    if (!p.file->Overlaps(r)) continue;
    const auto entries = p.file->View(r);
    if (trace) trace->hits.push_back({node_id, SourceKind::kPage, -1, p.file->file_id(), entries.size()});
    out.View(entries, p.file->image());
  }
}

/// Writes page files under one directory.
class PageWriter
{
 public:
  PageWriter(Env &env, std::string dir, std::shared_ptr<FileIdSource> ids)
      : env_{&env}, dir_{std::move(dir)}, ids_{std::move(ids)}
  {
  }

  [[nodiscard]] LeafPage
  Write(std::span<const Entry> entries, double fill_target) const
  {
    const auto id = ids_->Next();
    return {SstFile::Write(*env_, dir_ + "/pages/" + std::to_string(id) + ".sst", id, entries), fill_target};
  }

  [[nodiscard]] PageRun
  WriteAll(std::vector<PageSpec> specs) const
  {
    PageRun run;
    run.reserve(specs.size());
    for (auto &s : specs) {
      run.push_back(Write(s.entries, s.fill_target));
      paced_clear(s.entries);
    }
    return run;
  }

 private:
  Env *env_;
  std::string dir_;
  std::shared_ptr<FileIdSource> ids_;
};

struct PageMergeResult {
  PageRun run{};
  std::vector<LeafPage> replaced{};
  std::uint64_t bytes_rewritten{0};
  std::uint64_t splits{0};
};

/**
 * @brief Merge an ascending batch of newer entries into a page run.
 *
 * Every touched page is rewritten with the batch's entries folded in; a page that grows
 * past capacity splits evenly into ceil(n / capacity) pages. Untouched pages are shared.
 */
[[nodiscard]] inline PageMergeResult
MergeIntoPages(const PageRun &run,
               std::vector<Entry> batch,
               std::size_t capacity,
               const PageWriter &writer)
{
  PageMergeResult res;
  if (batch.empty()) {
    res.run = run;
    return res;
  }
  if (run.empty()) {
    for (auto &spec : PackPages(std::move(batch), Packing::kEven, capacity)) {
      res.run.push_back(writer.Write(spec.entries, spec.fill_target));
    }
    return res;
  }
  std::vector<std::vector<Entry>> groups(run.size());
  for (auto &e : batch) {
    yield_point();
    groups[OwningPage(run, e.key)].push_back(std::move(e));
  }
  for (std::size_t i = 0; i < run.size(); ++i) {
    yield_point();
    if (groups[i].empty()) {
      res.run.push_back(run[i]);
      continue;
    }
    res.replaced.push_back(run[i]);
    res.bytes_rewritten += run[i].file->byte_size();
    RunViews views;
    views.View(run[i].entries(), run[i].file->image());
    views.Own(std::move(groups[i]));
    auto merged = MergeNewest(views);
    if (merged.size() <= capacity) {
      res.run.push_back(writer.Write(merged, run[i].fill_target));
      continue;
    }
    auto parts = PackPages(std::move(merged), Packing::kEven, capacity);
    res.splits += parts.size() - 1;
    for (auto &p : parts) res.run.push_back(writer.Write(p.entries, p.fill_target));
  }
  return res;
}

/**
 * @brief Insert one entry into a page run, splitting the owning page in half on overflow.
 */
[[nodiscard]] inline PageMergeResult
InsertIntoPages(const PageRun &run, Entry e, std::size_t capacity, const PageWriter &writer)
{
  PageMergeResult res;
  if (run.empty()) {
    res.run.push_back(writer.Write(std::span{&e, 1}, 1.0 / static_cast<double>(capacity)));
    return res;
  }
  const auto idx = OwningPage(run, e.key);
  res.run.assign(run.begin(), run.begin() + static_cast<std::ptrdiff_t>(idx));
  res.replaced.push_back(run[idx]);
  res.bytes_rewritten += run[idx].file->byte_size();
  auto merged = MergeNewest({run[idx].entries(), {std::move(e)}});
  if (merged.size() <= capacity) {
    res.run.push_back(writer.Write(merged, run[idx].fill_target));
  } else {
    const auto half = (merged.size() + 1) / 2;
    res.run.push_back(writer.Write(std::span{merged}.first(half), 0.5));
    res.run.push_back(writer.Write(std::span{merged}.subspan(half), 0.5));
    res.splits = 1;
  }
  res.run.insert(res.run.end(), run.begin() + static_cast<std::ptrdiff_t>(idx) + 1, run.end());
  return res;
}

}  // namespace ahatree

#endif  // AHATREE_PAGES_HPP
