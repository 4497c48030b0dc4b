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

#ifndef AHATREE_LSMT_HPP
#define AHATREE_LSMT_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ahatree/core.hpp"
#include "ahatree/env.hpp"
#include "ahatree/memtable.hpp"
#include "ahatree/merge.hpp"
#include "ahatree/sstable.hpp"

namespace ahatree
{
struct CompactionStats {
  std::uint64_t size_compactions{0};
  std::uint64_t seek_compactions{0};
  std::uint64_t bytes_rewritten{0};

  CompactionStats &
  operator+=(const CompactionStats &o) noexcept
  {
    size_compactions += o.size_compactions;
    seek_compactions += o.seek_compactions;
    bytes_rewritten += o.bytes_rewritten;
    return *this;
  }

  friend bool operator==(const CompactionStats &, const CompactionStats &) = default;
};

struct LsmtOptions {
  std::uint64_t memtable_limit{64U << 10U};
  std::uint64_t byte_budget{1U << 20U};
  std::uint32_t level_size_ratio{4};
  bool seek_compaction{false};
  std::int64_t seek_allowance{0};
  std::size_t l0_file_cap{8};
  /// Output file size for compactions; zero means memtable_limit.
  std::uint64_t target_file_bytes{0};
};

/// An immutable snapshot of the file lists. Level 0 may overlap; deeper levels may not.
struct LevelSet {
  std::vector<std::vector<SstFile::Ptr>> levels{1};
  std::uint64_t bytes{0};

  /// Deepest non-empty level, never below 1.
  [[nodiscard]] std::size_t
  deepest() const noexcept
  {
    std::size_t k = 1;
    for (std::size_t i = 1; i < levels.size(); ++i) {
      if (!levels[i].empty()) k = i;
    }
    return k;
  }

  [[nodiscard]] std::uint64_t
  level_bytes(std::size_t i) const noexcept
  {
    std::uint64_t b = 0;
    if (i < levels.size()) {
      for (const auto &f : levels[i]) b += f->byte_size();
    }
    return b;
  }

  [[nodiscard]] std::size_t
  file_count() const noexcept
  {
    std::size_t n = 0;
    for (const auto &l : levels) n += l.size();
    return n;
  }
};

/**
 * @brief One leveled LSM component: a memtable in front of level 0 and levels 1..k.
 *
 * Used as the root buffer, as every node buffer, and as the plain LSM baseline. Level
 * capacities derive geometrically from the component's byte budget (deepest level
 * largest). Readers take an atomic snapshot of (memtable, frozen memtable, level set)
 * and never block structural installs for longer than a pointer swap.
 *
 * Threading: one writer calls Put/FlushMemTable; one maintainer calls the compaction,
 * drain, and install methods; any number of readers.
 */
class Lsmt
{
 public:
  using Run = std::vector<Entry>;

  /// A drain computed against a snapshot and installed later (copy-install-swap).
  struct DrainPlan {
    Interval range{};
    Run entries{};
    std::vector<SstFile::Ptr> removed{};
    std::vector<std::pair<std::size_t, SstFile::Ptr>> added{};
    Run mem_taken{};
    std::uint64_t mem_generation{0};
    bool include_mem{false};
    std::uint64_t bytes_read{0};
  };

  Lsmt(Env &env,
       std::string dir,
       LsmtOptions opts,
       std::shared_ptr<FileIdSource> ids,
       std::uint64_t node_id = 0)
      : env_{&env},
        dir_{std::move(dir)},
        opts_{opts},
        ids_{std::move(ids)},
        node_id_{node_id},
        mem_{std::make_shared<MemTable>(opts.memtable_limit)},
        version_{std::make_shared<const LevelSet>()}
  {
    if (opts_.target_file_bytes == 0) opts_.target_file_bytes = std::max<std::uint64_t>(opts_.memtable_limit, 1);
  }

  Lsmt(const Lsmt &) = delete;
  Lsmt &operator=(const Lsmt &) = delete;

  /*####################################################################################
   * Foreground write path
   *##################################################################################*/

  /// Buffer an entry; returns whether the component now exceeds its byte budget.
  bool
  Put(Entry e)
  {
    std::shared_ptr<MemTable> mem;
    {
      std::lock_guard guard{mu_};
      mem = mem_;
    }
    if (mem->Put(std::move(e))) FlushMemTable();
    return OverBudget();
  }

  /// Write the memtable out as a new level-0 file.
  void
  FlushMemTable()
  {
    std::shared_ptr<MemTable> frozen;
    {
      std::lock_guard guard{mu_};
      if (mem_->Empty()) return;
      frozen = mem_;
      imm_ = frozen;
      mem_ = std::make_shared<MemTable>(opts_.memtable_limit);
      ++mem_generation_;
    }
    const auto entries = frozen->Scan(Interval::whole());
    auto file = WriteFile(0, entries);
    {
      std::lock_guard guard{mu_};
      auto v = std::make_shared<LevelSet>(*version_);
      v->levels[0].push_back(file);
      v->bytes += file->byte_size();
      version_ = std::move(v);
      imm_.reset();
    }
    PersistManifest();
  }

  /*####################################################################################
   * Read path
   *##################################################################################*/

  /// Append every source's entries in r as separate ascending runs.
  void
  CollectRuns(const Interval &r, RunViews &runs, ScanTrace *trace = nullptr) const
  {
    auto [mem, imm, version] = Snapshot();
    auto take = [&](Run run) {
      if (run.empty()) return;
      if (trace) trace->hits.push_back({node_id_, SourceKind::kMemTable, -1, 0, run.size()});
      runs.Own(std::move(run));
    };
    take(mem->Scan(r));
    if (imm) take(imm->Scan(r));
    for (std::size_t lvl = 0; lvl < version->levels.size(); ++lvl) {
      for (const auto &f : version->levels[lvl]) {
        if (!f->Overlaps(r)) continue;
        const auto run = f->SeekView(r);
        if (trace) trace->hits.push_back({node_id_, SourceKind::kFile, static_cast<int>(lvl), f->file_id(), run.size()});
        if (opts_.seek_compaction && f->seeks_remaining() <= 0) seek_pending_.store(true);
        runs.View(run, f->image());
      }
    }
  }

  /// Newest version per key in r, ascending.
  [[nodiscard]] Run
  Scan(const Interval &r, ScanTrace *trace = nullptr) const
  {
    RunViews runs;
    CollectRuns(r, runs, trace);
    return MergeNewest(runs);
  }

  [[nodiscard]] Run
  Scan(const KeyRange &r, ScanTrace *trace = nullptr) const
  {
    return Scan(Interval::of(r), trace);
  }

  /// Everything in the component, newest per key, without seek accounting.
  [[nodiscard]] Run
  ReadAll() const
  {
    auto [mem, imm, version] = Snapshot();
    RunViews runs;
    runs.Own(mem->Scan(Interval::whole()));
    if (imm) runs.Own(imm->Scan(Interval::whole()));
    for (const auto &level : version->levels) {
      for (const auto &f : level) runs.View(f->entries(), f->image());
    }
    return MergeNewest(runs);
  }

  /// Whether any buffered key may lie in r (memtable exactly, files by bounds).
  [[nodiscard]] bool
  Overlaps(const Interval &r) const
  {
    auto [mem, imm, version] = Snapshot();
    if (mem->Overlaps(r) || (imm && imm->Overlaps(r))) return true;
    for (const auto &level : version->levels) {
      for (const auto &f : level) {
        if (f->Overlaps(r)) return true;
      }
    }
    return false;
  }

  [[nodiscard]] bool
  MemOverlaps(const Interval &r) const
  {
    auto [mem, imm, version] = Snapshot();
    return mem->Overlaps(r) || (imm && imm->Overlaps(r));
  }

  /*####################################################################################
   * Size accounting
   *##################################################################################*/

  [[nodiscard]] std::uint64_t
  FileBytes() const
  {
    std::lock_guard guard{mu_};
    return version_->bytes;
  }

  [[nodiscard]] std::uint64_t
  MemBytes() const
  {
    std::lock_guard guard{mu_};
    return mem_->ApproxBytes() + (imm_ ? imm_->ApproxBytes() : 0);
  }

  [[nodiscard]] std::uint64_t
  TotalBytes() const
  {
    return FileBytes() + MemBytes();
  }

  [[nodiscard]] bool
  OverBudget() const
  {
    return TotalBytes() > opts_.byte_budget;
  }

  [[nodiscard]] bool
  Empty() const
  {
    auto [mem, imm, version] = Snapshot();
    return mem->Empty() && !imm && version->file_count() == 0;
  }

  [[nodiscard]] std::shared_ptr<const LevelSet>
  Current() const
  {
    std::lock_guard guard{mu_};
    return version_;
  }

  [[nodiscard]] std::vector<std::size_t>
  LevelFileCounts() const
  {
    auto v = Current();
    std::vector<std::size_t> counts;
    for (const auto &l : v->levels) counts.push_back(l.size());
    return counts;
  }

  [[nodiscard]] std::size_t
  NonEmptyLevels() const
  {
    auto [mem, imm, version] = Snapshot();
    std::size_t n = 0;
    for (const auto &l : version->levels) n += l.empty() ? 0 : 1;
    return n;
  }

  [[nodiscard]] const LsmtOptions &options() const noexcept { return opts_; }
  [[nodiscard]] const std::string &dir() const noexcept { return dir_; }
  [[nodiscard]] std::uint64_t node_id() const noexcept { return node_id_; }

  [[nodiscard]] CompactionStats
  stats() const
  {
    return {size_compactions_.load(), seek_compactions_.load(), bytes_rewritten_.load()};
  }

  /*####################################################################################
   * Compaction
   *##################################################################################*/

  /// Whether a read found a file out of seek allowance since the last compaction check.
  [[nodiscard]] bool SeekPending() const noexcept { return seek_pending_.load(); }

  /// Hold MANIFEST writes until SyncManifest() (lets an owner write outside its locks).
  void set_defer_manifest(bool defer) noexcept { defer_manifest_ = defer; }

  void
  SyncManifest() const
  {
    if (!manifest_dirty_.exchange(false)) return;
    std::lock_guard guard{manifest_mu_};
    env_->WriteFileAtomic(dir_ + "/MANIFEST", ManifestText());
  }

  [[nodiscard]] bool
  NeedsCompaction() const
  {
    return PickCompaction(*Current()).has_value();
  }

  /// Run compactions until no trigger fires; returns the counters' delta.
  CompactionStats
  MaybeCompact()
  {
    CompactionStats delta;
    for (int guard = 0; guard < 256; ++guard) {
      auto d = CompactOnce();
      if (d == CompactionStats{}) break;
      delta += d;
    }
    return delta;
  }

  /// At most one compaction; zero delta when nothing is due.
  CompactionStats
  CompactOnce()
  {
    auto base = Current();
    auto pick = PickCompaction(*base);
    if (!pick) {
      seek_pending_.store(false);
      return {};
    }
    RunViews runs;
    CompactionStats d;
    for (const auto &f : pick->inputs) {
      runs.View(f->entries(), f->image());
      d.bytes_rewritten += f->byte_size();
    }
    auto merged = MergeNewest(runs);
    auto outputs = WriteSortedRun(pick->output_level, merged);
    paced_clear(merged);
    Replace(pick->inputs, pick->output_level, outputs);
    (pick->seek ? d.seek_compactions : d.size_compactions) = 1;
    size_compactions_ += d.size_compactions;
    seek_compactions_ += d.seek_compactions;
    bytes_rewritten_ += d.bytes_rewritten;
    return d;
  }

  /// Byte target of level i under the geometric budget rule.
  [[nodiscard]] double
  LevelTarget(const LevelSet &v, std::size_t i) const
  {
    const auto k = v.deepest();
    return static_cast<double>(opts_.byte_budget) /
           std::pow(static_cast<double>(opts_.level_size_ratio), static_cast<double>(k - std::min(i, k)));
  }

  /*####################################################################################
   * Drains and installs (maintainer only)
   *##################################################################################*/

  /**
   * @brief Compute the removal of every entry in r against the current snapshot.
   *
   * Files overlapping r leave the component; their parts below and above r are
   * rewritten as separate remainder files at the same level, so no remaining file's
   * bounds overlap r afterwards. The memtable part is taken only when include_mem.
   */
  [[nodiscard]] DrainPlan
  PrepareDrain(const Interval &r, bool include_mem, const Interval *mem_range = nullptr) const
  {
    DrainPlan p;
    p.range = r;
    p.include_mem = include_mem;
    std::shared_ptr<MemTable> mem, imm;
    std::shared_ptr<const LevelSet> version;
    {
      std::lock_guard guard{mu_};
      mem = mem_;
      imm = imm_;
      version = version_;
      p.mem_generation = mem_generation_;
    }
    std::vector<Run> inside;
    if (include_mem) {
      const auto &mr = mem_range ? *mem_range : r;
      p.mem_taken = mem->Scan(mr);
      if (imm) p.mem_taken = MergeNewest({std::move(p.mem_taken), imm->Scan(mr)});
      inside.push_back(p.mem_taken);
    }
    for (std::size_t lvl = 0; lvl < version->levels.size(); ++lvl) {
      for (const auto &f : version->levels[lvl]) {
        if (!f->Overlaps(r)) continue;
        p.removed.push_back(f);
        p.bytes_read += f->byte_size();
        Run in, below, above;
        in.reserve(f->entry_count());
        for (const auto &e : f->entries()) {
          yield_point();
          if (r.contains(e.key)) {
            in.push_back(e);
          } else {
            (e.key < r.lo ? below : above).push_back(e);
          }
        }
        inside.push_back(std::move(in));
        if (!below.empty()) p.added.emplace_back(lvl, WriteFile(lvl, below));
        if (!above.empty()) p.added.emplace_back(lvl, WriteFile(lvl, above));
      }
    }
    p.entries = MergeNewest(std::move(inside));
    return p;
  }

  /// Whether a prepared plan can still be installed (no memtable swap in between).
  [[nodiscard]] bool
  CanCommit(const DrainPlan &p) const
  {
    std::lock_guard guard{mu_};
    if (p.include_mem && (mem_generation_ != p.mem_generation || imm_)) return false;
    for (const auto &f : p.removed) {
      if (!Contains(*version_, f)) return false;
    }
    return true;
  }

  /// Install a plan; returns false (and discards its files) if it went stale.
  bool
  CommitDrain(DrainPlan &p)
  {
    if (!CanCommit(p)) {
      Discard(p);
      return false;
    }
    {
      std::lock_guard guard{mu_};
      auto v = std::make_shared<LevelSet>(*version_);
      RemoveFrom(*v, p.removed);
      for (auto &[lvl, f] : p.added) AddTo(*v, lvl, f);
      SortLevels(*v);
      version_ = std::move(v);
      if (p.include_mem) {
        mem_->EraseIfUnchanged(p.mem_taken);
        if (imm_) imm_->EraseIfUnchanged(p.mem_taken);
      }
    }
    for (const auto &f : p.removed) f->MarkObsolete();
    PersistManifest();
    return true;
  }

  static void
  Discard(DrainPlan &p)
  {
    for (auto &[lvl, f] : p.added) f->MarkObsolete();
    p.added.clear();
  }

  /// Remove and return every entry in r (single-maintainer convenience).
  Run
  DrainRange(const Interval &r)
  {
    for (;;) {
      auto plan = PrepareDrain(r, true);
      if (CommitDrain(plan)) return std::move(plan.entries);
    }
  }

  Run
  DrainRange(const KeyRange &r)
  {
    return DrainRange(Interval::of(r));
  }

  /// Write an ascending run as files of the given level without installing them.
  [[nodiscard]] std::vector<SstFile::Ptr>
  WriteSortedRun(std::size_t level, std::span<const Entry> run) const
  {
    std::vector<SstFile::Ptr> out;
    std::size_t begin = 0;
    std::uint64_t bytes = 0;
    for (std::size_t i = 0; i < run.size(); ++i) {
      bytes += run[i].payload_bytes() + 16;
      if (bytes >= opts_.target_file_bytes || i + 1 == run.size()) {
        out.push_back(WriteFile(level, run.subspan(begin, i + 1 - begin)));
        begin = i + 1;
        bytes = 0;
      }
    }
    return out;
  }

  /// Write a run as one level-0 file (not yet visible).
  [[nodiscard]] SstFile::Ptr
  WriteL0(const Run &run) const
  {
    return WriteFile(0, run);
  }

  void
  InstallFiles(std::size_t level, const std::vector<SstFile::Ptr> &files)
  {
    if (files.empty()) return;
    {
      std::lock_guard guard{mu_};
      auto v = std::make_shared<LevelSet>(*version_);
      for (const auto &f : files) AddTo(*v, level, f);
      SortLevels(*v);
      version_ = std::move(v);
    }
    PersistManifest();
  }

  /// Add a run as the freshest level-0 file.
  void
  Ingest(const Run &run)
  {
    if (!run.empty()) InstallFiles(0, {WriteL0(run)});
  }

  /// Swap inputs for outputs atomically (inputs become obsolete).
  void
  Replace(const std::vector<SstFile::Ptr> &inputs, std::size_t level, const std::vector<SstFile::Ptr> &outputs)
  {
    {
      std::lock_guard guard{mu_};
      auto v = std::make_shared<LevelSet>(*version_);
      RemoveFrom(*v, inputs);
      for (const auto &f : outputs) AddTo(*v, level, f);
      SortLevels(*v);
      version_ = std::move(v);
    }
    for (const auto &f : inputs) f->MarkObsolete();
    PersistManifest();
  }

  /// Drop every file and the memtable; files disappear once the last reader lets go.
  void
  Destroy()
  {
    std::shared_ptr<const LevelSet> old;
    {
      std::lock_guard guard{mu_};
      old = version_;
      version_ = std::make_shared<const LevelSet>();
      mem_ = std::make_shared<MemTable>(opts_.memtable_limit);
      imm_.reset();
      ++mem_generation_;
    }
    for (const auto &l : old->levels) {
      for (const auto &f : l) f->MarkObsolete();
    }
    manifest_dirty_.store(false);
    std::lock_guard guard{manifest_mu_};
    env_->RemoveFile(dir_ + "/MANIFEST");
  }

  /// MANIFEST lines: "<level> <file_id> <min_key hex> <max_key hex>".
  [[nodiscard]] std::string
  ManifestText() const
  {
    auto v = Current();
    std::ostringstream os;
    for (std::size_t lvl = 0; lvl < v->levels.size(); ++lvl) {
      for (const auto &f : v->levels[lvl]) {
        os << lvl << ' ' << f->file_id() << ' ' << Hex(f->min_key()) << ' ' << Hex(f->max_key()) << '\n';
      }
    }
    return os.str();
  }

  static std::string
  Hex(std::string_view s)
  {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(s.size() * 2);
    for (unsigned char c : s) {
      out.push_back(kDigits[c >> 4U]);
      out.push_back(kDigits[c & 0xFU]);
    }
    return out;
  }

 private:
  struct Pick {
    std::vector<SstFile::Ptr> inputs{};
    std::size_t output_level{1};
    bool seek{false};
  };

  std::tuple<std::shared_ptr<MemTable>, std::shared_ptr<MemTable>, std::shared_ptr<const LevelSet>>
  Snapshot() const
  {
    std::lock_guard guard{mu_};
    return {mem_, imm_, version_};
  }

  SstFile::Ptr
  WriteFile(std::size_t level, std::span<const Entry> entries) const
  {
    const auto id = ids_->Next();
    auto path = dir_ + "/L" + std::to_string(level) + "/" + std::to_string(id) + ".sst";
    return SstFile::Write(*env_, std::move(path), id, entries, opts_.seek_allowance);
  }

  static bool
  Contains(const LevelSet &v, const SstFile::Ptr &f)
  {
    for (const auto &l : v.levels) {
      if (std::find(l.begin(), l.end(), f) != l.end()) return true;
    }
    return false;
  }

  static void
  RemoveFrom(LevelSet &v, const std::vector<SstFile::Ptr> &files)
  {
    for (const auto &f : files) {
      for (auto &l : v.levels) {
        auto it = std::find(l.begin(), l.end(), f);
        if (it != l.end()) {
          v.bytes -= f->byte_size();
          l.erase(it);
          break;
        }
      }
    }
    while (v.levels.size() > 1 && v.levels.back().empty()) v.levels.pop_back();
  }

  static void
  AddTo(LevelSet &v, std::size_t level, const SstFile::Ptr &f)
  {
    if (v.levels.size() <= level) v.levels.resize(level + 1);
    v.levels[level].push_back(f);
    v.bytes += f->byte_size();
  }

  static void
  SortLevels(LevelSet &v)
  {
    for (std::size_t i = 1; i < v.levels.size(); ++i) {
      std::sort(v.levels[i].begin(), v.levels[i].end(),
                [](const auto &a, const auto &b) { return a->min_key() < b->min_key(); });
    }
  }

  static std::vector<SstFile::Ptr>
  OverlappingIn(const LevelSet &v, std::size_t level, const Key &min, const Key &max)
  {
    std::vector<SstFile::Ptr> out;
    if (level >= v.levels.size()) return out;
    for (const auto &f : v.levels[level]) {
      if (f->min_key() <= max && min <= f->max_key()) out.push_back(f);
    }
    return out;
  }

  static std::pair<Key, Key>
  Hull(const std::vector<SstFile::Ptr> &files)
  {
    Key lo = files.front()->min_key(), hi = files.front()->max_key();
    for (const auto &f : files) {
      lo = std::min(lo, f->min_key());
      hi = std::max(hi, f->max_key());
    }
    return {lo, hi};
  }

  std::optional<Pick>
  PickCompaction(const LevelSet &v) const
  {
    const auto k = v.deepest();
    // Level 0 merges as a whole into level 1, which keeps level 1 strictly older.
    if (!v.levels[0].empty() &&
        (v.levels[0].size() > opts_.l0_file_cap || static_cast<double>(v.level_bytes(0)) > LevelTarget(v, 0))) {
      Pick p;
      p.inputs = v.levels[0];
      auto [lo, hi] = Hull(p.inputs);
      for (auto &f : OverlappingIn(v, 1, lo, hi)) p.inputs.push_back(f);
      p.output_level = 1;
      return p;
    }
    // The deepest level only grows by overflowing the whole budget; the owner handles that.
    for (std::size_t i = 1; i < k && i < v.levels.size(); ++i) {
      if (v.levels[i].empty() || static_cast<double>(v.level_bytes(i)) <= LevelTarget(v, i)) continue;
      auto victim = *std::min_element(v.levels[i].begin(), v.levels[i].end(),
                                      [](const auto &a, const auto &b) { return a->file_id() < b->file_id(); });
      Pick p;
      p.inputs.push_back(victim);
      for (auto &f : OverlappingIn(v, i + 1, victim->min_key(), victim->max_key())) p.inputs.push_back(f);
      p.output_level = i + 1;
      return p;
    }
    if (!opts_.seek_compaction) return std::nullopt;
    // Deepest-level files are disjoint and have nowhere further to go.
    for (std::size_t i = 0; i < v.levels.size() && (i == 0 || i < k); ++i) {
      for (const auto &f : v.levels[i]) {
        if (f->seeks_remaining() > 0) continue;
        Pick p;
        p.seek = true;
        p.output_level = i + 1;
        p.inputs.push_back(f);
        if (i == 0) {
          // Older overlapping level-0 files must move with the victim.
          bool grew = true;
          while (grew) {
            grew = false;
            auto [lo, hi] = Hull(p.inputs);
            SeqNo newest = 0;
            for (const auto &in : p.inputs) newest = std::max(newest, in->max_seq());
            for (const auto &g : v.levels[0]) {
              if (std::find(p.inputs.begin(), p.inputs.end(), g) != p.inputs.end()) continue;
              if (g->min_key() <= hi && lo <= g->max_key() && g->min_seq() < newest) {
                p.inputs.push_back(g);
                grew = true;
              }
            }
          }
        }
        auto [lo, hi] = Hull(p.inputs);
        for (auto &g : OverlappingIn(v, i + 1, lo, hi)) p.inputs.push_back(g);
        return p;
      }
    }
    return std::nullopt;
  }

  void
  PersistManifest() const
  {
    manifest_dirty_.store(true);
    if (defer_manifest_) return;
    manifest_dirty_.store(false);
    std::lock_guard guard{manifest_mu_};
    env_->WriteFileAtomic(dir_ + "/MANIFEST", ManifestText());
  }

  Env *env_;
  std::string dir_;
  LsmtOptions opts_;
  std::shared_ptr<FileIdSource> ids_;
  std::uint64_t node_id_;

  mutable std::mutex mu_{};
  std::shared_ptr<MemTable> mem_;
  std::shared_ptr<MemTable> imm_{};
  std::shared_ptr<const LevelSet> version_;
  std::uint64_t mem_generation_{0};

  mutable std::atomic<bool> seek_pending_{false};
  bool defer_manifest_{false};
  mutable std::atomic<bool> manifest_dirty_{false};
  mutable std::mutex manifest_mu_{};
  std::atomic<std::uint64_t> size_compactions_{0};
  std::atomic<std::uint64_t> seek_compactions_{0};
  std::atomic<std::uint64_t> bytes_rewritten_{0};
};

}  // namespace ahatree

#endif  // AHATREE_LSMT_HPP
