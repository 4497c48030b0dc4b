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

#ifndef AHATREE_AHA_TREE_HPP
#define AHATREE_AHA_TREE_HPP

#include <pthread.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ahatree/adaptation.hpp"
#include "ahatree/background.hpp"
#include "ahatree/core.hpp"
#include "ahatree/env.hpp"
#include "ahatree/index.hpp"
#include "ahatree/lsmt.hpp"
#include "ahatree/merge.hpp"
#include "ahatree/pages.hpp"

namespace ahatree
{
enum class NodeKind {
  kInternal,
  kLeafBuffered,
  kLeafPaged,
};

[[nodiscard]] constexpr std::string_view
to_string(NodeKind k) noexcept
{
  switch (k) {
    case NodeKind::kInternal:
      return "internal";
    case NodeKind::kLeafBuffered:
      return "leaf_buffered";
    case NodeKind::kLeafPaged:
      return "leaf_paged";
  }
  return "?";
}

/// Read-only copy of one node, for inspection.
struct NodeInfo {
  std::uint64_t id{0};
  NodeKind kind{NodeKind::kInternal};
  Interval interval{};
  std::vector<Key> routing{};
  std::vector<std::uint64_t> children{};
  std::optional<std::uint64_t> parent{};
  std::size_t depth{0};
  std::uint64_t buffer_bytes{0};
  std::vector<std::size_t> level_files{};
  std::vector<std::size_t> page_sizes{};
  std::vector<double> page_fill_targets{};
};

/// The nodes whose buffers answered a scan, and the scanned range.
struct TouchSet {
  std::vector<std::uint64_t> nodes{};
  KeyRange range{};
};

/// A key whose deeper copy is not older than the copy above it.
struct FreshnessViolation {
  Key key{};
  std::uint64_t upper_node{0};
  SeqNo upper_seq{0};
  std::uint64_t lower_node{0};
  SeqNo lower_seq{0};
};

/// Timing of adaptation steps, for checking that no step runs unbounded.
struct StepInstrumentation {
  std::uint64_t adapt_steps{0};
  double max_adapt_step_us{0};
  /// Most node drains/transforms any one adaptation step performed.
  std::size_t max_node_ops_per_step{0};
};

struct AhaTreeOptions {
  std::string data_dir{"ahatree-data"};
  /// Storage backend; null selects the filesystem.
  Env *env{nullptr};
  BackgroundMode background{BackgroundMode::kThread};
  /// Foreground writes wait while the root buffer exceeds this multiple of its budget.
  double stall_factor{2.0};
};

/// Writer-preferring reader/writer lock so brief installs never starve behind scans.
class TopologyLock
{
 public:
  TopologyLock()
  {
    pthread_rwlockattr_t attr;
    pthread_rwlockattr_init(&attr);
    pthread_rwlockattr_setkind_np(&attr, PTHREAD_RWLOCK_PREFER_WRITER_NONRECURSIVE_NP);
    pthread_rwlock_init(&lock_, &attr);
    pthread_rwlockattr_destroy(&attr);
  }

  TopologyLock(const TopologyLock &) = delete;
  TopologyLock &operator=(const TopologyLock &) = delete;

  ~TopologyLock() { pthread_rwlock_destroy(&lock_); }

  void lock() { pthread_rwlock_wrlock(&lock_); }
  void unlock() { pthread_rwlock_unlock(&lock_); }
  void lock_shared() { pthread_rwlock_rdlock(&lock_); }
  void unlock_shared() { pthread_rwlock_unlock(&lock_); }

 private:
  pthread_rwlock_t lock_{};
};

/**
 * @brief The adaptive hybrid index: a B+-tree-shaped hierarchy whose nodes buffer
 *        writes in LSM components and whose hot leaves turn into sorted pages.
 *
 * One foreground writer thread, any number of reader threads, one background worker.
 * Readers hold the topology lock shared for a whole scan; the worker prepares every new
 * file outside the lock and installs under the exclusive lock, so a scan sees either the
 * old or the new version of any structural change.
 */
class AhaTree final : public OrderedIndex
{
 public:
  static constexpr std::uint64_t kRootId = 0;

  explicit AhaTree(Config cfg, AhaTreeOptions opts = {}) : cfg_{validate_config(cfg)}, opts_{std::move(opts)}
  {
    if (opts_.env == nullptr) {
      owned_env_ = std::make_unique<PosixEnv>();
      env_ = owned_env_.get();
    } else {
      env_ = opts_.env;
    }
    auto root = std::make_unique<Node>();
    root->id = kRootId;
    root->kind = NodeKind::kInternal;
    root->interval = Interval::whole();
    root->buffer = MakeBuffer(kRootId, cfg_.root_lsmt_limit);
    root_ = root.get();
    nodes_.emplace(kRootId, std::move(root));
    if (cfg_.adaptation_enabled && cfg_.adapt_mode == AdaptMode::kEager && cfg_.eager_hotspot) {
      hotspots_.Declare(*cfg_.eager_hotspot);
    }
    PersistTree();
    worker_ = std::make_unique<BackgroundWorker>([this] { return Step(); }, opts_.background);
  }

  AhaTree(const AhaTree &) = delete;
  AhaTree &operator=(const AhaTree &) = delete;

  ~AhaTree() override { worker_->Stop(); }

  /*####################################################################################
   * Foreground operations
   *##################################################################################*/

  void
  Put(const Key &key, Value value) override
  {
    if (cfg_.adaptation_enabled) hotspots_.NoteWrite();
    if (cfg_.insert_mode == InsertMode::kSingle && cfg_.adaptation_enabled && hotspots_.InComplete(key)) {
      std::lock_guard guard{struct_mu_};
      if (hotspots_.InComplete(key) && SingleInsert(key, value)) return;
    }
    bool overflow = false;
    {
      std::shared_lock topo{topo_};
      Entry e{key, std::move(value), seq_.next()};
      if (cfg_.adaptation_enabled && hotspots_.MarkStale(key)) progress_dirty_.store(true);
      overflow = root_->buffer->Put(std::move(e));
    }
    root_->buffer->SyncManifest();
    if (overflow) {
      worker_->Notify();
      Stall();
    }
  }

  std::vector<Entry>
  Scan(const KeyRange &r) override
  {
    return Scan(r, nullptr, nullptr);
  }

  /// Scan with optional source attribution and touch-set output.
  std::vector<Entry>
  Scan(const KeyRange &r, ScanTrace *trace, TouchSet *touched)
  {
    TouchSet ts;
    ts.range = r;
    RunViews runs;
    bool seek = false;
    const auto range = Interval::of(r);
    {
      std::shared_lock topo{topo_};
      std::vector<const Node *> stack{root_};
      while (!stack.empty()) {
        const Node *n = stack.back();
        stack.pop_back();
        if (n->buffer) {
          const auto before = runs.size();
          n->buffer->CollectRuns(range, runs, trace);
          if (runs.size() != before) ts.nodes.push_back(n->id);
          seek = seek || n->buffer->SeekPending();
        }
        if (n->kind == NodeKind::kLeafPaged) CollectPageRuns(n->pages, range, runs, n->id, trace);
        // Children pushed in reverse so the walk visits them left to right.
        const auto [first, last] = ChildSpan(*n, range);
        for (auto i = last; i > first; --i) stack.push_back(Find(n->children[i - 1]));
      }
    }
    auto merged = MergeNewest(runs);
    if (seek) {
      seek_dirty_.store(true);
      worker_->Notify();
    }
    if (cfg_.adaptation_enabled) SubmitTouchSet(ts);
    if (touched) *touched = std::move(ts);
    return merged;
  }

  /// Fold a scan's evidence into the hotspot queue.
  void
  SubmitTouchSet(const TouchSet &ts)
  {
    if (!cfg_.adaptation_enabled || adapt_paused_.load()) return;
    if (hotspots_.Submit(ts.range, cfg_.adapt_mode)) worker_->Notify();
  }

  /*####################################################################################
   * Background control
   *##################################################################################*/

  void
  WaitIdle() override
  {
    worker_->WaitIdle();
  }

  /// Manual mode: run one background step; returns whether it did anything.
  bool
  RunStep()
  {
    return worker_->RunOne();
  }

  void
  SetAdaptationPaused(bool paused) override
  {
    adapt_paused_.store(paused);
    if (!paused) worker_->Notify();
  }

  /*####################################################################################
   * Observation
   *##################################################################################*/

  [[nodiscard]] bool
  AdaptationComplete() const override
  {
    return hotspots_.AllComplete();
  }

  [[nodiscard]] AdaptationProgress
  adaptation_progress() const
  {
    std::lock_guard guard{stats_mu_};
    return {hotspots_.Fraction(), astats_};
  }

  [[nodiscard]] IndexStats
  Stats() const override
  {
    IndexStats s;
    {
      std::lock_guard guard{stats_mu_};
      s.adaptation = astats_;
      s.compaction = retired_;
    }
    std::shared_lock topo{topo_};
    for (const auto &[id, n] : nodes_) {
      if (n->buffer) s.compaction += n->buffer->stats();
      s.pages += n->pages.size();
    }
    s.adapt_fraction = hotspots_.Fraction();
    s.page_splits = s.adaptation.page_splits;
    return s;
  }

  [[nodiscard]] std::string_view name() const override { return "aha"; }

  [[nodiscard]] const Config &config() const noexcept { return cfg_; }
  [[nodiscard]] const HotspotQueue &hotspots() const noexcept { return hotspots_; }
  [[nodiscard]] const Lsmt &root_buffer() const noexcept { return *root_->buffer; }
  [[nodiscard]] Env &env() const noexcept { return *env_; }
  [[nodiscard]] SeqNo last_seq() const noexcept { return seq_.last(); }

  /// Odd while an adaptation step is running; bumps on every step start and end.
  [[nodiscard]] std::uint64_t
  adapt_epoch() const noexcept
  {
    return adapt_epoch_.load(std::memory_order_acquire);
  }

  [[nodiscard]] StepInstrumentation
  step_instrumentation() const
  {
    std::lock_guard guard{stats_mu_};
    return steps_;
  }

  /// Entries held in any node buffer (root memtable included) whose keys lie in r.
  [[nodiscard]] std::uint64_t
  BufferedEntriesIn(const KeyRange &r) const
  {
    const auto range = Interval::of(r);
    std::shared_lock topo{topo_};
    std::uint64_t n = 0;
    for (const auto &[id, node] : nodes_) {
      if (node->buffer) n += FilterRange(node->buffer->ReadAll(), range).size();
    }
    return n;
  }

  /// Snapshot of every node, root first then breadth-first.
  [[nodiscard]] std::vector<NodeInfo>
  Nodes() const
  {
    std::shared_lock topo{topo_};
    std::vector<NodeInfo> out;
    std::deque<std::pair<const Node *, std::size_t>> q{{root_, 0}};
    while (!q.empty()) {
      auto [n, depth] = q.front();
      q.pop_front();
      NodeInfo info;
      info.id = n->id;
      info.kind = n->kind;
      info.interval = n->interval;
      info.routing = n->routing;
      info.children = n->children;
      info.parent = n->parent;
      info.depth = depth;
      if (n->buffer) {
        info.buffer_bytes = n->buffer->TotalBytes();
        info.level_files = n->buffer->LevelFileCounts();
      }
      for (const auto &p : n->pages) {
        info.page_sizes.push_back(p.size());
        info.page_fill_targets.push_back(p.fill_target);
      }
      out.push_back(std::move(info));
      for (auto c : n->children) q.emplace_back(Find(c), depth + 1);
    }
    return out;
  }

  /// The node id whose subtree routes k to a leaf, top-down.
  [[nodiscard]] std::vector<std::uint64_t>
  PathTo(const Key &k) const
  {
    std::shared_lock topo{topo_};
    std::vector<std::uint64_t> path;
    for (const Node *n = root_; n; n = n->children.empty() ? nullptr : Find(n->children[ChildIndex(*n, k)])) {
      path.push_back(n->id);
    }
    return path;
  }

  /// Every key whose copy in a node is not strictly older than its copy in an ancestor.
  [[nodiscard]] std::vector<FreshnessViolation>
  CheckFreshness() const
  {
    std::shared_lock topo{topo_};
    std::vector<FreshnessViolation> out;
    CheckFreshness(*root_, {}, out);
    return out;
  }

  /// Recompute the adapted share of each unfinished hotspot range.
  void
  RefreshProgress()
  {
    std::lock_guard guard{struct_mu_};
    RefreshProgressLocked();
  }

  /// Add entries straight into a node's buffer as a level-0 file (fault seeding in tests).
  void
  PlantForTesting(std::uint64_t node_id, const std::vector<Entry> &entries)
  {
    std::lock_guard guard{struct_mu_};
    std::unique_lock topo{topo_};
    auto *n = Find(node_id);
    if (n && n->buffer) n->buffer->Ingest(entries);
  }

  /// Lines "<id> <kind> <lo> <hi> r=<routing...> c=<children...>", hex keys, "-" for +inf.
  [[nodiscard]] std::string
  TreeManifestText() const
  {
    std::ostringstream os;
    for (const auto &n : Nodes()) {
      os << n.id << ' ' << to_string(n.kind) << ' ' << Lsmt::Hex(n.interval.lo) << ' '
         << (n.interval.hi ? Lsmt::Hex(*n.interval.hi) : std::string{"-"}) << " r=";
      for (std::size_t i = 0; i < n.routing.size(); ++i) os << (i ? "," : "") << Lsmt::Hex(n.routing[i]);
      os << " c=";
      for (std::size_t i = 0; i < n.children.size(); ++i) os << (i ? "," : "") << n.children[i];
      os << '\n';
    }
    return os.str();
  }

 private:
  struct Node {
    std::uint64_t id{0};
    NodeKind kind{NodeKind::kLeafBuffered};
    Interval interval{};
    /// routing[i] is the lower bound of children[i + 1].
    std::vector<Key> routing{};
    std::vector<std::uint64_t> children{};
    std::optional<std::uint64_t> parent{};
    std::shared_ptr<Lsmt> buffer{};
    PageRun pages{};
  };

  /*####################################################################################
   * Topology helpers
   *##################################################################################*/

  Node *
  Find(std::uint64_t id) const
  {
    auto it = nodes_.find(id);
    return it == nodes_.end() ? nullptr : it->second.get();
  }

  static std::size_t
  ChildIndex(const Node &n, const Key &k)
  {
    return static_cast<std::size_t>(std::upper_bound(n.routing.begin(), n.routing.end(), k) - n.routing.begin());
  }

  /// Half-open index span of the children overlapping r.
  static std::pair<std::size_t, std::size_t>
  ChildSpan(const Node &n, const Interval &r)
  {
    if (n.children.empty()) return {0, 0};
    const auto first = ChildIndex(n, r.lo);
    auto last = first + 1;
    while (last < n.children.size() && (!r.hi || n.routing[last - 1] < *r.hi)) ++last;
    return {first, last};
  }

  [[nodiscard]] std::string
  NodeDir(std::uint64_t id) const
  {
    return opts_.data_dir + "/node_" + std::to_string(id);
  }

  std::shared_ptr<Lsmt>
  MakeBuffer(std::uint64_t id, std::uint64_t budget)
  {
    LsmtOptions o;
    o.memtable_limit = cfg_.memtable_limit;
    o.byte_budget = budget;
    o.level_size_ratio = cfg_.level_size_ratio;
    o.seek_compaction = cfg_.seek_compaction_enabled;
    o.seek_allowance = cfg_.seek_allowance_per_file;
    auto b = std::make_shared<Lsmt>(*env_, NodeDir(id), o, ids_, id);
    b->set_defer_manifest(true);
    return b;
  }

  std::unique_ptr<Node>
  NewNode(NodeKind kind, Interval interval, std::optional<std::uint64_t> parent)
  {
    auto n = std::make_unique<Node>();
    n->id = next_node_id_++;
    n->kind = kind;
    n->interval = std::move(interval);
    n->parent = parent;
    if (kind != NodeKind::kLeafPaged) n->buffer = MakeBuffer(n->id, cfg_.node_lsmt_limit);
    return n;
  }

  [[nodiscard]] PageWriter
  WriterFor(std::uint64_t id) const
  {
    return PageWriter{*env_, NodeDir(id), ids_};
  }

  void
  Retire(const std::shared_ptr<Lsmt> &buffer)
  {
    if (!buffer) return;
    {
      std::lock_guard guard{stats_mu_};
      retired_ += buffer->stats();
    }
    buffer->Destroy();
  }

  void
  SyncManifests()
  {
    for (const auto &[id, n] : nodes_) {
      if (n->buffer) n->buffer->SyncManifest();
    }
  }

  void
  PersistTree()
  {
    env_->WriteFileAtomic(opts_.data_dir + "/TREE", TreeManifestText());
  }

  template <class F>
  void
  Count(F &&f)
  {
    std::lock_guard guard{stats_mu_};
    f(astats_);
  }

  void
  Stall()
  {
    const auto limit = static_cast<double>(cfg_.root_lsmt_limit) * opts_.stall_factor;
    auto over = [&] { return static_cast<double>(root_->buffer->TotalBytes()) > limit; };
    if (worker_->mode() == BackgroundMode::kManual) {
      while (over() && worker_->RunOne()) {
      }
      return;
    }
    while (over()) {
      worker_->Notify();
      std::this_thread::sleep_for(std::chrono::microseconds{200});
    }
  }

  /*####################################################################################
   * Background step
   *##################################################################################*/

  bool
  Step()
  {
    std::lock_guard guard{struct_mu_};
    const bool can_adapt = cfg_.adaptation_enabled && !adapt_paused_.load();
    prefer_adapt_ = !prefer_adapt_;
    bool did = (prefer_adapt_ && can_adapt && AdaptStep()) || MaintenanceStep() ||
               (!prefer_adapt_ && can_adapt && AdaptStep());
    SyncManifests();
    if (did) return true;
    if (progress_dirty_.exchange(false)) RefreshProgressLocked();
    return false;
  }

  bool
  MaintenanceStep()
  {
    if (root_->children.empty()) {
      if (root_->buffer->OverBudget() && root_->buffer->FileBytes() > 0) {
        Bootstrap(false);
        return true;
      }
    } else if (root_->buffer->OverBudget() && root_->buffer->FileBytes() > 0) {
      LevelEmpty(*root_);
      return true;
    }
    if (seek_dirty_.exchange(false)) {
      for (const auto &[id, n] : nodes_) {
        if (n->buffer && n->buffer->SeekPending()) maint_.insert(id);
      }
    }
    while (!maint_.empty()) {
      const auto id = *maint_.begin();
      Node *n = Find(id);
      if (!n || !n->buffer) {
        maint_.erase(id);
        continue;
      }
      if (n->kind == NodeKind::kLeafBuffered && n->buffer->OverBudget()) {
        if (LeafSplit(*n)) return true;
      } else if (n->kind == NodeKind::kInternal && !n->children.empty() && n->id != kRootId &&
                 n->buffer->OverBudget()) {
        LevelEmpty(*n);
        return true;
      }
      if (n->buffer->NeedsCompaction()) {
        n->buffer->CompactOnce();
        return true;
      }
      maint_.erase(id);
    }
    if (root_->buffer->NeedsCompaction()) {
      root_->buffer->CompactOnce();
      return true;
    }
    return false;
  }

  /*####################################################################################
   * Structural operations (worker only; struct_mu_ held)
   *##################################################################################*/

  /// Move every file of n's buffer down to its children (the root keeps its memtable).
  void
  LevelEmpty(Node &n)
  {
    auto plan = n.buffer->PrepareDrain(Interval::whole(), n.id != kRootId);
    RouteAndInstall(n, plan);
  }

  /**
   * @brief Hand a prepared drain of n's buffer to n's children and install it all at once.
   *
   * Buffered children receive their share as one new level-0 file; paged children merge
   * it into their pages. Returns false if the plan went stale before installation.
   */
  bool
  RouteAndInstall(Node &n, Lsmt::DrainPlan &plan)
  {
    struct Update {
      Node *child{nullptr};
      SstFile::Ptr file{};
      PageMergeResult pages{};
    };
    std::vector<Update> updates;
    std::size_t pos = 0;
    for (std::size_t c = 0; c < n.children.size() && pos < plan.entries.size(); ++c) {
      const auto first = plan.entries.begin() + static_cast<std::ptrdiff_t>(pos);
      const auto last = c + 1 == n.children.size()
                            ? plan.entries.end()
                            : std::lower_bound(first, plan.entries.end(), n.routing[c],
                                               [](const Entry &e, const Key &k) { return e.key < k; });
      std::vector<Entry> run;
      run.reserve(static_cast<std::size_t>(last - first));
      for (auto it = first; it != last; ++it) {
        yield_point();
        run.push_back(std::move(*it));
      }
      pos += run.size();
      if (run.empty()) continue;
      Update u;
      u.child = Find(n.children[c]);
      if (u.child->kind == NodeKind::kLeafPaged) {
        u.pages = MergeIntoPages(u.child->pages, std::move(run), cfg_.leaf_page_capacity, WriterFor(u.child->id));
      } else {
        u.file = u.child->buffer->WriteL0(run);
        paced_clear(run);
      }
      updates.push_back(std::move(u));
    }
    {
      std::unique_lock topo{topo_};
      if (!n.buffer->CanCommit(plan)) {
        topo.unlock();
        Lsmt::Discard(plan);
        for (auto &u : updates) {
          if (u.file) u.file->MarkObsolete();
          for (const auto &p : NewPages(u.child->pages, u.pages.run)) p.file->MarkObsolete();
        }
        return false;
      }
      for (auto &u : updates) {
        if (u.file) {
          u.child->buffer->InstallFiles(0, {u.file});
        } else {
          std::swap(u.child->pages, u.pages.run);
        }
      }
      n.buffer->CommitDrain(plan);
    }
    for (auto &u : updates) {
      maint_.insert(u.child->id);
      if (u.file) continue;
      // After the swap u.pages.run holds the old run.
      const auto created = NewPages(u.pages.run, u.child->pages).size();
      for (const auto &p : u.pages.replaced) p.file->MarkObsolete();
      Count([&](AdaptationStats &s) {
        s.pages_created += created;
        s.page_splits += u.pages.splits;
        s.page_bytes_rewritten += u.pages.bytes_rewritten;
      });
    }
    return true;
  }

  static std::vector<LeafPage>
  NewPages(const PageRun &before, const PageRun &after)
  {
    std::unordered_set<const SstFile *> old;
    for (const auto &p : before) old.insert(p.file.get());
    std::vector<LeafPage> out;
    for (const auto &p : after) {
      if (!old.contains(p.file.get())) out.push_back(p);
    }
    return out;
  }

  /// Turn a bare root into a root with buffered leaves split at key quantiles.
  void
  Bootstrap(bool include_mem)
  {
    ++node_ops_;
    auto plan = root_->buffer->PrepareDrain(Interval::whole(), include_mem);
    const auto &entries = plan.entries;
    const auto n = entries.size();
    const auto m = std::max<std::size_t>(1, std::min(cfg_.fanout_max, n));
    std::vector<std::unique_ptr<Node>> leaves;
    std::vector<std::vector<SstFile::Ptr>> files;
    std::vector<Key> routing;
    for (std::size_t j = 0; j < m; ++j) {
      const auto b = j * n / m, e = (j + 1) * n / m;
      Interval iv{j == 0 ? root_->interval.lo : entries[b].key, std::nullopt};
      if (j > 0) routing.push_back(entries[b].key);
      leaves.push_back(NewNode(NodeKind::kLeafBuffered, iv, kRootId));
      const auto run = std::span{entries}.subspan(b, e - b);
      files.push_back(run.empty() ? std::vector<SstFile::Ptr>{} : leaves.back()->buffer->WriteSortedRun(1, run));
    }
    for (std::size_t j = 0; j + 1 < m; ++j) leaves[j]->interval.hi = routing[j];
    {
      std::unique_lock topo{topo_};
      if (!root_->buffer->CanCommit(plan)) {
        topo.unlock();
        Lsmt::Discard(plan);
        for (auto &fs : files) {
          for (auto &f : fs) f->MarkObsolete();
        }
        next_node_id_ -= m;
        return;
      }
      root_->routing = std::move(routing);
      for (std::size_t j = 0; j < m; ++j) {
        leaves[j]->buffer->InstallFiles(1, files[j]);
        root_->children.push_back(leaves[j]->id);
        maint_.insert(leaves[j]->id);
        nodes_.emplace(leaves[j]->id, std::move(leaves[j]));
      }
      root_->buffer->CommitDrain(plan);
    }
    paced_clear(plan.entries);
    PersistTree();
  }

  /// Split an over-budget buffered leaf into ceil(bytes / (limit / 2)) siblings.
  bool
  LeafSplit(Node &leaf)
  {
    auto entries = leaf.buffer->ReadAll();
    const auto total = leaf.buffer->TotalBytes();
    const auto half = std::max<std::uint64_t>(cfg_.node_lsmt_limit / 2, 1);
    auto m = static_cast<std::size_t>((total + half - 1) / half);
    m = std::min(std::max<std::size_t>(m, 2), entries.size());
    if (m < 2) return false;
    const auto n = entries.size();
    Node &parent = *Find(*leaf.parent);
    std::vector<std::unique_ptr<Node>> parts;
    std::vector<std::vector<SstFile::Ptr>> files;
    std::vector<Key> keys;
    for (std::size_t j = 0; j < m; ++j) {
      const auto b = j * n / m, e = (j + 1) * n / m;
      Interval iv{j == 0 ? leaf.interval.lo : entries[b].key, leaf.interval.hi};
      if (j > 0) keys.push_back(entries[b].key);
      parts.push_back(NewNode(NodeKind::kLeafBuffered, iv, parent.id));
      files.push_back(parts.back()->buffer->WriteSortedRun(1, std::span{entries}.subspan(b, e - b)));
    }
    for (std::size_t j = 0; j + 1 < m; ++j) parts[j]->interval.hi = keys[j];
    auto old = leaf.buffer;
    const auto old_id = leaf.id;
    {
      std::unique_lock topo{topo_};
      const auto pos = static_cast<std::size_t>(
          std::find(parent.children.begin(), parent.children.end(), old_id) - parent.children.begin());
      std::vector<std::uint64_t> ids;
      for (std::size_t j = 0; j < m; ++j) {
        parts[j]->buffer->InstallFiles(1, files[j]);
        ids.push_back(parts[j]->id);
        maint_.insert(parts[j]->id);
        nodes_.emplace(parts[j]->id, std::move(parts[j]));
      }
      parent.children.erase(parent.children.begin() + static_cast<std::ptrdiff_t>(pos));
      parent.children.insert(parent.children.begin() + static_cast<std::ptrdiff_t>(pos), ids.begin(), ids.end());
      parent.routing.insert(parent.routing.begin() + static_cast<std::ptrdiff_t>(pos), keys.begin(), keys.end());
      nodes_.erase(old_id);
    }
    maint_.erase(old_id);
    paced_clear(entries);
    Retire(old);
    FixFanout(parent);
    PersistTree();
    return true;
  }

  /// Split overfull internal nodes until every node holds at most fanout_max children.
  void
  FixFanout(Node &start)
  {
    std::vector<Node *> work{&start};
    while (!work.empty()) {
      Node *p = work.back();
      work.pop_back();
      if (p->children.size() <= cfg_.fanout_max) continue;
      for (auto *n : SplitInternal(*p)) work.push_back(n);
    }
  }

  /**
   * @brief Classic B+-tree split of an internal node holding too many children; returns
   *        the nodes whose child counts changed.
   *
   * The root keeps its identity and buffer and pushes its children down into two new
   * internal nodes. Elsewhere the right half takes the buffered entries of its range.
   */
  std::vector<Node *>
  SplitInternal(Node &p)
  {
    const auto mid = p.children.size() / 2;
    const auto promoted = p.routing[mid - 1];
    auto take_right = [&](Node &dst) {
      dst.children.assign(p.children.begin() + static_cast<std::ptrdiff_t>(mid), p.children.end());
      dst.routing.assign(p.routing.begin() + static_cast<std::ptrdiff_t>(mid), p.routing.end());
    };
    if (p.id == kRootId) {
      auto a = NewNode(NodeKind::kInternal, Interval{p.interval.lo, promoted}, kRootId);
      auto b = NewNode(NodeKind::kInternal, Interval{promoted, p.interval.hi}, kRootId);
      a->children.assign(p.children.begin(), p.children.begin() + static_cast<std::ptrdiff_t>(mid));
      a->routing.assign(p.routing.begin(), p.routing.begin() + static_cast<std::ptrdiff_t>(mid - 1));
      take_right(*b);
      std::unique_lock topo{topo_};
      for (auto *half : {a.get(), b.get()}) {
        for (auto c : half->children) Find(c)->parent = half->id;
      }
      p.children = {a->id, b->id};
      p.routing = {promoted};
      std::vector<Node *> changed{&p, a.get(), b.get()};
      nodes_.emplace(a->id, std::move(a));
      nodes_.emplace(b->id, std::move(b));
      return changed;
    }
    Node &g = *Find(*p.parent);
    auto b = NewNode(NodeKind::kInternal, Interval{promoted, p.interval.hi}, g.id);
    take_right(*b);
    auto plan = p.buffer->PrepareDrain(b->interval, true);
    auto files = plan.entries.empty() ? std::vector<SstFile::Ptr>{} : b->buffer->WriteSortedRun(1, plan.entries);
    std::unique_lock topo{topo_};
    for (auto c : b->children) Find(c)->parent = b->id;
    b->buffer->InstallFiles(1, files);
    p.buffer->CommitDrain(plan);
    p.children.resize(mid);
    p.routing.resize(mid - 1);
    p.interval.hi = promoted;
    const auto pos = static_cast<std::size_t>(std::find(g.children.begin(), g.children.end(), p.id) - g.children.begin());
    g.children.insert(g.children.begin() + static_cast<std::ptrdiff_t>(pos + 1), b->id);
    g.routing.insert(g.routing.begin() + static_cast<std::ptrdiff_t>(pos), promoted);
    maint_.insert(p.id);
    maint_.insert(b->id);
    std::vector<Node *> changed{&g, &p, b.get()};
    nodes_.emplace(b->id, std::move(b));
    return changed;
  }

  /*####################################################################################
   * Adaptation (worker only; struct_mu_ held)
   *##################################################################################*/

  /// One unit of work on the oldest runnable hotspot range.
  bool
  AdaptStep()
  {
    auto front = hotspots_.Front();
    if (!front) return false;
    adapt_epoch_.fetch_add(1, std::memory_order_acq_rel);
    node_ops_ = 0;
    const auto start = std::chrono::steady_clock::now();
    struct Close {
      AhaTree *t;
      std::chrono::steady_clock::time_point start;
      ~Close()
      {
        const std::chrono::duration<double, std::micro> us = std::chrono::steady_clock::now() - start;
        {
          std::lock_guard guard{t->stats_mu_};
          ++t->steps_.adapt_steps;
          t->steps_.max_adapt_step_us = std::max(t->steps_.max_adapt_step_us, us.count());
          t->steps_.max_node_ops_per_step = std::max(t->steps_.max_node_ops_per_step, t->node_ops_);
        }
        t->adapt_epoch_.fetch_add(1, std::memory_order_acq_rel);
      }
    } close{this, start};
    const auto range = Interval::of(front->range);
    std::vector<Node *> pending;
    std::deque<Node *> q{root_};
    while (!q.empty()) {
      Node *n = q.front();
      q.pop_front();
      const auto inter = n->interval.intersect(range);
      if (inter.empty()) continue;
      if (n->kind == NodeKind::kLeafPaged) continue;
      if (n->kind == NodeKind::kLeafBuffered || n->children.empty() || n->buffer->Overlaps(inter)) pending.push_back(n);
      const auto [first, last] = ChildSpan(*n, inter);
      for (auto i = first; i < last; ++i) q.push_back(Find(n->children[i]));
    }
    Count([](AdaptationStats &s) { ++s.steps; });
    if (pending.empty()) {
      std::unique_lock topo{topo_};
      // A foreground write may have landed since the walk.
      if (root_->buffer->MemOverlaps(range)) return true;
      hotspots_.SetState(front->range, RangeState::kComplete);
      topo.unlock();
      Count([](AdaptationStats &s) { ++s.ranges_completed; });
      return true;
    }
    std::vector<std::uint64_t> ids;
    for (auto *n : pending) ids.push_back(n->id);
    hotspots_.SetState(front->range, RangeState::kInProgress, std::move(ids));
    Node &target = *pending.front();
    if (target.id == kRootId && target.children.empty()) {
      Bootstrap(true);
    } else if (target.kind == NodeKind::kLeafBuffered) {
      LeafTransform(target);
    } else {
      AdaptDrain(target, range);
    }
    RefreshProgressLocked();
    return true;
  }

  /**
   * @brief Push n's buffered entries in range down one level.
   *
   * The drained interval widens once to the bounds of the files it cuts so every version
   * of a drained key leaves together; the extra (cold) entries ride along.
   */
  void
  AdaptDrain(Node &n, const Interval &range)
  {
    ++node_ops_;
    const auto inter = n.interval.intersect(range);
    Interval drain = inter;
    auto version = n.buffer->Current();
    for (const auto &level : version->levels) {
      for (const auto &f : level) {
        if (!f->Overlaps(inter)) continue;
        drain.lo = std::min(drain.lo, f->min_key());
        if (drain.hi && !(f->max_key() < *drain.hi)) drain.hi = key_successor(f->max_key());
      }
    }
    drain = drain.intersect(n.interval);
    auto plan = n.buffer->PrepareDrain(drain, true, &inter);
    std::uint64_t hot = 0, cold_bytes = 0;
    for (const auto &e : plan.entries) {
      if (range.contains(e.key)) {
        ++hot;
      } else {
        cold_bytes += e.payload_bytes();
      }
    }
    if (!RouteAndInstall(n, plan)) return;
    Count([&](AdaptationStats &s) {
      s.entries_flushed += hot;
      s.cold_bytes_coflushed += cold_bytes;
    });
  }

  /// Replace a buffered leaf by sorted pages (balanced) or by page-run children (unbalanced).
  void
  LeafTransform(Node &leaf)
  {
    ++node_ops_;
    auto version = leaf.buffer->Current();
    std::size_t deep = 0;
    for (std::size_t i = 1; i < version->levels.size(); ++i) {
      if (!version->levels[i].empty()) deep = i;
    }
    if (cfg_.leaf_transform == LeafTransform::kUnbalanced && deep > 0) {
      TransformUnbalanced(leaf, version, deep);
    } else {
      TransformBalanced(leaf);
    }
    Count([](AdaptationStats &s) { ++s.leaf_transforms; });
    PersistTree();
  }

  void
  TransformBalanced(Node &leaf)
  {
    auto version = leaf.buffer->Current();
    const auto mem_bytes = leaf.buffer->MemBytes();
    const auto sources = version->file_count() + (mem_bytes > 0 ? 1 : 0);
    auto entries = leaf.buffer->ReadAll();
    auto run = WriterFor(leaf.id).WriteAll(PackPages(std::move(entries), cfg_.packing, cfg_.leaf_page_capacity));
    const auto created = run.size();
    auto old = leaf.buffer;
    {
      std::unique_lock topo{topo_};
      leaf.kind = NodeKind::kLeafPaged;
      leaf.pages = std::move(run);
      leaf.buffer.reset();
    }
    maint_.erase(leaf.id);
    Retire(old);
    Count([&](AdaptationStats &s) {
      s.pages_created += created;
      if (sources >= 2) s.transform_bytes_rewritten += version->bytes + mem_bytes;
    });
  }

  /**
   * Each file of the deepest level is cut into pages on its own, with no merge. If the
   * shallower levels and the memtable are empty the leaf becomes paged; otherwise those
   * files become paged children and the leaf keeps its shallower data as an internal
   * buffer, later drained like any other.
   */
  void
  TransformUnbalanced(Node &leaf, const std::shared_ptr<const LevelSet> &version, std::size_t deep)
  {
    const auto &files = version->levels[deep];
    bool shallow_empty = leaf.buffer->MemBytes() == 0;
    for (std::size_t i = 0; i < deep; ++i) shallow_empty = shallow_empty && version->levels[i].empty();
    std::size_t created = 0;
    if (shallow_empty) {
      const auto w = WriterFor(leaf.id);
      PageRun run;
      for (const auto &f : files) {
        for (auto &p : w.WriteAll(PackPages(f->entries(), cfg_.packing, cfg_.leaf_page_capacity))) run.push_back(p);
      }
      created = run.size();
      auto old = leaf.buffer;
      {
        std::unique_lock topo{topo_};
        leaf.kind = NodeKind::kLeafPaged;
        leaf.pages = std::move(run);
        leaf.buffer.reset();
      }
      maint_.erase(leaf.id);
      Retire(old);
    } else {
      const auto groups = std::min(cfg_.fanout_max, files.size());
      std::vector<std::unique_ptr<Node>> kids;
      std::vector<Key> routing;
      for (std::size_t g = 0; g < groups; ++g) {
        const auto b = g * files.size() / groups, e = (g + 1) * files.size() / groups;
        auto kid = NewNode(NodeKind::kLeafPaged, Interval{g == 0 ? leaf.interval.lo : files[b]->min_key(), leaf.interval.hi},
                           leaf.id);
        if (g > 0) routing.push_back(files[b]->min_key());
        const auto w = WriterFor(kid->id);
        for (auto i = b; i < e; ++i) {
          for (auto &p : w.WriteAll(PackPages(files[i]->entries(), cfg_.packing, cfg_.leaf_page_capacity))) {
            kid->pages.push_back(p);
          }
        }
        created += kid->pages.size();
        kids.push_back(std::move(kid));
      }
      for (std::size_t g = 0; g + 1 < groups; ++g) kids[g]->interval.hi = routing[g];
      {
        std::unique_lock topo{topo_};
        leaf.buffer->Replace(files, deep, {});
        leaf.kind = NodeKind::kInternal;
        leaf.routing = std::move(routing);
        for (auto &k : kids) {
          leaf.children.push_back(k->id);
          nodes_.emplace(k->id, std::move(k));
        }
      }
      maint_.insert(leaf.id);
    }
    Count([&](AdaptationStats &s) { s.pages_created += created; });
  }

  /// Write one entry straight into the paged leaf owning it.
  bool
  SingleInsert(const Key &key, Value &value)
  {
    Node *n = root_;
    while (!n->children.empty()) n = Find(n->children[ChildIndex(*n, key)]);
    if (n->kind != NodeKind::kLeafPaged) return false;
    auto res = InsertIntoPages(n->pages, Entry{key, std::move(value), seq_.next()}, cfg_.leaf_page_capacity,
                               WriterFor(n->id));
    {
      std::unique_lock topo{topo_};
      std::swap(n->pages, res.run);
    }
    for (const auto &p : res.replaced) p.file->MarkObsolete();
    Count([&](AdaptationStats &s) {
      s.page_splits += res.splits;
      s.pages_created += res.splits + 1;
      s.page_bytes_rewritten += res.bytes_rewritten;
    });
    return true;
  }

  /*####################################################################################
   * Progress and invariants
   *##################################################################################*/

  static long double
  Measure(const Interval &iv)
  {
    const auto lo = static_cast<long double>(decode_key(iv.lo));
    long double hi = static_cast<long double>(UINT64_MAX);
    if (iv.hi) {
      // Successor keys (longer than 8 bytes) bound inclusively; routing keys exclusively.
      hi = static_cast<long double>(decode_key(*iv.hi)) - (iv.hi->size() > 8 ? 0.0L : 1.0L);
    }
    return hi >= lo ? hi - lo + 1.0L : 0.0L;
  }

  void
  RefreshProgressLocked()
  {
    for (const auto &h : hotspots_.Ranges()) {
      if (h.state == RangeState::kComplete) continue;
      const auto range = Interval::of(h.range);
      long double done = 0;
      std::vector<std::pair<const Node *, bool>> stack{{root_, true}};
      while (!stack.empty()) {
        auto [n, clean_above] = stack.back();
        stack.pop_back();
        const auto inter = n->interval.intersect(range);
        if (inter.empty()) continue;
        if (n->kind == NodeKind::kLeafPaged) {
          if (clean_above) done += Measure(inter);
          continue;
        }
        const bool clean = clean_above && !n->buffer->Overlaps(inter);
        const auto [first, last] = ChildSpan(*n, inter);
        for (auto i = first; i < last; ++i) stack.emplace_back(Find(n->children[i]), clean);
      }
      hotspots_.SetDoneMeasure(h.range, done);
    }
  }

  using Versions = std::vector<std::pair<Entry, std::uint64_t>>;

  void
  CheckFreshness(const Node &n, const Versions &above, std::vector<FreshnessViolation> &out) const
  {
    std::vector<Entry> own;
    if (n.buffer) {
      own = n.buffer->ReadAll();
    } else {
      for (const auto &p : n.pages) own.insert(own.end(), p.entries().begin(), p.entries().end());
    }
    // above and own are both ascending by key.
    Versions merged;
    std::size_t i = 0;
    for (const auto &e : own) {
      while (i < above.size() && above[i].first.key < e.key) merged.push_back(above[i++]);
      if (i < above.size() && above[i].first.key == e.key) {
        if (above[i].first.seq <= e.seq) out.push_back({e.key, above[i].second, above[i].first.seq, n.id, e.seq});
        ++i;
      }
      merged.emplace_back(e, n.id);
    }
    while (i < above.size()) merged.push_back(above[i++]);
    for (std::size_t c = 0; c < n.children.size(); ++c) {
      const Node &child = *Find(n.children[c]);
      Versions part;
      for (const auto &v : merged) {
        if (child.interval.contains(v.first.key)) part.push_back(v);
      }
      CheckFreshness(child, part, out);
    }
  }

  Config cfg_;
  AhaTreeOptions opts_;
  std::unique_ptr<Env> owned_env_{};
  Env *env_{nullptr};
  std::shared_ptr<FileIdSource> ids_{std::make_shared<FileIdSource>()};
  SeqCounter seq_{};

  mutable TopologyLock topo_{};
  std::mutex struct_mu_{};
  std::unordered_map<std::uint64_t, std::unique_ptr<Node>> nodes_{};
  Node *root_{nullptr};
  std::uint64_t next_node_id_{1};
  std::set<std::uint64_t> maint_{};
  bool prefer_adapt_{false};

  HotspotQueue hotspots_{};
  std::atomic<bool> adapt_paused_{false};
  std::atomic<bool> progress_dirty_{false};
  std::atomic<bool> seek_dirty_{false};

  mutable std::mutex stats_mu_{};
  AdaptationStats astats_{};
  CompactionStats retired_{};

  std::atomic<std::uint64_t> adapt_epoch_{0};
  std::size_t node_ops_{0};
  StepInstrumentation steps_{};

  std::unique_ptr<BackgroundWorker> worker_{};
};

}  // namespace ahatree

#endif  // AHATREE_AHA_TREE_HPP
