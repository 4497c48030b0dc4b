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

#ifndef AHATREE_BASELINES_HPP
#define AHATREE_BASELINES_HPP

#include <algorithm>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "ahatree/background.hpp"
#include "ahatree/core.hpp"
#include "ahatree/env.hpp"
#include "ahatree/index.hpp"
#include "ahatree/lsmt.hpp"
#include "ahatree/merge.hpp"
#include "ahatree/pages.hpp"

namespace ahatree
{
/**
 * @brief A disk-paged B+-tree: internal nodes in memory, each leaf one page file.
 *
 * Writes go straight to the owning leaf page; a page past capacity splits in half and
 * the separator climbs, splitting full internal nodes on the way. No deletes.
 */
class BPlusTreeIndex final : public OrderedIndex
{
 public:
  BPlusTreeIndex(const Config &cfg, Env &env, std::string dir)
      : fanout_{cfg.fanout_max}, capacity_{cfg.leaf_page_capacity}, writer_{env, std::move(dir), std::make_shared<FileIdSource>()}
  {
    validate_config(cfg);
    nodes_.push_back(BNode{});
  }

  void
  Put(const Key &key, Value value) override
  {
    // The single writer reads the structure unlocked and locks only to install.
    std::vector<std::size_t> path{root_};
    while (!nodes_[path.back()].leaf) {
      const auto &n = nodes_[path.back()];
      path.push_back(n.children[ChildIndex(n, key)]);
    }
    const auto leaf = path.back();
    PageRun run;
    if (nodes_[leaf].page.file) run.push_back(nodes_[leaf].page);
    auto res = InsertIntoPages(run, Entry{key, std::move(value), seq_.next()}, capacity_, writer_);
    {
      std::unique_lock guard{mu_};
      nodes_[leaf].page = res.run.front();
      if (res.run.size() == 2) {
        BNode right;
        right.page = res.run.back();
        InsertSeparator(path, res.run.back().min_key(), NewNode(std::move(right)));
      }
    }
    for (const auto &p : res.replaced) p.file->MarkObsolete();
    splits_ += res.splits;
  }

  std::vector<Entry>
  Scan(const KeyRange &r) override
  {
    const auto range = Interval::of(r);
    RunViews runs;
    {
      std::shared_lock guard{mu_};
      Collect(root_, range, runs);
    }
    // Leaves are disjoint and visited in key order; the pins keep their images alive.
    std::vector<Entry> out;
    for (const auto &run : runs.runs) out.insert(out.end(), run.begin(), run.end());
    return out;
  }

  [[nodiscard]] IndexStats
  Stats() const override
  {
    IndexStats s;
    s.adaptation.page_splits = splits_;
    s.page_splits = splits_;
    s.pages = LeafSizes().size();
    return s;
  }

  void WaitIdle() override {}

  [[nodiscard]] std::string_view name() const override { return "btree"; }

  /// Entry counts of the leaves, left to right.
  [[nodiscard]] std::vector<std::size_t>
  LeafSizes() const
  {
    std::shared_lock guard{mu_};
    std::vector<std::size_t> out;
    Leaves(root_, out);
    return out;
  }

  /// Depth of every leaf (root at 0), left to right.
  [[nodiscard]] std::vector<std::size_t>
  LeafDepths() const
  {
    std::shared_lock guard{mu_};
    std::vector<std::size_t> out;
    Depths(root_, 0, out);
    return out;
  }

  /// Child counts of every internal node except the root.
  [[nodiscard]] std::vector<std::size_t>
  InternalOccupancy() const
  {
    std::shared_lock guard{mu_};
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (i != root_ && !nodes_[i].leaf) out.push_back(nodes_[i].children.size());
    }
    return out;
  }

 private:
  struct BNode {
    bool leaf{true};
    /// keys[i] separates children[i] and children[i + 1].
    std::vector<Key> keys{};
    std::vector<std::size_t> children{};
    LeafPage page{};
  };

  static std::size_t
  ChildIndex(const BNode &n, const Key &k)
  {
    return static_cast<std::size_t>(std::upper_bound(n.keys.begin(), n.keys.end(), k) - n.keys.begin());
  }

  std::size_t
  NewNode(BNode n)
  {
    nodes_.push_back(std::move(n));
    return nodes_.size() - 1;
  }

  /// Insert (sep, right) next to path.back() in its parent, splitting upward as needed.
  void
  InsertSeparator(std::vector<std::size_t> path, Key sep, std::size_t right)
  {
    for (;;) {
      const auto left = path.back();
      path.pop_back();
      if (path.empty()) {
        BNode root;
        root.leaf = false;
        root.keys = {std::move(sep)};
        root.children = {left, right};
        root_ = NewNode(std::move(root));
        return;
      }
      auto &p = nodes_[path.back()];
      const auto pos = static_cast<std::size_t>(std::find(p.children.begin(), p.children.end(), left) - p.children.begin());
      p.keys.insert(p.keys.begin() + static_cast<std::ptrdiff_t>(pos), std::move(sep));
      p.children.insert(p.children.begin() + static_cast<std::ptrdiff_t>(pos + 1), right);
      if (p.children.size() <= fanout_) return;
      const auto mid = p.children.size() / 2;
      BNode sibling;
      sibling.leaf = false;
      sep = p.keys[mid - 1];
      sibling.keys.assign(p.keys.begin() + static_cast<std::ptrdiff_t>(mid), p.keys.end());
      sibling.children.assign(p.children.begin() + static_cast<std::ptrdiff_t>(mid), p.children.end());
      p.keys.resize(mid - 1);
      p.children.resize(mid);
      right = NewNode(std::move(sibling));
    }
  }

  void
  Collect(std::size_t id, const Interval &r, RunViews &runs) const
  {
    const auto &n = nodes_[id];
    if (n.leaf) {
      if (n.page.file && n.page.file->Overlaps(r)) runs.View(n.page.file->View(r), n.page.file->image());
      return;
    }
    for (auto i = ChildIndex(n, r.lo); i < n.children.size(); ++i) {
      if (i > 0 && r.hi && !(n.keys[i - 1] < *r.hi)) break;
      Collect(n.children[i], r, runs);
    }
  }

  void
  Leaves(std::size_t id, std::vector<std::size_t> &out) const
  {
    const auto &n = nodes_[id];
    if (n.leaf) {
      out.push_back(n.page.file ? n.page.size() : 0);
      return;
    }
    for (auto c : n.children) Leaves(c, out);
  }

  void
  Depths(std::size_t id, std::size_t d, std::vector<std::size_t> &out) const
  {
    const auto &n = nodes_[id];
    if (n.leaf) {
      out.push_back(d);
      return;
    }
    for (auto c : n.children) Depths(c, d + 1, out);
  }

  std::size_t fanout_;
  std::size_t capacity_;
  PageWriter writer_;
  SeqCounter seq_{};
  mutable std::shared_mutex mu_{};
  std::vector<BNode> nodes_{};
  std::size_t root_{0};
  std::atomic<std::uint64_t> splits_{0};
};

/**
 * @brief A single leveled LSM component with an effectively unbounded budget, so it
 *        never hands data to a tree. A background worker runs its compactions.
 */
class PlainLsmIndex final : public OrderedIndex
{
 public:
  static constexpr std::uint64_t kUnbounded = std::uint64_t{1} << 50U;

  PlainLsmIndex(const Config &cfg, Env &env, std::string dir, BackgroundMode mode = BackgroundMode::kThread)
  {
    validate_config(cfg);
    LsmtOptions o;
    o.memtable_limit = cfg.memtable_limit;
    o.byte_budget = kUnbounded;
    o.level_size_ratio = cfg.level_size_ratio;
    o.seek_compaction = cfg.seek_compaction_enabled;
    o.seek_allowance = cfg.seek_allowance_per_file;
    lsm_ = std::make_unique<Lsmt>(env, std::move(dir), o, std::make_shared<FileIdSource>());
    worker_ = std::make_unique<BackgroundWorker>([this] { return lsm_->CompactOnce() != CompactionStats{}; }, mode);
  }

  ~PlainLsmIndex() override { worker_->Stop(); }

  void
  Put(const Key &key, Value value) override
  {
    const auto files = lsm_->Current()->file_count();
    lsm_->Put(Entry{key, std::move(value), seq_.next()});
    if (lsm_->Current()->file_count() != files) worker_->Notify();
    if (worker_->mode() == BackgroundMode::kManual) {
      while (lsm_->Current()->levels[0].size() > 2 * lsm_->options().l0_file_cap && worker_->RunOne()) {
      }
    }
  }

  std::vector<Entry>
  Scan(const KeyRange &r) override
  {
    auto out = lsm_->Scan(r);
    if (lsm_->SeekPending()) worker_->Notify();
    return out;
  }

  [[nodiscard]] IndexStats
  Stats() const override
  {
    IndexStats s;
    s.compaction = lsm_->stats();
    return s;
  }

  void
  WaitIdle() override
  {
    worker_->WaitIdle();
  }

  [[nodiscard]] std::string_view name() const override { return "lsm"; }

  [[nodiscard]] const Lsmt &lsm() const noexcept { return *lsm_; }

 private:
  std::unique_ptr<Lsmt> lsm_{};
  SeqCounter seq_{};
  std::unique_ptr<BackgroundWorker> worker_{};
};

}  // namespace ahatree

#endif  // AHATREE_BASELINES_HPP
