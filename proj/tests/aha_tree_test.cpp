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

#include <gtest/gtest.h>

#include <atomic>
#include <map>
#include <random>
#include <thread>

#include "ahatree/aha_tree.hpp"

namespace ahatree
{
namespace
{
Config
SmallConfig()
{
  Config c;
  c.fanout_max = 4;
  c.memtable_limit = 2U << 10U;
  c.root_lsmt_limit = 16U << 10U;
  c.node_lsmt_limit = 8U << 10U;
  c.leaf_page_capacity = 16;
  return c;
}

AhaTreeOptions
Manual(MemEnv &env)
{
  return {"/aha", &env, BackgroundMode::kManual};
}

std::vector<Entry>
Expect(const std::map<Key, Value> &o, const KeyRange &r)
{
  std::vector<Entry> out;
  for (auto it = o.lower_bound(r.lo); it != o.end() && it->first <= r.hi; ++it) out.push_back({it->first, it->second, 0});
  return out;
}

/// Compare keys and values only; seqs are the tree's business.
void
ExpectSame(const std::vector<Entry> &got, const std::vector<Entry> &want)
{
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    ASSERT_EQ(got[i].key, want[i].key) << i;
    ASSERT_EQ(got[i].value, want[i].value) << i;
  }
}

/// Children partition their parent's interval in routing order; fanout stays bounded.
void
CheckStructure(const AhaTree &t)
{
  const auto nodes = t.Nodes();
  std::map<std::uint64_t, NodeInfo> by_id;
  for (const auto &n : nodes) by_id[n.id] = n;
  ASSERT_EQ(nodes.front().id, AhaTree::kRootId);
  EXPECT_EQ(nodes.front().interval, Interval::whole());
  for (const auto &n : nodes) {
    if (n.children.empty()) {
      EXPECT_NE(n.kind, NodeKind::kInternal) << n.id;
      continue;
    }
    EXPECT_EQ(n.kind, NodeKind::kInternal);
    EXPECT_LE(n.children.size(), t.config().fanout_max);
    ASSERT_EQ(n.routing.size() + 1, n.children.size());
    for (std::size_t i = 0; i < n.children.size(); ++i) {
      const auto &c = by_id.at(n.children[i]);
      EXPECT_EQ(c.parent, n.id);
      EXPECT_EQ(c.interval.lo, i == 0 ? n.interval.lo : n.routing[i - 1]);
      EXPECT_EQ(c.interval.hi, i + 1 == n.children.size() ? n.interval.hi : std::optional<Key>{n.routing[i]});
    }
  }
}

struct Driver {
  MemEnv env;
  AhaTree tree;
  std::map<Key, Value> oracle;
  std::mt19937_64 rng;

  Driver(Config c, std::uint64_t seed) : tree{c, Manual(env)}, rng{seed} {}

  void
  Put(std::uint64_t k)
  {
    auto key = encode_key(k);
    auto v = std::to_string(rng() % 1000000);
    oracle[key] = v;
    tree.Put(key, std::move(v));
  }

  /// Mixed ops; reads favour [0, hot] so adaptation has something to do.
  void
  Run(std::uint64_t ops, std::uint64_t domain, std::uint64_t hot, double read_fraction)
  {
    std::uniform_real_distribution<double> u;
    for (std::uint64_t i = 0; i < ops; ++i) {
      if (u(rng) < read_fraction) {
        const auto lo = rng() % 4 == 0 ? rng() % domain : rng() % hot;
        const auto r = int_range(lo, lo + rng() % 50);
        const auto got = tree.Scan(r);
        ASSERT_NO_FATAL_FAILURE(ExpectSame(got, Expect(oracle, r))) << "op " << i;
      } else {
        Put(rng() % 4 == 0 ? rng() % hot : rng() % domain);
      }
      if (i % 8 == 0) tree.RunStep();
    }
  }
};

struct Knobs {
  bool adaptation;
  AdaptMode mode;
  LeafTransform transform;
  InsertMode insert;
  Packing packing;
};

class AhaTreeOracleTest : public ::testing::TestWithParam<Knobs>
{
};

TEST_P(AhaTreeOracleTest, MatchesSortedMapAndKeepsInvariants)
{
  const auto k = GetParam();
  auto c = SmallConfig();
  c.adaptation_enabled = k.adaptation;
  c.adapt_mode = k.mode;
  c.leaf_transform = k.transform;
  c.insert_mode = k.insert;
  c.packing = k.packing;
  c.eager_hotspot = int_range(0, 499);
  Driver d{c, 61};
  for (std::uint64_t key = 0; key < 8000; key += 2) d.Put(key);
  d.Run(8000, 8000, 500, 0.8);
  d.Run(8000, 8000, 500, 0.2);
  d.Run(8000, 8000, 500, 0.8);
  d.tree.WaitIdle();
  ExpectSame(d.tree.Scan(full_key_range()), Expect(d.oracle, full_key_range()));
  EXPECT_TRUE(d.tree.CheckFreshness().empty());
  CheckStructure(d.tree);
  EXPECT_LE(d.tree.step_instrumentation().max_node_ops_per_step, 1U);
  if (k.adaptation) {
    EXPECT_GT(d.tree.Stats().adaptation.steps, 0U);
  } else {
    EXPECT_EQ(d.tree.Stats().adaptation.steps, 0U);
  }
}

INSTANTIATE_TEST_SUITE_P(
    Knobs,
    AhaTreeOracleTest,
    ::testing::Values(Knobs{false, AdaptMode::kLazy, LeafTransform::kBalanced, InsertMode::kBatched, Packing::kEven},
                      Knobs{true, AdaptMode::kLazy, LeafTransform::kBalanced, InsertMode::kBatched, Packing::kSoundRemedy},
                      Knobs{true, AdaptMode::kLazy, LeafTransform::kUnbalanced, InsertMode::kSingle, Packing::kEven},
                      Knobs{true, AdaptMode::kEager, LeafTransform::kBalanced, InsertMode::kSingle, Packing::kSoundRemedy},
                      Knobs{true, AdaptMode::kEager, LeafTransform::kUnbalanced, InsertMode::kBatched, Packing::kEven}));

TEST(AhaTreeTest, EmptyTreeScansEmpty)
{
  MemEnv env;
  AhaTree t{SmallConfig(), Manual(env)};
  EXPECT_TRUE(t.AdaptationComplete());
  EXPECT_TRUE(t.Scan(full_key_range()).empty());
  // The scan itself is read evidence for lazy intake.
  EXPECT_EQ(t.hotspots().Ranges().size(), 1U);
  EXPECT_EQ(t.Nodes().size(), 1U);
  EXPECT_EQ(t.TreeManifestText(), "0 internal  - r= c=\n");
  EXPECT_TRUE(env.Exists("/aha/TREE"));
}

TEST(AhaTreeTest, RejectsInvalidConfig)
{
  auto c = SmallConfig();
  c.fanout_max = 1;
  EXPECT_THROW((AhaTree{c, {"/x", nullptr, BackgroundMode::kManual}}), ConfigError);
}

TEST(AhaTreeTest, OverwriteReturnsNewestValue)
{
  MemEnv env;
  AhaTree t{SmallConfig(), Manual(env)};
  for (int round = 0; round < 5; ++round) {
    for (std::uint64_t k = 0; k < 2000; ++k) t.Put(encode_key(k), "r" + std::to_string(round));
    t.WaitIdle();
  }
  const auto out = t.Scan(int_range(0, 1999));
  ASSERT_EQ(out.size(), 2000U);
  for (const auto &e : out) EXPECT_EQ(e.value, "r4");
  EXPECT_GT(t.Nodes().size(), 1U);
}

TEST(AhaTreeTest, EagerAdaptationEmptiesHotspotBuffers)
{
  auto c = SmallConfig();
  c.adapt_mode = AdaptMode::kEager;
  c.eager_hotspot = int_range(1000, 1999);
  MemEnv env;
  AhaTree t{c, Manual(env)};
  t.SetAdaptationPaused(true);
  for (std::uint64_t k = 0; k < 10000; ++k) t.Put(encode_key(k), "v");
  t.WaitIdle();
  EXPECT_FALSE(t.AdaptationComplete());
  EXPECT_GT(t.BufferedEntriesIn(*c.eager_hotspot), 0U);
  t.SetAdaptationPaused(false);
  t.WaitIdle();
  EXPECT_TRUE(t.AdaptationComplete());
  EXPECT_DOUBLE_EQ(t.adaptation_progress().fraction, 1.0);
  EXPECT_EQ(t.BufferedEntriesIn(*c.eager_hotspot), 0U);
  // Every leaf overlapping the hotspot is paged.
  for (const auto &n : t.Nodes()) {
    if (!n.children.empty()) continue;
    const auto iv = Interval::of(*c.eager_hotspot);
    if (n.interval.overlaps(iv)) {
      EXPECT_EQ(n.kind, NodeKind::kLeafPaged) << n.id;
    }
  }
  const auto st = t.Stats().adaptation;
  EXPECT_EQ(st.ranges_completed, 1U);
  EXPECT_GT(st.leaf_transforms, 0U);
  EXPECT_GT(st.pages_created, 0U);
  EXPECT_EQ(t.Scan(*c.eager_hotspot).size(), 1000U);
}

TEST(AhaTreeTest, InsertModesAfterAdaptation)
{
  for (const auto mode : {InsertMode::kSingle, InsertMode::kBatched}) {
    auto c = SmallConfig();
    c.adapt_mode = AdaptMode::kEager;
    c.eager_hotspot = int_range(0, 999);
    c.insert_mode = mode;
    MemEnv env;
    AhaTree t{c, Manual(env)};
    for (std::uint64_t k = 0; k < 6000; ++k) t.Put(encode_key(k), "v");
    t.WaitIdle();
    ASSERT_TRUE(t.AdaptationComplete());
    for (std::uint64_t k = 0; k < 1000; k += 3) t.Put(encode_key(k), "w");
    if (mode == InsertMode::kSingle) {
      EXPECT_EQ(t.BufferedEntriesIn(*c.eager_hotspot), 0U);
      EXPECT_TRUE(t.AdaptationComplete());
    } else {
      EXPECT_GT(t.BufferedEntriesIn(*c.eager_hotspot), 0U);
      EXPECT_FALSE(t.AdaptationComplete());
      EXPECT_LT(t.adaptation_progress().fraction, 1.0);
    }
    const auto out = t.Scan(int_range(0, 8));
    ASSERT_EQ(out.size(), 9U);
    EXPECT_EQ(out[0].value, "w");
    EXPECT_EQ(out[1].value, "v");
    EXPECT_EQ(out[3].value, "w");
  }
}

TEST(AhaTreeTest, LazyAdaptationFollowsScans)
{
  MemEnv env;
  AhaTree t{SmallConfig(), Manual(env)};
  t.SetAdaptationPaused(true);
  for (std::uint64_t k = 0; k < 6000; ++k) t.Put(encode_key(k), "v");
  t.WaitIdle();
  t.SetAdaptationPaused(false);
  EXPECT_TRUE(t.hotspots().Ranges().empty());
  (void)t.Scan(int_range(100, 199));
  (void)t.Scan(int_range(150, 299));
  ASSERT_EQ(t.hotspots().Ranges().size(), 1U);
  EXPECT_EQ(t.hotspots().Ranges().front().range, int_range(100, 299));
  t.WaitIdle();
  EXPECT_TRUE(t.AdaptationComplete());
  EXPECT_EQ(t.BufferedEntriesIn(int_range(100, 299)), 0U);
  EXPECT_GT(t.BufferedEntriesIn(int_range(3000, 5999)), 0U);
}

TEST(AhaTreeTest, FreshnessCheckFindsPlantedViolation)
{
  MemEnv env;
  AhaTree t{SmallConfig(), Manual(env)};
  for (std::uint64_t k = 0; k < 6000; ++k) t.Put(encode_key(k), "v");
  t.WaitIdle();
  t.Put(encode_key(42), "top");
  ASSERT_TRUE(t.CheckFreshness().empty());
  const auto path = t.PathTo(encode_key(42));
  ASSERT_GE(path.size(), 2U);
  // A deeper copy newer than the root's breaks the invariant.
  t.PlantForTesting(path.back(), {{encode_key(42), "bad", t.last_seq() + 100}});
  const auto v = t.CheckFreshness();
  ASSERT_EQ(v.size(), 1U);
  EXPECT_EQ(v[0].key, encode_key(42));
  EXPECT_EQ(v[0].lower_node, path.back());
  EXPECT_LE(v[0].upper_seq, v[0].lower_seq);
}

TEST(AhaTreeTest, ScanTraceAttributesSources)
{
  MemEnv env;
  AhaTree t{SmallConfig(), Manual(env)};
  for (std::uint64_t k = 0; k < 3000; ++k) t.Put(encode_key(k), "v");
  t.WaitIdle();
  ScanTrace trace;
  TouchSet ts;
  const auto out = t.Scan(int_range(10, 20), &trace, &ts);
  EXPECT_EQ(out.size(), 11U);
  std::size_t entries = 0;
  for (const auto &h : trace.hits) entries += h.entries;
  EXPECT_GE(entries, 11U);
  EXPECT_FALSE(ts.nodes.empty());
  EXPECT_EQ(ts.range, int_range(10, 20));
}

TEST(AhaTreeTest, ConcurrentReadersWithBackgroundThread)
{
  auto c = SmallConfig();
  c.adapt_mode = AdaptMode::kEager;
  c.eager_hotspot = int_range(0, 499);
  MemEnv env;
  AhaTree t{c, {"/aha", &env, BackgroundMode::kThread}};
  for (std::uint64_t k = 0; k < 4000; ++k) t.Put(encode_key(k), "0");
  std::atomic<bool> stop{false};
  std::atomic<std::uint64_t> bad{0}, scans{0};
  std::vector<std::thread> readers;
  for (int r = 0; r < 2; ++r) {
    readers.emplace_back([&, r] {
      std::mt19937 rng{static_cast<unsigned>(r)};
      while (!stop) {
        const auto lo = rng() % 600;
        const auto out = t.Scan(int_range(lo, lo + 40));
        // Keys are never deleted: every scan sees the full contiguous range.
        if (out.size() != 41) ++bad;
        for (std::size_t i = 1; i < out.size(); ++i) {
          if (!(out[i - 1].key < out[i].key)) ++bad;
        }
        ++scans;
      }
    });
  }
  for (int round = 1; round <= 20; ++round) {
    for (std::uint64_t k = 0; k < 4000; k += 7) t.Put(encode_key(k), std::to_string(round));
  }
  t.WaitIdle();
  stop = true;
  for (auto &th : readers) th.join();
  EXPECT_EQ(bad.load(), 0U);
  EXPECT_GT(scans.load(), 0U);
  for (const auto &e : t.Scan(int_range(0, 3999))) EXPECT_EQ(e.value, decode_key(e.key) % 7 == 0 ? "20" : "0");
  EXPECT_TRUE(t.CheckFreshness().empty());
}

}  // namespace
}  // namespace ahatree
