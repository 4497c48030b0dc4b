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

#include <map>
#include <random>

#include "ahatree/baselines.hpp"

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
  c.node_lsmt_limit = 8U << 10U;
  c.leaf_page_capacity = 8;
  return c;
}

void
RunAgainstOracle(OrderedIndex &idx, std::uint64_t seed)
{
  std::mt19937_64 rng{seed};
  std::map<Key, Value> oracle;
  for (int i = 0; i < 20000; ++i) {
    if (rng() % 5 == 0) {
      const auto lo = rng() % 3000;
      const auto r = int_range(lo, lo + rng() % 100);
      const auto got = idx.Scan(r);
      auto it = oracle.lower_bound(r.lo);
      for (const auto &e : got) {
        ASSERT_TRUE(it != oracle.end());
        ASSERT_EQ(e.key, it->first);
        ASSERT_EQ(e.value, it->second);
        ++it;
      }
      ASSERT_TRUE(it == oracle.end() || it->first > r.hi);
    } else {
      const auto k = encode_key(rng() % 3000);
      const auto v = std::to_string(i);
      oracle[k] = v;
      idx.Put(k, v);
    }
  }
  idx.WaitIdle();
  const auto all = idx.Scan(full_key_range());
  ASSERT_EQ(all.size(), oracle.size());
}

TEST(BPlusTreeTest, MatchesSortedMapOracle)
{
  MemEnv env;
  BPlusTreeIndex t{SmallConfig(), env, "/bt"};
  RunAgainstOracle(t, 71);
  EXPECT_GT(t.Stats().page_splits, 0U);
}

TEST(BPlusTreeTest, AscendingInsertsSplitInHalf)
{
  MemEnv env;
  BPlusTreeIndex t{SmallConfig(), env, "/bt"};
  for (std::uint64_t k = 0; k < 1000; ++k) t.Put(encode_key(k), "v");
  const auto sizes = t.LeafSizes();
  // A full page of 8 plus one entry splits 5/4; ascending inserts never touch the left half again.
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) EXPECT_EQ(sizes[i], 5U) << i;
  EXPECT_LE(sizes.back(), 8U);
  EXPECT_EQ(t.Stats().page_splits, sizes.size() - 1);
  EXPECT_EQ(t.Stats().pages, sizes.size());
  std::size_t total = 0;
  for (auto s : sizes) total += s;
  EXPECT_EQ(total, 1000U);
}

TEST(BPlusTreeTest, StaysBalancedUnderRandomInserts)
{
  MemEnv env;
  BPlusTreeIndex t{SmallConfig(), env, "/bt"};
  std::mt19937_64 rng{72};
  for (int i = 0; i < 20000; ++i) t.Put(encode_key(rng() % 100000), "v");
  const auto depths = t.LeafDepths();
  ASSERT_FALSE(depths.empty());
  for (auto d : depths) EXPECT_EQ(d, depths.front());
  // log_4 of the leaf count bounds the height from below.
  EXPECT_GE(static_cast<double>(depths.front()), std::log(static_cast<double>(depths.size())) / std::log(4.0) - 1e-9);
  for (auto s : t.LeafSizes()) {
    EXPECT_GE(s, 4U);
    EXPECT_LE(s, 8U);
  }
  for (auto c : t.InternalOccupancy()) {
    EXPECT_GE(c, 2U);
    EXPECT_LE(c, 4U);
  }
}

TEST(BPlusTreeTest, LeafPagesArePersisted)
{
  MemEnv env;
  BPlusTreeIndex t{SmallConfig(), env, "/bt"};
  for (std::uint64_t k = 0; k < 100; ++k) t.Put(encode_key(k), "v");
  // Replaced pages are dropped: one live file per leaf.
  EXPECT_EQ(env.ListFiles("/bt/").size(), t.LeafSizes().size());
}

TEST(PlainLsmTest, MatchesSortedMapOracleManual)
{
  MemEnv env;
  PlainLsmIndex t{SmallConfig(), env, "/lsm", BackgroundMode::kManual};
  RunAgainstOracle(t, 73);
  EXPECT_GT(t.Stats().compaction.size_compactions, 0U);
}

TEST(PlainLsmTest, MatchesSortedMapOracleThreaded)
{
  MemEnv env;
  PlainLsmIndex t{SmallConfig(), env, "/lsm", BackgroundMode::kThread};
  RunAgainstOracle(t, 74);
  t.WaitIdle();
  EXPECT_FALSE(t.lsm().NeedsCompaction());
}

TEST(PlainLsmTest, SeekCompactionFollowsConfig)
{
  for (const bool on : {false, true}) {
    auto c = SmallConfig();
    c.seek_compaction_enabled = on;
    c.seek_allowance_per_file = 5;
    MemEnv env;
    PlainLsmIndex t{c, env, "/lsm", BackgroundMode::kManual};
    for (std::uint64_t k = 0; k < 2000; ++k) t.Put(encode_key(k), "vvvvvvvv");
    t.WaitIdle();
    // Enough fresh writes for one level-0 file over a scanned range; level 1 is deepest.
    for (std::uint64_t k = 0; k < 200; ++k) t.Put(encode_key(k * 5), "w");
    ASSERT_FALSE(t.lsm().Current()->levels[0].empty());
    for (int i = 0; i < 50; ++i) (void)t.Scan(int_range(0, 999));
    t.WaitIdle();
    if (on) {
      EXPECT_GT(t.Stats().compaction.seek_compactions, 0U);
    } else {
      EXPECT_EQ(t.Stats().compaction.seek_compactions, 0U);
    }
  }
}

}  // namespace
}  // namespace ahatree
