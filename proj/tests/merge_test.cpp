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
#include <memory>
#include <random>
#include <set>

#include "ahatree/merge.hpp"

namespace ahatree
{
namespace
{
using Runs = std::vector<std::vector<Entry>>;

/// Ascending runs over a small key space; seqs are globally unique.
Runs
RandomRuns(std::mt19937 &rng, SeqNo &seq)
{
  Runs runs(1 + rng() % 8);
  const bool disjoint = rng() % 3 == 0;
  std::uint64_t base = 0;
  for (auto &run : runs) {
    std::set<std::uint64_t> keys;
    const auto n = rng() % 60;
    const auto width = 1 + rng() % 200;
    for (std::uint64_t i = 0; i < n; ++i) keys.insert(base + rng() % width);
    if (disjoint) base += width;
    // Key prefixes collide on purpose for some runs so the full-key tie break is exercised.
    const bool long_keys = rng() % 2 == 0;
    for (auto k : keys) {
      Key key = encode_key(k / 4);
      if (long_keys) key += static_cast<char>(k % 4);
      run.push_back({key, std::to_string(seq), ++seq});
    }
    std::sort(run.begin(), run.end(), [](auto &a, auto &b) { return a.key < b.key; });
    run.erase(std::unique(run.begin(), run.end(), [](auto &a, auto &b) { return a.key == b.key; }), run.end());
  }
  std::shuffle(runs.begin(), runs.end(), rng);
  return runs;
}

std::vector<Entry>
Oracle(const Runs &runs)
{
  std::map<Key, Entry> best;
  for (const auto &run : runs) {
    for (const auto &e : run) {
      auto [it, fresh] = best.try_emplace(e.key, e);
      if (!fresh && it->second.seq < e.seq) it->second = e;
    }
  }
  std::vector<Entry> out;
  for (auto &[k, e] : best) out.push_back(e);
  return out;
}

TEST(MergeNewestTest, OwningMergeMatchesOracle)
{
  std::mt19937 rng{21};
  SeqNo seq = 0;
  for (int t = 0; t < 3000; ++t) {
    auto runs = RandomRuns(rng, seq);
    const auto want = Oracle(runs);
    EXPECT_EQ(MergeNewest(std::move(runs)), want);
  }
}

TEST(MergeNewestTest, ViewMergeMatchesOracle)
{
  std::mt19937 rng{22};
  SeqNo seq = 0;
  for (int t = 0; t < 3000; ++t) {
    const auto runs = RandomRuns(rng, seq);
    RunViews views;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      if (i % 2 == 0) {
        views.Own(runs[i]);
      } else {
        auto pinned = std::make_shared<const std::vector<Entry>>(runs[i]);
        views.View(*pinned, pinned);
      }
    }
    EXPECT_EQ(MergeNewest(views), Oracle(runs));
  }
}

TEST(MergeNewestTest, FreshnessIsBySeqNotSourceOrder)
{
  Runs runs{{{"a", "old", 1}, {"b", "new", 9}}, {{"a", "new", 5}, {"b", "old", 2}}};
  const auto out = MergeNewest(runs);
  ASSERT_EQ(out.size(), 2U);
  EXPECT_EQ(out[0].value, "new");
  EXPECT_EQ(out[1].value, "new");
}

TEST(MergeNewestTest, EmptyAndSingleRuns)
{
  EXPECT_TRUE(MergeNewest(Runs{}).empty());
  EXPECT_TRUE(MergeNewest(Runs{{}, {}}).empty());
  const std::vector<Entry> one{{"a", "1", 1}, {"c", "2", 2}};
  EXPECT_EQ(MergeNewest(Runs{{}, one}), one);
  EXPECT_TRUE(MergeNewest(RunViews{}).empty());
}

TEST(MergeHelpersTest, FilterAndPartition)
{
  std::vector<Entry> run;
  for (std::uint64_t k = 0; k < 10; ++k) run.push_back({encode_key(k), "", k});
  const auto iv = Interval::of(int_range(3, 6));
  const auto kept = FilterRange(run, iv);
  ASSERT_EQ(kept.size(), 4U);
  EXPECT_EQ(kept.front().key, encode_key(3));
  auto [in, out] = PartitionRun(run, iv);
  EXPECT_EQ(in, kept);
  EXPECT_EQ(out.size(), 6U);
  EXPECT_TRUE(std::is_sorted(out.begin(), out.end(), [](auto &a, auto &b) { return a.key < b.key; }));
}

}  // namespace
}  // namespace ahatree
