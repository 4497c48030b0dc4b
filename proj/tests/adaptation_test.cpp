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

#include <random>
#include <set>

#include "ahatree/adaptation.hpp"

namespace ahatree
{
namespace
{
TEST(HotspotQueueTest, LazyIntakeMergesOverlapsOnly)
{
  HotspotQueue q;
  EXPECT_TRUE(q.Submit(int_range(10, 20), AdaptMode::kLazy));
  EXPECT_TRUE(q.Submit(int_range(30, 40), AdaptMode::kLazy));
  EXPECT_TRUE(q.Submit(int_range(21, 29), AdaptMode::kLazy));  // adjacent on both sides
  EXPECT_EQ(q.Ranges().size(), 3U);
  EXPECT_TRUE(q.Submit(int_range(15, 35), AdaptMode::kLazy));
  const auto rs = q.Ranges();
  ASSERT_EQ(rs.size(), 1U);
  EXPECT_EQ(rs[0].range, int_range(10, 40));
  EXPECT_EQ(rs[0].order, 0U);
}

TEST(HotspotQueueTest, LazyRangesAreDisjointAndCoverEverySubmission)
{
  std::mt19937 rng{51};
  for (int trial = 0; trial < 200; ++trial) {
    HotspotQueue q;
    std::set<std::uint64_t> submitted;
    for (int i = 0; i < 20; ++i) {
      const auto lo = rng() % 200, hi = lo + rng() % 15;
      q.Submit(int_range(lo, hi), AdaptMode::kLazy);
      for (auto k = lo; k <= hi; ++k) submitted.insert(k);
    }
    std::set<std::uint64_t> covered;
    for (const auto &h : q.Ranges()) {
      for (auto k = decode_key(h.range.lo); k <= decode_key(h.range.hi); ++k) {
        ASSERT_TRUE(covered.insert(k).second) << "ranges overlap at " << k;
      }
    }
    EXPECT_EQ(covered, submitted);
  }
}

TEST(HotspotQueueTest, FrontIsOldestRunnable)
{
  HotspotQueue q;
  q.Submit(int_range(50, 60), AdaptMode::kLazy);
  q.Submit(int_range(10, 20), AdaptMode::kLazy);
  ASSERT_TRUE(q.Front());
  EXPECT_EQ(q.Front()->range, int_range(50, 60));
  q.SetState(int_range(50, 60), RangeState::kComplete);
  EXPECT_EQ(q.Front()->range, int_range(10, 20));
  q.SetState(int_range(10, 20), RangeState::kComplete);
  EXPECT_FALSE(q.HasRunnable());
  EXPECT_TRUE(q.AllComplete());
  EXPECT_EQ(q.completed_count(), 2U);
}

TEST(HotspotQueueTest, FractionIsMeasureWeighted)
{
  HotspotQueue q;
  EXPECT_DOUBLE_EQ(q.Fraction(), 1.0);
  q.Submit(int_range(0, 99), AdaptMode::kLazy);
  q.Submit(int_range(1000, 1299), AdaptMode::kLazy);
  EXPECT_DOUBLE_EQ(q.Fraction(), 0.0);
  q.SetState(int_range(0, 99), RangeState::kComplete);
  EXPECT_DOUBLE_EQ(q.Fraction(), 100.0 / 400.0);
  q.SetDoneMeasure(int_range(1000, 1299), 150);
  EXPECT_DOUBLE_EQ(q.Fraction(), 250.0 / 400.0);
  // Reported done measure never reaches 1.0 while a range is incomplete.
  q.SetDoneMeasure(int_range(1000, 1299), 300);
  EXPECT_LT(q.Fraction(), 1.0);
  q.SetState(int_range(1000, 1299), RangeState::kComplete);
  EXPECT_DOUBLE_EQ(q.Fraction(), 1.0);
  EXPECT_DOUBLE_EQ(static_cast<double>(RangeMeasure(int_range(7, 7))), 1.0);
}

TEST(HotspotQueueTest, EagerSubmitNeverAddsRanges)
{
  HotspotQueue q;
  q.Declare(int_range(0, 999));
  EXPECT_FALSE(q.Submit(int_range(5000, 5010), AdaptMode::kEager));
  EXPECT_EQ(q.Ranges().size(), 1U);
  q.SetState(int_range(0, 999), RangeState::kComplete);
  EXPECT_FALSE(q.Submit(int_range(10, 20), AdaptMode::kEager));
}

TEST(HotspotQueueTest, StaleRangeWaitsForReadDominance)
{
  HotspotQueue q;
  q.Declare(int_range(0, 999));
  q.SetState(int_range(0, 999), RangeState::kComplete);
  EXPECT_TRUE(q.InComplete(encode_key(10)));
  EXPECT_FALSE(q.MarkStale(encode_key(5000)));
  EXPECT_TRUE(q.MarkStale(encode_key(10)));
  EXPECT_FALSE(q.MarkStale(encode_key(11)));
  EXPECT_FALSE(q.InComplete(encode_key(10)));
  EXPECT_FALSE(q.AllComplete());
  EXPECT_FALSE(q.HasRunnable());

  // Writes keep the mix write-heavy: a read does not wake the range.
  for (int i = 0; i < 100; ++i) q.NoteWrite();
  EXPECT_FALSE(q.Submit(int_range(10, 20), AdaptMode::kEager));
  EXPECT_FALSE(q.HasRunnable());

  for (int i = 0; i < 100; ++i) q.Submit(int_range(10, 20), AdaptMode::kEager);
  EXPECT_TRUE(q.ReadDominant());
  ASSERT_TRUE(q.HasRunnable());
  EXPECT_TRUE(q.Ranges().front().write_stale);
  q.SetState(int_range(0, 999), RangeState::kComplete);
  EXPECT_FALSE(q.Ranges().front().write_stale);
}

TEST(HotspotQueueTest, ActiveStaleRangeIsGatedByWrites)
{
  HotspotQueue q;
  q.Declare(int_range(0, 99));
  q.SetState(int_range(0, 99), RangeState::kComplete);
  ASSERT_TRUE(q.MarkStale(encode_key(1)));
  for (int i = 0; i < 10; ++i) q.Submit(int_range(1, 2), AdaptMode::kEager);
  ASSERT_TRUE(q.HasRunnable());
  for (int i = 0; i < 20; ++i) q.NoteWrite();
  EXPECT_FALSE(q.HasRunnable());
  // The first read after the mix turns reports the range runnable again.
  bool woke = false;
  for (int i = 0; i < 20 && !woke; ++i) woke = q.Submit(int_range(1, 2), AdaptMode::kEager);
  EXPECT_TRUE(woke);
  EXPECT_TRUE(q.HasRunnable());
}

TEST(HotspotQueueTest, MixCountersDecay)
{
  HotspotQueue q;
  // Long write history is forgotten after a few windows of reads.
  for (int i = 0; i < 100000; ++i) q.NoteWrite();
  for (int i = 0; i < 8192 && !q.ReadDominant(); ++i) q.Submit(int_range(1, 1), AdaptMode::kEager);
  EXPECT_TRUE(q.ReadDominant());
}

}  // namespace
}  // namespace ahatree
