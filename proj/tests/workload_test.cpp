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

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "ahatree/bench/metrics.hpp"
#include "ahatree/bench/runner.hpp"
#include "ahatree/bench/workload.hpp"

namespace ahatree::bench
{
namespace
{
/// Pearson chi-square statistic of observed counts against expected probabilities.
double
ChiSquare(const std::vector<std::uint64_t> &observed, const std::vector<double> &p, std::uint64_t n)
{
  double chi = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = p[i] * static_cast<double>(n);
    chi += (static_cast<double>(observed[i]) - e) * (static_cast<double>(observed[i]) - e) / e;
  }
  return chi;
}

// Upper 0.1% points of chi-square with 99 and 19 degrees of freedom.
constexpr double kChi99 = 148.23;
constexpr double kChi19 = 43.82;

TEST(ZipfSamplerTest, MatchesHarmonicProbabilities)
{
  for (const double s : {0.99, 0.5, 1.5}) {
    constexpr std::uint64_t n = 100, draws = 400000;
    ZipfSampler z{n, s};
    std::mt19937_64 rng{81};
    std::vector<std::uint64_t> counts(n);
    for (std::uint64_t i = 0; i < draws; ++i) {
      const auto k = z(rng);
      ASSERT_GE(k, 1U);
      ASSERT_LE(k, n);
      ++counts[k - 1];
    }
    double h = 0;
    for (std::uint64_t k = 1; k <= n; ++k) h += std::pow(static_cast<double>(k), -s);
    std::vector<double> p(n);
    for (std::uint64_t k = 1; k <= n; ++k) p[k - 1] = std::pow(static_cast<double>(k), -s) / h;
    EXPECT_LT(ChiSquare(counts, p, draws), kChi99) << "s=" << s;
  }
}

TEST(ZipfSamplerTest, ZeroExponentIsUniform)
{
  ZipfSampler z{20, 0.0};
  std::mt19937_64 rng{82};
  std::vector<std::uint64_t> counts(20);
  for (int i = 0; i < 200000; ++i) ++counts[z(rng) - 1];
  EXPECT_LT(ChiSquare(counts, std::vector<double>(20, 0.05), 200000), kChi19);
}

TEST(ZipfSamplerTest, SingletonDomain)
{
  ZipfSampler z{1, 0.99};
  std::mt19937_64 rng{1};
  for (int i = 0; i < 100; ++i) EXPECT_EQ(z(rng), 1U);
}

TEST(UniformTest, UniformBelowIsUnbiased)
{
  std::mt19937_64 rng{83};
  std::vector<std::uint64_t> counts(20);
  for (int i = 0; i < 200000; ++i) ++counts[uniform_below(rng, 20)];
  EXPECT_LT(ChiSquare(counts, std::vector<double>(20, 0.05), 200000), kChi19);
  for (int i = 0; i < 1000; ++i) {
    const auto d = unit_double(rng);
    ASSERT_GE(d, 0.0);
    ASSERT_LT(d, 1.0);
  }
}

TEST(PhaseParseTest, ParsesKindsAndCounts)
{
  const auto p = parse_phases("read:100000,write:5,mixed:7", 0.25);
  ASSERT_EQ(p.size(), 3U);
  EXPECT_EQ(p[0], (PhaseSpec{PhaseKind::kRead, 100000, 0.25}));
  EXPECT_EQ(p[1], (PhaseSpec{PhaseKind::kWrite, 5, 0.25}));
  EXPECT_EQ(p[2], (PhaseSpec{PhaseKind::kMixed, 7, 0.25}));
  for (const char *bad : {"read", "scan:5", "read:x", "read:5x", "read:-"}) {
    EXPECT_THROW((void)parse_phases(bad), WorkloadError) << bad;
  }
}

TEST(WorkloadSpecTest, ValidateRejectsBadSpecs)
{
  WorkloadSpec ok;
  ok.phases = {{PhaseKind::kRead, 10, 0.5}};
  EXPECT_NO_THROW(validate(ok));
  auto s = ok;
  s.key_domain = 0;
  EXPECT_THROW(validate(s), WorkloadError);
  s = ok;
  s.zipf_s = -1;
  EXPECT_THROW(validate(s), WorkloadError);
  s = ok;
  s.phases.clear();
  EXPECT_THROW(validate(s), WorkloadError);
  s = ok;
  s.phases[0].op_count = 0;
  EXPECT_THROW(validate(s), WorkloadError);
  s = ok;
  s.phases[0].read_fraction = 1.5;
  EXPECT_THROW(validate(s), WorkloadError);
  s = ok;
  s.scan_min = 5;
  s.scan_max = 4;
  EXPECT_THROW(validate(s), WorkloadError);
  s = ok;
  s.hotspot = {{0, ok.key_domain}};
  EXPECT_THROW(validate(s), WorkloadError);
}

WorkloadSpec
ThreePhase(std::uint64_t seed)
{
  WorkloadSpec s;
  s.key_domain = 10000;
  s.phases = parse_phases("read:3000,write:3000,mixed:3000", 0.3);
  s.hotspot = {{1000, 1499}};
  s.scan_min = 5;
  s.scan_max = 50;
  s.seed = seed;
  return s;
}

TEST(OpStreamTest, PhasesShapeTheOps)
{
  const auto ops = gen_ops(ThreePhase(1));
  ASSERT_EQ(ops.size(), 9000U);
  std::uint64_t mixed_reads = 0;
  std::set<std::uint64_t> widths;
  for (const auto &op : ops) {
    EXPECT_EQ(op.phase, op.index / 3000);
    if (op.kind == OpKind::kScan) {
      widths.insert(op.width);
      EXPECT_GE(op.width, 5U);
      EXPECT_LE(op.width, 50U);
    }
    if (op.phase == 0) {
      ASSERT_EQ(op.kind, OpKind::kScan);
      EXPECT_GE(op.key, 1000U);
      EXPECT_LE(op.key, 1499U);
    } else if (op.phase == 1) {
      EXPECT_EQ(op.kind, OpKind::kPut);
      EXPECT_LT(op.key, 10000U);
    } else {
      mixed_reads += op.kind == OpKind::kScan ? 1 : 0;
    }
  }
  EXPECT_EQ(widths.size(), 46U);
  // Binomial(3000, 0.3): mean 900, sd about 25.
  EXPECT_NEAR(static_cast<double>(mixed_reads), 900.0, 125.0);
}

TEST(OpStreamTest, DeterministicPerSeed)
{
  EXPECT_EQ(gen_ops(ThreePhase(5)), gen_ops(ThreePhase(5)));
  EXPECT_NE(gen_ops(ThreePhase(5)), gen_ops(ThreePhase(6)));
  OpStream s{ThreePhase(5)};
  const auto all = gen_ops(ThreePhase(5));
  for (const auto &op : all) ASSERT_EQ(s.Next(), op);
  EXPECT_TRUE(s.done());
}

TEST(OpStreamTest, HelpersAndLoadOrder)
{
  EXPECT_EQ(scan_range(Op{OpKind::kScan, 10, 5, 0, 0}), int_range(10, 14));
  EXPECT_EQ(value_for(12, 6), "12mmmm");
  EXPECT_EQ(value_for(123456, 3), "123456");
  auto spec = ThreePhase(9);
  auto order = load_order(spec);
  ASSERT_EQ(order.size(), spec.key_domain);
  EXPECT_NE(order.front(), 0U);
  std::sort(order.begin(), order.end());
  for (std::uint64_t i = 0; i < order.size(); ++i) ASSERT_EQ(order[i], i);
}

TEST(MetricsTest, NearestRankPercentile)
{
  EXPECT_EQ(percentile({}, 50), 0.0);
  EXPECT_EQ(percentile({7}, 50), 7.0);
  const std::vector<double> v{15, 20, 35, 40, 50};
  EXPECT_EQ(percentile(v, 5), 15.0);
  EXPECT_EQ(percentile(v, 30), 20.0);
  EXPECT_EQ(percentile(v, 40), 20.0);
  EXPECT_EQ(percentile(v, 50), 35.0);
  EXPECT_EQ(percentile(v, 100), 50.0);
}

TEST(MetricsTest, FormatDoubleRoundTrips)
{
  std::mt19937_64 rng{84};
  for (int i = 0; i < 10000; ++i) {
    const double x = std::ldexp(unit_double(rng), static_cast<int>(rng() % 60) - 20);
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(format_double(1.0), "1");
}

std::vector<MetricsWindow>
SomeWindows()
{
  std::vector<MetricsWindow> w;
  for (std::uint64_t i = 1; i <= 7; ++i) {
    w.push_back({i * 100, i % 2 ? PhaseKind::kRead : PhaseKind::kWrite, 1e5 / static_cast<double>(i), 1.0 / 3.0, 12.5,
                 i == 7 ? 1.0 : 0.1 * static_cast<double>(i), i, 0, i * i, 3 * i});
  }
  return w;
}

TEST(MetricsTest, CsvRoundTrip)
{
  const auto w = SomeWindows();
  std::stringstream ss;
  write_csv(ss, w);
  const auto text = ss.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), kCsvHeader);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 8);
  EXPECT_EQ(read_csv(ss), w);
  std::stringstream bad{"nope\n"};
  EXPECT_THROW((void)read_csv(bad), Error);
  std::stringstream short_row{std::string{kCsvHeader} + "\n1,read,1\n"};
  EXPECT_THROW((void)read_csv(short_row), Error);
}

TEST(MetricsTest, PlotDataColumns)
{
  std::stringstream ss;
  write_plot_data(ss, SomeWindows());
  std::string line;
  std::getline(ss, line);
  EXPECT_EQ(line.rfind("# window_end_op phase ", 0), 0U);
  std::size_t rows = 0;
  while (std::getline(ss, line)) {
    std::istringstream cols{line};
    std::string c;
    std::size_t n = 0;
    while (cols >> c) ++n;
    EXPECT_EQ(n, 10U);
    ++rows;
  }
  EXPECT_EQ(rows, 7U);
}

TEST(MetricsTest, ChecksumIsOrderAndBoundarySensitive)
{
  const std::vector<Entry> a{{"k1", "ab", 1}, {"k2", "c", 2}};
  const std::vector<Entry> b{{"k1", "a", 1}, {"k2", "bc", 2}};
  const std::vector<Entry> c{{"k2", "c", 2}, {"k1", "ab", 1}};
  EXPECT_NE(checksum(a), checksum(b));
  EXPECT_NE(checksum(a), checksum(c));
  // Seqs do not participate.
  EXPECT_EQ(checksum(a), checksum({{"k1", "ab", 9}, {"k2", "c", 9}}));
  EXPECT_EQ(checksum({}), 0xcbf29ce484222325ULL);
}

TEST(RunnerTest, WindowsAndCrossIndexChecksums)
{
  std::optional<std::uint64_t> first;
  for (const auto kind : {IndexKind::kAha, IndexKind::kBTree, IndexKind::kLsm}) {
    BenchConfig bc;
    bc.spec = ThreePhase(3);
    bc.spec.key_domain = 3000;
    bc.spec.hotspot = {{0, 149}};
    bc.index = kind;
    bc.cfg.memtable_limit = 4U << 10U;
    bc.cfg.root_lsmt_limit = 32U << 10U;
    bc.cfg.node_lsmt_limit = 16U << 10U;
    bc.cfg.leaf_page_capacity = 16;
    bc.window = 1000;
    bc.mem_env = true;
    const auto r = run_bench(bc);
    ASSERT_EQ(r.windows.size(), 9U);
    ASSERT_EQ(r.phases.size(), 3U);
    for (std::size_t i = 0; i < r.windows.size(); ++i) {
      EXPECT_EQ(r.windows[i].window_end_op, (i + 1) * 1000);
      EXPECT_GT(r.windows[i].throughput_ops_s, 0);
    }
    EXPECT_EQ(r.windows[3].phase, PhaseKind::kWrite);
    EXPECT_EQ(r.final_entries, 3000U);
    if (!first) first = r.checksum;
    EXPECT_EQ(r.checksum, *first) << to_string(kind);
  }
}

}  // namespace
}  // namespace ahatree::bench
