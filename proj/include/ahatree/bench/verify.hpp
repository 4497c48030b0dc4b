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

#ifndef AHATREE_BENCH_VERIFY_HPP
#define AHATREE_BENCH_VERIFY_HPP

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ahatree/aha_tree.hpp"
#include "ahatree/bench/runner.hpp"
#include "ahatree/bench/workload.hpp"

namespace ahatree::bench
{
/// One point of the knob grid exercised by the equivalence suite.
struct KnobCombo {
  bool adaptation{true};
  AdaptMode mode{AdaptMode::kLazy};
  LeafTransform transform{LeafTransform::kBalanced};
  InsertMode insert{InsertMode::kBatched};
  Packing packing{Packing::kSoundRemedy};

  [[nodiscard]] std::string
  label() const
  {
    std::ostringstream os;
    os << (adaptation ? "adapt" : "noadapt") << '/' << (mode == AdaptMode::kLazy ? "lazy" : "eager") << '/'
       << (transform == LeafTransform::kBalanced ? "balanced" : "unbalanced") << '/'
       << (insert == InsertMode::kBatched ? "batched" : "single") << '/'
       << (packing == Packing::kEven ? "even" : "sound-remedy");
    return os.str();
  }
};

/// All 32 combinations, adaptation varying slowest.
[[nodiscard]] inline std::vector<KnobCombo>
all_knob_combos()
{
  std::vector<KnobCombo> out;
  for (bool a : {true, false}) {
    for (auto m : {AdaptMode::kLazy, AdaptMode::kEager}) {
      for (auto t : {LeafTransform::kBalanced, LeafTransform::kUnbalanced}) {
        for (auto i : {InsertMode::kBatched, InsertMode::kSingle}) {
          for (auto p : {Packing::kEven, Packing::kSoundRemedy}) out.push_back({a, m, t, i, p});
        }
      }
    }
  }
  return out;
}

struct OracleRunSpec {
  std::uint64_t seed{1};
  std::uint64_t ops{100000};
  std::uint64_t key_domain{20000};
  /// Read fractions of equal-length mixed stretches, cycled; the default averages 0.6.
  std::vector<double> read_fractions{0.9, 0.3, 0.9, 0.3};
  /// Freshness is checked after every this many ops (and at the end); zero disables.
  std::uint64_t freshness_every{10000};
  /// One inline background step per this many ops.
  std::uint64_t step_every{8};
  KnobCombo knobs{};
};

struct OracleRunResult {
  bool equal{false};
  /// First difference found, empty when equal.
  std::string mismatch{};
  std::uint64_t scans_checked{0};
  std::uint64_t freshness_checks{0};
  std::uint64_t freshness_violations{0};
  AdaptationStats adaptation{};
  CompactionStats compaction{};
  double seconds{0};
};

/// Small buffers so that a 100k-op run drives many splits, drains and transforms.
[[nodiscard]] inline Config
small_config(const KnobCombo &k, std::uint64_t seed, std::uint64_t key_domain)
{
  Config c;
  c.fanout_max = 4;
  c.memtable_limit = 4U << 10U;
  c.root_lsmt_limit = 32U << 10U;
  c.node_lsmt_limit = 16U << 10U;
  c.leaf_page_capacity = 16;
  c.adaptation_enabled = k.adaptation;
  c.adapt_mode = k.mode;
  c.leaf_transform = k.transform;
  c.insert_mode = k.insert;
  c.packing = k.packing;
  c.seek_compaction_enabled = (seed & 1U) != 0;
  c.rng_seed = seed;
  c.eager_hotspot = int_range(0, key_domain / 20 - 1);
  return c;
}

namespace detail
{
inline std::string
describe(const Entry *got, const std::pair<const Key, Value> *want)
{
  std::ostringstream os;
  os << "got ";
  if (got) {
    os << decode_key(got->key) << '=' << got->value;
  } else {
    os << "<end>";
  }
  os << " want ";
  if (want) {
    os << decode_key(want->first) << '=' << want->second;
  } else {
    os << "<end>";
  }
  return os.str();
}

/// Empty when out equals the oracle restricted to r.
inline std::string
compare(const std::vector<Entry> &out, const std::map<Key, Value> &oracle, const KeyRange &r)
{
  auto it = oracle.lower_bound(r.lo);
  std::size_t i = 0;
  for (; it != oracle.end() && it->first <= r.hi; ++it, ++i) {
    if (i >= out.size()) return describe(nullptr, &*it);
    if (out[i].key != it->first || out[i].value != it->second) return describe(&out[i], &*it);
  }
  if (i < out.size()) return describe(&out[i], nullptr);
  return {};
}
}  // namespace detail

/**
 * @brief Preload the even keys, then run mixed stretches against an AHA-tree in manual
 *        background mode and a std::map, comparing every scan, the quiescent full-range
 *        scan, and the freshness invariant at fixed op intervals.
 */
[[nodiscard]] inline OracleRunResult
run_oracle(const OracleRunSpec &rs)
{
  const auto start = std::chrono::steady_clock::now();
  OracleRunResult res;
  MemEnv env;
  AhaTree tree{small_config(rs.knobs, rs.seed, rs.key_domain), {"oracle", &env, BackgroundMode::kManual}};
  std::map<Key, Value> oracle;

  WorkloadSpec spec;
  spec.key_domain = rs.key_domain;
  spec.seed = rs.seed;
  spec.value_size = 8;
  spec.scan_min = 1;
  spec.scan_max = 100;
  const auto stretches = std::max<std::size_t>(rs.read_fractions.size(), 1);
  for (std::size_t i = 0; i < stretches; ++i) {
    const auto n = rs.ops / stretches + (i < rs.ops % stretches ? 1 : 0);
    const auto rf = rs.read_fractions.empty() ? 0.5 : rs.read_fractions[i];
    if (n > 0) spec.phases.push_back({PhaseKind::kMixed, n, rf});
  }

  tree.SetAdaptationPaused(true);
  for (const auto k : load_order(spec)) {
    if (k % 2 != 0) continue;
    auto key = encode_key(k);
    auto v = "p" + std::to_string(k);
    tree.Put(key, v);
    oracle[key] = std::move(v);
  }
  tree.SetAdaptationPaused(false);

  const auto check_fresh = [&] {
    ++res.freshness_checks;
    res.freshness_violations += tree.CheckFreshness().size();
  };
  const auto fail = [&](std::string what) {
    if (res.mismatch.empty()) res.mismatch = std::move(what);
  };

  OpStream stream{spec};
  for (std::uint64_t i = 1; !stream.done(); ++i) {
    const auto op = stream.Next();
    if (op.kind == OpKind::kPut) {
      auto key = encode_key(op.key);
      auto v = value_for(op.index, spec.value_size);
      tree.Put(key, v);
      oracle[key] = std::move(v);
    } else {
      const auto r = scan_range(op);
      if (auto d = detail::compare(tree.Scan(r), oracle, r); !d.empty()) {
        fail("scan at op " + std::to_string(op.index) + ": " + d);
      }
      ++res.scans_checked;
    }
    if (rs.step_every != 0 && i % rs.step_every == 0) (void)tree.RunStep();
    if (rs.freshness_every != 0 && i % rs.freshness_every == 0) check_fresh();
  }
  tree.WaitIdle();
  if (rs.freshness_every != 0) check_fresh();
  if (auto d = detail::compare(tree.Scan(full_key_range()), oracle, full_key_range()); !d.empty()) {
    fail("final scan: " + d);
  }
  res.adaptation = tree.adaptation_progress().stats;
  res.compaction = tree.Stats().compaction;
  res.equal = res.mismatch.empty();
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

/*######################################################################################
 * Property suite
 *####################################################################################*/

struct VerifyOptions {
  std::uint64_t seeds{20};
  std::uint64_t ops{100000};
  /// Ops per index in the cross-index and on/off checksum runs.
  std::uint64_t bench_ops{30000};
  /// Called after each oracle run.
  std::function<void(const OracleRunSpec &, const OracleRunResult &)> on_run{};
};

struct PropertyResult {
  std::string name{};
  bool passed{false};
  std::string detail{};
};

struct OracleGridResult {
  std::uint64_t runs{0};
  std::uint64_t mismatched_runs{0};
  std::uint64_t freshness_checks{0};
  std::uint64_t freshness_violations{0};
  std::string first_mismatch{};
  double seconds{0};
};

/// Every knob combination for seeds 1..seeds.
[[nodiscard]] inline OracleGridResult
run_oracle_grid(const VerifyOptions &vo)
{
  OracleGridResult g;
  for (std::uint64_t seed = 1; seed <= vo.seeds; ++seed) {
    for (const auto &k : all_knob_combos()) {
      OracleRunSpec rs;
      rs.seed = seed;
      rs.ops = vo.ops;
      rs.knobs = k;
      const auto r = run_oracle(rs);
      ++g.runs;
      g.freshness_checks += r.freshness_checks;
      g.freshness_violations += r.freshness_violations;
      g.seconds += r.seconds;
      if (!r.equal) {
        ++g.mismatched_runs;
        if (g.first_mismatch.empty()) g.first_mismatch = "seed " + std::to_string(seed) + " " + k.label() + ": " + r.mismatch;
      }
      if (vo.on_run) vo.on_run(rs, r);
    }
  }
  return g;
}

/// A short three-phase workload in memory, for checksum comparisons.
[[nodiscard]] inline BenchConfig
checksum_bench(std::uint64_t ops, IndexKind kind, bool adaptation)
{
  BenchConfig bc;
  bc.spec.key_domain = 20000;
  bc.spec.hotspot = {{0, 999}};
  bc.spec.seed = 7;
  bc.spec.phases = {{PhaseKind::kRead, ops / 3, 1.0}, {PhaseKind::kWrite, ops / 3, 0.0}, {PhaseKind::kMixed, ops - 2 * (ops / 3), 0.5}};
  bc.index = kind;
  bc.cfg.adaptation_enabled = adaptation;
  bc.cfg.adapt_mode = AdaptMode::kEager;
  bc.cfg.eager_hotspot = int_range(0, 999);
  bc.mem_env = true;
  bc.window = std::max<std::uint64_t>(ops / 10, 1);
  return bc;
}

[[nodiscard]] inline std::vector<PropertyResult>
run_verify_suite(const VerifyOptions &vo)
{
  std::vector<PropertyResult> out;
  const auto grid = run_oracle_grid(vo);
  {
    std::ostringstream os;
    os << grid.runs << " runs (" << vo.seeds << " seeds x 32 knob combinations x " << vo.ops << " ops), "
       << grid.mismatched_runs << " mismatched, " << grid.seconds << " s";
    if (!grid.first_mismatch.empty()) os << "; first: " << grid.first_mismatch;
    out.push_back({"oracle-equivalence", grid.mismatched_runs == 0 && grid.runs > 0, os.str()});
  }
  out.push_back({"freshness-invariant", grid.freshness_violations == 0 && grid.freshness_checks > 0,
                 std::to_string(grid.freshness_checks) + " checks, " + std::to_string(grid.freshness_violations) +
                     " violations"});
  {
    std::vector<std::uint64_t> sums;
    std::ostringstream os;
    for (auto kind : {IndexKind::kAha, IndexKind::kBTree, IndexKind::kLsm}) {
      sums.push_back(run_bench(checksum_bench(vo.bench_ops, kind, true)).checksum);
      os << to_string(kind) << '=' << std::hex << sums.back() << std::dec << ' ';
    }
    out.push_back({"cross-index-checksum", sums[0] == sums[1] && sums[1] == sums[2], os.str()});
  }
  {
    const auto on = run_bench(checksum_bench(vo.bench_ops, IndexKind::kAha, true)).checksum;
    const auto off = run_bench(checksum_bench(vo.bench_ops, IndexKind::kAha, false)).checksum;
    std::ostringstream os;
    os << "on=" << std::hex << on << " off=" << off;
    out.push_back({"adaptation-on-off-checksum", on == off, os.str()});
  }
  {
    const auto spec = checksum_bench(vo.bench_ops, IndexKind::kAha, true).spec;
    const bool same_ops = gen_ops(spec) == gen_ops(spec);
    auto other = spec;
    other.seed += 1;
    const bool seed_matters = gen_ops(spec) != gen_ops(other);
    out.push_back({"determinism", same_ops && seed_matters,
                   std::string{"same seed "} + (same_ops ? "identical" : "differs") + ", next seed " +
                       (seed_matters ? "differs" : "identical")});
  }
  return out;
}

}  // namespace ahatree::bench

#endif  // AHATREE_BENCH_VERIFY_HPP
