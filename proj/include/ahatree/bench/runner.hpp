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

#ifndef AHATREE_BENCH_RUNNER_HPP
#define AHATREE_BENCH_RUNNER_HPP

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ahatree/aha_tree.hpp"
#include "ahatree/baselines.hpp"
#include "ahatree/bench/metrics.hpp"
#include "ahatree/bench/workload.hpp"
#include "ahatree/env.hpp"
#include "ahatree/index.hpp"

namespace ahatree::bench
{
enum class IndexKind {
  kAha,
  kBTree,
  kLsm,
};

[[nodiscard]] constexpr std::string_view
to_string(IndexKind k) noexcept
{
  switch (k) {
    case IndexKind::kAha:
      return "aha";
    case IndexKind::kBTree:
      return "btree";
    case IndexKind::kLsm:
      return "lsm";
  }
  return "?";
}

/// Subdirectory of the data directory that holds one index kind's files.
[[nodiscard]] constexpr std::string_view
index_subdir(IndexKind k) noexcept
{
  switch (k) {
    case IndexKind::kAha:
      return "aha";
    case IndexKind::kBTree:
      return "baseline_btree";
    case IndexKind::kLsm:
      return "baseline_lsm";
  }
  return "?";
}

/// Build an index under dir (a fresh subdirectory per kind).
[[nodiscard]] inline std::unique_ptr<OrderedIndex>
make_index(IndexKind kind, const Config &cfg, Env &env, const std::string &dir, BackgroundMode mode)
{
  switch (kind) {
    case IndexKind::kAha:
      return std::make_unique<AhaTree>(cfg, AhaTreeOptions{dir + "/aha", &env, mode});
    case IndexKind::kBTree:
      return std::make_unique<BPlusTreeIndex>(cfg, env, dir + "/" + std::string{index_subdir(kind)});
    case IndexKind::kLsm:
      return std::make_unique<PlainLsmIndex>(cfg, env, dir + "/" + std::string{index_subdir(kind)}, mode);
  }
  throw ConfigError{"index"};
}

struct BenchConfig {
  WorkloadSpec spec{};
  IndexKind index{IndexKind::kAha};
  Config cfg{};
  std::uint64_t window{10'000};
  std::string data_dir{"bench-data"};
  /// Keep files in memory instead of under data_dir.
  bool mem_env{false};
  BackgroundMode background{BackgroundMode::kThread};
  /// Insert every key of the domain before the measured phases.
  bool preload{true};
  /// Concurrent scan workers running alongside the measured ops.
  std::size_t readers{0};
  /// Pause between a reader's scans; zero makes readers spin.
  std::chrono::microseconds reader_think{100};
  /// Called at the end of each phase with the phase index.
  std::function<void(std::size_t, OrderedIndex &)> on_phase_end{};
};

struct PhaseReport {
  PhaseKind kind{PhaseKind::kRead};
  std::uint64_t first_op{0};
  std::uint64_t op_count{0};
  double seconds{0};
  double throughput_ops_s{0};
  double p50_us{0};
  double adapt_fraction_at_start{1.0};
  bool complete_at_start{true};
  /// Ops into the phase after which adaptation first stood complete (if it did).
  std::optional<std::uint64_t> completion_offset{};
  /// Foreground ops that overlapped an adaptation step, and the slowest of them.
  std::uint64_t ops_during_adapt{0};
  double max_latency_during_adapt_us{0};
  double max_latency_us{0};
};

struct BenchReport {
  std::vector<MetricsWindow> windows{};
  std::vector<PhaseReport> phases{};
  double runtime_s{0};
  std::uint64_t checksum{0};
  std::size_t final_entries{0};
  /// window_end_op of the first window whose adapt_fraction is 1.0.
  std::optional<std::uint64_t> completion_window_op{};
  IndexStats stats{};
  StepInstrumentation steps{};
  std::uint64_t reader_ops{0};
  std::uint64_t reader_failures{0};
  std::string reader_error{};
  double reader_max_latency_during_adapt_us{0};
};

/// Scans of the hotspot (or the domain) until told to stop.
class ReaderPool
{
 public:
  ReaderPool(OrderedIndex &index, const WorkloadSpec &spec, std::size_t n, std::chrono::microseconds think,
             const AhaTree *aha = nullptr)
    : think_{think}, aha_{aha}
  {
    for (std::size_t i = 0; i < n; ++i) {
      threads_.emplace_back([this, &index, spec, i] { Run(index, spec, i); });
    }
  }

  ~ReaderPool() { Stop(); }

  void
  Stop()
  {
    stop_.store(true);
    for (auto &t : threads_) {
      if (t.joinable()) t.join();
    }
  }

  [[nodiscard]] std::uint64_t ops() const noexcept { return ops_.load(); }
  [[nodiscard]] std::uint64_t failures() const noexcept { return failures_.load(); }

  /// Slowest reader scan that overlapped adaptation work.
  [[nodiscard]] double
  max_latency_during_adapt_us() const
  {
    std::lock_guard guard{mu_};
    return max_adapt_us_;
  }

  [[nodiscard]] std::string
  error() const
  {
    std::lock_guard guard{mu_};
    return error_;
  }

 private:
  void
  Run(OrderedIndex &index, const WorkloadSpec &spec, std::size_t i)
  {
    std::mt19937_64 rng{spec.seed + 7919 * (i + 1)};
    const auto lo = spec.hotspot ? spec.hotspot->first : 0;
    const auto width = spec.hotspot ? spec.hotspot->second - spec.hotspot->first + 1 : spec.key_domain;
    ZipfSampler zipf{width, spec.distribution == Distribution::kZipfian ? spec.zipf_s : 0.0};
    while (!stop_.load()) {
      const auto k = lo + zipf(rng) - 1;
      const auto r = int_range(k, k + spec.scan_min - 1);
      try {
        const auto e0 = aha_ ? aha_->adapt_epoch() : 0;
        const auto t0 = std::chrono::steady_clock::now();
        auto out = index.Scan(r);
        const double us = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count();
        if (aha_ && ((e0 & 1U) != 0 || e0 != aha_->adapt_epoch())) {
          std::lock_guard guard{mu_};
          max_adapt_us_ = std::max(max_adapt_us_, us);
        }
        for (std::size_t j = 0; j < out.size(); ++j) {
          if (!r.contains(out[j].key) || (j > 0 && !(out[j - 1].key < out[j].key))) {
            throw Error{"scan result out of range or order"};
          }
        }
      } catch (const std::exception &e) {
        ++failures_;
        std::lock_guard guard{mu_};
        error_ = e.what();
      }
      ++ops_;
      if (think_.count() > 0) std::this_thread::sleep_for(think_);
    }
  }

  std::chrono::microseconds think_;
  const AhaTree *aha_;
  double max_adapt_us_{0};
  std::vector<std::thread> threads_{};
  std::atomic<bool> stop_{false};
  std::atomic<std::uint64_t> ops_{0};
  std::atomic<std::uint64_t> failures_{0};
  mutable std::mutex mu_{};
  std::string error_{};
};

/**
 * @brief Preload (untimed, adaptation held), run the phases with one foreground driver,
 *        emit one window per `window` ops (cut at phase ends), and checksum the final state.
 */
[[nodiscard]] inline BenchReport
run_bench(const BenchConfig &bc)
{
  validate(bc.spec);
  validate_config(bc.cfg);
  if (bc.window == 0) throw WorkloadError{"window must be positive"};
  std::unique_ptr<Env> env;
  if (bc.mem_env) {
    env = std::make_unique<MemEnv>();
  } else {
    env = std::make_unique<PosixEnv>();
    env->RemoveAll(bc.data_dir + "/" + std::string{index_subdir(bc.index)});
  }
  auto index = make_index(bc.index, bc.cfg, *env, bc.data_dir, bc.background);
  auto *aha = dynamic_cast<AhaTree *>(index.get());
  const auto &spec = bc.spec;

  if (bc.preload) {
    index->SetAdaptationPaused(true);
    for (auto k : load_order(spec)) index->Put(encode_key(k), value_for(k + (std::uint64_t{1} << 40U), spec.value_size));
    index->WaitIdle();
    index->SetAdaptationPaused(false);
  }

  using Clock = std::chrono::steady_clock;
  BenchReport rep;
  std::unique_ptr<ReaderPool> readers;
  if (bc.readers > 0) readers = std::make_unique<ReaderPool>(*index, spec, bc.readers, bc.reader_think, aha);

  OpStream stream{spec};
  const auto run_start = Clock::now();
  std::vector<double> window_lat, phase_lat;
  std::uint64_t op_no = 0;
  for (std::size_t ph = 0; ph < spec.phases.size(); ++ph) {
    const auto &phase = spec.phases[ph];
    PhaseReport pr;
    pr.kind = phase.kind;
    pr.first_op = op_no;
    pr.op_count = phase.op_count;
    pr.complete_at_start = index->AdaptationComplete();
    pr.adapt_fraction_at_start = index->Stats().adapt_fraction;
    bool complete = pr.complete_at_start;
    phase_lat.clear();
    phase_lat.reserve(phase.op_count);
    const auto phase_start = Clock::now();
    auto window_start = phase_start;
    for (std::uint64_t i = 0; i < phase.op_count; ++i) {
      const auto op = stream.Next();
      const auto e0 = aha ? aha->adapt_epoch() : 0;
      const auto t0 = Clock::now();
      if (op.kind == OpKind::kPut) {
        index->Put(encode_key(op.key), value_for(op.index, spec.value_size));
      } else {
        auto out = index->Scan(scan_range(op));
        (void)out;
      }
      const auto t1 = Clock::now();
      const auto e1 = aha ? aha->adapt_epoch() : 0;
      const double us = std::chrono::duration<double, std::micro>(t1 - t0).count();
      window_lat.push_back(us);
      phase_lat.push_back(us);
      pr.max_latency_us = std::max(pr.max_latency_us, us);
      if (aha && ((e0 & 1U) != 0 || e0 != e1)) {
        ++pr.ops_during_adapt;
        pr.max_latency_during_adapt_us = std::max(pr.max_latency_during_adapt_us, us);
      }
      ++op_no;
      const bool now_complete = index->AdaptationComplete();
      if (now_complete && !complete && !pr.completion_offset) pr.completion_offset = i + 1;
      complete = now_complete;
      if ((i + 1) % bc.window == 0 || i + 1 == phase.op_count) {
        const auto now = Clock::now();
        const auto st = index->Stats();
        MetricsWindow w;
        w.window_end_op = op_no;
        w.phase = phase.kind;
        w.throughput_ops_s = static_cast<double>(window_lat.size()) / std::chrono::duration<double>(now - window_start).count();
        w.p50_us = percentile(window_lat, 50);
        w.p99_us = percentile(window_lat, 99);
        w.adapt_fraction = st.adapt_fraction;
        w.size_compactions = st.compaction.size_compactions;
        w.seek_compactions = st.compaction.seek_compactions;
        w.entries_flushed = st.adaptation.entries_flushed;
        w.pages_created = st.adaptation.pages_created;
        if (!rep.completion_window_op && w.adapt_fraction >= 1.0) rep.completion_window_op = w.window_end_op;
        rep.windows.push_back(w);
        window_lat.clear();
        window_start = Clock::now();
      }
    }
    pr.seconds = std::chrono::duration<double>(Clock::now() - phase_start).count();
    pr.throughput_ops_s = static_cast<double>(phase.op_count) / pr.seconds;
    pr.p50_us = percentile(phase_lat, 50);
    rep.phases.push_back(pr);
    if (bc.on_phase_end) bc.on_phase_end(ph, *index);
  }
  rep.runtime_s = std::chrono::duration<double>(Clock::now() - run_start).count();
  if (readers) {
    readers->Stop();
    rep.reader_ops = readers->ops();
    rep.reader_failures = readers->failures();
    rep.reader_error = readers->error();
    rep.reader_max_latency_during_adapt_us = readers->max_latency_during_adapt_us();
  }
  index->WaitIdle();
  const auto all = index->Scan(full_key_range());
  rep.checksum = checksum(all);
  rep.final_entries = all.size();
  rep.stats = index->Stats();
  if (aha) rep.steps = aha->step_instrumentation();
  return rep;
}

}  // namespace ahatree::bench

#endif  // AHATREE_BENCH_RUNNER_HPP
