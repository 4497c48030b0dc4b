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

// ahabench: drive the AHA-tree and the two baselines through phased workloads, and run
// the oracle/freshness verification suite.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "ahatree/bench/metrics.hpp"
#include "ahatree/bench/runner.hpp"
#include "ahatree/bench/verify.hpp"

namespace
{
using namespace ahatree;
using namespace ahatree::bench;

struct BenchArgs {
  std::string index{"aha"};
  std::string distribution{"zipfian"};
  double zipf_s{0.99};
  std::uint64_t key_domain{100000};
  std::string phases{"read:100000,write:100000,read:100000"};
  double read_fraction{0.5};
  std::uint64_t scan_size{100};
  std::string scan_size_dynamic{};
  std::string hotspot{};
  std::string adaptation{"on"};
  std::string adapt_mode{"lazy"};
  std::string seek_compaction{"off"};
  std::string leaf_transform{"balanced"};
  std::string insert_mode{"batched"};
  std::string packing{"sound-remedy"};
  std::uint64_t window{10000};
  std::uint64_t seed{42};
  std::string data_dir{"bench-data"};
  std::string out{};
  std::string plot_out{};
  std::string env{"posix"};
  std::size_t readers{0};
  std::size_t value_size{32};
};

struct VerifyArgs {
  std::uint64_t seeds{20};
  std::uint64_t ops{100000};
  std::uint64_t bench_ops{30000};
  bool quiet{false};
};

/// "A,B" with A <= B.
std::pair<std::uint64_t, std::uint64_t>
parse_pair(const std::string &flag, const std::string &text)
{
  const auto comma = text.find(',');
  try {
    if (comma == std::string::npos) throw std::invalid_argument{text};
    std::size_t u1 = 0, u2 = 0;
    const auto a = text.substr(0, comma);
    const auto b = text.substr(comma + 1);
    const auto lo = std::stoull(a, &u1);
    const auto hi = std::stoull(b, &u2);
    if (u1 != a.size() || u2 != b.size() || lo > hi) throw std::invalid_argument{text};
    return {lo, hi};
  } catch (const std::logic_error &) {
    throw WorkloadError{flag + " expects LO,HI with LO <= HI, got '" + text + "'"};
  }
}

BenchConfig
to_config(const BenchArgs &a)
{
  static const std::map<std::string, IndexKind> kinds{
      {"aha", IndexKind::kAha}, {"btree", IndexKind::kBTree}, {"lsm", IndexKind::kLsm}};
  BenchConfig bc;
  bc.index = kinds.at(a.index);
  auto &spec = bc.spec;
  spec.key_domain = a.key_domain;
  spec.distribution = a.distribution == "uniform" ? Distribution::kUniform : Distribution::kZipfian;
  spec.zipf_s = a.zipf_s;
  spec.phases = parse_phases(a.phases, a.read_fraction);
  spec.scan_min = spec.scan_max = a.scan_size;
  if (!a.scan_size_dynamic.empty()) std::tie(spec.scan_min, spec.scan_max) = parse_pair("--scan-size-dynamic", a.scan_size_dynamic);
  if (!a.hotspot.empty()) spec.hotspot = parse_pair("--hotspot", a.hotspot);
  spec.seed = a.seed;
  spec.value_size = a.value_size;
  validate(spec);

  auto &c = bc.cfg;
  c.adaptation_enabled = a.adaptation == "on";
  c.adapt_mode = a.adapt_mode == "eager" ? AdaptMode::kEager : AdaptMode::kLazy;
  c.seek_compaction_enabled = a.seek_compaction == "on";
  c.leaf_transform = a.leaf_transform == "unbalanced" ? LeafTransform::kUnbalanced : LeafTransform::kBalanced;
  c.insert_mode = a.insert_mode == "single" ? InsertMode::kSingle : InsertMode::kBatched;
  c.packing = a.packing == "even" ? Packing::kEven : Packing::kSoundRemedy;
  c.rng_seed = a.seed;
  if (c.adapt_mode == AdaptMode::kEager && c.adaptation_enabled) {
    if (!spec.hotspot) throw WorkloadError{"--adapt-mode eager needs --hotspot"};
    c.eager_hotspot = int_range(spec.hotspot->first, spec.hotspot->second);
  }
  validate_config(c);

  if (a.window == 0) throw WorkloadError{"--window must be positive"};
  bc.window = a.window;
  bc.data_dir = a.data_dir;
  bc.mem_env = a.env == "mem";
  bc.readers = a.readers;
  return bc;
}

void
print_summary(std::ostream &os, const BenchConfig &bc, const BenchReport &r)
{
  char line[256];
  os << "index " << to_string(bc.index) << ", " << bc.spec.total_ops() << " ops, runtime " << r.runtime_s << " s\n";
  for (std::size_t i = 0; i < r.phases.size(); ++i) {
    const auto &p = r.phases[i];
    std::snprintf(line, sizeof line, "phase %zu %-5s ops %-8llu mean %.0f ops/s  p50 %.2f us", i,
                  std::string{to_string(p.kind)}.c_str(), static_cast<unsigned long long>(p.op_count),
                  p.throughput_ops_s, p.p50_us);
    os << line;
    if (p.completion_offset) os << "  adapted after " << *p.completion_offset << " ops";
    os << '\n';
  }
  if (r.completion_window_op) os << "adaptation complete at window ending op " << *r.completion_window_op << '\n';
  if (bc.readers > 0) os << "reader scans " << r.reader_ops << ", failures " << r.reader_failures << '\n';
  std::snprintf(line, sizeof line, "checksum %016llx over %zu entries", static_cast<unsigned long long>(r.checksum),
                r.final_entries);
  os << line << '\n';
}

int
run_bench_command(const BenchArgs &a)
{
  const auto bc = to_config(a);
  const auto report = run_bench(bc);
  if (!a.out.empty()) {
    write_csv_file(a.out, report.windows);
  } else {
    write_csv(std::cout, report.windows);
  }
  if (!a.plot_out.empty()) write_plot_file(a.plot_out, report.windows);
  print_summary(a.out.empty() ? std::cerr : std::cout, bc, report);
  if (report.reader_failures > 0) throw Error{"reader scans failed: " + report.reader_error};
  return 0;
}

int
run_verify_command(const VerifyArgs &a)
{
  VerifyOptions vo;
  vo.seeds = a.seeds;
  vo.ops = a.ops;
  vo.bench_ops = a.bench_ops;
  if (!a.quiet) {
    vo.on_run = [](const OracleRunSpec &rs, const OracleRunResult &r) {
      std::cerr << "seed " << rs.seed << ' ' << rs.knobs.label() << (r.equal ? " ok" : " MISMATCH") << '\n';
    };
  }
  bool all = true;
  for (const auto &p : run_verify_suite(vo)) {
    std::cout << (p.passed ? "PASS " : "FAIL ") << p.name << ": " << p.detail << '\n';
    all = all && p.passed;
  }
  if (!all) throw Error{"verification failed"};
  return 0;
}

}  // namespace

int
main(int argc, char **argv)
{
  CLI::App app{"AHA-tree benchmark and verification driver"};
  app.require_subcommand(1);

  BenchArgs b;
  auto *bench = app.add_subcommand("bench", "run a phased workload against one index");
  bench->add_option("--index", b.index)->check(CLI::IsMember({"aha", "btree", "lsm"}));
  bench->add_option("--distribution", b.distribution)->check(CLI::IsMember({"uniform", "zipfian"}));
  bench->add_option("--zipf-s", b.zipf_s, "skew exponent")->check(CLI::NonNegativeNumber);
  bench->add_option("--key-domain", b.key_domain, "keys are 0..N-1")->check(CLI::PositiveNumber);
  bench->add_option("--phases", b.phases, "e.g. read:100000,write:100000,read:100000");
  bench->add_option("--read-fraction", b.read_fraction, "scan share of mixed phases")->check(CLI::Range(0.0, 1.0));
  auto *fixed = bench->add_option("--scan-size", b.scan_size, "keys per scan")->check(CLI::PositiveNumber);
  bench->add_option("--scan-size-dynamic", b.scan_size_dynamic, "MIN,MAX; widths drawn uniformly")->excludes(fixed);
  bench->add_option("--hotspot", b.hotspot, "LO,HI inclusive; read phases scan here");
  bench->add_option("--adaptation", b.adaptation)->check(CLI::IsMember({"on", "off"}));
  bench->add_option("--adapt-mode", b.adapt_mode)->check(CLI::IsMember({"lazy", "eager"}));
  bench->add_option("--seek-compaction", b.seek_compaction)->check(CLI::IsMember({"on", "off"}));
  bench->add_option("--leaf-transform", b.leaf_transform)->check(CLI::IsMember({"balanced", "unbalanced"}));
  bench->add_option("--insert-mode", b.insert_mode)->check(CLI::IsMember({"batched", "single"}));
  bench->add_option("--packing", b.packing)->check(CLI::IsMember({"even", "sound-remedy"}));
  bench->add_option("--window", b.window, "ops per metrics row");
  bench->add_option("--seed", b.seed);
  bench->add_option("--data-dir", b.data_dir);
  bench->add_option("--out", b.out, "CSV path (stdout when omitted)");
  bench->add_option("--plot-out", b.plot_out, "whitespace-separated columns for plotting tools");
  bench->add_option("--env", b.env, "posix writes under --data-dir, mem keeps files in memory")
      ->check(CLI::IsMember({"posix", "mem"}));
  bench->add_option("--readers", b.readers, "concurrent hotspot scan workers");
  bench->add_option("--value-size", b.value_size, "bytes per value");

  VerifyArgs v;
  auto *verify = app.add_subcommand("verify", "oracle-equivalence and freshness-invariant suites");
  verify->add_option("--seeds", v.seeds, "seeds per knob combination")->check(CLI::PositiveNumber);
  verify->add_option("--ops", v.ops, "mixed ops per run")->check(CLI::PositiveNumber);
  verify->add_option("--bench-ops", v.bench_ops, "ops per checksum run")->check(CLI::Range(3, 1 << 30));
  verify->add_flag("--quiet", v.quiet, "no per-run progress");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    std::cerr << "ahabench: " << e.what() << '\n';
    return e.get_exit_code() != 0 ? e.get_exit_code() : 2;
  }

  try {
    if (*bench) return run_bench_command(b);
    return run_verify_command(v);
  } catch (const std::exception &e) {
    std::cerr << "ahabench: " << e.what() << '\n';
    return 1;
  }
}
