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

#ifndef AHATREE_BENCH_METRICS_HPP
#define AHATREE_BENCH_METRICS_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ahatree/bench/workload.hpp"
#include "ahatree/core.hpp"

namespace ahatree::bench
{
inline constexpr std::string_view kCsvHeader =
    "window_end_op,phase,throughput_ops_s,p50_us,p99_us,adapt_fraction,size_compactions,seek_compactions,"
    "entries_flushed,pages_created";

struct MetricsWindow {
  std::uint64_t window_end_op{0};
  PhaseKind phase{PhaseKind::kRead};
  double throughput_ops_s{0};
  double p50_us{0};
  double p99_us{0};
  double adapt_fraction{1.0};
  std::uint64_t size_compactions{0};
  std::uint64_t seek_compactions{0};
  std::uint64_t entries_flushed{0};
  std::uint64_t pages_created{0};

  friend bool operator==(const MetricsWindow &, const MetricsWindow &) = default;
};

/// Nearest-rank percentile (p in (0, 100]) of unsorted samples; zero when empty.
[[nodiscard]] inline double
percentile(std::vector<double> samples, double p)
{
  if (samples.empty()) return 0;
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(samples.size())));
  rank = std::clamp<std::size_t>(rank, 1, samples.size());
  std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(rank - 1), samples.end());
  return samples[rank - 1];
}

/// Shortest text that parses back to the same double.
[[nodiscard]] inline std::string
format_double(double x)
{
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return {buf, res.ptr};
}

inline void
write_csv(std::ostream &os, const std::vector<MetricsWindow> &windows)
{
  os << kCsvHeader << '\n';
  for (const auto &w : windows) {
    os << w.window_end_op << ',' << to_string(w.phase) << ',' << format_double(w.throughput_ops_s) << ','
       << format_double(w.p50_us) << ',' << format_double(w.p99_us) << ',' << format_double(w.adapt_fraction) << ','
       << w.size_compactions << ',' << w.seek_compactions << ',' << w.entries_flushed << ',' << w.pages_created << '\n';
  }
}

/// Same series as whitespace-separated columns under a '#' header line.
inline void
write_plot_data(std::ostream &os, const std::vector<MetricsWindow> &windows)
{
  std::string header{kCsvHeader};
  std::replace(header.begin(), header.end(), ',', ' ');
  os << "# " << header << '\n';
  for (const auto &w : windows) {
    os << w.window_end_op << ' ' << to_string(w.phase) << ' ' << format_double(w.throughput_ops_s) << ' '
       << format_double(w.p50_us) << ' ' << format_double(w.p99_us) << ' ' << format_double(w.adapt_fraction) << ' '
       << w.size_compactions << ' ' << w.seek_compactions << ' ' << w.entries_flushed << ' ' << w.pages_created << '\n';
  }
}

[[nodiscard]] inline std::vector<MetricsWindow>
read_csv(std::istream &is)
{
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) throw Error{"csv: missing or unexpected header"};
  std::vector<MetricsWindow> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss{line};
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 10) throw Error{"csv: expected 10 fields in '" + line + "'"};
    MetricsWindow w;
    w.window_end_op = std::stoull(f[0]);
    if (f[1] == "read") {
      w.phase = PhaseKind::kRead;
    } else if (f[1] == "write") {
      w.phase = PhaseKind::kWrite;
    } else if (f[1] == "mixed") {
      w.phase = PhaseKind::kMixed;
    } else {
      throw Error{"csv: unknown phase '" + f[1] + "'"};
    }
    w.throughput_ops_s = std::stod(f[2]);
    w.p50_us = std::stod(f[3]);
    w.p99_us = std::stod(f[4]);
    w.adapt_fraction = std::stod(f[5]);
    w.size_compactions = std::stoull(f[6]);
    w.seek_compactions = std::stoull(f[7]);
    w.entries_flushed = std::stoull(f[8]);
    w.pages_created = std::stoull(f[9]);
    out.push_back(w);
  }
  return out;
}

inline void
write_csv_file(const std::string &path, const std::vector<MetricsWindow> &windows)
{
  std::ofstream f{path};
  if (!f) throw IoError{"cannot open " + path};
  write_csv(f, windows);
  if (!f) throw IoError{"write failed: " + path};
}

inline void
write_plot_file(const std::string &path, const std::vector<MetricsWindow> &windows)
{
  std::ofstream f{path};
  if (!f) throw IoError{"cannot open " + path};
  write_plot_data(f, windows);
  if (!f) throw IoError{"write failed: " + path};
}

/// Order-sensitive FNV-1a over key and value bytes of a scan result.
[[nodiscard]] inline std::uint64_t
checksum(const std::vector<Entry> &entries)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    // Length separator so ("ab","c") and ("a","bc") differ.
    h ^= s.size();
    h *= 0x100000001b3ULL;
  };
  for (const auto &e : entries) {
    mix(e.key);
    mix(e.value);
  }
  return h;
}

}  // namespace ahatree::bench

#endif  // AHATREE_BENCH_METRICS_HPP
