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

#ifndef AHATREE_BENCH_WORKLOAD_HPP
#define AHATREE_BENCH_WORKLOAD_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ahatree/core.hpp"

namespace ahatree::bench
{
enum class Distribution {
  kUniform,
  kZipfian,
};

enum class PhaseKind {
  kRead,
  kWrite,
  kMixed,
};

[[nodiscard]] constexpr std::string_view
to_string(PhaseKind k) noexcept
{
  switch (k) {
    case PhaseKind::kRead:
      return "read";
    case PhaseKind::kWrite:
      return "write";
    case PhaseKind::kMixed:
      return "mixed";
  }
  return "?";
}

struct PhaseSpec {
  PhaseKind kind{PhaseKind::kRead};
  std::uint64_t op_count{1};
  /// Share of scans in a mixed phase.
  double read_fraction{0.5};

  friend bool operator==(const PhaseSpec &, const PhaseSpec &) = default;
};

struct WorkloadSpec {
  /// Keys are the integers [0, key_domain).
  std::uint64_t key_domain{100'000};
  Distribution distribution{Distribution::kZipfian};
  double zipf_s{0.99};
  std::vector<PhaseSpec> phases{};
  std::uint64_t scan_min{100};
  std::uint64_t scan_max{100};
  /// Inclusive integer bounds; read phases draw scan starts from here.
  std::optional<std::pair<std::uint64_t, std::uint64_t>> hotspot{};
  std::uint64_t seed{42};
  std::size_t value_size{32};

  [[nodiscard]] std::uint64_t
  total_ops() const noexcept
  {
    std::uint64_t n = 0;
    for (const auto &p : phases) n += p.op_count;
    return n;
  }
};

class WorkloadError : public Error
{
 public:
  using Error::Error;
};

inline void
validate(const WorkloadSpec &s)
{
  if (s.key_domain == 0) throw WorkloadError{"key_domain must be positive"};
  if (s.zipf_s < 0 || !std::isfinite(s.zipf_s)) throw WorkloadError{"zipf s must be >= 0"};
  if (s.phases.empty()) throw WorkloadError{"no phases"};
  for (const auto &p : s.phases) {
    if (p.op_count < 1) throw WorkloadError{"phase op_count must be >= 1"};
    if (!(p.read_fraction >= 0 && p.read_fraction <= 1)) throw WorkloadError{"read_fraction must lie in [0, 1]"};
  }
  if (s.scan_min < 1 || s.scan_max < s.scan_min) throw WorkloadError{"scan size must satisfy 1 <= min <= max"};
  if (s.hotspot && (s.hotspot->first > s.hotspot->second || s.hotspot->second >= s.key_domain)) {
    throw WorkloadError{"hotspot must lie inside the key domain"};
  }
}

/// "read:100000,write:100000,mixed:5000"; mixed phases take default_read_fraction.
[[nodiscard]] inline std::vector<PhaseSpec>
parse_phases(std::string_view text, double default_read_fraction = 0.5)
{
  std::vector<PhaseSpec> out;
  std::stringstream ss{std::string{text}};
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw WorkloadError{"phase '" + item + "' is not kind:count"};
    const auto kind = item.substr(0, colon);
    PhaseSpec p;
    p.read_fraction = default_read_fraction;
    if (kind == "read") {
      p.kind = PhaseKind::kRead;
    } else if (kind == "write") {
      p.kind = PhaseKind::kWrite;
    } else if (kind == "mixed") {
      p.kind = PhaseKind::kMixed;
    } else {
      throw WorkloadError{"unknown phase kind '" + kind + "'"};
    }
    try {
      std::size_t used = 0;
      const auto count = item.substr(colon + 1);
      p.op_count = std::stoull(count, &used);
      if (used != count.size()) throw std::invalid_argument{count};
    } catch (const std::logic_error &) {
      throw WorkloadError{"bad op count in phase '" + item + "'"};
    }
    out.push_back(p);
  }
  return out;
}

/// Uniform double in [0, 1) from the top 53 bits; stable across standard libraries.
[[nodiscard]] inline double
unit_double(std::mt19937_64 &rng)
{
  return static_cast<double>(rng() >> 11U) * 0x1.0p-53;
}

/// Uniform integer in [0, n) by rejection; stable across standard libraries.
[[nodiscard]] inline std::uint64_t
uniform_below(std::mt19937_64 &rng, std::uint64_t n)
{
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  for (;;) {
    const auto x = rng();
    if (x < limit) return x % n;
  }
}

/**
 * @brief Zipf ranks 1..n with P(k) proportional to k^-s, by rejection-inversion
 *        (Hörmann and Derflinger), valid for any s >= 0.
 */
class ZipfSampler
{
 public:
  ZipfSampler(std::uint64_t n, double s)
      : n_{n},
        s_{s},
        h_x1_{HIntegral(1.5) - 1.0},
        h_n_{HIntegral(static_cast<double>(n) + 0.5)},
        cut_{2.0 - HIntegralInverse(HIntegral(2.5) - H(2.0))}
  {
  }

  /// A rank in [1, n].
  std::uint64_t
  operator()(std::mt19937_64 &rng) const
  {
    for (;;) {
      const double u = h_n_ + unit_double(rng) * (h_x1_ - h_n_);
      const double x = HIntegralInverse(u);
      auto k = static_cast<std::uint64_t>(std::max(x + 0.5, 1.0));
      k = std::min(k, n_);
      const auto kd = static_cast<double>(k);
      if (kd - x <= cut_ || u >= HIntegral(kd + 0.5) - H(kd)) return k;
    }
  }

  [[nodiscard]] std::uint64_t n() const noexcept { return n_; }

 private:
  [[nodiscard]] double
  H(double x) const
  {
    return std::exp(-s_ * std::log(x));
  }

  [[nodiscard]] double
  HIntegral(double x) const
  {
    const double lx = std::log(x);
    return Helper2((1.0 - s_) * lx) * lx;
  }

  [[nodiscard]] double
  HIntegralInverse(double x) const
  {
    double t = x * (1.0 - s_);
    if (t < -1.0) t = -1.0;
    return std::exp(Helper1(t) * x);
  }

  /// log1p(x) / x, stable near zero.
  static double
  Helper1(double x)
  {
    return std::abs(x) > 1e-8 ? std::log1p(x) / x : 1.0 - x * (0.5 - x * (1.0 / 3.0 - 0.25 * x));
  }

  /// expm1(x) / x, stable near zero.
  static double
  Helper2(double x)
  {
    return std::abs(x) > 1e-8 ? std::expm1(x) / x : 1.0 + x * 0.5 * (1.0 + x / 3.0 * (1.0 + 0.25 * x));
  }

  std::uint64_t n_;
  double s_;
  double h_x1_;
  double h_n_;
  double cut_;
};

enum class OpKind : std::uint8_t {
  kPut,
  kScan,
};

struct Op {
  OpKind kind{OpKind::kPut};
  std::uint64_t key{0};
  /// Number of consecutive integer keys a scan covers.
  std::uint64_t width{0};
  std::uint64_t index{0};
  std::size_t phase{0};

  friend bool operator==(const Op &, const Op &) = default;
};

/// Value written by op i: fixed width, derived from the op index only.
[[nodiscard]] inline Value
value_for(std::uint64_t i, std::size_t size)
{
  auto v = std::to_string(i);
  v.resize(std::max(size, v.size()), static_cast<char>('a' + i % 26));
  return v;
}

[[nodiscard]] inline KeyRange
scan_range(const Op &op)
{
  return int_range(op.key, op.key + op.width - 1);
}

/**
 * @brief Deterministic op stream: phases concatenate in order; writes draw keys from the
 *        distribution over the domain (rank r maps to key r - 1), read-phase scans draw
 *        their start from the hotspot when one is set.
 */
class OpStream
{
 public:
  explicit OpStream(const WorkloadSpec &spec)
      : spec_{spec},
        rng_{spec.seed},
        domain_{spec.key_domain, spec.distribution == Distribution::kZipfian ? spec.zipf_s : 0.0},
        hot_{spec.hotspot ? spec.hotspot->second - spec.hotspot->first + 1 : 1,
             spec.distribution == Distribution::kZipfian ? spec.zipf_s : 0.0}
  {
    validate(spec_);
  }

  [[nodiscard]] bool
  done() const noexcept
  {
    return phase_ >= spec_.phases.size();
  }

  Op
  Next()
  {
    const auto &ph = spec_.phases[phase_];
    Op op;
    op.index = index_++;
    op.phase = phase_;
    bool read = ph.kind == PhaseKind::kRead;
    if (ph.kind == PhaseKind::kMixed) read = unit_double(rng_) < ph.read_fraction;
    if (read) {
      op.kind = OpKind::kScan;
      if (spec_.hotspot && ph.kind == PhaseKind::kRead) {
        op.key = spec_.hotspot->first + hot_(rng_) - 1;
      } else {
        op.key = domain_(rng_) - 1;
      }
      op.width = spec_.scan_min + (spec_.scan_max > spec_.scan_min ? uniform_below(rng_, spec_.scan_max - spec_.scan_min + 1) : 0);
    } else {
      op.kind = OpKind::kPut;
      op.key = domain_(rng_) - 1;
    }
    if (++in_phase_ == ph.op_count) {
      ++phase_;
      in_phase_ = 0;
    }
    return op;
  }

 private:
  WorkloadSpec spec_;
  std::mt19937_64 rng_;
  ZipfSampler domain_;
  ZipfSampler hot_;
  std::size_t phase_{0};
  std::uint64_t in_phase_{0};
  std::uint64_t index_{0};
};

/// The whole op stream at once.
[[nodiscard]] inline std::vector<Op>
gen_ops(const WorkloadSpec &spec)
{
  OpStream s{spec};
  std::vector<Op> out;
  out.reserve(spec.total_ops());
  while (!s.done()) out.push_back(s.Next());
  return out;
}

/// The initial load: every key of the domain once, in a seeded random order.
[[nodiscard]] inline std::vector<std::uint64_t>
load_order(const WorkloadSpec &spec)
{
  std::vector<std::uint64_t> keys(spec.key_domain);
  for (std::uint64_t i = 0; i < spec.key_domain; ++i) keys[i] = i;
  std::mt19937_64 rng{spec.seed ^ 0x9E3779B97F4A7C15ULL};
  for (std::uint64_t i = spec.key_domain; i > 1; --i) std::swap(keys[i - 1], keys[uniform_below(rng, i)]);
  return keys;
}

}  // namespace ahatree::bench

#endif  // AHATREE_BENCH_WORKLOAD_HPP
