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

#ifndef AHATREE_CORE_HPP
#define AHATREE_CORE_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace ahatree
{
/*######################################################################################
 * Keys, entries, and ranges
 *####################################################################################*/

/// Keys are opaque byte strings ordered lexicographically by unsigned byte value.
using Key = std::string;
using Value = std::string;
using SeqNo = std::uint64_t;

struct Entry {
  Key key{};
  Value value{};
  SeqNo seq{0};

  /// Raw payload size used for every buffer budget (structural overhead is ignored).
  [[nodiscard]] std::size_t
  payload_bytes() const noexcept
  {
    return key.size() + value.size();
  }

  friend bool operator==(const Entry &, const Entry &) = default;
};

/**
 * @brief Encode an integer so that numeric order equals byte order (8-byte big-endian).
 */
[[nodiscard]] inline Key
encode_key(std::uint64_t n)
{
  Key k(8, '\0');
  for (int i = 7; i >= 0; --i) {
    k[static_cast<std::size_t>(i)] = static_cast<char>(n & 0xFFU);
    n >>= 8U;
  }
  return k;
}

/**
 * @brief Decode the first eight bytes of a key as a big-endian integer.
 *
 * Shorter keys are right-padded with zero bytes, so the mapping is monotone (but not
 * injective) over arbitrary byte strings. Used for key-space measures only.
 */
[[nodiscard]] inline std::uint64_t
decode_key(std::string_view k) noexcept
{
  std::uint64_t n = 0;
  for (std::size_t i = 0; i < 8; ++i) {
    n <<= 8U;
    if (i < k.size()) n |= static_cast<unsigned char>(k[i]);
  }
  return n;
}

/// The immediate successor of a key in byte order.
[[nodiscard]] inline Key
key_successor(const Key &k)
{
  Key s = k;
  s.push_back('\0');
  return s;
}

/// Inclusive key range [lo, hi].
struct KeyRange {
  Key lo{};
  Key hi{};

  [[nodiscard]] bool
  valid() const noexcept
  {
    return lo <= hi;
  }

  [[nodiscard]] bool
  contains(const Key &k) const noexcept
  {
    return lo <= k && k <= hi;
  }

  [[nodiscard]] bool
  overlaps(const KeyRange &o) const noexcept
  {
    return lo <= o.hi && o.lo <= hi;
  }

  [[nodiscard]] bool
  covers(const KeyRange &o) const noexcept
  {
    return lo <= o.lo && o.hi <= hi;
  }

  friend bool operator==(const KeyRange &, const KeyRange &) = default;
};

[[nodiscard]] inline KeyRange
int_range(std::uint64_t lo, std::uint64_t hi)
{
  return {encode_key(lo), encode_key(hi)};
}

/// The smallest and largest keys a caller can name; keys are non-empty, so "" is below all.
[[nodiscard]] inline KeyRange
full_key_range()
{
  return {Key(1, '\0'), Key(64, '\xFF')};
}

/**
 * @brief Half-open key interval [lo, hi). An absent upper bound means +infinity.
 *
 * Node intervals are half-open because routing keys separate siblings; inclusive
 * ranges convert exactly through key_successor().
 */
struct Interval {
  Key lo{};
  std::optional<Key> hi{};

  static Interval
  whole()
  {
    return {};
  }

  static Interval
  of(const KeyRange &r)
  {
    return {r.lo, key_successor(r.hi)};
  }

  [[nodiscard]] bool
  contains(const Key &k) const noexcept
  {
    return lo <= k && (!hi || k < *hi);
  }

  [[nodiscard]] bool
  empty() const noexcept
  {
    return hi && *hi <= lo;
  }

  /// True if [min, max] (inclusive) shares a key with this interval.
  [[nodiscard]] bool
  overlaps_closed(const Key &min, const Key &max) const noexcept
  {
    return lo <= max && (!hi || min < *hi);
  }

  [[nodiscard]] bool
  overlaps(const Interval &o) const noexcept
  {
    return (!o.hi || lo < *o.hi) && (!hi || o.lo < *hi) && !empty() && !o.empty();
  }

  [[nodiscard]] Interval
  intersect(const Interval &o) const
  {
    Interval r{std::max(lo, o.lo), hi};
    if (!r.hi || (o.hi && *o.hi < *r.hi)) r.hi = o.hi;
    return r;
  }

  [[nodiscard]] bool
  covers(const Interval &o) const noexcept
  {
    return lo <= o.lo && (!hi || (o.hi && *o.hi <= *hi));
  }

  friend bool operator==(const Interval &, const Interval &) = default;
};

/*######################################################################################
 * Sequence numbers
 *####################################################################################*/

/// Hands out strictly increasing sequence numbers; safe for concurrent writers.
class SeqCounter
{
 public:
  [[nodiscard]] SeqNo
  next() noexcept
  {
    return last_.fetch_add(1, std::memory_order_relaxed) + 1;
  }

  [[nodiscard]] SeqNo
  last() const noexcept
  {
    return last_.load(std::memory_order_relaxed);
  }

 private:
  std::atomic<SeqNo> last_{0};
};

/*######################################################################################
 * Errors
 *####################################################################################*/

class Error : public std::runtime_error
{
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error
{
 public:
  using Error::Error;
};

class CorruptionError : public Error
{
 public:
  using Error::Error;
};

class ConfigError : public Error
{
 public:
  explicit ConfigError(std::string field)
      : Error{"invalid config: " + field}, field_{std::move(field)}
  {
  }

  [[nodiscard]] const std::string &
  field() const noexcept
  {
    return field_;
  }

 private:
  std::string field_;
};

/*######################################################################################
 * Configuration
 *####################################################################################*/

enum class AdaptMode { kLazy, kEager };
enum class LeafTransform { kBalanced, kUnbalanced };
enum class InsertMode { kBatched, kSingle };
enum class Packing { kEven, kSoundRemedy };

/**
 * @brief Cooperative pacing for background threads.
 *
 * Long maintenance loops call yield_point(); on a thread marked as background it steps
 * off the CPU once per quantum, so on a starved machine a foreground operation waits for
 * about one quantum of background work rather than a whole drain. A short sleep works
 * where sched_yield does not: a fair scheduler keeps running the yielder while the
 * foreground is ahead of its share. Never called while holding a lock the foreground
 * needs.
 */
class Pacing
{
 public:
  static void
  MarkBackgroundThread() noexcept
  {
    background_ = true;
    last_ = std::chrono::steady_clock::now();
  }

  [[nodiscard]] static bool on_background_thread() noexcept { return background_; }

  /// Quantum in microseconds; zero disables yielding.
  static void set_quantum_us(std::int64_t us) noexcept { quantum_us_.store(us); }
  [[nodiscard]] static std::int64_t quantum_us() noexcept { return quantum_us_.load(); }

  /// Sleep taken at each quantum boundary; zero means sched_yield instead.
  static void set_sleep_us(std::int64_t us) noexcept { sleep_us_.store(us); }
  [[nodiscard]] static std::int64_t sleep_us() noexcept { return sleep_us_.load(); }

  static void
  YieldPoint() noexcept
  {
    if (!background_ || (++calls_ & 31U) != 0) return;
    const auto q = quantum_us_.load(std::memory_order_relaxed);
    if (q <= 0) return;
    const auto now = std::chrono::steady_clock::now();
    if (now - last_ < std::chrono::microseconds{q}) return;
    if (const auto z = sleep_us_.load(std::memory_order_relaxed); z > 0) {
      std::this_thread::sleep_for(std::chrono::microseconds{z});
    } else {
      std::this_thread::yield();
    }
    last_ = std::chrono::steady_clock::now();
  }

 private:
  static inline thread_local bool background_{false};
  static inline thread_local std::uint32_t calls_{0};
  static inline thread_local std::chrono::steady_clock::time_point last_{};
  static inline std::atomic<std::int64_t> quantum_us_{100};
  static inline std::atomic<std::int64_t> sleep_us_{50};
};

inline void
yield_point() noexcept
{
  Pacing::YieldPoint();
}

/// Free a run back to front with yield points; releasing thousands of strings at once is not free.
inline void
paced_clear(std::vector<Entry> &run) noexcept
{
  while (!run.empty()) {
    if ((run.size() & 255U) == 0) yield_point();
    run.pop_back();
  }
  run.shrink_to_fit();
}

/// Shared immutable run whose last owner frees it with paced_clear().
[[nodiscard]] inline std::shared_ptr<const std::vector<Entry>>
make_shared_run(std::vector<Entry> run)
{
  return std::shared_ptr<std::vector<Entry>>{new std::vector<Entry>(std::move(run)), [](std::vector<Entry> *v) {
                                               paced_clear(*v);
                                               delete v;
                                             }};
}

struct Config {
  std::size_t fanout_max{16};
  std::uint64_t memtable_limit{64U << 10U};
  std::uint64_t root_lsmt_limit{1U << 20U};
  std::uint64_t node_lsmt_limit{256U << 10U};
  std::size_t leaf_page_capacity{64};
  std::uint32_t level_size_ratio{4};
  /// Zero selects the size rule max(byte_size / 16384, 100).
  std::int64_t seek_allowance_per_file{0};
  bool adaptation_enabled{true};
  AdaptMode adapt_mode{AdaptMode::kLazy};
  LeafTransform leaf_transform{LeafTransform::kBalanced};
  InsertMode insert_mode{InsertMode::kBatched};
  Packing packing{Packing::kSoundRemedy};
  bool seek_compaction_enabled{false};
  std::uint64_t rng_seed{0};
  /// Operator-declared hotspot, enqueued up front in eager mode.
  std::optional<KeyRange> eager_hotspot{};
};

/// Name of the first violated invariant, if any.
[[nodiscard]] inline std::optional<std::string>
first_config_violation(const Config &c)
{
  if (c.fanout_max < 2) return "fanout_max";
  if (c.leaf_page_capacity < 4) return "leaf_page_capacity";
  if (c.node_lsmt_limit < c.memtable_limit) return "node_lsmt_limit";
  if (c.level_size_ratio < 2) return "level_size_ratio";
  return std::nullopt;
}

inline const Config &
validate_config(const Config &c)
{
  if (auto bad = first_config_violation(c)) throw ConfigError{*bad};
  return c;
}

}  // namespace ahatree

#endif  // AHATREE_CORE_HPP
