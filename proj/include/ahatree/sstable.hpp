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

#ifndef AHATREE_SSTABLE_HPP
#define AHATREE_SSTABLE_HPP

#include <zlib.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstring>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "ahatree/core.hpp"
#include "ahatree/env.hpp"

namespace ahatree
{
/*######################################################################################
 * On-disk layout (all integers little-endian)
 *
 *   header  : "AHAT" | format_version u32 | entry_count u32
 *   records : key_len u32 | key | seq u64 | val_len u32 | val      (strictly ascending)
 *   footer  : min_key_len u32 | min_key | max_key_len u32 | max_key | crc32 u32
 *
 * The crc (IEEE polynomial) covers every byte before it.
 *####################################################################################*/

inline constexpr char kSstMagic[4] = {'A', 'H', 'A', 'T'};
inline constexpr std::uint32_t kSstFormatVersion = 1;

namespace detail
{
inline void
PutU32(std::string &out, std::uint32_t v)
{
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFU));
}

inline void
PutU64(std::string &out, std::uint64_t v)
{
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFU));
}

inline std::uint32_t
Crc32(std::string_view bytes)
{
  constexpr std::size_t kChunk = 16U << 10U;
  uLong crc = ::crc32(0L, Z_NULL, 0);
  for (std::size_t pos = 0; pos < bytes.size(); pos += kChunk) {
    const auto n = std::min(kChunk, bytes.size() - pos);
    crc = ::crc32(crc, reinterpret_cast<const Bytef *>(bytes.data() + pos), static_cast<uInt>(n));
    for (int i = 0; i < 32; ++i) yield_point();
  }
  return static_cast<std::uint32_t>(crc);
}

/// Bounds-checked little-endian reader over a byte image.
class Cursor
{
 public:
  explicit Cursor(std::string_view buf) : buf_{buf} {}

  std::uint32_t
  U32()
  {
    Need(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8U) | static_cast<unsigned char>(buf_[pos_ + i]);
    pos_ += 4;
    return v;
  }

  std::uint64_t
  U64()
  {
    Need(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8U) | static_cast<unsigned char>(buf_[pos_ + i]);
    pos_ += 8;
    return v;
  }

  std::string
  Bytes(std::size_t n)
  {
    Need(n);
    std::string s{buf_.substr(pos_, n)};
    pos_ += n;
    return s;
  }

  [[nodiscard]] std::size_t
  pos() const noexcept
  {
    return pos_;
  }

 private:
  void
  Need(std::size_t n) const
  {
    if (buf_.size() - pos_ < n) throw CorruptionError{"bad footer/crc: truncated record"};
  }

  std::string_view buf_;
  std::size_t pos_{0};
};
}  // namespace detail

/// Serialize an ascending run into the file image.
[[nodiscard]] inline std::string
EncodeSst(std::span<const Entry> entries)
{
  if (entries.empty()) throw Error{"sst: empty input"};
  std::size_t total = 24;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if ((i & 255U) == 0) yield_point();
    if (i > 0 && !(entries[i - 1].key < entries[i].key)) {
      throw Error{"sst: input keys not strictly ascending"};
    }
    total += 16 + entries[i].payload_bytes();
  }
  std::string out;
  out.reserve(total + entries.front().key.size() + entries.back().key.size());
  out.append(kSstMagic, 4);
  detail::PutU32(out, kSstFormatVersion);
  detail::PutU32(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto &e : entries) {
    yield_point();
    detail::PutU32(out, static_cast<std::uint32_t>(e.key.size()));
    out += e.key;
    detail::PutU64(out, e.seq);
    detail::PutU32(out, static_cast<std::uint32_t>(e.value.size()));
    out += e.value;
  }
  detail::PutU32(out, static_cast<std::uint32_t>(entries.front().key.size()));
  out += entries.front().key;
  detail::PutU32(out, static_cast<std::uint32_t>(entries.back().key.size()));
  out += entries.back().key;
  detail::PutU32(out, detail::Crc32(out));
  return out;
}

/// Parse and validate a file image; throws CorruptionError without partial results.
[[nodiscard]] inline std::vector<Entry>
DecodeSst(std::string_view buf)
{
  if (buf.size() < 4 || std::memcmp(buf.data(), kSstMagic, 4) != 0) {
    throw CorruptionError{"bad magic"};
  }
  if (buf.size() < 16) throw CorruptionError{"bad footer/crc: file too short"};
  detail::Cursor crc_cur{buf.substr(buf.size() - 4)};
  if (crc_cur.U32() != detail::Crc32(buf.substr(0, buf.size() - 4))) {
    throw CorruptionError{"bad footer/crc: checksum mismatch"};
  }
  detail::Cursor cur{buf.substr(0, buf.size() - 4)};
  cur.Bytes(4);
  if (cur.U32() != kSstFormatVersion) throw CorruptionError{"unsupported format version"};
  const auto count = cur.U32();
  if (count == 0) throw CorruptionError{"empty file"};
  std::vector<Entry> entries;
  entries.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    yield_point();
    Entry e;
    e.key = cur.Bytes(cur.U32());
    e.seq = cur.U64();
    e.value = cur.Bytes(cur.U32());
    if (!entries.empty() && !(entries.back().key < e.key)) {
      throw CorruptionError{"records not ascending"};
    }
    entries.push_back(std::move(e));
  }
  const auto min_key = cur.Bytes(cur.U32());
  const auto max_key = cur.Bytes(cur.U32());
  if (min_key != entries.front().key || max_key != entries.back().key) {
    throw CorruptionError{"bad footer/crc: bounds disagree with records"};
  }
  return entries;
}

/// Allocates file ids unique within one index instance.
class FileIdSource
{
 public:
  std::uint64_t
  Next() noexcept
  {
    return last_.fetch_add(1, std::memory_order_relaxed) + 1;
  }

 private:
  std::atomic<std::uint64_t> last_{0};
};

struct SstMeta {
  std::uint64_t file_id{0};
  Key min_key{};
  Key max_key{};
  std::uint64_t entry_count{0};
  std::uint64_t byte_size{0};
  std::int64_t seeks_remaining{0};
  SeqNo min_seq{0};
  SeqNo max_seq{0};
};

/// Seeks a file absorbs before it qualifies for seek compaction.
[[nodiscard]] inline std::int64_t
SeekAllowance(std::uint64_t byte_size, std::int64_t configured)
{
  if (configured > 0) return configured;
  return std::max<std::int64_t>(static_cast<std::int64_t>(byte_size / 16384), 100);
}

/**
 * @brief An immutable sorted file plus its validated, decoded image.
 *
 * The file is checksummed once when written or opened; scans then read the decoded
 * image. A file marked obsolete is deleted when the last holder releases it, so readers
 * of an old level version never lose the files they started with.
 */
class SstFile
{
 public:
  using Ptr = std::shared_ptr<SstFile>;

  SstFile(const SstFile &) = delete;
  SstFile &operator=(const SstFile &) = delete;

  ~SstFile()
  {
    if (obsolete_.load()) env_->RemoveFile(path_);
  }

  static Ptr
  Write(Env &env,
        std::string path,
        std::uint64_t file_id,
        std::span<const Entry> entries,
        std::int64_t seek_allowance = 0)
  {
    const auto image = EncodeSst(entries);
    env.WriteFile(path, image);
    std::vector<Entry> copy;
    copy.reserve(entries.size());
    for (const auto &e : entries) {
      if ((copy.size() & 255U) == 0) yield_point();
      copy.push_back(e);
    }
    auto data = make_shared_run(std::move(copy));
    return Ptr{new SstFile{env, std::move(path), file_id, image.size(), std::move(data),
                           seek_allowance}};
  }

  static Ptr
  Open(Env &env, std::string path, std::int64_t seek_allowance = 0)
  {
    const auto image = env.ReadFile(path);
    auto data = make_shared_run(DecodeSst(*image));
    const auto id = FileIdFromPath(path);
    return Ptr{new SstFile{env, std::move(path), id, image->size(), std::move(data),
                           seek_allowance}};
  }

  [[nodiscard]] SstMeta
  meta() const
  {
    auto m = meta_;
    m.seeks_remaining = seeks_remaining_.load(std::memory_order_relaxed);
    return m;
  }

  [[nodiscard]] std::uint64_t file_id() const noexcept { return meta_.file_id; }
  [[nodiscard]] const Key &min_key() const noexcept { return meta_.min_key; }
  [[nodiscard]] const Key &max_key() const noexcept { return meta_.max_key; }
  [[nodiscard]] std::uint64_t byte_size() const noexcept { return meta_.byte_size; }
  [[nodiscard]] std::uint64_t entry_count() const noexcept { return meta_.entry_count; }
  [[nodiscard]] SeqNo min_seq() const noexcept { return meta_.min_seq; }
  [[nodiscard]] SeqNo max_seq() const noexcept { return meta_.max_seq; }
  [[nodiscard]] const std::string &path() const noexcept { return path_; }

  [[nodiscard]] std::int64_t
  seeks_remaining() const noexcept
  {
    return seeks_remaining_.load(std::memory_order_relaxed);
  }

  [[nodiscard]] bool
  Overlaps(const Interval &r) const noexcept
  {
    return r.overlaps_closed(meta_.min_key, meta_.max_key);
  }

  /// Entries with key in r; charges one seek when r overlaps the file's bounds.
  [[nodiscard]] std::vector<Entry>
  Scan(const Interval &r) const
  {
    if (!Overlaps(r)) return {};
    seeks_remaining_.fetch_sub(1, std::memory_order_relaxed);
    return Peek(r);
  }

  /// Same as Scan without seek accounting (maintenance reads).
  [[nodiscard]] std::vector<Entry>
  Peek(const Interval &r) const
  {
    const auto v = View(r);
    return {v.begin(), v.end()};
  }

  /// Entries with key in r, in place; valid while image() is held.
  [[nodiscard]] std::span<const Entry>
  View(const Interval &r) const
  {
    if (!Overlaps(r)) return {};
    const auto &v = *entries_;
    auto first = std::lower_bound(v.begin(), v.end(), r.lo,
                                  [](const Entry &e, const Key &k) { return e.key < k; });
    auto last = r.hi ? std::lower_bound(first, v.end(), *r.hi,
                                        [](const Entry &e, const Key &k) { return e.key < k; })
                     : v.end();
    return {first, last};
  }

  /// Charge one seek if r overlaps the file; the read-path twin of Scan.
  [[nodiscard]] std::span<const Entry>
  SeekView(const Interval &r) const
  {
    if (!Overlaps(r)) return {};
    seeks_remaining_.fetch_sub(1, std::memory_order_relaxed);
    return View(r);
  }

  [[nodiscard]] std::shared_ptr<const std::vector<Entry>>
  image() const noexcept
  {
    return entries_;
  }

  [[nodiscard]] const std::vector<Entry> &
  entries() const noexcept
  {
    return *entries_;
  }

  void
  MarkObsolete() noexcept
  {
    obsolete_.store(true);
  }

 private:
  SstFile(Env &env,
          std::string path,
          std::uint64_t file_id,
          std::uint64_t byte_size,
          std::shared_ptr<const std::vector<Entry>> entries,
          std::int64_t seek_allowance)
      : env_{&env}, path_{std::move(path)}, entries_{std::move(entries)}
  {
    meta_.file_id = file_id;
    meta_.min_key = entries_->front().key;
    meta_.max_key = entries_->back().key;
    meta_.entry_count = entries_->size();
    meta_.byte_size = byte_size;
    meta_.min_seq = entries_->front().seq;
    meta_.max_seq = entries_->front().seq;
    std::size_t n = 0;
    for (const auto &e : *entries_) {
      if ((n++ & 255U) == 0) yield_point();
      meta_.min_seq = std::min(meta_.min_seq, e.seq);
      meta_.max_seq = std::max(meta_.max_seq, e.seq);
    }
    seeks_remaining_ = SeekAllowance(byte_size, seek_allowance);
    meta_.seeks_remaining = seeks_remaining_;
  }

  static std::uint64_t
  FileIdFromPath(const std::string &path)
  {
    const auto stem = std::filesystem::path{path}.stem().string();
    std::uint64_t id = 0;
    std::from_chars(stem.data(), stem.data() + stem.size(), id);
    return id;
  }

  Env *env_;
  std::string path_;
  SstMeta meta_{};
  std::shared_ptr<const std::vector<Entry>> entries_;
  mutable std::atomic<std::int64_t> seeks_remaining_{0};
  std::atomic<bool> obsolete_{false};
};

}  // namespace ahatree

#endif  // AHATREE_SSTABLE_HPP
