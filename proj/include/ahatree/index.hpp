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

#ifndef AHATREE_INDEX_HPP
#define AHATREE_INDEX_HPP

#include <string_view>
#include <vector>

#include "ahatree/adaptation.hpp"
#include "ahatree/core.hpp"
#include "ahatree/lsmt.hpp"

namespace ahatree
{
struct IndexStats {
  CompactionStats compaction{};
  AdaptationStats adaptation{};
  double adapt_fraction{1.0};
  std::uint64_t page_splits{0};
  std::uint64_t pages{0};
};

/// What the workload driver needs from an ordered key-value index.
class OrderedIndex
{
 public:
  virtual ~OrderedIndex() = default;

  virtual void Put(const Key &key, Value value) = 0;

  /// Newest value of every key in r, ascending.
  virtual std::vector<Entry> Scan(const KeyRange &r) = 0;

  [[nodiscard]] virtual IndexStats Stats() const = 0;

  /// Block until background work has drained.
  virtual void WaitIdle() = 0;

  /// Whether every tracked adaptation target is done (vacuously true without any).
  [[nodiscard]] virtual bool
  AdaptationComplete() const
  {
    return true;
  }

  /// Hold or release background adaptation (used while preloading).
  virtual void
  SetAdaptationPaused(bool)
  {
  }

  [[nodiscard]] virtual std::string_view name() const = 0;
};

}  // namespace ahatree

#endif  // AHATREE_INDEX_HPP
