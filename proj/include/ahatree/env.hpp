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

#ifndef AHATREE_ENV_HPP
#define AHATREE_ENV_HPP

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "ahatree/core.hpp"

namespace ahatree
{
/**
 * @brief File-system access used by every persistent component.
 *
 * Files are written whole and read whole; directories are created on demand. The
 * in-memory variant keeps large randomized test sweeps off the disk.
 */
class Env
{
 public:
  virtual ~Env() = default;

  virtual void WriteFile(const std::string &path, std::string_view data) = 0;

  /// Write to a temporary name, then rename over the target.
  virtual void WriteFileAtomic(const std::string &path, std::string_view data) = 0;

  virtual std::shared_ptr<const std::string> ReadFile(const std::string &path) = 0;

  virtual void RemoveFile(const std::string &path) = 0;

  [[nodiscard]] virtual bool Exists(const std::string &path) = 0;

  virtual void RemoveAll(const std::string &dir) = 0;
};

class PosixEnv final : public Env
{
 public:
  void
  WriteFile(const std::string &path, std::string_view data) override
  {
    namespace fs = std::filesystem;
    const fs::path p{path};
    if (p.has_parent_path()) {
      std::error_code ec;
      fs::create_directories(p.parent_path(), ec);
      if (ec) throw IoError{"mkdir " + p.parent_path().string() + ": " + ec.message()};
    }
    std::ofstream out{p, std::ios::binary | std::ios::trunc};
    if (!out) throw IoError{"open for write: " + path};
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw IoError{"write: " + path};
  }

  void
  WriteFileAtomic(const std::string &path, std::string_view data) override
  {
    const auto tmp = path + ".tmp";
    WriteFile(tmp, data);
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError{"rename " + tmp + ": " + ec.message()};
  }

  std::shared_ptr<const std::string>
  ReadFile(const std::string &path) override
  {
    std::ifstream in{path, std::ios::binary};
    if (!in) throw IoError{"missing file: " + path};
    auto buf = std::make_shared<std::string>();
    in.seekg(0, std::ios::end);
    buf->resize(static_cast<std::size_t>(in.tellg()));
    in.seekg(0);
    in.read(buf->data(), static_cast<std::streamsize>(buf->size()));
    if (!in) throw IoError{"read: " + path};
    return buf;
  }

  void
  RemoveFile(const std::string &path) override
  {
    std::error_code ec;
    std::filesystem::remove(path, ec);
  }

  bool
  Exists(const std::string &path) override
  {
    std::error_code ec;
    return std::filesystem::exists(path, ec);
  }

  void
  RemoveAll(const std::string &dir) override
  {
    std::error_code ec;
    std::filesystem::remove_all(dir, ec);
  }
};

class MemEnv final : public Env
{
 public:
  void
  WriteFile(const std::string &path, std::string_view data) override
  {
    auto buf = std::make_shared<const std::string>(data);
    std::lock_guard guard{mu_};
    files_[path] = std::move(buf);
  }

  void
  WriteFileAtomic(const std::string &path, std::string_view data) override
  {
    WriteFile(path, data);
  }

  std::shared_ptr<const std::string>
  ReadFile(const std::string &path) override
  {
    std::lock_guard guard{mu_};
    auto it = files_.find(path);
    if (it == files_.end()) throw IoError{"missing file: " + path};
    return it->second;
  }

  void
  RemoveFile(const std::string &path) override
  {
    std::lock_guard guard{mu_};
    files_.erase(path);
  }

  bool
  Exists(const std::string &path) override
  {
    std::lock_guard guard{mu_};
    return files_.contains(path);
  }

  void
  RemoveAll(const std::string &dir) override
  {
    std::lock_guard guard{mu_};
    const auto prefix = dir.ends_with('/') ? dir : dir + "/";
    for (auto it = files_.lower_bound(prefix);
         it != files_.end() && it->first.starts_with(prefix);) {
      it = files_.erase(it);
    }
  }

  /// Replace a stored file's bytes in place (fault injection in tests).
  void
  Overwrite(const std::string &path, std::string data)
  {
    std::lock_guard guard{mu_};
    files_[path] = std::make_shared<const std::string>(std::move(data));
  }

  [[nodiscard]] std::vector<std::string>
  ListFiles(const std::string &prefix)
  {
    std::lock_guard guard{mu_};
    std::vector<std::string> out;
    for (auto it = files_.lower_bound(prefix);
         it != files_.end() && it->first.starts_with(prefix); ++it) {
      out.push_back(it->first);
    }
    return out;
  }

 private:
  std::mutex mu_{};
  std::map<std::string, std::shared_ptr<const std::string>> files_{};
};

}  // namespace ahatree

#endif  // AHATREE_ENV_HPP
