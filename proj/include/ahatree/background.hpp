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

#ifndef AHATREE_BACKGROUND_HPP
#define AHATREE_BACKGROUND_HPP

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <thread>

#include "ahatree/core.hpp"

namespace ahatree
{
enum class BackgroundMode {
  /// A dedicated worker thread runs maintenance concurrently with callers.
  kThread,
  /// No thread; work runs when the owner calls WaitIdle() or RunOne().
  kManual,
};

/**
 * @brief Runs a bounded unit of work repeatedly until it reports nothing left to do.
 *
 * The step function returns true when it made progress. Notify() wakes the worker after
 * new work appears; WaitIdle() blocks until a step has reported no work since the last
 * notification.
 */
class BackgroundWorker
{
 public:
  using Step = std::function<bool()>;

  BackgroundWorker(Step step, BackgroundMode mode) : step_{std::move(step)}, mode_{mode}
  {
    if (mode_ == BackgroundMode::kThread) thread_ = std::thread{[this] { Loop(); }};
  }

  BackgroundWorker(const BackgroundWorker &) = delete;
  BackgroundWorker &operator=(const BackgroundWorker &) = delete;

  ~BackgroundWorker() { Stop(); }

  void
  Notify()
  {
    if (mode_ == BackgroundMode::kManual) return;
    {
      std::lock_guard guard{mu_};
      pending_ = true;
    }
    cv_.notify_one();
  }

  /// Block until no work remains (manual mode: do the work inline).
  void
  WaitIdle()
  {
    if (mode_ == BackgroundMode::kManual) {
      while (step_()) {
      }
      return;
    }
    std::unique_lock lock{mu_};
    pending_ = true;
    cv_.notify_one();
    idle_cv_.wait(lock, [this] { return stop_ || paused_ || (!pending_ && !running_); });
  }

  /// One step inline (manual mode only).
  bool
  RunOne()
  {
    return mode_ == BackgroundMode::kManual && step_();
  }

  /// Hold the worker between steps; returns once no step is running.
  void
  Pause()
  {
    std::unique_lock lock{mu_};
    paused_ = true;
    idle_cv_.wait(lock, [this] { return !running_; });
  }

  void
  Resume()
  {
    {
      std::lock_guard guard{mu_};
      paused_ = false;
      pending_ = true;
    }
    cv_.notify_one();
  }

  void
  Stop()
  {
    {
      std::lock_guard guard{mu_};
      if (stop_) return;
      stop_ = true;
    }
    cv_.notify_all();
    idle_cv_.notify_all();
    if (thread_.joinable()) thread_.join();
  }

  [[nodiscard]] BackgroundMode mode() const noexcept { return mode_; }

 private:
  void
  Loop()
  {
    Pacing::MarkBackgroundThread();
    for (;;) {
      {
        std::unique_lock lock{mu_};
        cv_.wait_for(lock, std::chrono::milliseconds{20}, [this] { return stop_ || (!paused_ && pending_); });
        if (stop_) return;
        if (paused_) continue;
        pending_ = false;
        running_ = true;
      }
      for (;;) {
        const bool did = step_();
        bool keep_going = false;
        {
          std::lock_guard guard{mu_};
          keep_going = did && !stop_ && !paused_;
        }
        if (!keep_going) break;
        // Hand the core back between bounded steps.
        std::this_thread::yield();
      }
      {
        std::lock_guard guard{mu_};
        running_ = false;
      }
      idle_cv_.notify_all();
    }
  }

  Step step_;
  BackgroundMode mode_;
  std::mutex mu_{};
  std::condition_variable cv_{};
  std::condition_variable idle_cv_{};
  bool pending_{false};
  bool running_{false};
  bool paused_{false};
  bool stop_{false};
  std::thread thread_{};
};

}  // namespace ahatree

#endif  // AHATREE_BACKGROUND_HPP
