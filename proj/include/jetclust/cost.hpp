// Copyright 2026 The jetclust Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <atomic>
#include <cstdint>

namespace jetclust {

// Tally of splitting-likelihood evaluations. One process-wide instance is
// shared by all workers; per-event attribution uses CostScope.
class CostCounter {
 public:
  void add(std::uint64_t n = 1) { total_.fetch_add(n, std::memory_order_relaxed); }
  std::uint64_t value() const { return total_.load(std::memory_order_relaxed); }
  // Only call between runs.
  void reset() { total_.store(0, std::memory_order_relaxed); }

 private:
  std::atomic<std::uint64_t> total_{0};
};

CostCounter& global_cost_counter();

// Counts evaluations made on the current thread while alive. Scopes nest:
// an evaluation is credited to every active scope on the thread.
class CostScope {
 public:
  CostScope();
  ~CostScope();
  CostScope(const CostScope&) = delete;
  CostScope& operator=(const CostScope&) = delete;

  std::uint64_t count() const { return count_; }

 private:
  friend void record_ps_evaluation();
  std::uint64_t count_ = 0;
  CostScope* outer_ = nullptr;
};

void record_ps_evaluation();

}  // namespace jetclust
