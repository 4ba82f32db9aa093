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

#include <memory>
#include <vector>

#include "jetclust/env.hpp"
#include "jetclust/event.hpp"
#include "jetclust/harness.hpp"
#include "jetclust/shower.hpp"

namespace testutil {

// Shower whose root mass keeps most events within reach of the exact solvers.
inline jetclust::ShowerConfig small_config(std::uint64_t seed = 11) {
  jetclust::ShowerConfig c;
  c.root = {10.0, 0.0, 0.0, 8.0};  // t = 36
  c.rng_seed = seed;
  return c;
}

// First `count` events with lo <= n <= hi drawn from `config`.
inline std::vector<jetclust::Event> events_with_leaves(int lo, int hi, int count,
                                                        const jetclust::ShowerConfig& config) {
  std::vector<jetclust::Event> out;
  int batch = 64;
  std::vector<jetclust::Event> pool;
  while (static_cast<int>(out.size()) < count) {
    pool = jetclust::generate_events(config, batch);
    out.clear();
    for (const jetclust::Event& e : pool) {
      if (e.leaf_count() >= lo && e.leaf_count() <= hi) out.push_back(e);
      if (static_cast<int>(out.size()) == count) break;
    }
    batch *= 2;
  }
  return out;
}

inline std::shared_ptr<const jetclust::Observation> observation(
    std::vector<jetclust::FourMomentum> leaves, jetclust::ShowerConfig config = {}) {
  return std::make_shared<const jetclust::Observation>(
      jetclust::Observation{std::move(leaves), config});
}

}  // namespace testutil
