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

#include <cstdint>
#include <memory>
#include <string>

#include "jetclust/env.hpp"
#include "jetclust/shower.hpp"

namespace jetclust {

// One simulated jet: the observed leaves plus the tree that produced them.
struct Event {
  std::int64_t id = 0;
  std::shared_ptr<const Observation> obs;
  Tree truth;
  double truth_ll = 0.0;
  std::string config_hash;

  int leaf_count() const { return static_cast<int>(obs->leaves.size()); }
};

}  // namespace jetclust
