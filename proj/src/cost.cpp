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

#include "jetclust/cost.hpp"

namespace jetclust {

namespace {
thread_local CostScope* active_scope = nullptr;
}

CostCounter& global_cost_counter() {
  static CostCounter counter;
  return counter;
}

CostScope::CostScope() : outer_(active_scope) { active_scope = this; }

CostScope::~CostScope() { active_scope = outer_; }

void record_ps_evaluation() {
  global_cost_counter().add();
  for (CostScope* s = active_scope; s != nullptr; s = s->outer_) ++s->count_;
}

}  // namespace jetclust
