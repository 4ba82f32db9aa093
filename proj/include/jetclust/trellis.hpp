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
#include <vector>

#include "jetclust/env.hpp"

namespace jetclust {

inline constexpr int kDefaultTrellisMaxLeaves = 16;

// Dynamic-programming table over leaf subsets (bitmask keys).
struct SubsetTable {
  std::vector<FourMomentum> momentum;  // p(S)
  std::vector<double> best_ll;         // MLL(S)
  std::vector<std::uint32_t> best_split;  // A of the best split (A, S \ A)
};

struct MleResult {
  double log_likelihood = 0.0;
  Tree tree;
  SubsetTable table;
};

// Exact maximum-likelihood tree in O(3^n). Throws std::invalid_argument
// for fewer than two or more than max_leaves leaves.
MleResult exact_mle(const Observation& obs, int max_leaves = kDefaultTrellisMaxLeaves);

// Number of splitting evaluations exact_mle makes on n leaves:
// (3^n + 1) / 2 - 2^n.
std::uint64_t trellis_evaluation_count(int n);

struct EnumerationResult {
  double best_log_likelihood = 0.0;
  std::uint64_t tree_count = 0;
};

// Visits every distinct binary tree over the leaves ((2n-3)!! of them).
// Test oracle for exact_mle; refuses n > 7.
EnumerationResult enumerate_all_trees(const Observation& obs);

}  // namespace jetclust
