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
#include "jetclust/rng.hpp"

namespace jetclust {

struct ClusteringResult {
  Tree tree;
  double log_likelihood = 0.0;
  std::vector<Action> actions;
};

// Prior distribution pi(s, .) over legal_actions(s), in that order.
class PriorPolicy {
 public:
  virtual ~PriorPolicy() = default;
  virtual std::vector<double> priors(const ClusterState& s) const = 0;
};

enum class FixedPolicyKind { kUniform, kLikelihood };

// kUniform: equal mass on every legal pair. kLikelihood: softmax of the
// per-pair log p_s, i.e. probabilities proportional to p_s.
std::unique_ptr<PriorPolicy> fixed_policy(FixedPolicyKind kind);

ClusteringResult cluster_random(std::shared_ptr<const Observation> obs, Rng& rng);

// Merges the pair with the largest log p_s at every step; ties go to the
// lexicographically smallest (i, j).
ClusteringResult cluster_greedy(std::shared_ptr<const Observation> obs);

// One surviving member of a beam search.
struct BeamPath {
  ClusterState state;
  std::vector<Action> actions;  // relative to the start state
};

// Level-synchronous beam search of width `width` from `start` to
// termination. Partial clusterings with the same leaf partition are merged,
// keeping the better one. Returns the final survivors, best first.
std::vector<BeamPath> beam_search(const ClusterState& start, int width);

ClusteringResult cluster_beam(std::shared_ptr<const Observation> obs, int width);

// Greedy argmax over a distribution, first index on ties.
std::size_t argmax_index(const std::vector<double>& values);

}  // namespace jetclust
