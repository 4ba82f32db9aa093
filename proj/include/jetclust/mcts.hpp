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
#include <limits>
#include <memory>
#include <vector>

#include "jetclust/env.hpp"
#include "jetclust/planners.hpp"
#include "jetclust/rng.hpp"

namespace jetclust {

enum class FinalRule {
  kMaxReturn,   // action whose best roll-out return is largest
  kPuctVisits,  // most visited action (ablation)
};

enum class RolloutRule {
  kPuct,          // argmax of the PUCT score at every depth
  kPolicySample,  // sample from the prior instead (the "no PUCT roll-outs" ablation)
};

struct MctsConfig {
  double c = 1.0;
  int n_mcts = 20;
  int beam_init_b = 5;
  FinalRule final_rule = FinalRule::kMaxReturn;
  bool use_beam_init = true;
  RolloutRule rollout_rule = RolloutRule::kPuct;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

// Min-max normalization of raw episode returns seen in one search.
class ReturnNormalizer {
 public:
  void observe(double r) {
    lo_ = std::min(lo_, r);
    hi_ = std::max(hi_, r);
  }
  double normalize(double r) const { return hi_ > lo_ ? (r - lo_) / (hi_ - lo_) : 0.5; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }

 private:
  double lo_ = std::numeric_limits<double>::infinity();
  double hi_ = -std::numeric_limits<double>::infinity();
};

struct SearchNode;

struct EdgeStats {
  Action action;
  int visits = 0;
  double return_sum = 0.0;  // raw returns; Q normalizes the mean on demand
  double prior = 0.0;
  double best_return = -std::numeric_limits<double>::infinity();
  std::unique_ptr<SearchNode> child;
};

struct SearchNode {
  ClusterState state;
  int visits = 0;
  bool has_priors = false;
  std::vector<EdgeStats> edges;  // legal_actions(state) order, created lazily

  explicit SearchNode(ClusterState s) : state(std::move(s)) {}
};

// Q + c * prior * sqrt(max(N_s, 1)) / (1 + N_sa).
double puct_score(double q, double prior, int parent_visits, int edge_visits, double c);

// Q of an edge under the normalizer: 0.5 while unvisited.
double edge_value(const EdgeStats& edge, const ReturnNormalizer& normalizer);

double puct_score(const SearchNode& node, const EdgeStats& edge, const ReturnNormalizer& normalizer,
                  double c);

// A (state, chosen action) pair produced by a search, used as a policy target.
struct DecisionRecord {
  ClusterState state;
  Action chosen;
};

// Search tree for one episode. Each decide() grows the tree from the
// current root; advance() moves the root to the chosen child, keeping its
// subtree and the normalizer statistics.
class MctsSearch {
 public:
  MctsSearch(ClusterState root, const PriorPolicy& policy, MctsConfig cfg, Rng rng);

  Action decide();
  void advance(Action a);

  const SearchNode& root() const { return *root_; }
  const ReturnNormalizer& normalizer() const { return normalizer_; }

 private:
  void ensure_edges(SearchNode& node);
  void ensure_priors(SearchNode& node);
  SearchNode& child_of(SearchNode& node, EdgeStats& edge, const double* known_reward);
  void backup(const std::vector<std::pair<SearchNode*, EdgeStats*>>& path, double ret);
  void seed_with_beam();
  void simulate();

  std::unique_ptr<SearchNode> root_;
  const PriorPolicy* policy_;
  MctsConfig cfg_;
  Rng rng_;
  ReturnNormalizer normalizer_;
};

Action mcts_decide(const ClusterState& root_state, const PriorPolicy& policy,
                   const MctsConfig& cfg, Rng& rng);

struct MctsResult {
  ClusteringResult clustering;
  std::vector<DecisionRecord> decisions;
};

MctsResult cluster_mcts(std::shared_ptr<const Observation> obs, const PriorPolicy& policy,
                        const MctsConfig& cfg, Rng& rng);

}  // namespace jetclust
