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

#include "jetclust/mcts.hpp"

#include <cmath>
#include <stdexcept>

namespace jetclust {

void MctsConfig::validate() const {
  if (!(c >= 0.0)) throw std::invalid_argument("mcts: c must be non-negative");
  if (n_mcts < 0 || beam_init_b < 0) {
    throw std::invalid_argument("mcts: n_mcts and beam_init_b must be non-negative");
  }
  if (n_mcts == 0 && !(use_beam_init && beam_init_b > 0)) {
    throw std::invalid_argument("mcts: n_mcts = 0 without beam initialization gives no search");
  }
}

double puct_score(double q, double prior, int parent_visits, int edge_visits, double c) {
  return q + c * prior * std::sqrt(static_cast<double>(std::max(parent_visits, 1))) /
                 (1.0 + static_cast<double>(edge_visits));
}

double edge_value(const EdgeStats& edge, const ReturnNormalizer& normalizer) {
  if (edge.visits == 0) return 0.5;
  return normalizer.normalize(edge.return_sum / edge.visits);
}

double puct_score(const SearchNode& node, const EdgeStats& edge, const ReturnNormalizer& normalizer,
                  double c) {
  return puct_score(edge_value(edge, normalizer), edge.prior, node.visits, edge.visits, c);
}

MctsSearch::MctsSearch(ClusterState root, const PriorPolicy& policy, MctsConfig cfg, Rng rng)
    : root_(std::make_unique<SearchNode>(std::move(root))),
      policy_(&policy),
      cfg_(cfg),
      rng_(rng) {
  cfg_.validate();
}

void MctsSearch::ensure_edges(SearchNode& node) {
  if (!node.edges.empty() || node.state.terminal()) return;
  for (const Action& a : legal_actions(node.state)) {
    EdgeStats e;
    e.action = a;
    node.edges.push_back(std::move(e));
  }
}

void MctsSearch::ensure_priors(SearchNode& node) {
  if (node.has_priors) return;
  ensure_edges(node);
  const std::vector<double> p = policy_->priors(node.state);
  if (p.size() != node.edges.size()) throw std::logic_error("policy returned wrong prior count");
  for (std::size_t k = 0; k < p.size(); ++k) node.edges[k].prior = p[k];
  node.has_priors = true;
}

SearchNode& MctsSearch::child_of(SearchNode& node, EdgeStats& edge, const double* known_reward) {
  if (!edge.child) {
    ClusterState next = known_reward != nullptr
                            ? apply_scored_merge(node.state, edge.action, *known_reward).next
                            : step(node.state, edge.action).next;
    edge.child = std::make_unique<SearchNode>(std::move(next));
  }
  return *edge.child;
}

void MctsSearch::backup(const std::vector<std::pair<SearchNode*, EdgeStats*>>& path, double ret) {
  normalizer_.observe(ret);
  for (auto& [node, edge] : path) {
    ++node->visits;
    ++edge->visits;
    edge->return_sum += ret;
    edge->best_return = std::max(edge->best_return, ret);
  }
}

void MctsSearch::seed_with_beam() {
  const std::size_t depth0 = root_->state.history().size();
  for (const BeamPath& bp : beam_search(root_->state, cfg_.beam_init_b)) {
    std::vector<std::pair<SearchNode*, EdgeStats*>> path;
    SearchNode* node = root_.get();
    for (std::size_t k = 0; k < bp.actions.size(); ++k) {
      ensure_edges(*node);
      EdgeStats& edge = node->edges[action_index(bp.actions[k], node->state.n())];
      const double reward = bp.state.history()[depth0 + k].reward;
      path.emplace_back(node, &edge);
      node = &child_of(*node, edge, &reward);
    }
    backup(path, bp.state.cumulative_reward());
  }
}

void MctsSearch::simulate() {
  std::vector<std::pair<SearchNode*, EdgeStats*>> path;
  SearchNode* node = root_.get();
  while (!node->state.terminal()) {
    ensure_priors(*node);
    std::size_t pick = 0;
    if (cfg_.rollout_rule == RolloutRule::kPuct) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < node->edges.size(); ++k) {
        const double u = puct_score(*node, node->edges[k], normalizer_, cfg_.c);
        if (u > best) {
          best = u;
          pick = k;
        }
      }
    } else {
      double u = rng_.uniform();
      pick = node->edges.size() - 1;
      for (std::size_t k = 0; k < node->edges.size(); ++k) {
        u -= node->edges[k].prior;
        if (u < 0.0) {
          pick = k;
          break;
        }
      }
    }
    EdgeStats& edge = node->edges[pick];
    path.emplace_back(node, &edge);
    node = &child_of(*node, edge, nullptr);
  }
  backup(path, node->state.cumulative_reward());
}

Action MctsSearch::decide() {
  SearchNode& root = *root_;
  if (root.state.terminal()) throw std::logic_error("mcts: decide() at a terminal state");
  ensure_edges(root);
  if (root.edges.size() == 1) return root.edges.front().action;

  if (cfg_.use_beam_init && cfg_.beam_init_b > 0) seed_with_beam();
  for (int k = 0; k < cfg_.n_mcts; ++k) simulate();

  std::size_t pick = 0;
  for (std::size_t k = 1; k < root.edges.size(); ++k) {
    const EdgeStats& e = root.edges[k];
    const EdgeStats& b = root.edges[pick];
    const bool better = cfg_.final_rule == FinalRule::kMaxReturn ? e.best_return > b.best_return
                                                                  : e.visits > b.visits;
    if (better) pick = k;
  }
  return root.edges[pick].action;
}

void MctsSearch::advance(Action a) {
  ensure_edges(*root_);
  if (!is_legal(root_->state, a)) throw std::invalid_argument("mcts: advance with illegal action");
  EdgeStats& edge = root_->edges[action_index(a, root_->state.n())];
  child_of(*root_, edge, nullptr);
  std::unique_ptr<SearchNode> next = std::move(edge.child);
  root_ = std::move(next);
}

Action mcts_decide(const ClusterState& root_state, const PriorPolicy& policy,
                   const MctsConfig& cfg, Rng& rng) {
  MctsSearch search(root_state, policy, cfg, rng.split(rng.next_u64()));
  return search.decide();
}

MctsResult cluster_mcts(std::shared_ptr<const Observation> obs, const PriorPolicy& policy,
                        const MctsConfig& cfg, Rng& rng) {
  MctsSearch search(ClusterState::reset(std::move(obs)), policy, cfg, rng.split(rng.next_u64()));
  MctsResult result;
  std::vector<Action> actions;
  while (!search.root().state.terminal()) {
    const Action a = search.decide();
    result.decisions.push_back({search.root().state, a});
    actions.push_back(a);
    search.advance(a);
  }
  const ClusterState& final_state = search.root().state;
  result.clustering.tree = build_tree(final_state);
  result.clustering.log_likelihood = final_state.cumulative_reward();
  result.clustering.actions = std::move(actions);
  return result;
}

}  // namespace jetclust
