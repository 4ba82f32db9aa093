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

#include "jetclust/env.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace jetclust {

FourMomentum cluster_momentum(const Observation& obs, std::span<const int> leaves) {
  FourMomentum sum;
  for (int leaf : leaves) sum += obs.leaves[leaf];
  return sum;
}

ClusterState ClusterState::reset(std::shared_ptr<const Observation> obs) {
  if (!obs || obs->leaves.size() < 2) {
    throw std::invalid_argument("reset: need at least two leaves");
  }
  for (const FourMomentum& p : obs->leaves) {
    try {
      check_physical(p);
    } catch (const std::domain_error& e) {
      throw std::invalid_argument(std::string("reset: ") + e.what());
    }
  }
  ClusterState s;
  s.obs_ = std::move(obs);
  const int n = static_cast<int>(s.obs_->leaves.size());
  s.particles_.reserve(n);
  for (int k = 0; k < n; ++k) s.particles_.push_back({k, s.obs_->leaves[k], {k}});
  s.next_id_ = n;
  return s;
}

bool operator==(const ClusterState& a, const ClusterState& b) {
  if (a.obs_ != b.obs_ || a.history_ != b.history_ || a.next_id_ != b.next_id_ ||
      a.cumulative_reward_ != b.cumulative_reward_ || a.particles_.size() != b.particles_.size()) {
    return false;
  }
  for (std::size_t k = 0; k < a.particles_.size(); ++k) {
    const Particle& pa = a.particles_[k];
    const Particle& pb = b.particles_[k];
    if (pa.id != pb.id || !(pa.p == pb.p) || pa.leaves != pb.leaves) return false;
  }
  return true;
}

std::vector<Action> legal_actions(const ClusterState& s) {
  std::vector<Action> actions;
  const int n = s.n();
  if (n < 2) return actions;
  actions.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) actions.push_back({i, j});
  }
  return actions;
}

bool is_legal(const ClusterState& s, Action a) { return 0 <= a.i && a.i < a.j && a.j < s.n(); }

namespace {

std::vector<int> merged_leaves(const Particle& a, const Particle& b) {
  std::vector<int> out;
  out.reserve(a.leaves.size() + b.leaves.size());
  std::merge(a.leaves.begin(), a.leaves.end(), b.leaves.begin(), b.leaves.end(),
             std::back_inserter(out));
  return out;
}

void require_legal(const ClusterState& s, Action a) {
  if (!is_legal(s, a)) {
    throw std::invalid_argument("illegal action (" + std::to_string(a.i) + ", " +
                                std::to_string(a.j) + ") with n = " + std::to_string(s.n()));
  }
}

}  // namespace

double merge_log_likelihood(const ClusterState& s, Action a) {
  require_legal(s, a);
  const Particle& pa = s.particles()[a.i];
  const Particle& pb = s.particles()[a.j];
  const std::vector<int> leaves = merged_leaves(pa, pb);
  return splitting_log_likelihood({cluster_momentum(s.observation(), leaves), pa.p, pb.p},
                                  s.observation().config);
}

Transition step(const ClusterState& s, Action a) {
  return apply_scored_merge(s, a, merge_log_likelihood(s, a));
}

Transition apply_scored_merge(const ClusterState& s, Action a, double reward) {
  require_legal(s, a);
  const Particle& pa = s.particles_[a.i];
  const Particle& pb = s.particles_[a.j];
  Particle parent;
  parent.id = s.next_id_;
  parent.leaves = merged_leaves(pa, pb);
  parent.p = cluster_momentum(*s.obs_, parent.leaves);

  Transition tr;
  ClusterState& next = tr.next;
  next.obs_ = s.obs_;
  next.particles_.reserve(s.particles_.size() - 1);
  for (int k = 0; k < s.n(); ++k) {
    if (k != a.i && k != a.j) next.particles_.push_back(s.particles_[k]);
  }
  next.history_ = s.history_;
  next.history_.push_back({pa.id, pb.id, parent.id, reward});
  next.particles_.push_back(std::move(parent));
  next.cumulative_reward_ = s.cumulative_reward_ + reward;
  next.next_id_ = s.next_id_ + 1;
  tr.reward = reward;
  tr.done = next.particles_.size() == 1;
  return tr;
}

Tree build_tree(const ClusterState& terminal_state) {
  if (!terminal_state.terminal()) throw std::invalid_argument("build_tree: episode not finished");
  const Observation& obs = terminal_state.observation();
  const int n = static_cast<int>(obs.leaves.size());
  Tree tree;
  tree.nodes.resize(2 * n - 1);
  std::vector<std::vector<int>> leaf_sets(2 * n - 1);
  for (int k = 0; k < n; ++k) {
    tree.nodes[k].p = obs.leaves[k];
    tree.nodes[k].t = invariant_mass_sq(obs.leaves[k]);
    leaf_sets[k] = {k};
    tree.leaves.push_back(k);
  }
  for (const Merge& m : terminal_state.history()) {
    std::vector<int>& out = leaf_sets[m.new_id];
    std::merge(leaf_sets[m.id_a].begin(), leaf_sets[m.id_a].end(), leaf_sets[m.id_b].begin(),
               leaf_sets[m.id_b].end(), std::back_inserter(out));
    TreeNode& node = tree.nodes[m.new_id];
    node.p = cluster_momentum(obs, out);
    node.t = invariant_mass_sq(node.p);
    node.left = m.id_a;
    node.right = m.id_b;
    tree.nodes[m.id_a].parent = m.new_id;
    tree.nodes[m.id_b].parent = m.new_id;
  }
  tree.root = terminal_state.particles().front().id;
  return tree;
}

Episode rollout(ClusterState s, const ActionSelector& select) {
  if (s.terminal()) throw std::invalid_argument("rollout: state is terminal");
  Episode ep;
  while (!s.terminal()) {
    const Action a = select(s);
    ep.actions.push_back(a);
    s = step(s, a).next;
  }
  ep.total_reward = s.cumulative_reward();
  ep.tree = build_tree(s);
  ep.final_state = std::move(s);
  return ep;
}

}  // namespace jetclust
