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

#include <compare>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "jetclust/kinematics.hpp"
#include "jetclust/shower.hpp"

namespace jetclust {

// The observed final state of one event and the model it is scored under.
struct Observation {
  std::vector<FourMomentum> leaves;
  ShowerConfig config;
};

// A current particle. Leaves carry ids 0..n-1 in observation order; merged
// parents get fresh ids counting up from n. `leaves` is sorted ascending.
struct Particle {
  int id = 0;
  FourMomentum p;
  std::vector<int> leaves;
};

struct Action {
  int i = 0;
  int j = 1;
  friend auto operator<=>(const Action&, const Action&) = default;
};

struct Merge {
  int id_a = 0;
  int id_b = 0;
  int new_id = 0;
  double reward = 0.0;
  friend bool operator==(const Merge&, const Merge&) = default;
};

// Momentum of a cluster: its leaves summed in ascending index order. Every
// component (env, trellis, tree rebuild) uses this, so equal clusters get
// bit-identical momenta no matter which merge order produced them.
FourMomentum cluster_momentum(const Observation& obs, std::span<const int> leaves);

struct Transition;

class ClusterState {
 public:
  // Throws std::invalid_argument for fewer than two leaves or unphysical momenta.
  static ClusterState reset(std::shared_ptr<const Observation> obs);

  const Observation& observation() const { return *obs_; }
  const std::shared_ptr<const Observation>& observation_ptr() const { return obs_; }
  const std::vector<Particle>& particles() const { return particles_; }
  const std::vector<Merge>& history() const { return history_; }
  double cumulative_reward() const { return cumulative_reward_; }
  int n() const { return static_cast<int>(particles_.size()); }
  bool terminal() const { return particles_.size() <= 1; }

  friend bool operator==(const ClusterState& a, const ClusterState& b);

 private:
  friend Transition apply_scored_merge(const ClusterState& s, Action a, double reward);

  std::shared_ptr<const Observation> obs_;
  std::vector<Particle> particles_;
  std::vector<Merge> history_;
  double cumulative_reward_ = 0.0;
  int next_id_ = 0;
};

struct Transition {
  ClusterState next;
  double reward = 0.0;
  bool done = false;
};

// All pairs (i, j), i < j, in lexicographic order. Empty at a terminal state.
std::vector<Action> legal_actions(const ClusterState& s);

// Index of `a` in legal_actions order for a state with n particles.
inline std::size_t action_index(Action a, int n) {
  return static_cast<std::size_t>(a.i) * (2 * n - a.i - 1) / 2 + (a.j - a.i - 1);
}

bool is_legal(const ClusterState& s, Action a);

// Throws std::invalid_argument for an illegal action.
Transition step(const ClusterState& s, Action a);

// Reward step(s, a) would return, without building the next state.
double merge_log_likelihood(const ClusterState& s, Action a);

// step() with a reward the caller already obtained from
// merge_log_likelihood(s, a) for this exact (s, a); avoids scoring twice.
Transition apply_scored_merge(const ClusterState& s, Action a, double reward);

// Binary tree induced by the merge history of a terminal state. Leaves keep
// observation order; internal momenta are cluster_momentum of their leaves.
Tree build_tree(const ClusterState& terminal_state);

using ActionSelector = std::function<Action(const ClusterState&)>;

struct Episode {
  ClusterState final_state;
  double total_reward = 0.0;
  Tree tree;
  std::vector<Action> actions;
};

Episode rollout(ClusterState s, const ActionSelector& select);

}  // namespace jetclust
