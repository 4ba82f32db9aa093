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

#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "jetclust/env.hpp"
#include "jetclust/harness.hpp"
#include "jetclust/rng.hpp"
#include "test_util.hpp"

using namespace jetclust;

namespace {

FourMomentum total(const ClusterState& s) {
  FourMomentum sum;
  for (const Particle& p : s.particles()) sum += p.p;
  return sum;
}

}  // namespace

TEST_CASE("reset validates its input") {
  CHECK_THROWS_AS(ClusterState::reset(testutil::observation({{1, 0, 0, 0}})), std::invalid_argument);
  CHECK_THROWS_AS(ClusterState::reset(testutil::observation({{1, 0, 0, 0}, {-1, 0, 0, 0}})),
                  std::invalid_argument);
  const ClusterState s = ClusterState::reset(testutil::observation({{1, 0, 0, 1}, {1, 0, 0, -1}}));
  CHECK(s.n() == 2);
  CHECK(s.history().empty());
  CHECK(s.cumulative_reward() == 0.0);
  CHECK(legal_actions(s).size() == 1);
}

TEST_CASE("legal actions are lexicographic pairs") {
  const auto ev = generate_events(ShowerConfig{}, 3);
  for (const Event& e : ev) {
    const ClusterState s = ClusterState::reset(e.obs);
    const auto acts = legal_actions(s);
    const int n = s.n();
    CHECK(acts.size() == static_cast<std::size_t>(n * (n - 1) / 2));
    for (std::size_t k = 0; k < acts.size(); ++k) {
      CHECK(acts[k].i < acts[k].j);
      CHECK(action_index(acts[k], n) == k);
      if (k > 0) CHECK(acts[k - 1] < acts[k]);
    }
  }
  std::vector<FourMomentum> three{{1, 0, 0, 1}, {1, 0, 1, 0}, {1, 1, 0, 0}};
  const auto acts = legal_actions(ClusterState::reset(testutil::observation(three)));
  CHECK(acts == std::vector<Action>{{0, 1}, {0, 2}, {1, 2}});
  std::vector<FourMomentum> five(5, FourMomentum{1, 0, 0, 0});
  CHECK(legal_actions(ClusterState::reset(testutil::observation(five))).size() == 10);
}

TEST_CASE("step on two particles finishes with the tree likelihood") {
  const auto obs = testutil::observation({{1, 0, 0, 1}, {1, 0, 0, -1}});
  const ClusterState s = ClusterState::reset(obs);
  const Transition tr = step(s, {0, 1});
  CHECK(tr.done);
  CHECK(tr.next.n() == 1);
  CHECK(tr.next.cumulative_reward() == tr.reward);
  CHECK(tree_log_likelihood(build_tree(tr.next), obs->config) == tr.reward);
  CHECK(legal_actions(tr.next).empty());
  CHECK_THROWS_AS(step(tr.next, {0, 1}), std::invalid_argument);
}

TEST_CASE("step rejects illegal actions and is pure") {
  const auto ev = generate_events(ShowerConfig{}, 1);
  const ClusterState s = ClusterState::reset(ev[0].obs);
  CHECK_THROWS_AS(step(s, {1, 0}), std::invalid_argument);
  CHECK_THROWS_AS(step(s, {0, s.n()}), std::invalid_argument);
  CHECK_THROWS_AS(step(s, {-1, 1}), std::invalid_argument);
  const Transition a = step(s, {0, 2});
  const Transition b = step(s, {0, 2});
  CHECK(a.reward == b.reward);
  CHECK(a.next == b.next);
  CHECK(a.reward == merge_log_likelihood(s, {0, 2}));
  CHECK(a.next.particles().back().id == s.n());
}

TEST_CASE("episodes conserve momentum and sum rewards to the tree likelihood") {
  const auto events = generate_events(ShowerConfig{}, 50);
  Rng rng(3);
  for (const Event& e : events) {
    ClusterState s = ClusterState::reset(e.obs);
    const FourMomentum start = total(s);
    double rewards = 0.0;
    int steps = 0;
    while (!s.terminal()) {
      const auto acts = legal_actions(s);
      const Transition tr = step(s, acts[rng.below(acts.size())]);
      const FourMomentum now = total(tr.next);
      CHECK(std::abs(now.e - start.e) <= 1e-12);
      CHECK(std::abs(now.px - start.px) <= 1e-12);
      CHECK(std::abs(now.py - start.py) <= 1e-12);
      CHECK(std::abs(now.pz - start.pz) <= 1e-12);
      CHECK(tr.done == (tr.next.n() == 1));
      rewards += tr.reward;
      s = tr.next;
      ++steps;
    }
    CHECK(steps == e.leaf_count() - 1);
    double from_history = 0.0;
    for (const Merge& m : s.history()) from_history += m.reward;
    CHECK(std::abs(from_history - s.cumulative_reward()) <= 1e-9);
    CHECK(std::abs(rewards - s.cumulative_reward()) <= 1e-9);
    const Tree t = build_tree(s);
    CHECK_NOTHROW(check_tree(t, 1e-6));
    CHECK(std::abs(tree_log_likelihood(t, e.obs->config) - s.cumulative_reward()) <= 1e-9);
  }
}

TEST_CASE("caterpillar selector is reproducible") {
  const auto events = generate_events(ShowerConfig{}, 5);
  const ActionSelector first = [](const ClusterState&) { return Action{0, 1}; };
  for (const Event& e : events) {
    const Episode a = rollout(ClusterState::reset(e.obs), first);
    const Episode b = rollout(ClusterState::reset(e.obs), first);
    CHECK(a.total_reward == b.total_reward);
    CHECK(a.actions == b.actions);
    CHECK(a.final_state == b.final_state);
    CHECK(a.actions.size() == static_cast<std::size_t>(e.leaf_count() - 1));
    CHECK(std::abs(tree_log_likelihood(a.tree, e.obs->config) - a.total_reward) <= 1e-9);
  }
}

TEST_CASE("reconstructing the truth order reproduces the truth likelihood") {
  const auto events = generate_events(ShowerConfig{}, 20);
  for (const Event& e : events) {
    // Merge truth siblings bottom-up, always the first available pair.
    const Tree& truth = e.truth;
    ClusterState s = ClusterState::reset(e.obs);
    std::vector<int> node_of_particle;
    for (const Particle& p : s.particles()) node_of_particle.push_back(truth.leaves[p.leaves[0]]);
    while (!s.terminal()) {
      bool merged = false;
      for (int i = 0; i < s.n() && !merged; ++i) {
        for (int j = i + 1; j < s.n() && !merged; ++j) {
          const int a = node_of_particle[i], b = node_of_particle[j];
          const int pa = truth.nodes[a].parent;
          if (pa >= 0 && pa == truth.nodes[b].parent) {
            s = step(s, {i, j}).next;
            node_of_particle.erase(node_of_particle.begin() + j);
            node_of_particle.erase(node_of_particle.begin() + i);
            node_of_particle.push_back(pa);
            merged = true;
          }
        }
      }
      REQUIRE(merged);
    }
    CHECK(std::abs(s.cumulative_reward() - e.truth_ll) <= 1e-9);
  }
}
