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

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "jetclust/cost.hpp"
#include "jetclust/planners.hpp"
#include "jetclust/trellis.hpp"
#include "test_util.hpp"

using namespace jetclust;

namespace {

void check_result(const ClusteringResult& r, const Event& e) {
  CHECK_NOTHROW(check_tree(r.tree, 1e-6));
  CHECK(r.tree.leaf_count() == static_cast<std::size_t>(e.leaf_count()));
  CHECK(r.actions.size() == static_cast<std::size_t>(e.leaf_count() - 1));
  CHECK(std::abs(tree_log_likelihood(r.tree, e.obs->config) - r.log_likelihood) <= 1e-9);
}

bool same_tree(const Tree& a, const Tree& b) {
  if (a.nodes.size() != b.nodes.size() || a.root != b.root || a.leaves != b.leaves) return false;
  for (std::size_t k = 0; k < a.nodes.size(); ++k) {
    const TreeNode& x = a.nodes[k];
    const TreeNode& y = b.nodes[k];
    if (!(x.p == y.p) || x.left != y.left || x.right != y.right || x.parent != y.parent) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("fixed priors") {
  const auto obs = testutil::observation({{1, 0, 0, 1}, {1, 0, 1, 0}, {2, 1, 1, 1}});
  const ClusterState s = ClusterState::reset(obs);
  const auto uniform = fixed_policy(FixedPolicyKind::kUniform)->priors(s);
  REQUIRE(uniform.size() == 3);
  for (double p : uniform) CHECK(p == doctest::Approx(1.0 / 3.0));

  const auto events = generate_events(ShowerConfig{}, 10);
  const auto ps = fixed_policy(FixedPolicyKind::kLikelihood);
  for (const Event& e : events) {
    const ClusterState st = ClusterState::reset(e.obs);
    const auto pri = ps->priors(st);
    const auto acts = legal_actions(st);
    double sum = 0.0;
    for (double p : pri) sum += p;
    CHECK(std::abs(sum - 1.0) <= 1e-6);
    for (std::size_t a = 0; a < acts.size(); ++a) {
      for (std::size_t b = 0; b < acts.size(); ++b) {
        if (merge_log_likelihood(st, acts[a]) > merge_log_likelihood(st, acts[b])) {
          CHECK(pri[a] >= pri[b]);
        }
      }
    }
  }
}

TEST_CASE("two-leaf events have one clustering") {
  const auto obs = testutil::observation({{1, 0, 0, 1}, {1, 0, 0, -1}});
  Event e;
  e.obs = obs;
  Rng rng(1);
  const ClusteringResult g = cluster_greedy(obs);
  const ClusteringResult r = cluster_random(obs, rng);
  const ClusteringResult b = cluster_beam(obs, 4);
  check_result(g, e);
  CHECK(same_tree(g.tree, r.tree));
  CHECK(same_tree(g.tree, b.tree));
  CHECK(g.log_likelihood == r.log_likelihood);
}

TEST_CASE("greedy on three leaves picks the best first merge") {
  const auto events = testutil::events_with_leaves(3, 3, 20, testutil::small_config());
  for (const Event& e : events) {
    const ClusterState s = ClusterState::reset(e.obs);
    double best = -1e300;
    Action best_a;
    for (const Action& a : legal_actions(s)) {
      const double r = merge_log_likelihood(s, a);
      if (r > best) {
        best = r;
        best_a = a;
      }
    }
    const Transition t = step(s, best_a);
    const double expected = t.reward + merge_log_likelihood(t.next, {0, 1});
    const ClusteringResult g = cluster_greedy(e.obs);
    check_result(g, e);
    CHECK(g.actions.front() == best_a);
    CHECK(g.log_likelihood == expected);
  }
}

TEST_CASE("random clustering is reproducible and valid") {
  const auto events = generate_events(ShowerConfig{}, 20);
  for (const Event& e : events) {
    Rng a(5, e.id), b(5, e.id);
    const ClusteringResult x = cluster_random(e.obs, a);
    const ClusteringResult y = cluster_random(e.obs, b);
    check_result(x, e);
    CHECK(x.actions == y.actions);
    CHECK(x.log_likelihood == y.log_likelihood);
  }
}

TEST_CASE("beam of width one is greedy") {
  const auto events = generate_events(ShowerConfig{}, 100);
  for (const Event& e : events) {
    const ClusteringResult g = cluster_greedy(e.obs);
    const ClusteringResult b = cluster_beam(e.obs, 1);
    CHECK(same_tree(g.tree, b.tree));
    CHECK(g.log_likelihood == b.log_likelihood);
  }
}

TEST_CASE("beam results are valid, ordered and monotone in width on average") {
  const auto events = generate_events(ShowerConfig{}, 40);
  double g_sum = 0.0, b_sum = 0.0;
  for (const Event& e : events) {
    const ClusteringResult g = cluster_greedy(e.obs);
    const ClusteringResult b = cluster_beam(e.obs, 5);
    check_result(b, e);
    g_sum += g.log_likelihood;
    b_sum += b.log_likelihood;
    const auto survivors = beam_search(ClusterState::reset(e.obs), 5);
    REQUIRE(!survivors.empty());
    CHECK(survivors.size() <= 5);
    CHECK(survivors.front().state.cumulative_reward() == b.log_likelihood);
    for (std::size_t k = 1; k < survivors.size(); ++k) {
      CHECK(survivors[k - 1].state.cumulative_reward() >= survivors[k].state.cumulative_reward());
    }
  }
  CHECK(b_sum >= g_sum);
}

TEST_CASE("wide beams are exact on small events") {
  const auto events = testutil::events_with_leaves(3, 6, 30, testutil::small_config(5));
  for (const Event& e : events) {
    const EnumerationResult all = enumerate_all_trees(*e.obs);
    const ClusteringResult b = cluster_beam(e.obs, 1000);
    CHECK(std::abs(b.log_likelihood - all.best_log_likelihood) <= 1e-9);
  }
}

TEST_CASE("four-leaf wide beam matches all 15 trees") {
  const auto events = testutil::events_with_leaves(4, 4, 10, testutil::small_config(6));
  for (const Event& e : events) {
    const EnumerationResult all = enumerate_all_trees(*e.obs);
    CHECK(all.tree_count == 15);
    CHECK(std::abs(cluster_beam(e.obs, 1000).log_likelihood - all.best_log_likelihood) <= 1e-9);
  }
}

TEST_CASE("planners never beat the exact maximum") {
  const auto events = testutil::events_with_leaves(2, 8, 40, testutil::small_config(7));
  Rng rng(2);
  for (const Event& e : events) {
    const double mle = exact_mle(*e.obs).log_likelihood;
    CHECK(cluster_greedy(e.obs).log_likelihood <= mle + 1e-9);
    CHECK(cluster_beam(e.obs, 5).log_likelihood <= mle + 1e-9);
    for (int k = 0; k < 100; ++k) CHECK(cluster_random(e.obs, rng).log_likelihood <= mle + 1e-9);
  }
}

TEST_CASE("greedy cost is the number of pairs seen") {
  const auto events = generate_events(ShowerConfig{}, 10);
  for (const Event& e : events) {
    CostScope scope;
    cluster_greedy(e.obs);
    std::uint64_t expected = 0;
    for (std::uint64_t k = 2; k <= static_cast<std::uint64_t>(e.leaf_count()); ++k) expected += k * (k - 1) / 2;
    CHECK(scope.count() == expected);
  }
}

TEST_CASE("beam costs more than greedy for widths above one") {
  const auto events = generate_events(ShowerConfig{}, 10);
  for (const Event& e : events) {
    if (e.leaf_count() < 4) continue;
    std::uint64_t g = 0, b = 0;
    {
      CostScope scope;
      cluster_greedy(e.obs);
      g = scope.count();
    }
    {
      CostScope scope;
      cluster_beam(e.obs, 3);
      b = scope.count();
    }
    CHECK(b > g);
  }
}

TEST_CASE("argmax takes the first maximum") {
  CHECK(argmax_index({1.0, 3.0, 3.0, 2.0}) == 1);
  CHECK(argmax_index({5.0}) == 0);
}
