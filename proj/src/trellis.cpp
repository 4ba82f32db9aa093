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

#include "jetclust/trellis.hpp"

#include <bit>
#include <limits>
#include <stdexcept>
#include <string>

namespace jetclust {

namespace {

std::vector<int> mask_leaves(std::uint32_t mask) {
  std::vector<int> out;
  for (int k = 0; mask != 0; ++k, mask >>= 1) {
    if (mask & 1u) out.push_back(k);
  }
  return out;
}

int build_subtree(const Observation& obs, const SubsetTable& table, std::uint32_t set, Tree& tree) {
  if (std::popcount(set) == 1) return std::countr_zero(set);
  const std::uint32_t a = table.best_split[set];
  const int left = build_subtree(obs, table, a, tree);
  const int right = build_subtree(obs, table, set ^ a, tree);
  const int idx = static_cast<int>(tree.nodes.size());
  TreeNode node;
  node.p = table.momentum[set];
  node.t = invariant_mass_sq(node.p);
  node.left = left;
  node.right = right;
  tree.nodes.push_back(node);
  tree.nodes[left].parent = idx;
  tree.nodes[right].parent = idx;
  return idx;
}

}  // namespace

std::uint64_t trellis_evaluation_count(int n) {
  std::uint64_t pow3 = 1;
  for (int k = 0; k < n; ++k) pow3 *= 3;
  return (pow3 + 1) / 2 - (std::uint64_t{1} << n);
}

MleResult exact_mle(const Observation& obs, int max_leaves) {
  const int n = static_cast<int>(obs.leaves.size());
  if (n < 2) throw std::invalid_argument("exact_mle: need at least two leaves");
  if (n > max_leaves || n > 30) {
    throw std::invalid_argument("exact_mle: " + std::to_string(n) + " leaves exceeds limit of " +
                                std::to_string(max_leaves));
  }
  const std::uint32_t full = (std::uint32_t{1} << n) - 1;
  MleResult result;
  SubsetTable& table = result.table;
  table.momentum.assign(full + 1, FourMomentum{});
  table.best_ll.assign(full + 1, -std::numeric_limits<double>::infinity());
  table.best_split.assign(full + 1, 0);

  for (std::uint32_t set = 1; set <= full; ++set) {
    const int high = 31 - std::countl_zero(set);
    const std::uint32_t rest_high = set ^ (std::uint32_t{1} << high);
    // Ascending-index sum, identical to cluster_momentum.
    table.momentum[set] = rest_high == 0 ? obs.leaves[high]
                                         : table.momentum[rest_high] + obs.leaves[high];
    if (rest_high == 0) {
      table.best_ll[set] = 0.0;
      continue;
    }
    const std::uint32_t low = set & (~set + 1);
    const std::uint32_t rest = set ^ low;
    double best = -std::numeric_limits<double>::infinity();
    std::uint32_t best_a = 0;
    // Subsets A always contain the lowest leaf, so each unordered split is seen once.
    for (std::uint32_t sub = (rest - 1) & rest;; sub = (sub - 1) & rest) {
      const std::uint32_t a = sub | low;
      const std::uint32_t b = set ^ a;
      const double ll =
          splitting_log_likelihood({table.momentum[set], table.momentum[a], table.momentum[b]},
                                   obs.config) +
          table.best_ll[a] + table.best_ll[b];
      if (ll > best) {
        best = ll;
        best_a = a;
      }
      if (sub == 0) break;
    }
    table.best_ll[set] = best;
    table.best_split[set] = best_a;
  }

  Tree& tree = result.tree;
  tree.nodes.resize(n);
  for (int k = 0; k < n; ++k) {
    tree.nodes[k].p = obs.leaves[k];
    tree.nodes[k].t = invariant_mass_sq(obs.leaves[k]);
    tree.leaves.push_back(k);
  }
  tree.root = build_subtree(obs, table, full, tree);
  result.log_likelihood = table.best_ll[full];
  return result;
}

namespace {

class TreeEnumerator {
 public:
  explicit TreeEnumerator(const Observation& obs)
      : obs_(obs),
        n_(static_cast<int>(obs.leaves.size())),
        left_(2 * n_ - 1, -1),
        right_(2 * n_ - 1, -1),
        parent_(2 * n_ - 1, -1) {}

  EnumerationResult run() {
    // Start from the only tree over leaves 0 and 1.
    left_[n_] = 0;
    right_[n_] = 1;
    parent_[0] = parent_[1] = n_;
    root_ = n_;
    insert(2);
    return result_;
  }

 private:
  // Attach leaf k above every existing node in turn.
  void insert(int k) {
    if (k == n_) {
      evaluate();
      return;
    }
    const int u = n_ + k - 1;
    std::vector<int> targets;
    for (int v = 0; v < k; ++v) targets.push_back(v);
    for (int v = n_; v < u; ++v) targets.push_back(v);
    for (int v : targets) {
      const int pv = parent_[v];
      const int saved_root = root_;
      left_[u] = v;
      right_[u] = k;
      parent_[u] = pv;
      parent_[k] = u;
      parent_[v] = u;
      if (pv < 0) {
        root_ = u;
      } else if (left_[pv] == v) {
        left_[pv] = u;
      } else {
        right_[pv] = u;
      }
      insert(k + 1);
      parent_[v] = pv;
      if (pv < 0) {
        root_ = saved_root;
      } else if (left_[pv] == u) {
        left_[pv] = v;
      } else {
        right_[pv] = v;
      }
      left_[u] = right_[u] = parent_[u] = -1;
      parent_[k] = -1;
    }
  }

  std::uint32_t fill(int v, Tree& tree) const {
    std::uint32_t mask = 0;
    if (v < n_) {
      mask = std::uint32_t{1} << v;
    } else {
      mask = fill(left_[v], tree) | fill(right_[v], tree);
    }
    const std::vector<int> leaves = mask_leaves(mask);
    TreeNode& node = tree.nodes[v];
    node.p = cluster_momentum(obs_, leaves);
    node.t = invariant_mass_sq(node.p);
    node.left = left_[v];
    node.right = right_[v];
    node.parent = parent_[v];
    return mask;
  }

  void evaluate() {
    Tree tree;
    tree.nodes.resize(2 * n_ - 1);
    for (int k = 0; k < n_; ++k) tree.leaves.push_back(k);
    tree.root = root_;
    fill(root_, tree);
    const double ll = tree_log_likelihood(tree, obs_.config);
    if (result_.tree_count == 0 || ll > result_.best_log_likelihood) result_.best_log_likelihood = ll;
    ++result_.tree_count;
  }

  const Observation& obs_;
  int n_;
  std::vector<int> left_, right_, parent_;
  int root_ = -1;
  EnumerationResult result_;
};

}  // namespace

EnumerationResult enumerate_all_trees(const Observation& obs) {
  const int n = static_cast<int>(obs.leaves.size());
  if (n < 2 || n > 7) throw std::invalid_argument("enumerate_all_trees: need 2 <= n <= 7");
  return TreeEnumerator(obs).run();
}

}  // namespace jetclust
