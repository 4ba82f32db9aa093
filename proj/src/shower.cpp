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

#include "jetclust/shower.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "jetclust/cost.hpp"

namespace jetclust {

namespace {

const double kLogIsotropic = -std::log(4.0 * std::numbers::pi);

double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

void ShowerConfig::validate() const {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  if (!(t_cut > 0.0)) throw std::invalid_argument("t_cut must be positive");
  check_physical(root);
  if (!(invariant_mass_sq(root) > t_cut)) {
    throw std::invalid_argument("root squared mass must exceed t_cut");
  }
}

void check_tree(const Tree& tree, double rel_tol) {
  const int n = static_cast<int>(tree.nodes.size());
  if (tree.root < 0 || tree.root >= n) throw std::logic_error("tree: bad root index");
  if (tree.nodes[tree.root].parent != -1) throw std::logic_error("tree: root has a parent");
  std::size_t leaves = 0;
  for (int i = 0; i < n; ++i) {
    const TreeNode& node = tree.nodes[i];
    if ((node.left < 0) != (node.right < 0)) throw std::logic_error("tree: node is not binary");
    if (node.is_leaf()) {
      ++leaves;
      continue;
    }
    if (node.left >= n || node.right >= n || tree.nodes[node.left].parent != i ||
        tree.nodes[node.right].parent != i) {
      throw std::logic_error("tree: inconsistent parent links");
    }
    const FourMomentum sum = tree.nodes[node.left].p + tree.nodes[node.right].p;
    if (rel_diff(sum.e, node.p.e) > rel_tol || rel_diff(sum.px, node.p.px) > rel_tol ||
        rel_diff(sum.py, node.p.py) > rel_tol || rel_diff(sum.pz, node.p.pz) > rel_tol) {
      throw std::logic_error("tree: momentum not conserved at node " + std::to_string(i));
    }
  }
  if (leaves != tree.leaves.size() || 2 * leaves - 1 != tree.nodes.size()) {
    throw std::logic_error("tree: leaf count mismatch");
  }
}

double truncated_exp_log_density(double t, double t_max, double lambda) {
  if (!(t_max > 0.0) || !(lambda > 0.0)) {
    throw std::invalid_argument("truncated_exp_log_density: t_max and lambda must be positive");
  }
  if (t < 0.0 || t > t_max) return kLogDensityFloor;
  return std::log(lambda / t_max) - lambda * t / t_max - std::log(-std::expm1(-lambda));
}

double truncated_exp_cdf(double t, double t_max, double lambda) {
  if (t <= 0.0) return 0.0;
  if (t >= t_max) return 1.0;
  return std::expm1(-lambda * t / t_max) / std::expm1(-lambda);
}

double truncated_exp_inverse_cdf(double u, double t_max, double lambda) {
  const double t = -(t_max / lambda) * std::log1p(u * std::expm1(-lambda));
  return std::clamp(t, 0.0, t_max);
}

double sample_truncated_exp(double t_max, double lambda, Rng& rng) {
  if (!(t_max > 0.0) || !(lambda > 0.0)) {
    throw std::invalid_argument("sample_truncated_exp: t_max and lambda must be positive");
  }
  return truncated_exp_inverse_cdf(rng.uniform(), t_max, lambda);
}

double splitting_log_likelihood(const Splitting& s, const ShowerConfig& config) {
  record_ps_evaluation();
  check_physical(s.child_a);
  check_physical(s.child_b);
  const double t_a = invariant_mass_sq(s.child_a);
  const double t_b = invariant_mass_sq(s.child_b);
  const double t_p = invariant_mass_sq(s.parent);
  const double t_l = std::max(t_a, t_b);
  const double t_r = std::min(t_a, t_b);

  double ll = kLogIsotropic;
  if (t_p > 0.0) {
    ll += truncated_exp_log_density(t_l, t_p, config.lambda);
  } else {
    ll += kLogDensityFloor;
  }
  const double bound = std::sqrt(t_p) - std::sqrt(t_l);
  const double t_r_max = bound > 0.0 ? bound * bound : 0.0;
  if (t_r_max > 0.0) {
    ll += truncated_exp_log_density(t_r, t_r_max, config.lambda);
  } else {
    ll += kLogDensityFloor;
  }
  return ll;
}

double tree_log_likelihood(const Tree& tree, const ShowerConfig& config) {
  double total = 0.0;
  for (const TreeNode& node : tree.nodes) {
    if (node.is_leaf()) continue;
    total += splitting_log_likelihood(
        {node.p, tree.nodes[node.left].p, tree.nodes[node.right].p}, config);
  }
  return total;
}

Vec3 isotropic_direction(Rng& rng) {
  const double cos_theta = 2.0 * rng.uniform() - 1.0;
  const double phi = 2.0 * std::numbers::pi * rng.uniform();
  const double sin_theta = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
  return {sin_theta * std::cos(phi), sin_theta * std::sin(phi), cos_theta};
}

Tree sample_shower(const ShowerConfig& config, Rng& rng, ShowerTrace* trace) {
  config.validate();
  Tree tree;
  tree.nodes.push_back({config.root, invariant_mass_sq(config.root), -1, -1, -1});
  tree.root = 0;
  std::vector<double> log_density(1, 0.0);

  std::vector<int> pending{0};
  while (!pending.empty()) {
    const int idx = pending.back();
    pending.pop_back();
    const double t_p = tree.nodes[idx].t;
    if (t_p < config.t_cut) {
      tree.leaves.push_back(idx);
      continue;
    }
    // The first draw is bounded by the parent, the second by what is left
    // after it. Draws where the second child ends up heavier are rejected so
    // that the recorded density coincides with splitting_log_likelihood,
    // which scores the heavier child against the parent.
    double t_a = 0.0;
    double t_b = 0.0;
    for (;;) {
      t_a = sample_truncated_exp(t_p, config.lambda, rng);
      const double bound = std::sqrt(t_p) - std::sqrt(t_a);
      const double t_b_max = bound * bound;
      if (!(t_b_max > 0.0)) continue;
      t_b = sample_truncated_exp(t_b_max, config.lambda, rng);
      if (t_b <= t_a) {
        log_density[idx] = truncated_exp_log_density(t_a, t_p, config.lambda) +
                           truncated_exp_log_density(t_b, t_b_max, config.lambda) +
                           kLogIsotropic;
        break;
      }
    }
    const Vec3 dir = isotropic_direction(rng);
    auto [pa, pb] = two_body_decay(tree.nodes[idx].p, t_a, t_b, dir);
    const int ia = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({pa, t_a, idx, -1, -1});
    tree.nodes.push_back({pb, t_b, idx, -1, -1});
    log_density.resize(tree.nodes.size(), 0.0);
    tree.nodes[idx].left = ia;
    tree.nodes[idx].right = ia + 1;
    pending.push_back(ia + 1);
    pending.push_back(ia);
  }
  rng.shuffle(std::span<int>(tree.leaves));
  if (trace != nullptr) trace->node_log_density = std::move(log_density);
  return tree;
}

}  // namespace jetclust
