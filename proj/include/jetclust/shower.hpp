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
#include <vector>

#include "jetclust/kinematics.hpp"
#include "jetclust/rng.hpp"

namespace jetclust {

// Finite stand-in for log(0): returned per density factor when a value
// falls outside the support.
inline constexpr double kLogDensityFloor = -1e5;

struct ShowerConfig {
  double lambda = 1.5;  // decay-rate shape parameter
  double t_cut = 1.0;   // leaves have squared mass below this
  FourMomentum root{25.0, 0.0, 0.0, 15.0};  // t = 400
  std::uint64_t rng_seed = 0;

  // Throws std::invalid_argument when the configuration cannot produce a tree.
  void validate() const;
};

struct TreeNode {
  FourMomentum p;
  double t = 0.0;
  int parent = -1;
  int left = -1;
  int right = -1;

  bool is_leaf() const { return left < 0; }
};

// Binary tree over a list of observed particles. `leaves` holds node
// indices in observation order.
struct Tree {
  std::vector<TreeNode> nodes;
  int root = -1;
  std::vector<int> leaves;

  std::size_t leaf_count() const { return leaves.size(); }
};

// Throws std::logic_error if the tree is not binary, not connected, or an
// internal momentum differs from its children's sum by more than rel_tol.
void check_tree(const Tree& tree, double rel_tol = 1e-6);

struct Splitting {
  FourMomentum parent;
  FourMomentum child_a;
  FourMomentum child_b;
};

// log f(t | lambda, t_max) for the exponential density truncated to [0, t_max].
double truncated_exp_log_density(double t, double t_max, double lambda);
double truncated_exp_cdf(double t, double t_max, double lambda);
double truncated_exp_inverse_cdf(double u, double t_max, double lambda);
double sample_truncated_exp(double t_max, double lambda, Rng& rng);

// log p_s of one parent -> two children splitting. The parent's squared mass
// comes from `s.parent`, which callers set to the children's sum. Counts as
// one evaluation on the cost counter.
double splitting_log_likelihood(const Splitting& s, const ShowerConfig& config);

// Sum of splitting log-likelihoods over all internal nodes.
double tree_log_likelihood(const Tree& tree, const ShowerConfig& config);

// Per-node log-density recorded by the sampler (0 for leaves).
struct ShowerTrace {
  std::vector<double> node_log_density;
};

// Samples a truth tree by recursive splitting of the root. Leaves are
// returned in a random observation order.
Tree sample_shower(const ShowerConfig& config, Rng& rng, ShowerTrace* trace = nullptr);

Vec3 isotropic_direction(Rng& rng);

}  // namespace jetclust
