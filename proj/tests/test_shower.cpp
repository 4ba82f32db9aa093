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
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "jetclust/cost.hpp"
#include "jetclust/shower.hpp"

using namespace jetclust;

namespace {

// Composite Simpson rule.
double simpson(double a, double b, int intervals, auto f) {
  const double h = (b - a) / intervals;
  double s = f(a) + f(b);
  for (int k = 1; k < intervals; ++k) s += f(a + k * h) * (k % 2 == 1 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// Leaf count of the mass-only recursion, drawn with a generator unrelated to Rng.
int leaf_count_reference(double t, double t_cut, double lambda, std::mt19937_64& gen) {
  if (t < t_cut) return 1;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto draw = [&](double t_max) {
    return -(t_max / lambda) * std::log(1.0 - u(gen) * (1.0 - std::exp(-lambda)));
  };
  for (;;) {
    const double t_a = draw(t);
    const double bound = std::sqrt(t) - std::sqrt(t_a);
    if (!(bound * bound > 0.0)) continue;
    const double t_b = draw(bound * bound);
    if (t_b <= t_a) {
      return leaf_count_reference(t_a, t_cut, lambda, gen) +
             leaf_count_reference(t_b, t_cut, lambda, gen);
    }
  }
}

}  // namespace

TEST_CASE("truncated exponential closed form") {
  CHECK(truncated_exp_log_density(0.0, 1.0, 1.0) ==
        doctest::Approx(std::log(1.0 / (1.0 - std::exp(-1.0)))).epsilon(1e-14));
  CHECK(std::exp(truncated_exp_log_density(0.0, 1.0, 1.0)) == doctest::Approx(1.581977).epsilon(1e-6));
  CHECK(truncated_exp_log_density(2.0, 1.0, 1.0) == kLogDensityFloor);
  CHECK(truncated_exp_log_density(-0.1, 1.0, 1.0) == kLogDensityFloor);
  CHECK_THROWS_AS(truncated_exp_log_density(0.5, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(truncated_exp_log_density(0.5, 1.0, -1.0), std::invalid_argument);
}

TEST_CASE("density integrates to one") {
  auto check = [](double t_max, double lambda) {
    const double integral = simpson(0.0, t_max, 20000, [&](double t) {
      return std::exp(truncated_exp_log_density(t, t_max, lambda));
    });
    CHECK(std::abs(integral - 1.0) <= 1e-8);
  };
  check(1.0, 1.0);
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> tm(0.1, 500.0), lam(0.1, 8.0);
  for (int k = 0; k < 10; ++k) check(tm(gen), lam(gen));
}

TEST_CASE("inverse CDF endpoints") {
  CHECK(truncated_exp_inverse_cdf(0.0, 3.0, 1.5) == 0.0);
  CHECK(truncated_exp_inverse_cdf(1.0 - 1e-16, 3.0, 1.5) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(truncated_exp_cdf(truncated_exp_inverse_cdf(0.3, 3.0, 1.5), 3.0, 1.5) ==
        doctest::Approx(0.3).epsilon(1e-14));
}

TEST_CASE("sampler passes a Kolmogorov-Smirnov test") {
  Rng rng(17);
  const int n = 100000;
  std::vector<double> xs(n);
  for (double& x : xs) x = sample_truncated_exp(1.0, 1.0, rng);
  std::sort(xs.begin(), xs.end());
  double d = 0.0;
  for (int k = 0; k < n; ++k) {
    const double f = truncated_exp_cdf(xs[k], 1.0, 1.0);
    d = std::max({d, f - static_cast<double>(k) / n, static_cast<double>(k + 1) / n - f});
    CHECK(xs[k] >= 0.0);
    CHECK(xs[k] <= 1.0);
  }
  CHECK(d < 0.01);
}

TEST_CASE("splitting likelihood symmetric example") {
  ShowerConfig cfg;
  cfg.lambda = 1.0;
  const FourMomentum a{1, 0, 0, 1}, b{1, 0, 0, -1};
  const double expected = 2.0 * std::log(1.0 / (4.0 * (1.0 - std::exp(-1.0)))) -
                          std::log(4.0 * std::numbers::pi);
  const double ab = splitting_log_likelihood({a + b, a, b}, cfg);
  const double ba = splitting_log_likelihood({b + a, b, a}, cfg);
  CHECK(ab == doctest::Approx(expected).epsilon(1e-14));
  CHECK(ab == ba);
}

TEST_CASE("splitting likelihood is symmetric bit for bit on random pairs") {
  ShowerConfig cfg;
  Rng rng(4);
  for (int k = 0; k < 200; ++k) {
    const Tree t = sample_shower(cfg, rng);
    for (const TreeNode& node : t.nodes) {
      if (node.is_leaf()) continue;
      const FourMomentum& l = t.nodes[node.left].p;
      const FourMomentum& r = t.nodes[node.right].p;
      CHECK(splitting_log_likelihood({node.p, l, r}, cfg) ==
            splitting_log_likelihood({node.p, r, l}, cfg));
    }
  }
}

TEST_CASE("splitting likelihood counts evaluations and rejects bad momenta") {
  ShowerConfig cfg;
  const std::uint64_t before = global_cost_counter().value();
  {
    CostScope scope;
    splitting_log_likelihood({{2, 0, 0, 0}, {1, 0, 0, 1}, {1, 0, 0, -1}}, cfg);
    splitting_log_likelihood({{2, 0, 0, 0}, {1, 0, 0, 1}, {1, 0, 0, -1}}, cfg);
    CHECK(scope.count() == 2);
  }
  CHECK(global_cost_counter().value() - before >= 2);
  CHECK_THROWS_AS(splitting_log_likelihood({{0, 0, 0, 0}, {-1, 0, 0, 0}, {1, 0, 0, 0}}, cfg),
                  std::domain_error);
}

TEST_CASE("sampled trees satisfy the tree invariants and conserve momentum") {
  ShowerConfig cfg;
  Rng rng(99);
  for (int k = 0; k < 1000; ++k) {
    const Tree t = sample_shower(cfg, rng);
    CHECK_NOTHROW(check_tree(t, 1e-6));
    CHECK(t.leaf_count() >= 2);
    FourMomentum sum;
    for (int leaf : t.leaves) {
      sum += t.nodes[leaf].p;
      CHECK(t.nodes[leaf].t < cfg.t_cut);
    }
    for (const TreeNode& node : t.nodes) {
      if (!node.is_leaf()) CHECK(node.t >= cfg.t_cut);
    }
    const FourMomentum& root = t.nodes[t.root].p;
    CHECK(std::abs(sum.e - root.e) <= 1e-6 * root.e);
    CHECK(std::abs(sum.px - root.px) <= 1e-6 * root.e);
    CHECK(std::abs(sum.py - root.py) <= 1e-6 * root.e);
    CHECK(std::abs(sum.pz - root.pz) <= 1e-6 * root.e);
  }
}

TEST_CASE("recorded sampler densities match the splitting likelihood") {
  ShowerConfig cfg;
  Rng rng(5);
  for (int k = 0; k < 200; ++k) {
    ShowerTrace trace;
    const Tree t = sample_shower(cfg, rng, &trace);
    double recorded = 0.0;
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
      const TreeNode& node = t.nodes[i];
      if (node.is_leaf()) continue;
      const double ll =
          splitting_log_likelihood({node.p, t.nodes[node.left].p, t.nodes[node.right].p}, cfg);
      CHECK(std::abs(ll - trace.node_log_density[i]) <= 1e-9);
      recorded += trace.node_log_density[i];
    }
    CHECK(std::abs(tree_log_likelihood(t, cfg) - recorded) <= 1e-9);
  }
}

TEST_CASE("two-leaf tree likelihood is the single splitting") {
  ShowerConfig cfg;
  cfg.root = {3.0, 0.0, 0.0, 2.0};  // t = 5
  cfg.t_cut = 4.0;
  cfg.lambda = 20.0;
  Rng rng(8);
  int two_leaf = 0;
  for (int k = 0; k < 200; ++k) {
    const Tree t = sample_shower(cfg, rng);
    CHECK(t.leaf_count() >= 2);
    if (t.leaf_count() == 2) {
      ++two_leaf;
      const TreeNode& r = t.nodes[t.root];
      CHECK(tree_log_likelihood(t, cfg) ==
            splitting_log_likelihood({r.p, t.nodes[r.left].p, t.nodes[r.right].p}, cfg));
    }
  }
  CHECK(two_leaf > 190);
}

TEST_CASE("sampling is deterministic per seed") {
  ShowerConfig cfg;
  Rng a(31), b(31);
  for (int k = 0; k < 20; ++k) {
    const Tree x = sample_shower(cfg, a);
    const Tree y = sample_shower(cfg, b);
    REQUIRE(x.nodes.size() == y.nodes.size());
    CHECK(x.leaves == y.leaves);
    for (std::size_t i = 0; i < x.nodes.size(); ++i) CHECK(x.nodes[i].p == y.nodes[i].p);
  }
}

TEST_CASE("configs without a splitting are rejected") {
  ShowerConfig cfg;
  cfg.t_cut = 400.0;
  Rng rng;
  CHECK_THROWS_AS(sample_shower(cfg, rng), std::invalid_argument);
  cfg.t_cut = 1.0;
  cfg.lambda = 0.0;
  CHECK_THROWS_AS(sample_shower(cfg, rng), std::invalid_argument);
}

TEST_CASE("mean leaf count agrees with an independent Monte-Carlo reference") {
  const int trees = 10000;
  std::mt19937_64 gen(2024);
  double sum = 0.0, sum_sq = 0.0;
  for (int k = 0; k < trees; ++k) {
    const double n = leaf_count_reference(400.0, 1.0, 1.5, gen);
    sum += n;
    sum_sq += n * n;
  }
  const double ref_mean = sum / trees;
  const double ref_sem = std::sqrt((sum_sq / trees - ref_mean * ref_mean) / (trees - 1));

  ShowerConfig cfg;
  Rng rng(77);
  double total = 0.0;
  for (int k = 0; k < trees; ++k) total += static_cast<double>(sample_shower(cfg, rng).leaf_count());
  const double mean = total / trees;
  MESSAGE("reference " << ref_mean << " +- " << ref_sem << ", sampler " << mean);
  CHECK(std::abs(mean - ref_mean) <= 5.0 * ref_sem);
}
