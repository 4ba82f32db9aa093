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

#include "jetclust/planners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace jetclust {

namespace {

class UniformPolicy final : public PriorPolicy {
 public:
  std::vector<double> priors(const ClusterState& s) const override {
    const std::size_t m = static_cast<std::size_t>(s.n()) * (s.n() - 1) / 2;
    return std::vector<double>(m, 1.0 / static_cast<double>(m));
  }
};

class LikelihoodPolicy final : public PriorPolicy {
 public:
  std::vector<double> priors(const ClusterState& s) const override {
    std::vector<double> out;
    for (const Action& a : legal_actions(s)) out.push_back(merge_log_likelihood(s, a));
    const double top = *std::max_element(out.begin(), out.end());
    double norm = 0.0;
    for (double& v : out) {
      v = std::exp(v - top);
      norm += v;
    }
    for (double& v : out) v /= norm;
    return out;
  }
};

ClusteringResult finish(const ClusterState& s, std::vector<Action> actions) {
  ClusteringResult r;
  r.tree = build_tree(s);
  r.log_likelihood = s.cumulative_reward();
  r.actions = std::move(actions);
  return r;
}

// -1, 0, 1 comparing merge histories by their (id_a, id_b) sequences.
int compare_histories(const std::vector<Merge>& a, const std::vector<Merge>& b) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t k = 0; k < n; ++k) {
    if (a[k].id_a != b[k].id_a) return a[k].id_a < b[k].id_a ? -1 : 1;
    if (a[k].id_b != b[k].id_b) return a[k].id_b < b[k].id_b ? -1 : 1;
  }
  if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
  return 0;
}

// Cluster label of every leaf: the smallest leaf index in its cluster.
std::vector<int> partition_labels(const ClusterState& s) {
  std::vector<int> labels(s.observation().leaves.size());
  for (const Particle& p : s.particles()) {
    for (int leaf : p.leaves) labels[leaf] = p.leaves.front();
  }
  return labels;
}

}  // namespace

std::unique_ptr<PriorPolicy> fixed_policy(FixedPolicyKind kind) {
  if (kind == FixedPolicyKind::kUniform) return std::make_unique<UniformPolicy>();
  return std::make_unique<LikelihoodPolicy>();
}

std::size_t argmax_index(const std::vector<double>& values) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] > values[best]) best = k;
  }
  return best;
}

ClusteringResult cluster_random(std::shared_ptr<const Observation> obs, Rng& rng) {
  ClusterState s = ClusterState::reset(std::move(obs));
  std::vector<Action> actions;
  while (!s.terminal()) {
    const std::vector<Action> legal = legal_actions(s);
    const Action a = legal[rng.below(legal.size())];
    actions.push_back(a);
    s = step(s, a).next;
  }
  return finish(s, std::move(actions));
}

ClusteringResult cluster_greedy(std::shared_ptr<const Observation> obs) {
  ClusterState s = ClusterState::reset(std::move(obs));
  std::vector<Action> actions;
  while (!s.terminal()) {
    Action best{};
    double best_ll = -std::numeric_limits<double>::infinity();
    for (const Action& a : legal_actions(s)) {
      const double ll = merge_log_likelihood(s, a);
      if (ll > best_ll) {
        best_ll = ll;
        best = a;
      }
    }
    actions.push_back(best);
    s = apply_scored_merge(s, best, best_ll).next;
  }
  return finish(s, std::move(actions));
}

std::vector<BeamPath> beam_search(const ClusterState& start, int width) {
  if (width < 1) throw std::invalid_argument("beam width must be at least 1");
  std::vector<BeamPath> beam{{start, {}}};

  struct Candidate {
    std::size_t member;
    Action action;
    double reward;
    double score;
  };

  while (!beam.front().state.terminal()) {
    std::vector<Candidate> candidates;
    for (std::size_t m = 0; m < beam.size(); ++m) {
      const ClusterState& s = beam[m].state;
      for (const Action& a : legal_actions(s)) {
        const double r = merge_log_likelihood(s, a);
        candidates.push_back({m, a, r, s.cumulative_reward() + r});
      }
    }
    auto better = [&](const Candidate& x, const Candidate& y) {
      if (x.score != y.score) return x.score > y.score;
      if (x.member != y.member) {
        const int c = compare_histories(beam[x.member].state.history(),
                                        beam[y.member].state.history());
        if (c != 0) return c < 0;
      }
      const auto& px = beam[x.member].state.particles();
      const auto& py = beam[y.member].state.particles();
      const std::pair<int, int> ix{px[x.action.i].id, px[x.action.j].id};
      const std::pair<int, int> iy{py[y.action.i].id, py[y.action.j].id};
      return ix < iy;
    };
    std::sort(candidates.begin(), candidates.end(), better);

    std::vector<std::vector<int>> member_labels;
    member_labels.reserve(beam.size());
    for (const BeamPath& p : beam) member_labels.push_back(partition_labels(p.state));

    std::set<std::vector<int>> seen;
    std::vector<BeamPath> next;
    for (const Candidate& c : candidates) {
      if (static_cast<int>(next.size()) == width) break;
      const auto& parts = beam[c.member].state.particles();
      const int label = std::min(parts[c.action.i].leaves.front(), parts[c.action.j].leaves.front());
      std::vector<int> key = member_labels[c.member];
      for (int leaf : parts[c.action.i].leaves) key[leaf] = label;
      for (int leaf : parts[c.action.j].leaves) key[leaf] = label;
      if (!seen.insert(std::move(key)).second) continue;
      BeamPath path{apply_scored_merge(beam[c.member].state, c.action, c.reward).next,
                    beam[c.member].actions};
      path.actions.push_back(c.action);
      next.push_back(std::move(path));
    }
    beam = std::move(next);
  }
  return beam;
}

ClusteringResult cluster_beam(std::shared_ptr<const Observation> obs, int width) {
  std::vector<BeamPath> beam = beam_search(ClusterState::reset(std::move(obs)), width);
  return finish(beam.front().state, std::move(beam.front().actions));
}

}  // namespace jetclust
