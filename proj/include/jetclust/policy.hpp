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

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "jetclust/env.hpp"
#include "jetclust/event.hpp"
#include "jetclust/mcts.hpp"
#include "jetclust/planners.hpp"
#include "jetclust/rng.hpp"

namespace jetclust {

inline constexpr int kFeatureCount = 13;
inline constexpr int kFeatureSchemaVersion = 1;

// Per-pair inputs, in order: E, px, py, pz of the more energetic particle
// and of the other one (divided by the event energy), t of each and of the
// pair (divided by the event energy squared), log p_s of the merge, and
// the current particle count / 10.
using PairFeatures = std::array<double, kFeatureCount>;

inline constexpr int kLogPsFeature = 11;

struct FeatureOptions {
  bool include_log_ps = true;
};

// Features of every legal pair in legal_actions order. With include_log_ps
// each pair costs one splitting evaluation; otherwise that slot is 0.
std::vector<PairFeatures> pair_features(const ClusterState& s, const FeatureOptions& opts = {});

// Shared per-pair scorer: features -> tanh(h1) -> tanh(h2) -> logit,
// normalized by a softmax across the legal pairs of a state.
class PolicyWeights {
 public:
  PolicyWeights() : PolicyWeights(64, 64, {}) {}
  PolicyWeights(int hidden1, int hidden2, FeatureOptions features);

  // Glorot-uniform weights, zero biases.
  static PolicyWeights random(Rng& rng, int hidden1 = 64, int hidden2 = 64,
                              FeatureOptions features = {});

  int hidden1() const { return h1_; }
  int hidden2() const { return h2_; }
  const FeatureOptions& features() const { return features_; }

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  std::vector<double> logits(const std::vector<PairFeatures>& pairs) const;

  friend bool operator==(const PolicyWeights&, const PolicyWeights&);

  // Offsets of each block inside params().
  std::size_t w1() const { return 0; }
  std::size_t b1() const { return w1() + static_cast<std::size_t>(h1_) * kFeatureCount; }
  std::size_t w2() const { return b1() + h1_; }
  std::size_t b2() const { return w2() + static_cast<std::size_t>(h2_) * h1_; }
  std::size_t w3() const { return b2() + h2_; }
  std::size_t b3() const { return w3() + h2_; }

 private:
  int h1_;
  int h2_;
  FeatureOptions features_;
  std::vector<double> params_;
};

bool operator==(const PolicyWeights& a, const PolicyWeights& b);

std::vector<double> softmax(const std::vector<double>& logits);

// pi(s, .) over legal_actions(s).
std::vector<double> policy_forward(const PolicyWeights& w, const ClusterState& s);

struct Demonstration {
  std::vector<PairFeatures> pairs;
  std::vector<int> targets;  // indices into pairs; nonempty
};

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

// loss = -log sum_{a in targets} pi(a), with its exact gradient.
LossAndGrad policy_loss_and_grad(const PolicyWeights& w, const Demonstration& demo);

// Pairs whose leaf sets are siblings in `truth` (empty if none are).
std::vector<Action> truth_actions(const ClusterState& s, const Tree& truth);

class NeuralPrior final : public PriorPolicy {
 public:
  explicit NeuralPrior(const PolicyWeights& w) : w_(&w) {}
  std::vector<double> priors(const ClusterState& s) const override { return policy_forward(*w_, s); }

 private:
  const PolicyWeights* w_;
};

// Deterministic roll-out taking the most probable pair at every step.
ClusteringResult cluster_with_policy(std::shared_ptr<const Observation> obs,
                                     const PriorPolicy& policy);

enum class Demonstrator {
  kTruth,     // simulator truth trees
  kMleSmall,  // exact MLE trees when n <= mle_max_leaves, truth otherwise
};

struct TrainOptions {
  // Environment decisions consumed; gradient updates = steps / batch.
  int steps = 2000;
  int batch = 16;
  double lr = 0.01;
  double clip_norm = 10.0;
  int hidden = 64;
  FeatureOptions features;
  int mle_max_leaves = 10;
};

struct TrainResult {
  PolicyWeights weights;
  std::vector<double> loss_curve;  // mean minibatch loss per update
  std::int64_t decisions = 0;
  std::int64_t updates = 0;
};

// Demonstrations along the demonstrator's merge order; when several
// sibling pairs are available one is chosen uniformly at random.
std::vector<Demonstration> demonstrations_for(const Event& event, const Tree& demonstrator_tree,
                                              const FeatureOptions& features, Rng& rng);

TrainResult train_bc(const std::vector<Event>& events, Demonstrator demonstrator,
                     const TrainOptions& opts, Rng& rng);

TrainResult train_mcts_policy(const std::vector<Event>& events, const MctsConfig& cfg,
                              const TrainOptions& opts, Rng& rng,
                              std::optional<PolicyWeights> init = std::nullopt);

// Fraction of demonstrations whose most probable pair is a target.
double demonstration_accuracy(const PolicyWeights& w, const std::vector<Demonstration>& demos);

// Versioned binary file: magic, format version, JSON header, raw doubles.
void save_weights(const std::filesystem::path& path, const PolicyWeights& w,
                  const std::string& config_hash = "");
PolicyWeights load_weights(const std::filesystem::path& path, std::string* config_hash = nullptr);

}  // namespace jetclust
