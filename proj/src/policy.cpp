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

#include "jetclust/policy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

#include "json.hpp"
#include "jetclust/trellis.hpp"

namespace jetclust {

namespace {

bool momentum_greater(const FourMomentum& a, const FourMomentum& b) {
  if (a.e != b.e) return a.e > b.e;
  if (a.px != b.px) return a.px > b.px;
  if (a.py != b.py) return a.py > b.py;
  return a.pz > b.pz;
}

double log_sum_exp(const std::vector<double>& v, const std::vector<int>* subset = nullptr) {
  double top = -std::numeric_limits<double>::infinity();
  auto each = [&](auto&& fn) {
    if (subset == nullptr) {
      for (double x : v) fn(x);
    } else {
      for (int k : *subset) fn(v[k]);
    }
  };
  each([&](double x) { top = std::max(top, x); });
  // Summed in sorted order so the result does not depend on pair order.
  std::vector<double> terms;
  terms.reserve(subset == nullptr ? v.size() : subset->size());
  each([&](double x) { terms.push_back(std::exp(x - top)); });
  std::sort(terms.begin(), terms.end());
  double sum = 0.0;
  for (double t : terms) sum += t;
  return top + std::log(sum);
}

void sgd_update(PolicyWeights& w, std::vector<double>& grad, double lr, double clip_norm) {
  double norm2 = 0.0;
  for (double g : grad) norm2 += g * g;
  const double norm = std::sqrt(norm2);
  const double scale = norm > clip_norm ? clip_norm / norm : 1.0;
  std::vector<double>& p = w.params();
  for (std::size_t k = 0; k < p.size(); ++k) p[k] -= lr * scale * grad[k];
}

// Runs minibatch descent over `buffer` while it holds at least one full batch.
void drain_batches(std::vector<Demonstration>& buffer, const TrainOptions& opts,
                   TrainResult& result, bool flush) {
  std::size_t start = 0;
  while (buffer.size() - start >= static_cast<std::size_t>(opts.batch) ||
         (flush && start < buffer.size())) {
    const std::size_t end = std::min(buffer.size(), start + static_cast<std::size_t>(opts.batch));
    std::vector<double> grad(result.weights.params().size(), 0.0);
    double loss = 0.0;
    for (std::size_t k = start; k < end; ++k) {
      LossAndGrad lg = policy_loss_and_grad(result.weights, buffer[k]);
      loss += lg.loss;
      for (std::size_t p = 0; p < grad.size(); ++p) grad[p] += lg.grad[p];
    }
    const double inv = 1.0 / static_cast<double>(end - start);
    for (double& g : grad) g *= inv;
    sgd_update(result.weights, grad, opts.lr, opts.clip_norm);
    result.loss_curve.push_back(loss * inv);
    ++result.updates;
    start = end;
  }
  buffer.erase(buffer.begin(), buffer.begin() + static_cast<std::ptrdiff_t>(start));
}

void validate_options(const TrainOptions& opts) {
  if (opts.steps < 0 || opts.batch < 1 || !(opts.lr > 0.0) || !(opts.clip_norm > 0.0) ||
      opts.hidden < 1) {
    throw std::invalid_argument("invalid training options");
  }
}

}  // namespace

std::vector<PairFeatures> pair_features(const ClusterState& s, const FeatureOptions& opts) {
  const Observation& obs = s.observation();
  std::vector<double> energies;
  energies.reserve(obs.leaves.size());
  for (const FourMomentum& p : obs.leaves) energies.push_back(p.e);
  std::sort(energies.begin(), energies.end());
  double energy = 0.0;
  for (double e : energies) energy += e;
  const double inv_e = 1.0 / energy;
  const double inv_e2 = inv_e * inv_e;

  const auto& parts = s.particles();
  std::vector<double> t(parts.size());
  for (std::size_t k = 0; k < parts.size(); ++k) t[k] = invariant_mass_sq(parts[k].p);

  std::vector<PairFeatures> out;
  out.reserve(parts.size() * (parts.size() - 1) / 2);
  for (const Action& a : legal_actions(s)) {
    int first = a.i;
    int second = a.j;
    if (momentum_greater(parts[second].p, parts[first].p)) std::swap(first, second);
    const FourMomentum& p1 = parts[first].p;
    const FourMomentum& p2 = parts[second].p;
    PairFeatures f{};
    f[0] = p1.e * inv_e;
    f[1] = p1.px * inv_e;
    f[2] = p1.py * inv_e;
    f[3] = p1.pz * inv_e;
    f[4] = p2.e * inv_e;
    f[5] = p2.px * inv_e;
    f[6] = p2.py * inv_e;
    f[7] = p2.pz * inv_e;
    f[8] = t[first] * inv_e2;
    f[9] = t[second] * inv_e2;
    f[10] = invariant_mass_sq(p1 + p2) * inv_e2;
    f[kLogPsFeature] = opts.include_log_ps ? merge_log_likelihood(s, a) : 0.0;
    f[12] = 0.1 * static_cast<double>(s.n());
    out.push_back(f);
  }
  return out;
}

PolicyWeights::PolicyWeights(int hidden1, int hidden2, FeatureOptions features)
    : h1_(hidden1), h2_(hidden2), features_(features) {
  if (hidden1 < 1 || hidden2 < 1) throw std::invalid_argument("hidden widths must be positive");
  params_.assign(b3() + 1, 0.0);
}

PolicyWeights PolicyWeights::random(Rng& rng, int hidden1, int hidden2, FeatureOptions features) {
  PolicyWeights w(hidden1, hidden2, features);
  auto fill = [&](std::size_t offset, int fan_out, int fan_in) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (std::size_t k = 0; k < static_cast<std::size_t>(fan_out) * fan_in; ++k) {
      w.params_[offset + k] = limit * (2.0 * rng.uniform() - 1.0);
    }
  };
  fill(w.w1(), hidden1, kFeatureCount);
  fill(w.w2(), hidden2, hidden1);
  fill(w.w3(), 1, hidden2);
  return w;
}

bool operator==(const PolicyWeights& a, const PolicyWeights& b) {
  return a.h1_ == b.h1_ && a.h2_ == b.h2_ &&
         a.features_.include_log_ps == b.features_.include_log_ps && a.params_ == b.params_;
}

std::vector<double> PolicyWeights::logits(const std::vector<PairFeatures>& pairs) const {
  std::vector<double> out(pairs.size());
  std::vector<double> a1(h1_);
  const double* p = params_.data();
  for (std::size_t m = 0; m < pairs.size(); ++m) {
    const PairFeatures& x = pairs[m];
    for (int r = 0; r < h1_; ++r) {
      const double* row = p + w1() + static_cast<std::size_t>(r) * kFeatureCount;
      double z = p[b1() + r];
      for (int c = 0; c < kFeatureCount; ++c) z += row[c] * x[c];
      a1[r] = std::tanh(z);
    }
    double logit = p[b3()];
    for (int r = 0; r < h2_; ++r) {
      const double* row = p + w2() + static_cast<std::size_t>(r) * h1_;
      double z = p[b2() + r];
      for (int c = 0; c < h1_; ++c) z += row[c] * a1[c];
      logit += p[w3() + r] * std::tanh(z);
    }
    out[m] = logit;
  }
  return out;
}

std::vector<double> softmax(const std::vector<double>& logits) {
  const double lse = log_sum_exp(logits);
  std::vector<double> out(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) out[k] = std::exp(logits[k] - lse);
  return out;
}

std::vector<double> policy_forward(const PolicyWeights& w, const ClusterState& s) {
  if (s.terminal()) throw std::invalid_argument("policy_forward: terminal state");
  return softmax(w.logits(pair_features(s, w.features())));
}

LossAndGrad policy_loss_and_grad(const PolicyWeights& w, const Demonstration& demo) {
  if (demo.targets.empty() || demo.pairs.empty()) {
    throw std::invalid_argument("demonstration needs pairs and at least one target");
  }
  const int h1 = w.hidden1();
  const int h2 = w.hidden2();
  const std::size_t m = demo.pairs.size();
  const double* p = w.params().data();

  // Forward pass keeping activations.
  std::vector<double> a1(m * h1), a2(m * h2), logits(m);
  for (std::size_t k = 0; k < m; ++k) {
    const PairFeatures& x = demo.pairs[k];
    double* h = &a1[k * h1];
    for (int r = 0; r < h1; ++r) {
      const double* row = p + w.w1() + static_cast<std::size_t>(r) * kFeatureCount;
      double z = p[w.b1() + r];
      for (int c = 0; c < kFeatureCount; ++c) z += row[c] * x[c];
      h[r] = std::tanh(z);
    }
    double* g = &a2[k * h2];
    double logit = p[w.b3()];
    for (int r = 0; r < h2; ++r) {
      const double* row = p + w.w2() + static_cast<std::size_t>(r) * h1;
      double z = p[w.b2() + r];
      for (int c = 0; c < h1; ++c) z += row[c] * h[c];
      g[r] = std::tanh(z);
      logit += p[w.w3() + r] * g[r];
    }
    logits[k] = logit;
  }

  const double lse_all = log_sum_exp(logits);
  const double lse_target = log_sum_exp(logits, &demo.targets);
  LossAndGrad out;
  out.loss = lse_all - lse_target;

  // dL/dlogit_k = pi_k - [k in targets] * pi_k / pi(targets)
  std::vector<double> dlogit(m);
  for (std::size_t k = 0; k < m; ++k) dlogit[k] = std::exp(logits[k] - lse_all);
  for (int k : demo.targets) dlogit[k] -= std::exp(logits[k] - lse_target);

  out.grad.assign(w.params().size(), 0.0);
  double* g = out.grad.data();
  std::vector<double> dz2(h2), dz1(h1);
  for (std::size_t k = 0; k < m; ++k) {
    const double dl = dlogit[k];
    if (dl == 0.0) continue;
    const double* x = demo.pairs[k].data();
    const double* h = &a1[k * h1];
    const double* hh = &a2[k * h2];
    g[w.b3()] += dl;
    for (int r = 0; r < h2; ++r) {
      g[w.w3() + r] += dl * hh[r];
      dz2[r] = dl * p[w.w3() + r] * (1.0 - hh[r] * hh[r]);
    }
    std::fill(dz1.begin(), dz1.end(), 0.0);
    for (int r = 0; r < h2; ++r) {
      const double d = dz2[r];
      const double* row = p + w.w2() + static_cast<std::size_t>(r) * h1;
      double* grow = g + w.w2() + static_cast<std::size_t>(r) * h1;
      g[w.b2() + r] += d;
      for (int c = 0; c < h1; ++c) {
        grow[c] += d * h[c];
        dz1[c] += d * row[c];
      }
    }
    for (int r = 0; r < h1; ++r) {
      const double d = dz1[r] * (1.0 - h[r] * h[r]);
      double* grow = g + w.w1() + static_cast<std::size_t>(r) * kFeatureCount;
      g[w.b1() + r] += d;
      for (int c = 0; c < kFeatureCount; ++c) grow[c] += d * x[c];
    }
  }
  return out;
}

std::vector<Action> truth_actions(const ClusterState& s, const Tree& truth) {
  // Observation-index leaf set of every truth node.
  const int n_nodes = static_cast<int>(truth.nodes.size());
  std::vector<int> obs_index(n_nodes, -1);
  for (std::size_t k = 0; k < truth.leaves.size(); ++k) obs_index[truth.leaves[k]] = static_cast<int>(k);
  std::vector<std::vector<int>> sets(n_nodes);
  std::map<std::vector<int>, int> node_of;
  // Children are always visited before parents in this post-order walk.
  std::vector<std::pair<int, bool>> stack{{truth.root, false}};
  while (!stack.empty()) {
    auto [v, expanded] = stack.back();
    stack.pop_back();
    const TreeNode& node = truth.nodes[v];
    if (node.is_leaf()) {
      sets[v] = {obs_index[v]};
    } else if (!expanded) {
      stack.push_back({v, true});
      stack.push_back({node.left, false});
      stack.push_back({node.right, false});
      continue;
    } else {
      std::merge(sets[node.left].begin(), sets[node.left].end(), sets[node.right].begin(),
                 sets[node.right].end(), std::back_inserter(sets[v]));
    }
    node_of.emplace(sets[v], v);
  }

  const auto& parts = s.particles();
  std::vector<int> node_for(parts.size(), -1);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    auto it = node_of.find(parts[k].leaves);
    if (it != node_of.end()) node_for[k] = it->second;
  }
  std::vector<Action> out;
  for (int i = 0; i < s.n(); ++i) {
    if (node_for[i] < 0) continue;
    const int parent = truth.nodes[node_for[i]].parent;
    if (parent < 0) continue;
    for (int j = i + 1; j < s.n(); ++j) {
      if (node_for[j] >= 0 && truth.nodes[node_for[j]].parent == parent) out.push_back({i, j});
    }
  }
  return out;
}

ClusteringResult cluster_with_policy(std::shared_ptr<const Observation> obs,
                                     const PriorPolicy& policy) {
  ClusterState s = ClusterState::reset(std::move(obs));
  ClusteringResult r;
  while (!s.terminal()) {
    const std::vector<Action> legal = legal_actions(s);
    const Action a = legal[argmax_index(policy.priors(s))];
    r.actions.push_back(a);
    s = step(s, a).next;
  }
  r.tree = build_tree(s);
  r.log_likelihood = s.cumulative_reward();
  return r;
}

std::vector<Demonstration> demonstrations_for(const Event& event, const Tree& demonstrator_tree,
                                              const FeatureOptions& features, Rng& rng) {
  std::vector<Demonstration> demos;
  ClusterState s = ClusterState::reset(event.obs);
  while (!s.terminal()) {
    const std::vector<Action> targets = truth_actions(s, demonstrator_tree);
    if (targets.empty()) break;
    Demonstration d;
    d.pairs = pair_features(s, features);
    for (const Action& a : targets) d.targets.push_back(static_cast<int>(action_index(a, s.n())));
    demos.push_back(std::move(d));
    const Action a = targets[rng.below(targets.size())];
    s = step(s, a).next;
  }
  return demos;
}

TrainResult train_bc(const std::vector<Event>& events, Demonstrator demonstrator,
                     const TrainOptions& opts, Rng& rng) {
  if (events.empty()) throw std::invalid_argument("train_bc: empty dataset");
  validate_options(opts);
  Rng init_rng = rng.split(1);
  Rng data_rng = rng.split(2);
  TrainResult result{PolicyWeights::random(init_rng, opts.hidden, opts.hidden, opts.features), {}};

  std::vector<std::optional<Tree>> mle_trees(events.size());
  std::vector<std::size_t> order(events.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::size_t cursor = order.size();
  std::vector<Demonstration> buffer;

  while (result.decisions < opts.steps) {
    if (cursor == order.size()) {
      data_rng.shuffle(std::span<std::size_t>(order));
      cursor = 0;
    }
    const std::size_t e = order[cursor++];
    const Event& ev = events[e];
    const Tree* tree = &ev.truth;
    if (demonstrator == Demonstrator::kMleSmall && ev.leaf_count() <= opts.mle_max_leaves) {
      if (!mle_trees[e]) mle_trees[e] = exact_mle(*ev.obs, opts.mle_max_leaves).tree;
      tree = &*mle_trees[e];
    }
    for (Demonstration& d : demonstrations_for(ev, *tree, opts.features, data_rng)) {
      if (result.decisions >= opts.steps) break;
      ++result.decisions;
      buffer.push_back(std::move(d));
    }
    drain_batches(buffer, opts, result, false);
  }
  drain_batches(buffer, opts, result, true);
  return result;
}

TrainResult train_mcts_policy(const std::vector<Event>& events, const MctsConfig& cfg,
                              const TrainOptions& opts, Rng& rng,
                              std::optional<PolicyWeights> init) {
  if (events.empty()) throw std::invalid_argument("train_mcts_policy: empty dataset");
  validate_options(opts);
  cfg.validate();
  Rng init_rng = rng.split(1);
  Rng data_rng = rng.split(2);
  TrainResult result{init ? std::move(*init)
                          : PolicyWeights::random(init_rng, opts.hidden, opts.hidden, opts.features), {}};
  std::vector<Demonstration> buffer;
  while (result.decisions < opts.steps) {
    const Event& ev = events[data_rng.below(events.size())];
    const NeuralPrior prior(result.weights);
    const MctsResult run = cluster_mcts(ev.obs, prior, cfg, data_rng);
    for (const DecisionRecord& rec : run.decisions) {
      if (result.decisions >= opts.steps) break;
      ++result.decisions;
      if (rec.state.n() < 3) continue;  // a single legal pair carries no signal
      Demonstration d;
      d.pairs = pair_features(rec.state, result.weights.features());
      d.targets = {static_cast<int>(action_index(rec.chosen, rec.state.n()))};
      buffer.push_back(std::move(d));
    }
    drain_batches(buffer, opts, result, false);
  }
  drain_batches(buffer, opts, result, true);
  return result;
}

double demonstration_accuracy(const PolicyWeights& w, const std::vector<Demonstration>& demos) {
  if (demos.empty()) return 0.0;
  std::size_t hits = 0;
  for (const Demonstration& d : demos) {
    const int best = static_cast<int>(argmax_index(w.logits(d.pairs)));
    if (std::find(d.targets.begin(), d.targets.end(), best) != d.targets.end()) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(demos.size());
}

namespace {
constexpr char kMagic[4] = {'J', 'C', 'P', 'W'};
constexpr std::uint32_t kWeightsFormatVersion = 1;
}  // namespace

void save_weights(const std::filesystem::path& path, const PolicyWeights& w,
                  const std::string& config_hash) {
  static_assert(std::endian::native == std::endian::little, "weights are stored little-endian");
  nlohmann::json header = {
      {"format", "jetclust-policy"},
      {"feature_schema", kFeatureSchemaVersion},
      {"input_dim", kFeatureCount},
      {"hidden", {w.hidden1(), w.hidden2()}},
      {"use_ps_feature", w.features().include_log_ps},
      {"param_count", w.params().size()},
      {"config_hash", config_hash},
  };
  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const std::uint32_t version = kWeightsFormatVersion;
  const std::uint64_t length = text.size();
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  out.write(reinterpret_cast<const char*>(&length), sizeof length);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(reinterpret_cast<const char*>(w.params().data()),
            static_cast<std::streamsize>(w.params().size() * sizeof(double)));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

PolicyWeights load_weights(const std::filesystem::path& path, std::string* config_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[4];
  std::uint32_t version = 0;
  std::uint64_t length = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  in.read(reinterpret_cast<char*>(&length), sizeof length);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error(path.string() + ": not a policy weights file");
  }
  if (version != kWeightsFormatVersion) {
    throw std::runtime_error(path.string() + ": unsupported weights version " +
                             std::to_string(version));
  }
  if (length > (1u << 20)) throw std::runtime_error(path.string() + ": corrupt header");
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  const nlohmann::json header = nlohmann::json::parse(text);
  if (header.at("feature_schema").get<int>() != kFeatureSchemaVersion ||
      header.at("input_dim").get<int>() != kFeatureCount) {
    throw std::runtime_error(path.string() + ": feature schema mismatch");
  }
  FeatureOptions features;
  features.include_log_ps = header.at("use_ps_feature").get<bool>();
  PolicyWeights w(header.at("hidden").at(0).get<int>(), header.at("hidden").at(1).get<int>(),
                  features);
  if (header.at("param_count").get<std::size_t>() != w.params().size()) {
    throw std::runtime_error(path.string() + ": parameter count mismatch");
  }
  in.read(reinterpret_cast<char*>(w.params().data()),
          static_cast<std::streamsize>(w.params().size() * sizeof(double)));
  if (!in) throw std::runtime_error(path.string() + ": truncated weights");
  if (config_hash != nullptr) *config_hash = header.value("config_hash", "");
  return w;
}

}  // namespace jetclust
