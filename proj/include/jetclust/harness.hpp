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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "jetclust/event.hpp"
#include "jetclust/mcts.hpp"
#include "jetclust/policy.hpp"
#include "jetclust/shower.hpp"

namespace jetclust {

inline constexpr int kEventSchemaVersion = 1;
inline constexpr int kResultSchemaVersion = 1;

// Stable 16-hex-digit digest of a shower configuration.
std::string config_hash(const ShowerConfig& config);

nlohmann::json config_to_json(const ShowerConfig& config);
ShowerConfig config_from_json(const nlohmann::json& j);

// Event k is simulated from the stream Rng(config.rng_seed).split(k), so
// any prefix of a dataset is reproducible on its own.
std::vector<Event> generate_events(const ShowerConfig& config, int n_events);

nlohmann::json event_to_json(const Event& event);
// Throws std::runtime_error when the stored truth log-likelihood does not
// match a recomputation (tolerance 1e-9).
Event event_from_json(const nlohmann::json& j);

void write_events(const std::filesystem::path& path, const std::vector<Event>& events);
std::vector<Event> read_events(const std::filesystem::path& path);

// Which clustering agent to run and how.
struct PlannerSpec {
  // random | greedy | beam | mle | policy | mcts
  std::string algo = "greedy";
  int beam_width = 5;
  MctsConfig mcts;
  // Prior for mcts: nn | random | ps
  std::string prior = "nn";
  // Weights for algo=policy or prior=nn. Without a file the policy is
  // trained per seed on the training events using train_mode.
  std::optional<std::filesystem::path> weights;
  // bc | mle-bc | mcts | bc-mcts
  std::string train_mode = "bc";
  TrainOptions train;
  // BC pretraining steps for train_mode=bc-mcts.
  int pretrain_steps = 2000;
  // Size guard for algo=mle.
  int mle_max_leaves = 10;

  std::string label() const;
  nlohmann::json params() const;
  void validate() const;
};

struct EventOutcome {
  std::int64_t id = 0;
  std::uint64_t seed = 0;
  int n_leaves = 0;
  double ll = 0.0;
  std::uint64_t cost = 0;
  double ms = 0.0;
};

struct SeedSummary {
  std::uint64_t seed = 0;
  double mean_ll = 0.0;
  double mean_cost = 0.0;
};

struct RunResult {
  std::string planner;
  std::string label;
  nlohmann::json params;
  std::vector<EventOutcome> per_event;  // seed-major, event order within a seed
  std::vector<SeedSummary> seeds;
  double mean_ll = 0.0;
  double sem_ll = 0.0;
  double mean_cost = 0.0;
  int n_eval = 0;
  std::vector<std::int64_t> skipped;  // events the planner refused (mle size guard)
};

// Mean of the seed means and their standard error: sample standard
// deviation divided by sqrt(#seeds), 0 for a single seed.
void summarize(RunResult& result);

struct EvaluateOptions {
  int n_eval = 200;
  std::vector<std::uint64_t> seeds{0};
  const std::vector<Event>* train_events = nullptr;
  int workers = 0;  // 0: hardware concurrency
  bool quiet = true;
};

RunResult evaluate(const std::vector<Event>& events, const PlannerSpec& spec,
                   const EvaluateOptions& opts);

// Policy used by `spec` for one seed: loaded, or trained on opts.train_events.
PolicyWeights policy_for_seed(const PlannerSpec& spec, std::uint64_t seed,
                              const std::vector<Event>* train_events);

nlohmann::json result_to_json(const RunResult& r);
RunResult result_from_json(const nlohmann::json& j);
void write_result(const std::filesystem::path& path, const RunResult& r);
RunResult read_result(const std::filesystem::path& path);

struct ComparisonRow {
  std::string label;
  double mean_ll = 0.0;
  double sem_ll = 0.0;
  double mean_cost = 0.0;
};

struct LeafBin {
  std::string label;
  int n_leaves = 0;
  int events = 0;
  double mean_ll = 0.0;
};

struct Comparison {
  std::vector<ComparisonRow> ranked;  // best mean LL first
  std::vector<LeafBin> bins;          // per run, ascending leaf count
};

// Throws std::invalid_argument when the runs cover different events.
Comparison compare(const std::vector<RunResult>& runs);

nlohmann::json comparison_to_json(const Comparison& c);
// Writes <prefix>_table.csv, <prefix>_cost.csv, <prefix>_bins.csv and <prefix>.json.
void write_comparison(const std::string& prefix, const Comparison& c);

}  // namespace jetclust
