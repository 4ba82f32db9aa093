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

#include "jetclust/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "jetclust/cost.hpp"
#include "jetclust/json_io.hpp"
#include "jetclust/planners.hpp"
#include "jetclust/trellis.hpp"

namespace jetclust {

using nlohmann::json;

namespace {

json momentum_json(const FourMomentum& p) { return json::array({p.e, p.px, p.py, p.pz}); }

FourMomentum momentum_from(const json& j) {
  if (!j.is_array() || j.size() != 4) throw std::runtime_error("four-momentum must have 4 entries");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

json config_to_json(const ShowerConfig& config) {
  return {{"lambda", config.lambda},
          {"t_cut", config.t_cut},
          {"root", momentum_json(config.root)},
          {"rng_seed", config.rng_seed}};
}

ShowerConfig config_from_json(const json& j) {
  ShowerConfig c;
  c.lambda = j.at("lambda").get<double>();
  c.t_cut = j.at("t_cut").get<double>();
  c.root = momentum_from(j.at("root"));
  c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  return c;
}

std::string config_hash(const ShowerConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(dump_json(config_to_json(config)))));
  return buf;
}

std::vector<Event> generate_events(const ShowerConfig& config, int n_events) {
  config.validate();
  if (n_events < 0) throw std::invalid_argument("n_events must be non-negative");
  const Rng base(config.rng_seed);
  const std::string hash = config_hash(config);
  std::vector<Event> events;
  events.reserve(n_events);
  for (int k = 0; k < n_events; ++k) {
    Rng rng = base.split(static_cast<std::uint64_t>(k));
    Event ev;
    ev.id = k;
    ev.truth = sample_shower(config, rng);
    auto obs = std::make_shared<Observation>();
    obs->config = config;
    for (int node : ev.truth.leaves) obs->leaves.push_back(ev.truth.nodes[node].p);
    ev.obs = std::move(obs);
    ev.truth_ll = tree_log_likelihood(ev.truth, config);
    ev.config_hash = hash;
    events.push_back(std::move(ev));
  }
  return events;
}

json event_to_json(const Event& event) {
  json leaves = json::array();
  for (const FourMomentum& p : event.obs->leaves) leaves.push_back(momentum_json(p));
  json nodes = json::array();
  for (const TreeNode& n : event.truth.nodes) {
    nodes.push_back({{"p", momentum_json(n.p)},
                     {"t", n.t},
                     {"parent", n.parent},
                     {"children", n.is_leaf() ? json(nullptr) : json::array({n.left, n.right})}});
  }
  return {{"schema_version", kEventSchemaVersion},
          {"id", event.id},
          {"config_hash", event.config_hash},
          {"config", config_to_json(event.obs->config)},
          {"leaves", std::move(leaves)},
          {"truth", {{"nodes", std::move(nodes)}, {"root", event.truth.root}, {"leaves", event.truth.leaves}}},
          {"truth_ll", event.truth_ll}};
}

Event event_from_json(const json& j) {
  if (j.at("schema_version").get<int>() != kEventSchemaVersion) {
    throw std::runtime_error("unsupported event schema version");
  }
  Event ev;
  ev.id = j.at("id").get<std::int64_t>();
  ev.config_hash = j.at("config_hash").get<std::string>();
  auto obs = std::make_shared<Observation>();
  obs->config = config_from_json(j.at("config"));
  for (const json& p : j.at("leaves")) obs->leaves.push_back(momentum_from(p));
  const json& truth = j.at("truth");
  for (const json& n : truth.at("nodes")) {
    TreeNode node;
    node.p = momentum_from(n.at("p"));
    node.t = n.at("t").get<double>();
    node.parent = n.at("parent").get<int>();
    if (!n.at("children").is_null()) {
      node.left = n.at("children").at(0).get<int>();
      node.right = n.at("children").at(1).get<int>();
    }
    ev.truth.nodes.push_back(node);
  }
  ev.truth.root = truth.at("root").get<int>();
  ev.truth.leaves = truth.at("leaves").get<std::vector<int>>();
  ev.truth_ll = j.at("truth_ll").get<double>();
  check_tree(ev.truth);
  if (ev.truth.leaves.size() != obs->leaves.size()) {
    throw std::runtime_error("truth tree and leaf list disagree");
  }
  const double recomputed = tree_log_likelihood(ev.truth, obs->config);
  if (std::abs(recomputed - ev.truth_ll) > 1e-9) {
    throw std::runtime_error("truth log-likelihood mismatch for event " + std::to_string(ev.id));
  }
  ev.obs = std::move(obs);
  return ev;
}

void write_events(const std::filesystem::path& path, const std::vector<Event>& events) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (const Event& ev : events) out << dump_json(event_to_json(ev)) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<Event> read_events(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<Event> events;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      events.push_back(event_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return events;
}

std::string PlannerSpec::label() const {
  std::ostringstream os;
  if (algo == "beam") {
    os << "beam(b=" << beam_width << ")";
  } else if (algo == "policy") {
    os << "policy(" << (weights ? "file" : train_mode) << ")";
  } else if (algo == "mcts") {
    os << "mcts(b=" << (mcts.use_beam_init ? mcts.beam_init_b : 0) << ",n_mcts=" << mcts.n_mcts
       << ",c=" << mcts.c << ",prior=" << prior;
    if (prior == "nn") os << ":" << (weights ? "file" : train_mode);
    if (mcts.final_rule == FinalRule::kPuctVisits) os << ",final=visits";
    if (mcts.rollout_rule == RolloutRule::kPolicySample) os << ",rollout=sample";
    if (!train.features.include_log_ps) os << ",no_ps_feature";
    os << ")";
  } else {
    os << algo;
  }
  return os.str();
}

json PlannerSpec::params() const {
  json p = {{"algo", algo}};
  if (algo == "beam") p["b"] = beam_width;
  if (algo == "mle") p["max_n"] = mle_max_leaves;
  if (algo == "mcts") {
    p["b"] = mcts.beam_init_b;
    p["n_mcts"] = mcts.n_mcts;
    p["c"] = mcts.c;
    p["beam_init"] = mcts.use_beam_init;
    p["final_rule"] = mcts.final_rule == FinalRule::kMaxReturn ? "max-return" : "puct-visits";
    p["rollout_rule"] = mcts.rollout_rule == RolloutRule::kPuct ? "puct" : "policy-sample";
    p["prior"] = prior;
  }
  if (algo == "policy" || (algo == "mcts" && prior == "nn")) {
    if (weights) {
      p["weights"] = weights->string();
    } else {
      p["train_mode"] = train_mode;
      p["train_steps"] = train.steps;
      p["lr"] = train.lr;
      p["batch"] = train.batch;
      p["ps_feature"] = train.features.include_log_ps;
      if (train_mode == "bc-mcts") p["pretrain_steps"] = pretrain_steps;
    }
  }
  return p;
}

void PlannerSpec::validate() const {
  static const std::set<std::string> algos{"random", "greedy", "beam", "mle", "policy", "mcts"};
  static const std::set<std::string> priors{"nn", "random", "ps"};
  static const std::set<std::string> modes{"bc", "mle-bc", "mcts", "bc-mcts"};
  if (!algos.count(algo)) throw std::invalid_argument("unknown planner '" + algo + "'");
  if (!priors.count(prior)) throw std::invalid_argument("unknown prior '" + prior + "'");
  if (!modes.count(train_mode)) throw std::invalid_argument("unknown train mode '" + train_mode + "'");
  if (beam_width < 1) throw std::invalid_argument("beam width must be at least 1");
  if (algo == "mcts") mcts.validate();
}

PolicyWeights policy_for_seed(const PlannerSpec& spec, std::uint64_t seed,
                              const std::vector<Event>* train_events) {
  if (spec.weights) return load_weights(*spec.weights);
  if (train_events == nullptr || train_events->empty()) {
    throw std::invalid_argument("planner '" + spec.label() +
                                "' needs policy weights or training events");
  }
  Rng rng(seed, 0x7261696eull);
  if (spec.train_mode == "bc") return train_bc(*train_events, Demonstrator::kTruth, spec.train, rng).weights;
  if (spec.train_mode == "mle-bc") {
    return train_bc(*train_events, Demonstrator::kMleSmall, spec.train, rng).weights;
  }
  if (spec.train_mode == "mcts") return train_mcts_policy(*train_events, spec.mcts, spec.train, rng).weights;
  TrainOptions pre = spec.train;
  pre.steps = spec.pretrain_steps;
  PolicyWeights init = train_bc(*train_events, Demonstrator::kTruth, pre, rng).weights;
  return train_mcts_policy(*train_events, spec.mcts, spec.train, rng, std::move(init)).weights;
}

void summarize(RunResult& result) {
  std::map<std::uint64_t, std::pair<double, double>> sums;
  std::map<std::uint64_t, int> counts;
  double cost_total = 0.0;
  for (const EventOutcome& o : result.per_event) {
    sums[o.seed].first += o.ll;
    sums[o.seed].second += static_cast<double>(o.cost);
    ++counts[o.seed];
    cost_total += static_cast<double>(o.cost);
  }
  // Keep the order seeds were run in.
  std::vector<std::uint64_t> order;
  for (const EventOutcome& o : result.per_event) {
    if (order.empty() || order.back() != o.seed) order.push_back(o.seed);
  }
  result.seeds.clear();
  for (std::uint64_t s : order) {
    const double n = counts[s];
    result.seeds.push_back({s, sums[s].first / n, sums[s].second / n});
  }
  const double k = static_cast<double>(result.seeds.size());
  double mean = 0.0;
  for (const SeedSummary& s : result.seeds) mean += s.mean_ll;
  mean = k > 0 ? mean / k : 0.0;
  double var = 0.0;
  for (const SeedSummary& s : result.seeds) var += (s.mean_ll - mean) * (s.mean_ll - mean);
  result.mean_ll = mean;
  result.sem_ll = k > 1 ? std::sqrt(var / (k - 1)) / std::sqrt(k) : 0.0;
  result.mean_cost = result.per_event.empty() ? 0.0 : cost_total / result.per_event.size();
}

namespace {

// Runs fn(k) for k in [0, n) on `workers` threads; rethrows the first error.
template <typename Fn>
void parallel_for(int n, int workers, Fn&& fn) {
  if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min(workers, std::max(n, 1));
  if (workers == 1) {
    for (int k = 0; k < n; ++k) fn(k);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int k = next++; k < n; k = next++) {
        try {
          fn(k);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

RunResult evaluate(const std::vector<Event>& events, const PlannerSpec& spec,
                   const EvaluateOptions& opts) {
  spec.validate();
  if (opts.n_eval < 1 || static_cast<std::size_t>(opts.n_eval) > events.size()) {
    throw std::invalid_argument("dataset has " + std::to_string(events.size()) +
                                " events, fewer than n_eval = " + std::to_string(opts.n_eval));
  }
  if (opts.seeds.empty()) throw std::invalid_argument("need at least one seed");

  RunResult result;
  result.planner = spec.algo;
  result.label = spec.label();
  result.params = spec.params();
  result.n_eval = opts.n_eval;

  const bool needs_weights = spec.algo == "policy" || (spec.algo == "mcts" && spec.prior == "nn");
  for (std::uint64_t seed : opts.seeds) {
    std::optional<PolicyWeights> weights;
    std::unique_ptr<PriorPolicy> prior;
    if (needs_weights) {
      weights = policy_for_seed(spec, seed, opts.train_events);
      prior = std::make_unique<NeuralPrior>(*weights);
    } else if (spec.algo == "mcts") {
      prior = fixed_policy(spec.prior == "ps" ? FixedPolicyKind::kLikelihood
                                              : FixedPolicyKind::kUniform);
    }

    std::vector<std::optional<EventOutcome>> outcomes(opts.n_eval);
    parallel_for(opts.n_eval, opts.workers, [&](int k) {
      const Event& ev = events[k];
      EventOutcome o;
      o.id = ev.id;
      o.seed = seed;
      o.n_leaves = ev.leaf_count();
      if (spec.algo == "mle" && o.n_leaves > spec.mle_max_leaves) return;
      Rng rng(seed, static_cast<std::uint64_t>(ev.id));
      const auto start = std::chrono::steady_clock::now();
      CostScope scope;
      if (spec.algo == "random") {
        o.ll = cluster_random(ev.obs, rng).log_likelihood;
      } else if (spec.algo == "greedy") {
        o.ll = cluster_greedy(ev.obs).log_likelihood;
      } else if (spec.algo == "beam") {
        o.ll = cluster_beam(ev.obs, spec.beam_width).log_likelihood;
      } else if (spec.algo == "mle") {
        o.ll = exact_mle(*ev.obs, spec.mle_max_leaves).log_likelihood;
      } else if (spec.algo == "policy") {
        o.ll = cluster_with_policy(ev.obs, *prior).log_likelihood;
      } else {
        o.ll = cluster_mcts(ev.obs, *prior, spec.mcts, rng).clustering.log_likelihood;
      }
      o.cost = scope.count();
      o.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                 .count();
      outcomes[k] = o;
    });
    for (int k = 0; k < opts.n_eval; ++k) {
      if (outcomes[k]) {
        result.per_event.push_back(*outcomes[k]);
      } else if (seed == opts.seeds.front()) {
        result.skipped.push_back(events[k].id);
        if (!opts.quiet) {
          std::cerr << "skipping event " << events[k].id << ": " << events[k].leaf_count()
                    << " leaves exceeds --max-n " << spec.mle_max_leaves << "\n";
        }
      }
    }
  }
  summarize(result);
  return result;
}

json result_to_json(const RunResult& r) {
  json per_event = json::array();
  for (const EventOutcome& o : r.per_event) {
    per_event.push_back({{"id", o.id}, {"seed", o.seed}, {"n", o.n_leaves}, {"ll", o.ll},
                         {"cost", o.cost}, {"ms", o.ms}});
  }
  json seeds = json::array();
  for (const SeedSummary& s : r.seeds) {
    seeds.push_back({{"seed", s.seed}, {"mean_ll", s.mean_ll}, {"mean_cost", s.mean_cost}});
  }
  return {{"schema_version", kResultSchemaVersion},
          {"planner", r.planner},
          {"label", r.label},
          {"params", r.params},
          {"n_eval", r.n_eval},
          {"per_event", std::move(per_event)},
          {"seeds", std::move(seeds)},
          {"skipped", r.skipped},
          {"mean_ll", r.mean_ll},
          {"sem_ll", r.sem_ll},
          {"mean_cost", r.mean_cost}};
}

RunResult result_from_json(const json& j) {
  if (j.at("schema_version").get<int>() != kResultSchemaVersion) {
    throw std::runtime_error("unsupported result schema version");
  }
  RunResult r;
  r.planner = j.at("planner").get<std::string>();
  r.label = j.at("label").get<std::string>();
  r.params = j.at("params");
  r.n_eval = j.at("n_eval").get<int>();
  for (const json& o : j.at("per_event")) {
    r.per_event.push_back({o.at("id").get<std::int64_t>(), o.at("seed").get<std::uint64_t>(),
                           o.at("n").get<int>(), o.at("ll").get<double>(),
                           o.at("cost").get<std::uint64_t>(), o.at("ms").get<double>()});
  }
  for (const json& s : j.at("seeds")) {
    r.seeds.push_back({s.at("seed").get<std::uint64_t>(), s.at("mean_ll").get<double>(),
                       s.at("mean_cost").get<double>()});
  }
  r.skipped = j.at("skipped").get<std::vector<std::int64_t>>();
  r.mean_ll = j.at("mean_ll").get<double>();
  r.sem_ll = j.at("sem_ll").get<double>();
  r.mean_cost = j.at("mean_cost").get<double>();
  return r;
}

void write_result(const std::filesystem::path& path, const RunResult& r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << dump_json(result_to_json(r)) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

RunResult read_result(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return result_from_json(json::parse(in));
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

Comparison compare(const std::vector<RunResult>& runs) {
  if (runs.size() < 2) throw std::invalid_argument("compare needs at least two runs");
  auto ids_of = [](const RunResult& r) {
    std::set<std::int64_t> ids;
    for (const EventOutcome& o : r.per_event) ids.insert(o.id);
    return ids;
  };
  const std::set<std::int64_t> reference = ids_of(runs.front());
  for (const RunResult& r : runs) {
    if (ids_of(r) != reference) {
      throw std::invalid_argument("runs '" + runs.front().label + "' and '" + r.label +
                                  "' cover different events");
    }
  }
  Comparison c;
  for (const RunResult& r : runs) c.ranked.push_back({r.label, r.mean_ll, r.sem_ll, r.mean_cost});
  std::stable_sort(c.ranked.begin(), c.ranked.end(),
                   [](const ComparisonRow& a, const ComparisonRow& b) { return a.mean_ll > b.mean_ll; });

  for (const RunResult& r : runs) {
    std::map<int, std::pair<double, int>> by_n;   // n -> (sum ll, outcomes)
    std::map<int, std::set<std::int64_t>> ids_n;  // n -> distinct events
    for (const EventOutcome& o : r.per_event) {
      by_n[o.n_leaves].first += o.ll;
      ++by_n[o.n_leaves].second;
      ids_n[o.n_leaves].insert(o.id);
    }
    for (const auto& [n, acc] : by_n) {
      c.bins.push_back({r.label, n, static_cast<int>(ids_n[n].size()), acc.first / acc.second});
    }
  }
  return c;
}

json comparison_to_json(const Comparison& c) {
  json ranked = json::array();
  json cost = json::array();
  for (const ComparisonRow& row : c.ranked) {
    ranked.push_back({{"label", row.label}, {"mean_ll", row.mean_ll}, {"sem_ll", row.sem_ll},
                      {"mean_cost", row.mean_cost}});
    cost.push_back({{"label", row.label}, {"mean_cost", row.mean_cost}, {"mean_ll", row.mean_ll}});
  }
  json bins = json::array();
  for (const LeafBin& b : c.bins) {
    bins.push_back({{"label", b.label}, {"n", b.n_leaves}, {"events", b.events}, {"mean_ll", b.mean_ll}});
  }
  return {{"ranked", std::move(ranked)}, {"cost_vs_ll", std::move(cost)}, {"ll_by_leaves", std::move(bins)}};
}

void write_comparison(const std::string& prefix, const Comparison& c) {
  auto open = [](const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    return out;
  };
  {
    std::ofstream out = open(prefix + "_table.csv");
    out << "rank,label,mean_ll,sem_ll,mean_cost\n";
    int rank = 1;
    for (const ComparisonRow& r : c.ranked) {
      out << rank++ << ",\"" << r.label << "\"," << format_double(r.mean_ll) << ','
          << format_double(r.sem_ll) << ',' << format_double(r.mean_cost) << '\n';
    }
  }
  {
    std::ofstream out = open(prefix + "_cost.csv");
    out << "label,mean_cost,mean_ll,sem_ll\n";
    for (const ComparisonRow& r : c.ranked) {
      out << '"' << r.label << "\"," << format_double(r.mean_cost) << ','
          << format_double(r.mean_ll) << ',' << format_double(r.sem_ll) << '\n';
    }
  }
  {
    std::ofstream out = open(prefix + "_bins.csv");
    out << "label,n_leaves,events,mean_ll\n";
    for (const LeafBin& b : c.bins) {
      out << '"' << b.label << "\"," << b.n_leaves << ',' << b.events << ','
          << format_double(b.mean_ll) << '\n';
    }
  }
  std::ofstream out = open(prefix + ".json");
  out << dump_json(comparison_to_json(c)) << '\n';
}

}  // namespace jetclust
