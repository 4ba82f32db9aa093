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

// jetclust: simulate toy jets, cluster them, train policies and compare runs.
//
//   jetclust generate --n-events 200 --seed 7 --out events.jsonl
//   jetclust cluster  --algo beam --b 5 --in events.jsonl
//   jetclust mle      --in events.jsonl --max-n 8
//   jetclust train    --mode bc --in train.jsonl --steps 5000 --out bc.weights
//   jetclust evaluate --algo mcts --b 5 --n-mcts 20 --prior ps --seeds 2 --in eval.jsonl --out mcts.json
//   jetclust compare  greedy.json mcts.json --out cmp
//
// Every flag can also come from a JSON object passed with --config; keys
// are long flag names without the dashes. Flags on the command line win.
// Exit status: 0 success, 1 usage error, 2 runtime error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "jetclust/harness.hpp"
#include "jetclust/json_io.hpp"
#include "jetclust/policy.hpp"
#include "jetclust/trellis.hpp"

using namespace jetclust;

namespace {

struct CommonOptions {
  std::uint64_t seed = 0;
  std::string out;
  bool quiet = false;
  std::string config;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--seed", o.seed, "Random seed");
  cmd->add_option("--out", o.out, "Output path");
  cmd->add_flag("--quiet", o.quiet, "Suppress informational output");
  cmd->add_option("--config", o.config, "JSON file with default flag values");
}

struct PlannerOptions {
  PlannerSpec spec;
  std::string final_rule = "max-return";
  std::string rollout_rule = "puct";
  bool no_beam_init = false;
  bool no_ps_feature = false;
  std::string weights;
  std::string train_in;
};

void add_training(CLI::App* cmd, PlannerOptions& p) {
  cmd->add_option("--steps", p.spec.train.steps, "Training decisions");
  cmd->add_option("--pretrain-steps", p.spec.pretrain_steps, "BC pretraining decisions (bc-mcts)");
  cmd->add_option("--lr", p.spec.train.lr, "Learning rate");
  cmd->add_option("--batch", p.spec.train.batch, "Minibatch size");
  cmd->add_option("--hidden", p.spec.train.hidden, "Hidden layer width");
  cmd->add_flag("--no-ps-feature", p.no_ps_feature, "Drop log p_s from the policy inputs");
}

void add_mcts(CLI::App* cmd, PlannerOptions& p) {
  cmd->add_option("--b", p.spec.beam_width, "Beam width (beam) or beam initialization width (mcts)");
  cmd->add_option("--n-mcts", p.spec.mcts.n_mcts, "Roll-outs per decision");
  cmd->add_option("--c", p.spec.mcts.c, "PUCT exploration constant");
  cmd->add_option("--prior", p.spec.prior, "MCTS prior: nn | random | ps")
      ->check(CLI::IsMember({"nn", "random", "ps"}));
  cmd->add_option("--final", p.final_rule, "Final decision: max-return | puct-visits")
      ->check(CLI::IsMember({"max-return", "puct-visits"}));
  cmd->add_option("--rollout", p.rollout_rule, "Roll-out rule: puct | sample")
      ->check(CLI::IsMember({"puct", "sample"}));
  cmd->add_flag("--no-beam-init", p.no_beam_init, "Do not seed the search tree with beam search");
}

void add_planner(CLI::App* cmd, PlannerOptions& p) {
  cmd->add_option("--algo", p.spec.algo, "random | greedy | beam | mle | policy | mcts")
      ->check(CLI::IsMember({"random", "greedy", "beam", "mle", "policy", "mcts"}));
  add_mcts(cmd, p);
  cmd->add_option("--weights", p.weights, "Policy weights file");
  cmd->add_option("--train-in", p.train_in, "Training events (when no --weights is given)");
  cmd->add_option("--train-mode", p.spec.train_mode, "bc | mle-bc | mcts | bc-mcts")
      ->check(CLI::IsMember({"bc", "mle-bc", "mcts", "bc-mcts"}));
  cmd->add_option("--max-n", p.spec.mle_max_leaves, "Largest event for algo=mle");
  add_training(cmd, p);
}

void finalize(PlannerOptions& p, std::uint64_t seed) {
  p.spec.mcts.beam_init_b = p.spec.beam_width;
  p.spec.mcts.use_beam_init = !p.no_beam_init;
  p.spec.mcts.final_rule = p.final_rule == "puct-visits" ? FinalRule::kPuctVisits : FinalRule::kMaxReturn;
  p.spec.mcts.rollout_rule = p.rollout_rule == "sample" ? RolloutRule::kPolicySample : RolloutRule::kPuct;
  p.spec.mcts.rng_seed = seed;
  p.spec.train.features.include_log_ps = !p.no_ps_feature;
  if (!p.weights.empty()) p.spec.weights = p.weights;
}

// Splices values from --config into argv for every flag not already given.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  std::string config_path;
  std::set<std::string> given;
  for (std::size_t k = 1; k < args.size(); ++k) {
    const std::string& a = args[k];
    if (a.rfind("--", 0) != 0) continue;
    const std::string name = a.substr(2, a.find('=') == std::string::npos ? std::string::npos : a.find('=') - 2);
    given.insert(name);
    if (name == "config") {
      if (a.find('=') != std::string::npos) {
        config_path = a.substr(a.find('=') + 1);
      } else if (k + 1 < args.size()) {
        config_path = args[k + 1];
      }
    }
  }
  if (config_path.empty()) return args;
  std::ifstream in(config_path);
  if (!in) throw CLI::ValidationError("--config", "cannot open " + config_path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const std::exception& e) {
    throw CLI::ValidationError("--config", config_path + ": " + e.what());
  }
  if (!j.is_object()) throw CLI::ValidationError("--config", "expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (given.count(it.key())) continue;
    const std::string flag = "--" + it.key();
    const nlohmann::json& v = it.value();
    if (v.is_boolean()) {
      if (v.get<bool>()) args.push_back(flag);
    } else if (v.is_array()) {
      for (const auto& item : v) {
        args.push_back(flag);
        args.push_back(item.is_string() ? item.get<std::string>() : item.dump());
      }
    } else {
      args.push_back(flag);
      args.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    }
  }
  return args;
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty()) {
    std::cout << text << '\n';
    return;
  }
  std::ofstream f(out);
  if (!f) throw std::runtime_error("cannot open " + out + " for writing");
  f << text << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Jet clustering as a sequential decision problem"};
  app.require_subcommand(1);

  // generate
  CommonOptions gen_common;
  ShowerConfig shower;
  int n_events = 100;
  std::vector<double> root{shower.root.e, shower.root.px, shower.root.py, shower.root.pz};
  CLI::App* gen = app.add_subcommand("generate", "Simulate events into a JSONL file");
  add_common(gen, gen_common);
  gen->add_option("--n-events", n_events, "Number of events")->check(CLI::NonNegativeNumber);
  gen->add_option("--lambda", shower.lambda, "Decay-rate shape parameter");
  gen->add_option("--t-cut", shower.t_cut, "Leaf squared-mass cutoff");
  gen->add_option("--root", root, "Root four-momentum E px py pz")->expected(4);

  // cluster
  CommonOptions cl_common;
  PlannerOptions cl;
  std::string cl_in;
  int cl_n_eval = 0;
  CLI::App* clu = app.add_subcommand("cluster", "Cluster every event and report the mean log-likelihood");
  add_common(clu, cl_common);
  clu->add_option("--in", cl_in, "Event file")->required();
  clu->add_option("--n-eval", cl_n_eval, "Number of events (default: all)");
  add_planner(clu, cl);

  // mle
  CommonOptions mle_common;
  std::string mle_in;
  int max_n = 10;
  CLI::App* mle = app.add_subcommand("mle", "Exact maximum-likelihood trees for small events");
  add_common(mle, mle_common);
  mle->add_option("--in", mle_in, "Event file")->required();
  mle->add_option("--max-n", max_n, "Skip events with more leaves")->check(CLI::Range(2, 20));

  // train
  CommonOptions tr_common;
  PlannerOptions tr;
  std::string tr_in;
  std::string mode = "bc";
  CLI::App* trn = app.add_subcommand("train", "Train a policy network");
  add_common(trn, tr_common);
  trn->add_option("--in", tr_in, "Training events")->required();
  trn->add_option("--mode", mode, "bc | mle-bc | mcts | bc-mcts")
      ->check(CLI::IsMember({"bc", "mle-bc", "mcts", "bc-mcts"}));
  add_training(trn, tr);
  add_mcts(trn, tr);

  // evaluate
  CommonOptions ev_common;
  PlannerOptions ev;
  std::string ev_in;
  int ev_n_eval = 200;
  int n_seeds = 2;
  int workers = 0;
  CLI::App* evl = app.add_subcommand("evaluate", "Multi-seed evaluation producing a RunResult JSON");
  add_common(evl, ev_common);
  evl->add_option("--in", ev_in, "Event file")->required();
  evl->add_option("--n-eval", ev_n_eval, "Events to evaluate");
  evl->add_option("--seeds", n_seeds, "Number of seeds (seed, seed+1, ...)")->check(CLI::PositiveNumber);
  evl->add_option("--workers", workers, "Worker threads (0: all cores)");
  add_planner(evl, ev);

  // compare
  CommonOptions cmp_common;
  std::vector<std::string> result_files;
  CLI::App* cmp = app.add_subcommand("compare", "Rank runs and export plot data");
  add_common(cmp, cmp_common);
  cmp->add_option("results", result_files, "RunResult JSON files")->required()->expected(2, -1);

  std::vector<std::string> args;
  try {
    args = expand_config(argc, argv);
    std::vector<const char*> cargs;
    for (const std::string& a : args) cargs.push_back(a.c_str());
    app.parse(static_cast<int>(cargs.size()), const_cast<char**>(cargs.data()));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (gen->parsed()) {
      shower.rng_seed = gen_common.seed;
      shower.root = {root[0], root[1], root[2], root[3]};
      if (gen_common.out.empty()) {
        std::cerr << "generate: --out is required\n";
        return 1;
      }
      const std::vector<Event> events = generate_events(shower, n_events);
      write_events(gen_common.out, events);
      if (!gen_common.quiet) {
        double leaves = 0.0;
        for (const Event& e : events) leaves += e.leaf_count();
        std::cout << "wrote " << events.size() << " events to " << gen_common.out
                  << " (mean leaves " << (events.empty() ? 0.0 : leaves / events.size())
                  << ", config " << config_hash(shower) << ")\n";
      }
    } else if (clu->parsed() || evl->parsed()) {
      const bool is_cluster = clu->parsed();
      CommonOptions& common = is_cluster ? cl_common : ev_common;
      PlannerOptions& p = is_cluster ? cl : ev;
      finalize(p, common.seed);
      const std::vector<Event> events = read_events(is_cluster ? cl_in : ev_in);
      std::vector<Event> train;
      if (!p.train_in.empty()) train = read_events(p.train_in);
      EvaluateOptions opts;
      opts.n_eval = is_cluster ? (cl_n_eval > 0 ? cl_n_eval : static_cast<int>(events.size()))
                               : ev_n_eval;
      opts.seeds.clear();
      const int k = is_cluster ? 1 : n_seeds;
      for (int s = 0; s < k; ++s) opts.seeds.push_back(common.seed + static_cast<std::uint64_t>(s));
      opts.train_events = train.empty() ? nullptr : &train;
      opts.workers = is_cluster ? 0 : workers;
      opts.quiet = common.quiet;
      try {
        p.spec.validate();
      } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << '\n';
        return 1;
      }
      const RunResult r = evaluate(events, p.spec, opts);
      if (is_cluster) {
        if (!common.out.empty()) write_result(common.out, r);
        if (!common.quiet) {
          std::printf("%s: mean LL %.6f over %zu events (mean cost %.1f)\n", r.label.c_str(),
                      r.mean_ll, r.per_event.size(), r.mean_cost);
        }
      } else {
        emit(common.out, dump_json(result_to_json(r)));
        if (!common.quiet && !common.out.empty()) {
          std::printf("%s: mean LL %.6f +- %.6f (mean cost %.1f)\n", r.label.c_str(), r.mean_ll,
                      r.sem_ll, r.mean_cost);
        }
      }
    } else if (mle->parsed()) {
      PlannerSpec spec;
      spec.algo = "mle";
      spec.mle_max_leaves = max_n;
      const std::vector<Event> events = read_events(mle_in);
      nlohmann::json rows = nlohmann::json::array();
      for (const Event& e : events) {
        if (e.leaf_count() > max_n) {
          if (!mle_common.quiet) {
            std::cout << "event " << e.id << ": skipped (" << e.leaf_count() << " leaves > --max-n "
                      << max_n << ")\n";
          }
          continue;
        }
        const MleResult m = exact_mle(*e.obs, max_n);
        if (!mle_common.quiet) {
          std::printf("event %lld: %d leaves, MLE LL %.9f (truth %.9f)\n",
                      static_cast<long long>(e.id), e.leaf_count(), m.log_likelihood, e.truth_ll);
        }
        rows.push_back({{"id", e.id}, {"n", e.leaf_count()}, {"mle_ll", m.log_likelihood},
                        {"truth_ll", e.truth_ll}});
      }
      if (!mle_common.out.empty()) emit(mle_common.out, dump_json(rows));
    } else if (trn->parsed()) {
      finalize(tr, tr_common.seed);
      tr.spec.train_mode = mode;
      if (tr_common.out.empty()) {
        std::cerr << "train: --out is required\n";
        return 1;
      }
      const std::vector<Event> events = read_events(tr_in);
      const PolicyWeights w = policy_for_seed(tr.spec, tr_common.seed, &events);
      save_weights(tr_common.out, w, events.empty() ? "" : events.front().config_hash);
      if (!tr_common.quiet) std::cout << "wrote " << mode << " policy to " << tr_common.out << '\n';
    } else if (cmp->parsed()) {
      if (cmp_common.out.empty()) {
        std::cerr << "compare: --out is required\n";
        return 1;
      }
      std::vector<RunResult> runs;
      for (const std::string& f : result_files) runs.push_back(read_result(f));
      const Comparison c = compare(runs);
      write_comparison(cmp_common.out, c);
      if (!cmp_common.quiet) {
        for (const ComparisonRow& row : c.ranked) {
          std::printf("%-48s %12.4f +- %-8.4f cost %.1f\n", row.label.c_str(), row.mean_ll,
                      row.sem_ll, row.mean_cost);
        }
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
