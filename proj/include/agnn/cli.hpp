#pragma once

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "agnn/common.hpp"
#include "agnn/data.hpp"
#include "agnn/graph.hpp"
#include "agnn/model.hpp"
#include "agnn/oracle_report.hpp"
#include "agnn/serialize.hpp"
#include "agnn/trainer.hpp"

namespace agnn {

namespace cli_detail {

inline std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string history_to_csv(const RunHistory& history) {
  std::string csv =
      "epoch,loss,val_loss,lr,train_acc,val_acc,test_acc,mad,gel_sparsity,"
      "clf_weights\n";
  for (const EpochStats& st : history.epochs) {
    csv += std::to_string(st.epoch) + "," + fmt17(st.loss) + "," +
           fmt17(st.val_loss) + "," + fmt17(st.lr) + "," +
           fmt17(st.train_acc) + "," + fmt17(st.val_acc) + "," +
           fmt17(st.test_acc) + "," + fmt17(st.mad_final) + "," +
           fmt17(st.gel_sparsity) + ",";
    for (std::size_t k = 0; k < st.clf_weights.size(); ++k) {
      if (k) csv += ';';
      csv += fmt17(st.clf_weights[k]);
    }
    csv += '\n';
  }
  return csv;
}

inline std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    try {
      out.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      throw DataError("bad integer '" + tok + "' in list '" + s + "'");
    }
  }
  if (out.empty()) throw DataError("empty integer list '" + s + "'");
  return out;
}

struct RunOutput {
  AgnnModel model;
  TrainResult result;
  Split split;
};

inline RunOutput run_training(const Dataset& data, const TrainConfig& cfg,
                              std::optional<Split> fixed_split = {}) {
  RunOutput out;
  out.split = fixed_split ? *fixed_split
                          : make_split(data.labels, cfg.per_class, cfg.n_valid,
                                       cfg.n_test, cfg.seed);
  const NormalizedOperators ops = normalize(data.graph);
  out.model = make_model(model_config_from(cfg, data), cfg.seed);
  out.result = train(out.model, ops, data, out.split, cfg);
  return out;
}

inline json metrics_json(const TrainConfig& cfg, const TrainResult& r) {
  return json{{"model", cfg.plain_gcn ? "gcn" : "agnn"},
              {"layers", cfg.layers},
              {"seed", cfg.seed},
              {"train_acc", r.train_acc},
              {"val_acc", r.val_acc},
              {"test_acc", r.test_acc},
              {"mad_final", r.mad_final},
              {"final_loss", r.final_loss},
              {"best_epoch", r.best_epoch},
              {"epochs", r.epochs_run}};
}

inline void write_run_outputs(const std::string& out_dir,
                              const TrainConfig& cfg, RunOutput& run) {
  std::filesystem::create_directories(out_dir);
  atomic_write_file(out_dir + "/metrics.json",
                    metrics_json(cfg, run.result).dump(2) + "\n");
  atomic_write_file(out_dir + "/history.csv",
                    history_to_csv(run.result.history));
  atomic_write_file(out_dir + "/model.json",
                    model_to_json(run.model).dump() + "\n");
  atomic_write_file(out_dir + "/config.json",
                    config_to_json(cfg).dump(2) + "\n");
  atomic_write_file(out_dir + "/split.json",
                    split_to_json(run.split).dump() + "\n");
}

// Flags that override the config file only when actually given.
struct ConfigFlags {
  CLI::Option* layers = nullptr;
  CLI::Option* hidden = nullptr;
  CLI::Option* lr = nullptr;
  CLI::Option* weight_decay = nullptr;
  CLI::Option* max_epochs = nullptr;
  CLI::Option* patience = nullptr;
  CLI::Option* lambda = nullptr;
  CLI::Option* rho = nullptr;
  CLI::Option* theta1 = nullptr;
  CLI::Option* theta2 = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* gel_activation = nullptr;
  CLI::Option* per_class = nullptr;
  CLI::Option* n_valid = nullptr;
  CLI::Option* n_test = nullptr;
  CLI::Option* plain_gcn = nullptr;

  int layers_v = 4, hidden_v = 128, max_epochs_v = 500, patience_v = 20;
  int per_class_v = 20, n_valid_v = 500, n_test_v = 1000;
  double lr_v = 0.01, weight_decay_v = 5e-4, lambda_v = 1.0, rho_v = 0.05;
  double theta1_v = 0.02, theta2_v = 0.04;
  std::uint64_t seed_v = 1;
  std::string gel_activation_v = "msrelu";
  bool plain_gcn_v = false;

  void attach(CLI::App* cmd) {
    layers = cmd->add_option("--layers", layers_v,
                             "network depth (2t; plain depth with --plain-gcn)");
    hidden = cmd->add_option("--hidden", hidden_v, "hidden width");
    lr = cmd->add_option("--lr", lr_v, "learning rate");
    weight_decay = cmd->add_option("--weight-decay", weight_decay_v, "L2 coefficient");
    max_epochs = cmd->add_option("--max-epochs", max_epochs_v, "epoch budget");
    patience = cmd->add_option("--patience", patience_v,
                               "epochs without valid-loss drop before halving lr");
    lambda = cmd->add_option("--lambda", lambda_v, "embedding-layer Laplacian coefficient");
    rho = cmd->add_option("--rho", rho_v, "sample-weight floor");
    theta1 = cmd->add_option("--theta1", theta1_v, "msrelu inner threshold");
    theta2 = cmd->add_option("--theta2", theta2_v, "msrelu outer threshold");
    seed = cmd->add_option("--seed", seed_v, "rng seed");
    gel_activation = cmd->add_option("--gel-activation", gel_activation_v,
                                     "msrelu|st|relu|identity");
    per_class = cmd->add_option("--per-class", per_class_v, "labeled nodes per class");
    n_valid = cmd->add_option("--valid", n_valid_v, "validation set size");
    n_test = cmd->add_option("--test", n_test_v, "test set size");
    plain_gcn = cmd->add_flag("--plain-gcn", plain_gcn_v,
                              "GCL-only stack with softmax head (baseline)");
  }

  void apply(TrainConfig& cfg) const {
    if (layers->count()) cfg.layers = layers_v;
    if (hidden->count()) cfg.hidden = hidden_v;
    if (lr->count()) cfg.lr = lr_v;
    if (weight_decay->count()) cfg.weight_decay = weight_decay_v;
    if (max_epochs->count()) cfg.max_epochs = max_epochs_v;
    if (patience->count()) cfg.patience = patience_v;
    if (lambda->count()) cfg.lambda = lambda_v;
    if (rho->count()) cfg.rho = rho_v;
    if (theta1->count()) cfg.theta1 = theta1_v;
    if (theta2->count()) cfg.theta2 = theta2_v;
    if (seed->count()) cfg.seed = seed_v;
    if (gel_activation->count()) cfg.gel_activation = gel_activation_v;
    if (per_class->count()) cfg.per_class = per_class_v;
    if (n_valid->count()) cfg.n_valid = n_valid_v;
    if (n_test->count()) cfg.n_test = n_test_v;
    if (plain_gcn->count()) cfg.plain_gcn = plain_gcn_v;
  }
};

inline void apply_env_seed(TrainConfig& cfg) {
  if (const char* env = std::getenv("AGNN_SEED")) {
    try {
      cfg.seed = std::stoull(env);
    } catch (const std::exception&) {
      throw DataError(std::string("AGNN_SEED not an integer: '") + env + "'");
    }
  }
}

}  // namespace cli_detail

// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
inline int run_cli(int argc, const char* const* argv) {
  using namespace cli_detail;

  CLI::App app{"alternating graph-regularized network trainer"};
  app.require_subcommand(1);

  // ---- train ----
  auto* train_cmd = app.add_subcommand("train", "train one model");
  std::string edges_path, features_path, labels_path, config_path, split_path;
  std::string out_dir = "run";
  ConfigFlags train_flags;
  train_cmd->add_option("--edges", edges_path, "edge list (u<TAB>v per line)")->required();
  train_cmd->add_option("--features", features_path, "feature TSV")->required();
  train_cmd->add_option("--labels", labels_path, "label file")->required();
  train_cmd->add_option("--config", config_path, "config JSON");
  train_cmd->add_option("--split", split_path, "split JSON (otherwise sampled)");
  train_cmd->add_option("--out", out_dir, "output directory");
  train_flags.attach(train_cmd);

  // ---- sweep ----
  auto* sweep_cmd = app.add_subcommand("sweep", "depth sweep, optionally with the gcn baseline");
  std::string sweep_layers = "2,4,8,16";
  std::string sweep_seeds;
  bool with_gcn = false;
  int jobs = 1;
  ConfigFlags sweep_flags;
  sweep_cmd->add_option("--edges", edges_path, "edge list")->required();
  sweep_cmd->add_option("--features", features_path, "feature TSV")->required();
  sweep_cmd->add_option("--labels", labels_path, "label file")->required();
  sweep_cmd->add_option("--config", config_path, "config JSON");
  sweep_cmd->add_option("--layers-list", sweep_layers, "comma-separated depths");
  sweep_cmd->add_option("--seeds", sweep_seeds, "comma-separated seeds (default: --seed)");
  sweep_cmd->add_flag("--with-gcn-baseline", with_gcn, "also sweep the plain GCN");
  sweep_cmd->add_option("--jobs", jobs, "parallel runs");
  sweep_cmd->add_option("--out", out_dir, "output directory");
  sweep_flags.attach(sweep_cmd);

  // ---- oracle ----
  auto* oracle_cmd = app.add_subcommand("oracle", "run the derivation checks");
  std::uint64_t oracle_seed = 1;
  std::string oracle_out = "oracle_report.json";
  oracle_cmd->add_option("--seed", oracle_seed, "instance seed");
  oracle_cmd->add_option("--out", oracle_out, "report path");

  // ---- gen-sbm ----
  auto* gen_cmd = app.add_subcommand("gen-sbm", "generate a planted-partition dataset");
  int gen_n = 400, gen_classes = 4, gen_m = 16;
  double gen_p_in = 0.10, gen_p_out = 0.01, gen_signal = 0.8;
  std::uint64_t gen_seed = 1;
  std::string gen_out = "sbm";
  gen_cmd->add_option("--n", gen_n, "node count (multiple of --classes)");
  gen_cmd->add_option("--classes", gen_classes, "class count");
  gen_cmd->add_option("--p-in", gen_p_in, "intra-class edge probability");
  gen_cmd->add_option("--p-out", gen_p_out, "inter-class edge probability");
  gen_cmd->add_option("--m", gen_m, "feature dimension");
  gen_cmd->add_option("--signal", gen_signal, "class-mean magnitude");
  gen_cmd->add_option("--seed", gen_seed, "rng seed");
  gen_cmd->add_option("--out", gen_out, "output directory");

  // ---- eval ----
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a saved model on a split");
  std::string model_dir;
  eval_cmd->add_option("--model-dir", model_dir, "directory written by train")->required();
  eval_cmd->add_option("--edges", edges_path, "edge list")->required();
  eval_cmd->add_option("--features", features_path, "feature TSV")->required();
  eval_cmd->add_option("--labels", labels_path, "label file")->required();
  eval_cmd->add_option("--split", split_path, "split JSON (default: the one in --model-dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*train_cmd) {
      TrainConfig cfg =
          config_path.empty() ? TrainConfig{} : load_config_file(config_path);
      train_flags.apply(cfg);
      apply_env_seed(cfg);
      const Dataset data = load_dataset(edges_path, features_path, labels_path);
      std::optional<Split> split;
      if (!split_path.empty()) split = load_split_file(split_path);
      RunOutput run = run_training(data, cfg, split);
      write_run_outputs(out_dir, cfg, run);
      std::cout << metrics_json(cfg, run.result).dump(2) << "\n";
      return 0;
    }

    if (*sweep_cmd) {
      TrainConfig base =
          config_path.empty() ? TrainConfig{} : load_config_file(config_path);
      sweep_flags.apply(base);
      apply_env_seed(base);
      const Dataset data = load_dataset(edges_path, features_path, labels_path);
      const std::vector<int> depth_list = parse_int_list(sweep_layers);
      std::vector<std::uint64_t> seeds;
      if (sweep_seeds.empty()) {
        seeds.push_back(base.seed);
      } else {
        for (int s : parse_int_list(sweep_seeds))
          seeds.push_back(static_cast<std::uint64_t>(s));
      }

      struct Task {
        TrainConfig cfg;
        std::string row;
      };
      std::vector<Task> tasks;
      for (int depth : depth_list)
        for (int is_gcn = 0; is_gcn < (with_gcn ? 2 : 1); ++is_gcn)
          for (std::uint64_t s : seeds) {
            TrainConfig cfg = base;
            cfg.layers = depth;
            cfg.plain_gcn = is_gcn != 0;
            cfg.seed = s;
            tasks.push_back({cfg, ""});
          }

      std::atomic<std::size_t> next{0};
      auto worker = [&] {
        for (std::size_t k = next.fetch_add(1); k < tasks.size();
             k = next.fetch_add(1)) {
          Task& task = tasks[k];
          RunOutput run = run_training(data, task.cfg);
          task.row = std::to_string(task.cfg.layers) + "," +
                     (task.cfg.plain_gcn ? "gcn" : "agnn") + "," +
                     std::to_string(task.cfg.seed) + "," +
                     fmt17(run.result.train_acc) + "," +
                     fmt17(run.result.val_acc) + "," +
                     fmt17(run.result.test_acc) + "," +
                     fmt17(run.result.mad_final) + "," +
                     std::to_string(run.result.epochs_run);
        }
      };
      const int n_threads = std::max(1, std::min<int>(jobs, tasks.size()));
      std::vector<std::thread> pool;
      for (int i = 0; i < n_threads - 1; ++i) pool.emplace_back(worker);
      worker();
      for (auto& th : pool) th.join();

      std::string csv =
          "layers,model,seed,train_acc,val_acc,test_acc,mad_final,epochs\n";
      for (const Task& t : tasks) csv += t.row + "\n";
      std::filesystem::create_directories(out_dir);
      atomic_write_file(out_dir + "/sweep.csv", csv);
      std::cout << csv;
      return 0;
    }

    if (*oracle_cmd) {
      if (const char* env = std::getenv("AGNN_SEED"))
        oracle_seed = std::stoull(env);
      const oracle::OracleReport report =
          oracle::run_oracle_checks(oracle_seed);
      const json j = oracle_report_to_json(report);
      atomic_write_file(oracle_out, j.dump(2) + "\n");
      for (const auto& c : report.checks)
        std::cout << (c.pass ? "pass " : "FAIL ") << c.name
                  << "  metric=" << c.metric << " threshold=" << c.threshold
                  << (c.note.empty() ? "" : "  (" + c.note + ")") << "\n";
      return report.all_pass ? 0 : 3;
    }

    if (*gen_cmd) {
      if (const char* env = std::getenv("AGNN_SEED"))
        gen_seed = std::stoull(env);
      const Dataset d = generate_sbm(gen_n, gen_classes, gen_p_in, gen_p_out,
                                     gen_m, gen_signal, gen_seed);
      write_dataset(d, gen_out);
      std::cout << "wrote " << gen_out << "/{edges,features,labels}.tsv ("
                << d.graph.adj.nnz() / 2 << " edges)\n";
      return 0;
    }

    if (*eval_cmd) {
      TrainConfig cfg = load_config_file(model_dir + "/config.json");
      AgnnModel model = load_model_file(model_dir + "/model.json", cfg);
      const Dataset data = load_dataset(edges_path, features_path, labels_path);
      const Split split = load_split_file(
          split_path.empty() ? model_dir + "/split.json" : split_path);
      const NormalizedOperators ops = normalize(data.graph);
      json out{{"train_acc", evaluate(model, ops, data, split.train,
                                      split.train, cfg)}};
      if (!split.valid.empty())
        out["val_acc"] =
            evaluate(model, ops, data, split.train, split.valid, cfg);
      if (!split.test.empty())
        out["test_acc"] =
            evaluate(model, ops, data, split.train, split.test, cfg);
      std::cout << out.dump(2) << "\n";
      return 0;
    }
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const ContractViolation& e) {
    std::cerr << "internal contract violation: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}

}  // namespace agnn
