#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "agnn/boost.hpp"
#include "agnn/common.hpp"
#include "agnn/data.hpp"
#include "agnn/model.hpp"
#include "agnn/optim.hpp"

namespace agnn {

// Every knob of a run. The defaults are the experimental protocol the model
// ships with: theta1=0.02, theta2=0.04, weight decay 5e-4, epsilon=1e-4,
// lr=0.01, hidden width 128, 20 labels per class, 500 valid / 1000 test.
struct TrainConfig {
  int layers = 4;  // 2t for the block model, plain depth for the gcn baseline
  int hidden = 128;
  double lr = 0.01;
  double lr_min = 1e-4;
  double weight_decay = 5e-4;
  int max_epochs = 500;
  int patience = 20;  // epochs without valid-loss drop before halving lr
  double theta1 = 0.02;
  double theta2 = 0.04;
  double lambda = 1.0;
  double rho = 0.05;
  double epsilon = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 1;
  std::string gcl_activation = "relu";
  std::string classifier_activation = "tanh";
  std::string gel_activation = "msrelu";
  bool plain_gcn = false;
  int per_class = 20;
  int n_valid = 500;
  int n_test = 1000;
};

inline ModelConfig model_config_from(const TrainConfig& cfg, int in_dim,
                                     int classes) {
  require(cfg.layers >= 1 && (cfg.plain_gcn || cfg.layers % 2 == 0),
          "layers must be even (2 per block) unless plain_gcn");
  ModelConfig mc;
  mc.t = cfg.plain_gcn ? cfg.layers : cfg.layers / 2;
  mc.in_dim = in_dim;
  mc.hidden = cfg.hidden;
  mc.classes = classes;
  mc.lambda = cfg.lambda;
  mc.msrelu = make_msrelu(cfg.theta1, cfg.theta2);
  mc.gcl_activation = activation_from_string(cfg.gcl_activation);
  mc.classifier_activation = activation_from_string(cfg.classifier_activation);
  mc.gel_activation = gel_activation_from_string(cfg.gel_activation);
  mc.plain_gcn = cfg.plain_gcn;
  return mc;
}

inline ModelConfig model_config_from(const TrainConfig& cfg,
                                     const Dataset& data) {
  return model_config_from(cfg, static_cast<int>(data.features.cols()),
                           data.r_classes);
}

// -sum_{i in omega} sum_j Y_ij ln S_ij with one-hot Y; entries are floored
// at 1e-12 before the log.
inline double cross_entropy(const Mat& s, const std::vector<int>& labels,
                            const std::vector<int>& omega,
                            double floor = 1e-12) {
  require(!omega.empty(), "cross_entropy: empty index set");
  double loss = 0.0;
  for (int i : omega) loss -= std::log(std::max(s(i, labels[i]), floor));
  return loss;
}

inline double accuracy(const Mat& s, const std::vector<int>& labels,
                       std::span<const int> idx) {
  require(!idx.empty(), "accuracy: empty index set");
  int hit = 0;
  for (int i : idx)
    if (argmax_row(s, i) == labels[i]) ++hit;
  return static_cast<double>(hit) / static_cast<double>(idx.size());
}

// Mean average distance: mean of 1 - cos(h_i, h_j) over up to 10,000 node
// pairs (all pairs when there are fewer). Zero rows count as cosine 0.
// The over-smoothing diagnostic: collapsed embeddings drive it to 0.
inline double mad(const Mat& h, int max_pairs = 10000) {
  const int n = static_cast<int>(h.rows());
  require(n >= 2, "mad: need at least two rows");
  Vec norms(n);
  for (int i = 0; i < n; ++i) norms(i) = h.row(i).norm();
  auto pair_distance = [&](int i, int j) {
    if (norms(i) == 0.0 || norms(j) == 0.0) return 1.0;
    return 1.0 - h.row(i).dot(h.row(j)) / (norms(i) * norms(j));
  };

  const long long total = static_cast<long long>(n) * (n - 1) / 2;
  double sum = 0.0;
  long long count = 0;
  if (total <= max_pairs) {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) sum += pair_distance(i, j);
    count = total;
  } else {
    Rng rng(0x6d6164);  // fixed seed: the diagnostic must be reproducible
    std::uniform_int_distribution<int> pick(0, n - 1);
    while (count < max_pairs) {
      const int i = pick(rng), j = pick(rng);
      if (i == j) continue;
      sum += pair_distance(i, j);
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

struct EpochStats {
  int epoch = 0;
  double loss = 0.0, val_loss = 0.0, lr = 0.0;
  double train_acc = 0.0, val_acc = 0.0, test_acc = 0.0;
  double mad_final = 0.0;
  double gel_sparsity = 0.0;
  std::vector<double> clf_weights;  // normalized, order GCL_1, GEL_1, ...
};

struct RunHistory {
  std::vector<EpochStats> epochs;
};

struct TrainResult {
  RunHistory history;
  double train_acc = 0.0, val_acc = 0.0, test_acc = 0.0;
  double mad_final = 0.0;
  double final_loss = 0.0;
  int best_epoch = -1;  // -1: final-epoch fallback
  int epochs_run = 0;
};

namespace detail {

struct EpochOutput {
  Tape tape;
  ForwardResult fwd;
  Mat s;
  std::vector<double> weights;
  NodeId s_node = -1;
};

// Forward + boost round + aggregated S, shared by training and evaluation.
inline EpochOutput run_forward(AgnnModel& model, const NormalizedOperators& ops,
                               const Dataset& data,
                               const std::vector<int>& omega,
                               const TrainConfig& cfg) {
  EpochOutput out;
  out.fwd = model_forward(out.tape, model, ops, data.features);
  if (model.cfg.plain_gcn) {
    out.s_node = out.fwd.pred_nodes[0];
    out.s = out.tape.value(out.s_node);
    return out;
  }
  std::vector<const Mat*> preds;
  for (NodeId id : out.fwd.pred_nodes) preds.push_back(&out.tape.value(id));
  BoostRound round = run_boost_round(preds, data.labels, omega, cfg.rho,
                                     cfg.epsilon, data.r_classes);
  out.weights = round.weights;
  // The taped sum repeats the same arithmetic as round.s; classifier weights
  // enter as constants (they come from hard argmax decisions).
  out.s_node = out.tape.weighted_sum(out.fwd.pred_nodes, out.weights);
  out.s = std::move(round.s);
  return out;
}

}  // namespace detail

// Algorithm: per epoch one forward pass caching all block outputs and head
// predictions, one boost round, cross-entropy on the aggregated S over the
// training set, one backward pass, one Adam step. The learning rate halves
// after `patience` epochs without validation-loss improvement; the
// parameters with the best validation accuracy are restored at the end.
inline TrainResult train(AgnnModel& model, const NormalizedOperators& ops,
                         const Dataset& data, const Split& split,
                         const TrainConfig& cfg) {
  TrainResult result;
  const std::vector<ParamTensor*> params = model.params();
  AdamConfig adam{.lr = cfg.lr,
                  .weight_decay = cfg.weight_decay,
                  .beta1 = cfg.adam_beta1,
                  .beta2 = cfg.adam_beta2,
                  .eps = cfg.adam_eps};

  double best_val_loss = std::numeric_limits<double>::infinity();
  double best_val_acc = -1.0;
  int plateau = 0;
  std::vector<Mat> best_values;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    auto out = detail::run_forward(model, ops, data, split.train, cfg);
    const NodeId loss_node =
        out.tape.nll_masked(out.s_node, data.labels, split.train);
    const double loss = out.tape.value(loss_node)(0, 0);
    if (!std::isfinite(loss))
      throw NumericError("train: non-finite loss at epoch " +
                         std::to_string(epoch));

    EpochStats st;
    st.epoch = epoch;
    st.loss = loss;
    st.lr = adam.lr;
    st.train_acc = accuracy(out.s, data.labels, split.train);
    st.val_acc = split.valid.empty()
                     ? 0.0
                     : accuracy(out.s, data.labels, split.valid);
    st.test_acc =
        split.test.empty() ? 0.0 : accuracy(out.s, data.labels, split.test);
    st.val_loss = split.valid.empty()
                      ? loss
                      : cross_entropy(out.s, data.labels, split.valid);
    st.mad_final = mad(out.tape.value(out.fwd.final_embedding));
    if (!out.fwd.gel_sparsity.empty())
      st.gel_sparsity = std::accumulate(out.fwd.gel_sparsity.begin(),
                                        out.fwd.gel_sparsity.end(), 0.0) /
                        static_cast<double>(out.fwd.gel_sparsity.size());
    st.clf_weights = out.weights;
    result.history.epochs.push_back(st);

    if (st.val_acc > best_val_acc) {
      best_val_acc = st.val_acc;
      result.best_epoch = epoch;
      best_values.clear();
      for (ParamTensor* p : params) best_values.push_back(p->value);
    }

    zero_grads(params);
    out.tape.backward(loss_node);
    adam_step(params, adam);

    if (st.val_loss < best_val_loss) {
      best_val_loss = st.val_loss;
      plateau = 0;
    } else if (++plateau >= cfg.patience) {
      adam.lr = std::max(adam.lr / 2.0, cfg.lr_min);
      plateau = 0;
    }
  }
  result.epochs_run = static_cast<int>(result.history.epochs.size());

  if (!best_values.empty())
    for (std::size_t k = 0; k < params.size(); ++k)
      params[k]->value = best_values[k];

  // Final metrics under the restored parameters.
  auto out = detail::run_forward(model, ops, data, split.train, cfg);
  result.final_loss = cross_entropy(out.s, data.labels, split.train);
  result.train_acc = accuracy(out.s, data.labels, split.train);
  result.val_acc =
      split.valid.empty() ? 0.0 : accuracy(out.s, data.labels, split.valid);
  result.test_acc =
      split.test.empty() ? 0.0 : accuracy(out.s, data.labels, split.test);
  result.mad_final = mad(out.tape.value(out.fwd.final_embedding));
  return result;
}

// Accuracy of the aggregated prediction on eval_idx. Inference-only: the
// boost round is recomputed on the training labels exactly as in training,
// nothing else is updated.
inline double evaluate(AgnnModel& model, const NormalizedOperators& ops,
                       const Dataset& data, const std::vector<int>& omega,
                       std::span<const int> eval_idx, const TrainConfig& cfg) {
  require(!eval_idx.empty(), "evaluate: empty index set");
  auto out = detail::run_forward(model, ops, data, omega, cfg);
  return accuracy(out.s, data.labels, eval_idx);
}

}  // namespace agnn
