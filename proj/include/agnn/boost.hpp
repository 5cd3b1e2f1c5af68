#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "agnn/common.hpp"

namespace agnn {

// Predicted class of row i: argmax with ties broken toward the lowest index.
inline int argmax_row(const Mat& pred, int i) {
  int best = 0;
  for (int j = 1; j < static_cast<int>(pred.cols()); ++j)
    if (pred(i, j) > pred(i, best)) best = j;
  return best;
}

// Per-round boosting state over the labeled set omega. pi stays strictly
// positive: the floor rho keeps correct-classification shrinkage away from
// zero.
struct BoostState {
  std::vector<int> omega;
  std::vector<double> pi;  // aligned with omega
  std::vector<double> alphas, betas;

  static BoostState uniform(std::span<const int> omega_in) {
    require(!omega_in.empty(), "boost: empty labeled set");
    BoostState s;
    s.omega.assign(omega_in.begin(), omega_in.end());
    s.pi.assign(s.omega.size(), 1.0 / static_cast<double>(s.omega.size()));
    return s;
  }
};

// Weighted misclassification rate over omega, normalized by the current
// weight mass.
inline double weighted_error(const Mat& pred, const std::vector<int>& labels,
                             const std::vector<double>& pi,
                             const std::vector<int>& omega) {
  require(!omega.empty(), "weighted_error: empty labeled set");
  require(pi.size() == omega.size(), "weighted_error: pi/omega mismatch");
  double wrong = 0.0, total = 0.0;
  for (std::size_t k = 0; k < omega.size(); ++k) {
    total += pi[k];
    if (argmax_row(pred, omega[k]) != labels[omega[k]]) wrong += pi[k];
  }
  return wrong / total;
}

// 0.5*ln((1-e)/e) + ln(R-1), with e clamped so perfect classifiers stay
// finite through the later softmax.
inline double classifier_weight(double e, int r_classes) {
  require(r_classes >= 2, "classifier_weight: need at least 2 classes");
  const double c = std::min(std::max(e, 1e-10), 1.0 - 1e-10);
  return 0.5 * std::log((1.0 - c) / c) + std::log(double(r_classes - 1));
}

// Multiplicative reweighting from the previous classifier's output row.
// eta_i is the confidence ratio p_pred / max(1 - p_pred, epsilon) on the
// PREDICTED class; misclassified nodes grow by (1 + eta), correct ones
// shrink by max(1 - eta, rho).
inline void update_sample_weights(BoostState& state, const Mat& pred,
                                  const std::vector<int>& labels, double rho,
                                  double epsilon) {
  require(rho > 0.0 && rho < 1.0, "update_sample_weights: rho outside (0,1)");
  for (std::size_t k = 0; k < state.omega.size(); ++k) {
    const int i = state.omega[k];
    const int r = argmax_row(pred, i);
    double rest = 0.0;
    for (int j = 0; j < static_cast<int>(pred.cols()); ++j)
      if (j != r) rest += pred(i, j);
    const double eta = pred(i, r) / std::max(rest, epsilon);
    if (r != labels[i])
      state.pi[k] *= 1.0 + eta;
    else
      state.pi[k] *= std::max(1.0 - eta, rho);
  }
}

// Softmax over the concatenated raw weights; afterwards they sum to one.
inline std::vector<double> softmax_weights(std::span<const double> raw) {
  double m = raw[0];
  for (double w : raw) m = std::max(m, w);
  std::vector<double> out(raw.size());
  double z = 0.0;
  for (std::size_t k = 0; k < raw.size(); ++k) {
    out[k] = std::exp(raw[k] - m);
    z += out[k];
  }
  for (double& w : out) w /= z;
  return out;
}

// Softmax-normalize [alphas; betas] in place.
inline void normalize_classifier_weights(BoostState& state) {
  require(!state.alphas.empty() && state.alphas.size() == state.betas.size(),
          "normalize_classifier_weights: raw weights missing");
  std::vector<double> cat(state.alphas);
  cat.insert(cat.end(), state.betas.begin(), state.betas.end());
  const std::vector<double> norm = softmax_weights(cat);
  const std::size_t t = state.alphas.size();
  for (std::size_t l = 0; l < t; ++l) {
    state.alphas[l] = norm[l];
    state.betas[l] = norm[t + l];
  }
}

// S = sum_k weights[k] * predictions[k]; rows stay stochastic because the
// weights are a convex combination of row-stochastic matrices.
inline Mat aggregate(std::span<const Mat* const> predictions,
                     std::span<const double> weights) {
  require(!predictions.empty() && predictions.size() == weights.size(),
          "aggregate: length mismatch");
  Mat s = weights[0] * (*predictions[0]);
  for (std::size_t k = 1; k < predictions.size(); ++k)
    s += weights[k] * (*predictions[k]);
  return s;
}

struct BoostRound {
  std::vector<double> weights;  // normalized, classifier order
  std::vector<double> alphas;   // weights of GCL heads (odd positions)
  std::vector<double> betas;    // weights of GEL heads (even positions)
  Mat s;
  BoostState state;
};

// One full round per epoch: pi starts uniform; before scoring classifier k
// the weights are updated from classifier k-1's predictions (the first one
// sees the uniform weights). Predictions arrive in evaluation order
// GCL_1, GEL_1, ..., GCL_t, GEL_t.
inline BoostRound run_boost_round(std::span<const Mat* const> predictions,
                                  const std::vector<int>& labels,
                                  std::span<const int> omega, double rho,
                                  double epsilon, int r_classes) {
  require(predictions.size() >= 2 && predictions.size() % 2 == 0,
          "run_boost_round: predictions must come in GCL/GEL pairs");
  BoostRound round;
  round.state = BoostState::uniform(omega);

  for (std::size_t k = 0; k < predictions.size(); ++k) {
    if (k > 0)
      update_sample_weights(round.state, *predictions[k - 1], labels, rho,
                            epsilon);
    const double e = weighted_error(*predictions[k], labels, round.state.pi,
                                    round.state.omega);
    const double w = classifier_weight(e, r_classes);
    if (k % 2 == 0)
      round.state.alphas.push_back(w);
    else
      round.state.betas.push_back(w);
  }

  normalize_classifier_weights(round.state);
  round.alphas = round.state.alphas;
  round.betas = round.state.betas;
  for (std::size_t l = 0; l < round.alphas.size(); ++l) {
    round.weights.push_back(round.alphas[l]);
    round.weights.push_back(round.betas[l]);
  }
  round.s = aggregate(predictions, round.weights);
  return round;
}

}  // namespace agnn
