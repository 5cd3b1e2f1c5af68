#pragma once

#include <cmath>
#include <functional>
#include <span>

#include "agnn/autodiff.hpp"
#include "agnn/common.hpp"

namespace agnn {

struct AdamConfig {
  double lr = 0.01;
  double weight_decay = 5e-4;  // coupled L2, skipped for decay=false tensors
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Standard Adam with bias correction. Weight decay enters the raw gradient
// before the moment updates; gradients are cleared afterwards.
inline void adam_step(std::span<ParamTensor* const> params,
                      const AdamConfig& cfg) {
  for (ParamTensor* p : params) {
    if (!p->grad.allFinite())
      throw NumericError("adam_step: non-finite gradient in parameter '" +
                         p->name + "'");
    Mat g = p->grad;
    if (p->decay && cfg.weight_decay != 0.0) g += cfg.weight_decay * p->value;
    p->step_count++;
    p->adam_m = cfg.beta1 * p->adam_m + (1.0 - cfg.beta1) * g;
    p->adam_v =
        (cfg.beta2 * p->adam_v.array() + (1.0 - cfg.beta2) * g.array().square())
            .matrix();
    const double m_corr = 1.0 - std::pow(cfg.beta1, p->step_count);
    const double v_corr = 1.0 - std::pow(cfg.beta2, p->step_count);
    p->value.array() -= cfg.lr * (p->adam_m.array() / m_corr) /
                        ((p->adam_v.array() / v_corr).sqrt() + cfg.eps);
    p->grad.setZero();
  }
}

// Central-difference check of reverse-mode gradients. f(true) must return the
// loss and leave analytic gradients in ParamTensor::grad; f(false) must
// return the loss only. Returns the max relative error over all coordinates,
// with denominator max(|analytic|, |numeric|, 1e-8). Evaluation points are
// the caller's responsibility (keep them clear of activation kinks).
inline double grad_check(const std::function<double(bool)>& f,
                         std::span<ParamTensor* const> params, double h) {
  for (ParamTensor* p : params) p->zero_grad();
  f(true);

  double max_rel = 0.0;
  for (ParamTensor* p : params) {
    for (Eigen::Index i = 0; i < p->value.rows(); ++i) {
      for (Eigen::Index j = 0; j < p->value.cols(); ++j) {
        const double saved = p->value(i, j);
        p->value(i, j) = saved + h;
        const double fp = f(false);
        p->value(i, j) = saved - h;
        const double fm = f(false);
        p->value(i, j) = saved;
        const double fd = (fp - fm) / (2.0 * h);
        const double an = p->grad(i, j);
        const double rel = std::abs(fd - an) /
                           std::max({std::abs(fd), std::abs(an), 1e-8});
        max_rel = std::max(max_rel, rel);
      }
    }
  }
  return max_rel;
}

}  // namespace agnn
