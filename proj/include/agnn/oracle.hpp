#pragma once

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "agnn/activations.hpp"
#include "agnn/autodiff.hpp"
#include "agnn/common.hpp"
#include "agnn/graph.hpp"
#include "agnn/layers.hpp"

namespace agnn {
namespace oracle {

// Everything here is dense, 64-bit and capped at a few hundred nodes. These
// routines exist to validate derivations against brute force, not to scale.

inline double spectral_norm_sym(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// Exact minimizer of ||E - HW||_F^2 + Tr(E^T L E): solves (I + L) E = H W.
// I + L is positive definite, so the system is always solvable; an estimated
// condition number above 1e12 is reported on the result.
struct GclExact {
  Mat e;
  double stationarity_residual = 0.0;  // ||2(E - HW) + 2 L E||_F
  double condition_estimate = 1.0;
  bool ill_conditioned = false;
};

inline GclExact solve_gcl_exact(const Mat& h, const Mat& w,
                                const Mat& l_tilde) {
  require(h.cols() == w.rows(), "solve_gcl_exact: H/W shapes disagree");
  require(l_tilde.rows() == l_tilde.cols() && l_tilde.rows() == h.rows(),
          "solve_gcl_exact: L shape disagrees with H");
  require(h.rows() <= 500, "solve_gcl_exact: dense oracle capped at n=500");
  const Mat system = Mat::Identity(l_tilde.rows(), l_tilde.cols()) + l_tilde;
  const Mat hw = h * w;

  GclExact out;
  out.e = system.ldlt().solve(hw);
  out.stationarity_residual =
      (2.0 * (out.e - hw) + 2.0 * l_tilde * out.e).norm();
  Eigen::SelfAdjointEigenSolver<Mat> es(system, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  out.condition_estimate = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  out.ill_conditioned = out.condition_estimate > 1e12;
  return out;
}

// Objective of the graph-convolution problem; used to confirm the exact
// solution beats the first-order layer output.
inline double gcl_objective(const Mat& e, const Mat& h, const Mat& w,
                            const Mat& l_tilde) {
  return (e - h * w).squaredNorm() + (e.transpose() * l_tilde * e).trace();
}

// || (I + L)^{-1} - sum_{k=0}^{order} (-1)^k L^k ||_2, matrix route: explicit
// inverse and powers, then the spectral norm of the (symmetric) difference.
inline double taylor_error(const Mat& l_tilde, int order) {
  require(order >= 1, "taylor_error: order must be >= 1");
  require(l_tilde.rows() == l_tilde.cols() && l_tilde.rows() <= 200,
          "taylor_error: dense oracle capped at n=200");
  const int n = static_cast<int>(l_tilde.rows());
  const Mat eye = Mat::Identity(n, n);
  const Mat inv = (eye + l_tilde).ldlt().solve(eye);
  Mat partial = eye;
  Mat power = eye;
  double sign = 1.0;
  for (int k = 1; k <= order; ++k) {
    power = power * l_tilde;
    sign = -sign;
    partial += sign * power;
  }
  return spectral_norm_sym(inv - partial);
}

// Scalar route for the same quantity: both matrices are polynomials in
// L, so the error is max over eigenvalues mu of |1/(1+mu) - p_order(mu)|.
inline double taylor_error_by_eigenvalues(const Mat& l_tilde, int order) {
  Eigen::SelfAdjointEigenSolver<Mat> es(l_tilde, Eigen::EigenvaluesOnly);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double mu = es.eigenvalues()(i);
    double partial = 0.0, term = 1.0;
    for (int k = 0; k <= order; ++k) {
      partial += term;
      term *= -mu;
    }
    worst = std::max(worst, std::abs(1.0 / (1.0 + mu) - partial));
  }
  return worst;
}

// The sparse reconstruction problem with the dictionary still explicit:
//   min_H  ||X - H P||_F^2 + Tr(H^T L H) + theta ||H||_1
// tau is the gradient step constant; lipschitz_bound() gives the smallest
// admissible value.
struct GelProblem {
  Mat x;        // n x m
  Mat p;        // d x m
  Mat l_tilde;  // n x n dense
  double tau = 0.0;
  double theta = 1.0;

  double lipschitz_bound() const {
    return 2.0 * (spectral_norm_sym(l_tilde) +
                  spectral_norm_sym(p * p.transpose()));
  }

  Mat grad_smooth(const Mat& h) const {
    return 2.0 * l_tilde * h + 2.0 * (h * p - x) * p.transpose();
  }

  double objective(const Mat& h) const {
    return (x - h * p).squaredNorm() + (h.transpose() * l_tilde * h).trace() +
           theta * h.cwiseAbs().sum();
  }

  // One proximal-gradient step from h: shrink(h - grad/tau, theta/tau).
  Mat pgd_step(const Mat& h) const {
    return soft_threshold(h - grad_smooth(h) / tau, theta / tau);
  }
};

struct PgdResult {
  Mat h_star;
  std::vector<double> objective_trace;
  double fixed_point_residual = 0.0;  // ||H* - pgd_step(H*)||_F
};

inline PgdResult solve_gel_pgd(const GelProblem& prob, const Mat& h0,
                               int iters) {
  require(prob.tau > 0.0, "solve_gel_pgd: tau must be positive");
  const double bound = prob.lipschitz_bound();
  if (prob.tau < bound * (1.0 - 1e-12))
    throw ContractViolation("solve_gel_pgd: tau below the Lipschitz bound " +
                            std::to_string(bound));
  PgdResult out;
  Mat h = h0;
  out.objective_trace.push_back(prob.objective(h));
  for (int k = 0; k < iters; ++k) {
    h = prob.pgd_step(h);
    out.objective_trace.push_back(prob.objective(h));
  }
  out.fixed_point_residual = (h - prob.pgd_step(h)).norm();
  out.h_star = std::move(h);
  return out;
}

// Checks the reparameterization that turns one proximal step into a layer:
// pgd_step(h) must equal the layer form
//   shrink(h (I - (2/tau) P P^T) + (2/tau) X P^T - lambda L h),  lambda=2/tau
// with the shrinkage shared on both sides. The layer side runs through the
// actual taped layer with W_e1, W_e2 built from P. Returns the max abs
// deviation.
inline double verify_gel_layer_form(const GelProblem& prob, const Mat& h) {
  const double lambda = 2.0 / prob.tau;
  const Mat side_pgd = prob.pgd_step(h);

  const int d = static_cast<int>(h.cols());
  ParamTensor w_e1("oracle.w_e1", d, d);
  ParamTensor w_e2("oracle.w_e2", static_cast<int>(prob.x.cols()), d);
  w_e1.value = Mat::Identity(d, d) - lambda * prob.p * prob.p.transpose();
  w_e2.value = lambda * prob.p.transpose();

  // Dense L as a CSR constant so the layer path is exercised end to end.
  Csr l;
  l.n = static_cast<int>(prob.l_tilde.rows());
  l.row_ptr.assign(l.n + 1, 0);
  for (int i = 0; i < l.n; ++i) {
    for (int j = 0; j < l.n; ++j) {
      l.col.push_back(j);
      l.val.push_back(prob.l_tilde(i, j));
    }
    l.row_ptr[i + 1] = static_cast<int>(l.col.size());
  }

  Tape tape;
  MsreluParams shrink;  // only theta1 matters on the soft-threshold path
  shrink.theta1 = prob.theta / prob.tau;
  shrink.theta2 = shrink.theta1;
  const NodeId out = gel_forward(
      tape, l, tape.constant(h), tape.constant(prob.x), w_e1, w_e2, lambda,
      shrink, GelActivation::kSoftThreshold);
  return (tape.value(out) - side_pgd).cwiseAbs().maxCoeff();
}

}  // namespace oracle
}  // namespace agnn
