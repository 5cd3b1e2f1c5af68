#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "agnn/common.hpp"
#include "agnn/graph.hpp"
#include "agnn/oracle.hpp"

namespace agnn {
namespace oracle {

struct OracleCheck {
  std::string name;
  std::uint64_t seed = 0;
  double metric = 0.0;     // worst observed value across instances
  double threshold = 0.0;  // metric must stay below this
  bool pass = false;
  std::string note;
};

struct OracleReport {
  std::uint64_t seed = 0;
  bool all_pass = false;
  std::vector<OracleCheck> checks;
};

namespace detail {

inline Graph random_graph(Rng& rng, int n, double p) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (uniform(rng, 0.0, 1.0) < p) edges.emplace_back(i, j);
  return build_graph(edges, n);
}

inline Mat random_mat(Rng& rng, int rows, int cols) {
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = gaussian(rng);
  return m;
}

inline GelProblem random_gel_problem(Rng& rng, int n, int d, int m,
                                     const Mat& l_dense) {
  GelProblem prob;
  prob.x = random_mat(rng, n, m);
  prob.p = random_mat(rng, d, m);  // full row rank almost surely
  prob.l_tilde = l_dense;
  prob.tau = prob.lipschitz_bound();
  prob.theta = uniform(rng, 0.05, 0.5);
  return prob;
}

}  // namespace detail

// The whole battery of derivation checks on freshly sampled small instances.
// Thresholds are fixed here, not tunable.
inline OracleReport run_oracle_checks(std::uint64_t seed) {
  OracleReport report;
  report.seed = seed;
  Rng rng(seed);

  constexpr int kGraphInstances = 20;

  // Closed-form minimizer of the convolution problem: stationarity, the
  // first-order identity I - L = A_hat, the two Taylor-error routes, and
  // exact-beats-approximation.
  {
    OracleCheck stat{.name = "gcl_stationarity", .seed = seed, .threshold = 1e-8};
    OracleCheck ident{.name = "first_order_identity", .seed = seed, .threshold = 1e-12};
    OracleCheck taylor{.name = "taylor_order1_two_routes", .seed = seed, .threshold = 1e-10};
    OracleCheck beats{.name = "gcl_exact_beats_first_order", .seed = seed, .threshold = 1e-12};
    for (int inst = 0; inst < kGraphInstances; ++inst) {
      const int n = 2 + static_cast<int>(uniform(rng, 0.0, 48.0));
      const Graph g = detail::random_graph(rng, n, uniform(rng, 0.05, 0.5));
      const NormalizedOperators ops = normalize(g);
      const Mat l_dense = ops.l_tilde.dense();
      const Mat a_dense = ops.a_hat.dense();
      const Mat h = detail::random_mat(rng, n, 3);
      const Mat w = detail::random_mat(rng, 3, 2);

      const GclExact sol = solve_gcl_exact(h, w, l_dense);
      stat.metric = std::max(stat.metric, sol.stationarity_residual);

      const Mat eye = Mat::Identity(n, n);
      ident.metric = std::max(
          ident.metric, ((eye - l_dense) - a_dense).cwiseAbs().maxCoeff());

      taylor.metric = std::max(
          taylor.metric, std::abs(taylor_error(l_dense, 1) -
                                  taylor_error_by_eigenvalues(l_dense, 1)));

      const Mat first_order = a_dense * h * w;
      const double gap = gcl_objective(sol.e, h, w, l_dense) -
                         gcl_objective(first_order, h, w, l_dense);
      beats.metric = std::max(beats.metric, gap);
    }
    stat.pass = stat.metric < stat.threshold;
    ident.pass = ident.metric < ident.threshold;
    taylor.pass = taylor.metric < taylor.threshold;
    beats.pass = beats.metric < beats.threshold;
    report.checks.push_back(stat);
    report.checks.push_back(ident);
    report.checks.push_back(taylor);
    report.checks.push_back(beats);
  }

  // Taylor truncation error must be non-increasing in the order wherever the
  // series converges (spectral radius of L below 1). Instances outside that
  // regime are reported, never asserted.
  {
    OracleCheck mono{.name = "taylor_monotone_in_order", .seed = seed, .threshold = 1e-12};
    int asserted = 0, reported = 0;
    for (int inst = 0; inst < 10; ++inst) {
      // Edgeless graphs sit safely inside the convergence region; random
      // graphs land on or beyond its boundary and are only reported.
      const int n = 2 + static_cast<int>(uniform(rng, 0.0, 18.0));
      const Graph g = inst < 3 ? build_graph({}, n)
                               : detail::random_graph(rng, n, 0.3);
      const Mat l_dense = normalize(g).l_tilde.dense();
      const double rho = spectral_norm_sym(l_dense);
      if (rho >= 1.0) {
        ++reported;
        continue;
      }
      ++asserted;
      double prev = taylor_error(l_dense, 1);
      for (int order = 2; order <= 5; ++order) {
        const double cur = taylor_error(l_dense, order);
        mono.metric = std::max(mono.metric, cur - prev);
        prev = cur;
      }
    }
    mono.pass = mono.metric < mono.threshold;
    mono.note = std::to_string(asserted) + " asserted, " +
                std::to_string(reported) + " reported (series divergent)";
    report.checks.push_back(mono);
  }

  // The proximal-gradient derivation: one step equals the layer form, the
  // objective never increases, and the solver lands on a prox fixed point.
  {
    OracleCheck form{.name = "gel_layer_form", .seed = seed, .threshold = 1e-10};
    OracleCheck descent{.name = "pgd_objective_descent", .seed = seed, .threshold = 1e-12};
    OracleCheck fixed{.name = "pgd_fixed_point", .seed = seed, .threshold = 1e-8};
    for (int inst = 0; inst < kGraphInstances; ++inst) {
      const int n = 4 + static_cast<int>(uniform(rng, 0.0, 6.0));
      const int d = 2 + static_cast<int>(uniform(rng, 0.0, 2.0));
      const int m = d + 1 + static_cast<int>(uniform(rng, 0.0, 3.0));
      const Graph g = detail::random_graph(rng, n, 0.4);
      const Mat l_dense = normalize(g).l_tilde.dense();
      const GelProblem prob = detail::random_gel_problem(rng, n, d, m, l_dense);

      const Mat h = detail::random_mat(rng, n, d);
      form.metric = std::max(form.metric, verify_gel_layer_form(prob, h));

      const PgdResult sol = solve_gel_pgd(prob, h, 5000);
      for (std::size_t k = 1; k < sol.objective_trace.size(); ++k)
        descent.metric =
            std::max(descent.metric,
                     sol.objective_trace[k] - sol.objective_trace[k - 1]);
      fixed.metric = std::max(fixed.metric, sol.fixed_point_residual);
    }
    form.pass = form.metric < form.threshold;
    descent.pass = descent.metric < descent.threshold;
    fixed.pass = fixed.metric < fixed.threshold;
    report.checks.push_back(form);
    report.checks.push_back(descent);
    report.checks.push_back(fixed);
  }

  report.all_pass = true;
  for (const OracleCheck& c : report.checks) report.all_pass &= c.pass;
  return report;
}

}  // namespace oracle
}  // namespace agnn
