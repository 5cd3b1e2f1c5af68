#pragma once

#include <cmath>

#include "agnn/common.hpp"

namespace agnn {

// Multi-stage shrinkage activation. Dead zone on [-theta1, theta1], slope w1
// on the middle band, unit slope beyond theta2. Built from the ReLU
// composition, which keeps it continuous everywhere:
//   w1*(relu(z - t1) - relu(-z - t1)) - w2*(relu(z - t2) - relu(-z - t2))
struct MsreluParams {
  double theta1 = 0.02;
  double theta2 = 0.04;
  double w1 = 1.5;  // (2*theta2 - theta1) / theta2
  double w2 = 0.5;  // w1 - 1
};

inline MsreluParams make_msrelu(double theta1, double theta2) {
  require(theta1 > 0.0 && theta2 >= theta1,
          "msrelu: need theta2 >= theta1 > 0");
  MsreluParams p;
  p.theta1 = theta1;
  p.theta2 = theta2;
  p.w1 = (2.0 * theta2 - theta1) / theta2;
  p.w2 = p.w1 - 1.0;
  return p;
}

inline double relu_scalar(double z) { return z > 0.0 ? z : 0.0; }

inline double msrelu_scalar(double z, const MsreluParams& p) {
  return p.w1 * (relu_scalar(z - p.theta1) - relu_scalar(-z - p.theta1)) -
         p.w2 * (relu_scalar(z - p.theta2) - relu_scalar(-z - p.theta2));
}

// Subgradient convention at the kinks: slope w1 at |z| = theta1, slope 1 at
// |z| = theta2, zero at z = 0. Fixed once so backward passes are
// deterministic.
inline double msrelu_slope(double z, const MsreluParams& p) {
  const double a = std::abs(z);
  if (a >= p.theta2) return 1.0;
  if (a >= p.theta1) return p.w1;
  return 0.0;
}

inline double soft_threshold_scalar(double z, double theta) {
  if (z > theta) return z - theta;
  if (z < -theta) return z + theta;
  return 0.0;
}

inline double soft_threshold_slope(double z, double theta) {
  return std::abs(z) > theta ? 1.0 : 0.0;
}

inline Mat msrelu(const Mat& z, const MsreluParams& p) {
  return z.unaryExpr([&](double v) { return msrelu_scalar(v, p); });
}

inline Mat soft_threshold(const Mat& z, double theta) {
  require(theta >= 0.0, "soft_threshold: negative threshold");
  return z.unaryExpr([&](double v) { return soft_threshold_scalar(v, theta); });
}

}  // namespace agnn
