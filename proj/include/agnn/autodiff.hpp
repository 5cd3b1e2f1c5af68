#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "agnn/activations.hpp"
#include "agnn/common.hpp"
#include "agnn/graph.hpp"

namespace agnn {

// A trainable dense matrix: value, gradient accumulator and Adam moment
// slots. Biases opt out of weight decay via decay=false.
struct ParamTensor {
  std::string name;
  Mat value;
  Mat grad;
  Mat adam_m;
  Mat adam_v;
  long step_count = 0;
  bool decay = true;

  ParamTensor() = default;
  ParamTensor(std::string name_, int rows, int cols, bool decay_ = true)
      : name(std::move(name_)),
        value(Mat::Zero(rows, cols)),
        grad(Mat::Zero(rows, cols)),
        adam_m(Mat::Zero(rows, cols)),
        adam_v(Mat::Zero(rows, cols)),
        decay(decay_) {}

  void zero_grad() { grad.setZero(); }
};

inline void zero_grads(std::span<ParamTensor* const> params) {
  for (ParamTensor* p : params) p->zero_grad();
}

// Glorot-uniform fill; bound sqrt(6 / (fan_in + fan_out)).
inline void glorot_init(ParamTensor& p, Rng& rng) {
  const double bound =
      std::sqrt(6.0 / static_cast<double>(p.value.rows() + p.value.cols()));
  for (Eigen::Index i = 0; i < p.value.rows(); ++i)
    for (Eigen::Index j = 0; j < p.value.cols(); ++j)
      p.value(i, j) = uniform(rng, -bound, bound);
}

using NodeId = int;

// Reverse-mode tape over the fixed operation set the model needs. Forward
// calls append nodes; backward() replays them in strict reverse order and
// accumulates into ParamTensor::grad. Sparse operators enter only as
// constants, so no gradient ever flows into them.
class Tape {
 public:
  struct Node {
    Mat value;
    Mat grad;
    std::function<void(Tape&, const Node&)> back;  // empty for leaves/constants
    ParamTensor* param = nullptr;
  };

  const Mat& value(NodeId id) const { return at(id).value; }
  const Mat& grad(NodeId id) const { return at(id).grad; }
  int size() const { return static_cast<int>(nodes_.size()); }

  NodeId constant(Mat v) { return push(std::move(v), {}, nullptr); }

  // One tape node per ParamTensor: a second use of the same parameter reuses
  // the node, so gradients from all paths accumulate.
  NodeId leaf(ParamTensor& p) {
    auto it = leaf_ids_.find(&p);
    if (it != leaf_ids_.end()) return it->second;
    NodeId id = push(p.value, {}, &p);
    leaf_ids_.emplace(&p, id);
    return id;
  }

  NodeId matmul(NodeId a, NodeId b) {
    require(value(a).cols() == value(b).rows(), "matmul: inner dims disagree");
    Mat v = value(a) * value(b);
    return push(std::move(v), [a, b](Tape& t, const Node& self) {
      t.at(a).grad.noalias() += self.grad * t.at(b).value.transpose();
      t.at(b).grad.noalias() += t.at(a).value.transpose() * self.grad;
    });
  }

  // s is constant; the gradient flows only into the dense operand.
  NodeId spmm(const Csr& s, NodeId d) {
    Mat v = agnn::spmm(s, value(d));
    return push(std::move(v), [&s, d](Tape& t, const Node& self) {
      t.at(d).grad += spmm_transpose(s, self.grad);
    });
  }

  NodeId add(NodeId a, NodeId b) {
    require(value(a).rows() == value(b).rows() &&
                value(a).cols() == value(b).cols(),
            "add: shape mismatch");
    Mat v = value(a) + value(b);
    return push(std::move(v), [a, b](Tape& t, const Node& self) {
      t.at(a).grad += self.grad;
      t.at(b).grad += self.grad;
    });
  }

  NodeId sub(NodeId a, NodeId b) {
    require(value(a).rows() == value(b).rows() &&
                value(a).cols() == value(b).cols(),
            "sub: shape mismatch");
    Mat v = value(a) - value(b);
    return push(std::move(v), [a, b](Tape& t, const Node& self) {
      t.at(a).grad += self.grad;
      t.at(b).grad -= self.grad;
    });
  }

  NodeId scale(NodeId a, double c) {
    Mat v = c * value(a);
    return push(std::move(v), [a, c](Tape& t, const Node& self) {
      t.at(a).grad += c * self.grad;
    });
  }

  // a + row-broadcast bias (bias is 1 x k).
  NodeId add_row_bias(NodeId a, NodeId bias) {
    require(value(bias).rows() == 1 && value(bias).cols() == value(a).cols(),
            "add_row_bias: bias must be 1 x cols(a)");
    Mat v = value(a).rowwise() + value(bias).row(0);
    return push(std::move(v), [a, bias](Tape& t, const Node& self) {
      t.at(a).grad += self.grad;
      t.at(bias).grad += self.grad.colwise().sum();
    });
  }

  // Elementwise map with input-based derivative.
  NodeId elementwise(NodeId a, std::function<double(double)> f,
                     std::function<double(double)> df) {
    Mat v = value(a).unaryExpr([&](double z) { return f(z); });
    return push(std::move(v),
                [a, df = std::move(df)](Tape& t, const Node& self) {
                  const Mat& z = t.at(a).value;
                  t.at(a).grad.array() +=
                      self.grad.array() *
                      z.unaryExpr([&](double w) { return df(w); }).array();
                });
  }

  NodeId relu(NodeId a) {
    return elementwise(
        a, [](double z) { return relu_scalar(z); },
        [](double z) { return z > 0.0 ? 1.0 : 0.0; });
  }

  NodeId tanh(NodeId a) {
    return elementwise(
        a, [](double z) { return std::tanh(z); },
        [](double z) {
          const double t = std::tanh(z);
          return 1.0 - t * t;
        });
  }

  NodeId msrelu(NodeId a, const MsreluParams& p) {
    return elementwise(
        a, [p](double z) { return msrelu_scalar(z, p); },
        [p](double z) { return msrelu_slope(z, p); });
  }

  NodeId soft_threshold(NodeId a, double theta) {
    return elementwise(
        a, [theta](double z) { return soft_threshold_scalar(z, theta); },
        [theta](double z) { return soft_threshold_slope(z, theta); });
  }

  // Numerically shifted row softmax.
  NodeId softmax_rows(NodeId a) {
    const Mat& z = value(a);
    Mat v(z.rows(), z.cols());
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      const double m = z.row(i).maxCoeff();
      v.row(i) = (z.row(i).array() - m).exp();
      v.row(i) /= v.row(i).sum();
    }
    return push(std::move(v), [a](Tape& t, const Node& self) {
      const Mat& y = self.value;
      for (Eigen::Index i = 0; i < y.rows(); ++i) {
        const double dot = self.grad.row(i).dot(y.row(i));
        t.at(a).grad.row(i).array() +=
            y.row(i).array() * (self.grad.row(i).array() - dot);
      }
    });
  }

  // Convex/linear combination of equally shaped nodes with constant weights.
  NodeId weighted_sum(std::span<const NodeId> ids,
                      std::span<const double> weights) {
    require(!ids.empty() && ids.size() == weights.size(),
            "weighted_sum: length mismatch");
    Mat v = weights[0] * value(ids[0]);
    for (std::size_t k = 1; k < ids.size(); ++k) {
      require(value(ids[k]).rows() == v.rows() &&
                  value(ids[k]).cols() == v.cols(),
              "weighted_sum: shape mismatch");
      v += weights[k] * value(ids[k]);
    }
    std::vector<NodeId> idv(ids.begin(), ids.end());
    std::vector<double> wv(weights.begin(), weights.end());
    return push(std::move(v), [idv, wv](Tape& t, const Node& self) {
      for (std::size_t k = 0; k < idv.size(); ++k)
        t.at(idv[k]).grad += wv[k] * self.grad;
    });
  }

  // -sum_{i in omega} ln(max(S[i, labels[i]], floor)); scalar output.
  // Entries at the floor contribute a constant, so their gradient is zero.
  NodeId nll_masked(NodeId s, const std::vector<int>& labels,
                    const std::vector<int>& omega, double floor = 1e-12) {
    require(!omega.empty(), "nll_masked: empty index set");
    const Mat& p = value(s);
    double loss = 0.0;
    for (int i : omega) {
      require(i >= 0 && i < static_cast<int>(p.rows()) && labels[i] >= 0 &&
                  labels[i] < static_cast<int>(p.cols()),
              "nll_masked: index out of range");
      loss -= std::log(std::max(p(i, labels[i]), floor));
    }
    Mat v(1, 1);
    v(0, 0) = loss;
    return push(std::move(v),
                [s, labels, omega, floor](Tape& t, const Node& self) {
                  const double g = self.grad(0, 0);
                  const Mat& p = t.at(s).value;
                  for (int i : omega) {
                    const double pij = p(i, labels[i]);
                    if (pij > floor) t.at(s).grad(i, labels[i]) -= g / pij;
                  }
                });
  }

  NodeId sum(NodeId a) {
    Mat v(1, 1);
    v(0, 0) = value(a).sum();
    return push(std::move(v), [a](Tape& t, const Node& self) {
      t.at(a).grad.array() += self.grad(0, 0);
    });
  }

  NodeId frobenius_sq(NodeId a) {
    Mat v(1, 1);
    v(0, 0) = value(a).squaredNorm();
    return push(std::move(v), [a](Tape& t, const Node& self) {
      t.at(a).grad += 2.0 * self.grad(0, 0) * t.at(a).value;
    });
  }

  // Seeds d(loss)/d(loss) = 1 and walks the tape backwards, accumulating
  // exact reverse-mode gradients into every reachable ParamTensor.
  void backward(NodeId loss) {
    require(loss >= 0 && loss < size(), "backward: no recorded forward pass");
    require(at(loss).value.size() == 1, "backward: loss must be scalar");
    at(loss).grad(0, 0) = 1.0;
    for (NodeId id = loss; id >= 0; --id) {
      const Node& node = nodes_[id];
      if (node.back) node.back(*this, node);
      if (node.param) node.param->grad += node.grad;
    }
  }

 private:
  Node& at(NodeId id) { return nodes_[id]; }
  const Node& at(NodeId id) const { return nodes_[id]; }

  NodeId push(Mat v, std::function<void(Tape&, const Node&)> back,
              ParamTensor* param = nullptr) {
    Node n;
    n.grad = Mat::Zero(v.rows(), v.cols());
    n.value = std::move(v);
    n.back = std::move(back);
    n.param = param;
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size()) - 1;
  }

  std::vector<Node> nodes_;
  std::unordered_map<const ParamTensor*, NodeId> leaf_ids_;
};

}  // namespace agnn
