#pragma once

#include <string>

#include "agnn/activations.hpp"
#include "agnn/autodiff.hpp"
#include "agnn/common.hpp"
#include "agnn/graph.hpp"

namespace agnn {

enum class Activation { kIdentity, kRelu, kTanh };

inline Activation activation_from_string(const std::string& s) {
  if (s == "identity") return Activation::kIdentity;
  if (s == "relu") return Activation::kRelu;
  if (s == "tanh") return Activation::kTanh;
  throw DataError("unknown activation '" + s + "'");
}

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
  }
  return "relu";
}

inline NodeId apply_activation(Tape& tape, NodeId x, Activation act) {
  switch (act) {
    case Activation::kIdentity:
      return x;
    case Activation::kRelu:
      return tape.relu(x);
    case Activation::kTanh:
      return tape.tanh(x);
  }
  throw ContractViolation("apply_activation: bad enum");
}

// The shrinkage applied inside the embedding layer. msrelu is the default;
// the others exist for ablation runs.
enum class GelActivation { kMsrelu, kSoftThreshold, kRelu, kIdentity };

inline GelActivation gel_activation_from_string(const std::string& s) {
  if (s == "msrelu") return GelActivation::kMsrelu;
  if (s == "st") return GelActivation::kSoftThreshold;
  if (s == "relu") return GelActivation::kRelu;
  if (s == "identity") return GelActivation::kIdentity;
  throw DataError("unknown gel activation '" + s + "'");
}

inline std::string to_string(GelActivation a) {
  switch (a) {
    case GelActivation::kMsrelu: return "msrelu";
    case GelActivation::kSoftThreshold: return "st";
    case GelActivation::kRelu: return "relu";
    case GelActivation::kIdentity: return "identity";
  }
  return "msrelu";
}

// Trainable state of one block: graph-convolution weight, the two embedding
// weights, and a softmax head per layer output.
struct BlockParams {
  ParamTensor w_g;    // d_{l-1} x d_l
  ParamTensor w_e1;   // d_l x d_l
  ParamTensor w_e2;   // m x d_l
  ParamTensor w_c_gcl, b_gcl;  // d_l x R, 1 x R
  ParamTensor w_c_gel, b_gel;
};

// sigma(a_hat * h * w); the sparse operator stays constant under backprop.
inline NodeId gcl_forward(Tape& tape, const Csr& a_hat, NodeId h_in,
                          ParamTensor& w_g, Activation act) {
  NodeId hw = tape.matmul(h_in, tape.leaf(w_g));
  return apply_activation(tape, tape.spmm(a_hat, hw), act);
}

// xi(h*w_e1 + x*w_e2 - lambda * l_tilde * h). Records the fraction of exact
// zeros in the output when a slot is supplied; sparsity is the layer's whole
// point, so it is worth watching.
inline NodeId gel_forward(Tape& tape, const Csr& l_tilde, NodeId h, NodeId x,
                          ParamTensor& w_e1, ParamTensor& w_e2, double lambda,
                          const MsreluParams& p,
                          GelActivation act = GelActivation::kMsrelu,
                          double* sparsity_out = nullptr) {
  require(lambda >= 0.0, "gel_forward: negative lambda");
  NodeId pre = tape.add(tape.matmul(h, tape.leaf(w_e1)),
                        tape.matmul(x, tape.leaf(w_e2)));
  pre = tape.sub(pre, tape.scale(tape.spmm(l_tilde, h), lambda));
  NodeId out;
  switch (act) {
    case GelActivation::kMsrelu:
      out = tape.msrelu(pre, p);
      break;
    case GelActivation::kSoftThreshold:
      out = tape.soft_threshold(pre, p.theta1);
      break;
    case GelActivation::kRelu:
      out = tape.relu(pre);
      break;
    case GelActivation::kIdentity:
      out = pre;
      break;
    default:
      throw ContractViolation("gel_forward: bad activation enum");
  }
  if (sparsity_out) {
    const Mat& v = tape.value(out);
    const double zeros =
        static_cast<double>((v.array() == 0.0).count());
    *sparsity_out = v.size() > 0 ? zeros / static_cast<double>(v.size()) : 0.0;
  }
  return out;
}

// Softmax(sigma(h*w_c + b)): a row-stochastic class-probability matrix.
inline NodeId weak_classifier(Tape& tape, NodeId h, ParamTensor& w_c,
                              ParamTensor& b,
                              Activation act = Activation::kTanh) {
  NodeId logits =
      tape.add_row_bias(tape.matmul(h, tape.leaf(w_c)), tape.leaf(b));
  return tape.softmax_rows(apply_activation(tape, logits, act));
}

}  // namespace agnn
