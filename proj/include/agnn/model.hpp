#pragma once

#include <string>
#include <vector>

#include "agnn/autodiff.hpp"
#include "agnn/common.hpp"
#include "agnn/graph.hpp"
#include "agnn/layers.hpp"

namespace agnn {

struct ModelConfig {
  int t = 2;  // blocks, so the reported depth is 2t; in plain-gcn mode this
              // is the literal layer count instead
  int in_dim = 0;
  int hidden = 128;
  int classes = 0;
  double lambda = 1.0;
  MsreluParams msrelu;
  Activation gcl_activation = Activation::kRelu;
  Activation classifier_activation = Activation::kTanh;
  GelActivation gel_activation = GelActivation::kMsrelu;
  bool plain_gcn = false;  // GCL-only stack with a softmax head, no boosting
};

// The alternating stack: t blocks of one graph-convolution layer followed by
// one graph-embedding layer, each with its own softmax head. In plain-GCN
// mode the same object holds a GCL-only stack for the over-smoothing
// contrast.
struct AgnnModel {
  ModelConfig cfg;
  std::vector<BlockParams> blocks;     // agnn mode
  std::vector<ParamTensor> gcn_stack;  // plain-gcn mode

  int layer_count() const {
    return cfg.plain_gcn ? static_cast<int>(gcn_stack.size()) : 2 * cfg.t;
  }

  std::vector<ParamTensor*> params() {
    std::vector<ParamTensor*> out;
    for (BlockParams& b : blocks) {
      out.push_back(&b.w_g);
      out.push_back(&b.w_e1);
      out.push_back(&b.w_e2);
      out.push_back(&b.w_c_gcl);
      out.push_back(&b.b_gcl);
      out.push_back(&b.w_c_gel);
      out.push_back(&b.b_gel);
    }
    for (ParamTensor& w : gcn_stack) out.push_back(&w);
    return out;
  }
};

// Glorot weights, zero biases, all drawn from one seeded stream in a fixed
// order so runs are reproducible.
inline AgnnModel make_model(const ModelConfig& cfg, std::uint64_t seed) {
  require(cfg.in_dim > 0 && cfg.classes >= 2, "make_model: bad dimensions");
  AgnnModel model;
  model.cfg = cfg;
  Rng rng(seed);

  if (cfg.plain_gcn) {
    const int depth = std::max(1, cfg.t);
    for (int l = 0; l < depth; ++l) {
      const int din = l == 0 ? cfg.in_dim : cfg.hidden;
      const int dout = l == depth - 1 ? cfg.classes : cfg.hidden;
      ParamTensor w("gcn" + std::to_string(l + 1) + ".w", din, dout);
      glorot_init(w, rng);
      model.gcn_stack.push_back(std::move(w));
    }
    return model;
  }

  require(cfg.t >= 1, "make_model: need at least one block");
  for (int l = 0; l < cfg.t; ++l) {
    const std::string prefix = "block" + std::to_string(l + 1) + ".";
    const int din = l == 0 ? cfg.in_dim : cfg.hidden;
    BlockParams b{
        .w_g = ParamTensor(prefix + "w_g", din, cfg.hidden),
        .w_e1 = ParamTensor(prefix + "w_e1", cfg.hidden, cfg.hidden),
        .w_e2 = ParamTensor(prefix + "w_e2", cfg.in_dim, cfg.hidden),
        .w_c_gcl = ParamTensor(prefix + "w_c_gcl", cfg.hidden, cfg.classes),
        .b_gcl = ParamTensor(prefix + "b_gcl", 1, cfg.classes, false),
        .w_c_gel = ParamTensor(prefix + "w_c_gel", cfg.hidden, cfg.classes),
        .b_gel = ParamTensor(prefix + "b_gel", 1, cfg.classes, false),
    };
    glorot_init(b.w_g, rng);
    glorot_init(b.w_e1, rng);
    glorot_init(b.w_e2, rng);
    glorot_init(b.w_c_gcl, rng);
    glorot_init(b.w_c_gel, rng);
    model.blocks.push_back(std::move(b));
  }
  return model;
}

struct ForwardResult {
  std::vector<NodeId> h_nodes;     // per block
  std::vector<NodeId> z_nodes;     // per block
  std::vector<NodeId> pred_nodes;  // heads in order GCL_1, GEL_1, ...
  std::vector<double> gel_sparsity;
  NodeId final_embedding = -1;  // Z_t, or the last GCL output in gcn mode
};

// One taped forward pass; block l consumes Z_{l-1} (X for the first block)
// and every embedding layer re-injects the raw features.
inline ForwardResult model_forward(Tape& tape, AgnnModel& model,
                                   const NormalizedOperators& ops,
                                   const Mat& x) {
  require(static_cast<int>(x.cols()) == model.cfg.in_dim,
          "model_forward: feature width mismatch");
  ForwardResult fwd;
  const NodeId x_node = tape.constant(x);

  if (model.cfg.plain_gcn) {
    NodeId h = x_node;
    const int depth = static_cast<int>(model.gcn_stack.size());
    for (int l = 0; l < depth; ++l) {
      const Activation act =
          l == depth - 1 ? Activation::kIdentity : model.cfg.gcl_activation;
      h = gcl_forward(tape, ops.a_hat, h, model.gcn_stack[l], act);
    }
    fwd.final_embedding = h;
    fwd.pred_nodes.push_back(tape.softmax_rows(h));
    return fwd;
  }

  NodeId h_prev = x_node;
  for (BlockParams& b : model.blocks) {
    const NodeId h = gcl_forward(tape, ops.a_hat, h_prev, b.w_g,
                                 model.cfg.gcl_activation);
    double sparsity = 0.0;
    const NodeId z =
        gel_forward(tape, ops.l_tilde, h, x_node, b.w_e1, b.w_e2,
                    model.cfg.lambda, model.cfg.msrelu,
                    model.cfg.gel_activation, &sparsity);
    fwd.h_nodes.push_back(h);
    fwd.z_nodes.push_back(z);
    fwd.gel_sparsity.push_back(sparsity);
    fwd.pred_nodes.push_back(weak_classifier(tape, h, b.w_c_gcl, b.b_gcl,
                                             model.cfg.classifier_activation));
    fwd.pred_nodes.push_back(weak_classifier(tape, z, b.w_c_gel, b.b_gel,
                                             model.cfg.classifier_activation));
    h_prev = z;
  }
  fwd.final_embedding = fwd.z_nodes.back();
  return fwd;
}

}  // namespace agnn
