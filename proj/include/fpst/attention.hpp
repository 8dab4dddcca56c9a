#pragma once

#include <random>
#include <vector>

#include "fpst/nn.hpp"

namespace fpst {

enum class AttnMode { Dense, Linearized };

struct AttentionHead {
  Tensor Wq, Wk, Wv;  // (d, d')
  Tensor kappa;       // scalar parameter
};

struct BlockWeights {
  std::vector<AttentionHead> heads;
  Tensor ln1_gain, ln1_bias, ln2_gain, ln2_bias;  // (1, d)
  Tensor W1, W2;                                  // ffn
  Act act = Act::ReLU;
  bool layernorm = true;
  ProductSignature signature() const;
};

struct QKV {
  Tensor Q, K;  // tangent vectors based at the value rows, (n, d')
  Tensor V;     // stereographic points, (n, d')
};

// T is log0 of the full product input, (n, d).
QKV qkv_project(const Tensor& T, const AttentionHead& head);

// phi(PT(Q)) phi(PT(K))^T with phi = ELU + 1; strictly positive
Tensor attention_scores(const QKV& qkv, const Tensor& kappa);

Tensor aggregate_dense(const Tensor& V, const Tensor& alpha, const Tensor& kappa);
Tensor aggregate_linearized(const QKV& qkv, const Tensor& kappa);

Tensor mha(const Tensor& X, const std::vector<AttentionHead>& heads, const ProductSignature& sig,
           AttnMode mode);

Tensor transformer_block(const Tensor& X, const BlockWeights& block, AttnMode mode,
                         double dropout = 0.0, std::mt19937_64* rng = nullptr);

// run all blocks with inter-layer curvature transfer; returns points on
// the last layer's signature
Tensor encode(const Tensor& X, const std::vector<BlockWeights>& blocks, AttnMode mode,
              double dropout = 0.0, std::mt19937_64* rng = nullptr);

}  // namespace fpst
