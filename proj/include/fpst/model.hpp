#pragma once

#include <random>
#include <string>

#include "fpst/attention.hpp"
#include "fpst/optim.hpp"
#include "fpst/tokenizer.hpp"

namespace fpst {

struct ModelConfig {
  std::size_t dim = 16;
  std::size_t heads = 2;
  std::size_t layers = 1;
  std::size_t ffn_mult = 2;
  Act act = Act::ReLU;
  AttnMode mode = AttnMode::Linearized;
  bool layernorm = true;
  double kappa_init = 0.0;
  double dropout = 0.0;
  std::size_t eigvecs = 8;
  std::size_t hops = 0;
  std::size_t feat_dim = 0;  // 0: graph supplies no node features
  std::size_t num_classes = 0;  // 0: no logit head
};

// The full model: tokenizer projections, transformer blocks with one
// curvature per head per layer, and an optional stereographic logit head.
class FpsTModel {
 public:
  static FpsTModel build(const ModelConfig& cfg, std::mt19937_64& rng);

  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const std::vector<BlockWeights>& blocks() const { return blocks_; }
  const TokenizerParams& tokenizer() const { return tok_; }
  ProductSignature first_signature() const { return blocks_.front().signature(); }
  ProductSignature last_signature() const { return blocks_.back().signature(); }

  // (N+M, d) encoded tokens on the last layer's signature
  Tensor forward(const Graph& g, const Tensor& node_features, const Tensor& eigvecs,
                 bool training = false, std::mt19937_64* rng = nullptr);
  // first N rows of an encoding
  static Tensor node_rows(const Tensor& encoded, std::size_t n);
  // (n, C) logits for given node representations
  Tensor logits(const Tensor& node_reps);

  // post-optimizer projections: clamp curvatures, keep hyperplane offsets
  // on-manifold
  void after_step();

  std::vector<double> kappa_values() const;

 private:
  ModelConfig cfg_;
  ParamStore params_;
  std::vector<BlockWeights> blocks_;
  TokenizerParams tok_;
  Tensor logit_a_, logit_p_;
};

}  // namespace fpst
