#include "fpst/attention.hpp"

#include <cmath>
#include <stdexcept>

namespace fpst {

ProductSignature BlockWeights::signature() const {
  ProductSignature sig;
  for (const auto& h : heads) sig.kappas.push_back(h.kappa);
  sig.head_dim = heads[0].Wq.shape()[1];
  return sig;
}

QKV qkv_project(const Tensor& T, const AttentionHead& head) {
  QKV out;
  out.Q = matmul(T, head.Wq);
  out.K = matmul(T, head.Wk);
  out.V = clip_to_chart(exp0(matmul(T, head.Wv), head.kappa), head.kappa);
  return out;
}

namespace {
Tensor phi(const Tensor& x) { return add_scalar(elu(x), 1.0); }
}  // namespace

Tensor attention_scores(const QKV& qkv, const Tensor& kappa) {
  Tensor qt = pt_to_origin(qkv.V, qkv.Q, kappa);
  Tensor kt = pt_to_origin(qkv.V, qkv.K, kappa);
  return matmul(phi(qt), transpose(phi(kt)));
}

Tensor aggregate_dense(const Tensor& V, const Tensor& alpha, const Tensor& kappa) {
  return einstein_midpoint(V, alpha, kappa);
}

Tensor aggregate_linearized(const QKV& qkv, const Tensor& kappa) {
  Tensor qt = pt_to_origin(qkv.V, qkv.Q, kappa);
  Tensor kt = pt_to_origin(qkv.V, qkv.K, kappa);
  Tensor lam = conformal_factor(qkv.V, kappa);  // (n, 1)
  Tensor lm1 = add_scalar(lam, -1.0);
  for (double v : lm1.data())
    if (std::abs(v) < 1e-9)
      throw std::runtime_error("fpst: linearized attention requires |lambda - 1| >= 1e-9 "
                               "(value row at the spherical boundary)");
  Tensor phi_q = phi(qt);                    // (n, d')
  Tensor phi_kp = mul(phi(kt), lm1);         // (n, d')
  Tensor vt = mul(qkv.V, div(lam, lm1));     // (n, d')
  Tensor M = matmul(transpose(phi_kp), vt);  // (d', d') -- n-independent intermediate
  Tensor num = matmul(phi_q, M);             // (n, d')
  Tensor den = matmul(phi_q, transpose(sum(phi_kp, 0)));  // (n, 1)
  for (std::size_t i = 0; i < den.size(); ++i)
    if (den[i] <= kEpsDen)
      throw std::runtime_error("fpst: linearized attention normalizer below eps_den at row " +
                               std::to_string(i));
  return mobius_scalar(0.5, div(num, den), kappa);
}

Tensor mha(const Tensor& X, const std::vector<AttentionHead>& heads, const ProductSignature& sig,
           AttnMode mode) {
  Tensor T = log0_product(X, sig);
  std::vector<Tensor> out;
  out.reserve(heads.size());
  for (const auto& head : heads) {
    QKV qkv = qkv_project(T, head);
    if (mode == AttnMode::Dense) {
      Tensor alpha = attention_scores(qkv, head.kappa);
      out.push_back(aggregate_dense(qkv.V, alpha, head.kappa));
    } else {
      out.push_back(aggregate_linearized(qkv, head.kappa));
    }
  }
  return concat(out, X.ndim() - 1);
}

Tensor transformer_block(const Tensor& X, const BlockWeights& block, AttnMode mode, double dropout,
                         std::mt19937_64* rng) {
  ProductSignature sig = block.signature();
  Tensor a_in = block.layernorm ? st_layernorm(X, block.ln1_gain, block.ln1_bias, sig) : X;
  Tensor x1 = mobius_add_product(mha(a_in, block.heads, sig, mode), X, sig);
  Tensor f_in = block.layernorm ? st_layernorm(x1, block.ln2_gain, block.ln2_bias, sig) : x1;
  Tensor f = st_ffn(f_in, block.W1, block.W2, block.act, sig, dropout, rng);
  return mobius_add_product(f, x1, sig);
}

Tensor encode(const Tensor& X, const std::vector<BlockWeights>& blocks, AttnMode mode,
              double dropout, std::mt19937_64* rng) {
  if (blocks.empty()) throw std::invalid_argument("fpst: encode needs at least one block");
  Tensor h = X;
  for (std::size_t l = 0; l < blocks.size(); ++l) {
    h = transformer_block(h, blocks[l], mode, dropout, rng);
    if (l + 1 < blocks.size())
      h = interlayer_transfer(h, blocks[l].signature(), blocks[l + 1].signature());
  }
  return h;
}

}  // namespace fpst
