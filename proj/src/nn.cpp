#include "fpst/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace fpst {

Tensor apply_act(const Tensor& x, Act act) {
  switch (act) {
    case Act::ReLU: return relu(x);
    case Act::ELU: return elu(x);
    case Act::Tanh: return tanh_t(x);
    case Act::Sigmoid: return sigmoid(x);
  }
  throw std::invalid_argument("fpst: unknown activation");
}

Tensor st_wrap(const Tensor& X, const ProductSignature& sig_in, const ProductSignature& sig_out,
               const std::function<Tensor(const Tensor&)>& f) {
  return exp0_product(f(log0_product(X, sig_in)), sig_out);
}

Tensor st_wrap(const Tensor& X, const ProductSignature& sig,
               const std::function<Tensor(const Tensor&)>& f) {
  return st_wrap(X, sig, sig, f);
}

Tensor st_linear(const Tensor& X, const Tensor& W, const ProductSignature& sig_in,
                 const ProductSignature& sig_out) {
  if (W.ndim() != 2 || W.shape()[0] != sig_in.dim() || W.shape()[1] != sig_out.dim())
    throw std::invalid_argument("fpst: st_linear weight shape " + shape_str(W.shape()) +
                                " incompatible with signatures");
  return st_wrap(X, sig_in, sig_out, [&](const Tensor& t) { return matmul(t, W); });
}

Tensor st_activation(const Tensor& X, Act act, const ProductSignature& sig) {
  return st_wrap(X, sig, [&](const Tensor& t) { return apply_act(t, act); });
}

Tensor layernorm_tangent(const Tensor& T, const Tensor& gain, const Tensor& bias) {
  std::size_t axis = T.ndim() - 1;
  Tensor mu = mean(T, axis);
  Tensor cent = sub(T, mu);
  Tensor var = mean(square(cent), axis);
  Tensor nrm = div(cent, sqrt_t(add_scalar(var, kEpsLayerNorm)));
  return add(mul(nrm, gain), bias);
}

Tensor st_layernorm(const Tensor& X, const Tensor& gain, const Tensor& bias,
                    const ProductSignature& sig) {
  return st_wrap(X, sig, [&](const Tensor& t) { return layernorm_tangent(t, gain, bias); });
}

Tensor dropout_tangent(const Tensor& T, double rate, std::mt19937_64& rng) {
  if (rate <= 0.0) return T;
  if (rate >= 1.0) throw std::invalid_argument("fpst: dropout rate must be < 1");
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<double> mask(T.size());
  double keep = 1.0 - rate;
  for (auto& m : mask) m = uni(rng) < keep ? 1.0 / keep : 0.0;
  return mul(T, Tensor(T.shape(), std::move(mask)));
}

Tensor st_ffn(const Tensor& X, const Tensor& W1, const Tensor& W2, Act act,
              const ProductSignature& sig, double dropout, std::mt19937_64* rng) {
  std::size_t hidden = W1.shape()[1];
  if (hidden % sig.heads() != 0)
    throw std::invalid_argument("fpst: ffn hidden width must divide by head count");
  ProductSignature sig_h{sig.kappas, hidden / sig.heads()};
  Tensor h = st_linear(X, W1, sig, sig_h);
  h = st_wrap(h, sig_h, [&](const Tensor& t) {
    Tensor a = apply_act(t, act);
    return (dropout > 0.0 && rng) ? dropout_tangent(a, dropout, *rng) : a;
  });
  return st_linear(h, W2, sig_h, sig);
}

Tensor interlayer_transfer(const Tensor& X, const ProductSignature& sig_from,
                           const ProductSignature& sig_to) {
  if (sig_from.dim() != sig_to.dim() || sig_from.heads() != sig_to.heads())
    throw std::invalid_argument("fpst: interlayer transfer requires matching layout");
  return exp0_product(log0_product(X, sig_from), sig_to);
}

Tensor st_logits(const Tensor& X, const Tensor& A, const Tensor& P, const ProductSignature& sig) {
  if (A.ndim() != 2 || A.shape()[1] != sig.dim() || P.shape() != A.shape())
    throw std::invalid_argument("fpst: logit head parameters must be (C, d)");
  std::size_t C = A.shape()[0];
  auto xb = split(X, X.ndim() - 1, sig.heads());
  std::vector<Tensor> logits;
  logits.reserve(C);
  for (std::size_t c = 0; c < C; ++c) {
    Tensor ac = gather_rows(A, {c});  // (1, d)
    Tensor pc = gather_rows(P, {c});
    auto ab = split(ac, 1, sig.heads());
    auto pb = split(pc, 1, sig.heads());
    Tensor acc;
    for (std::size_t h = 0; h < sig.heads(); ++h) {
      const Tensor& k = sig.kappas[h];
      Tensor z = mobius_add(neg(pb[h]), xb[h], k);              // (n, d')
      Tensor ip = sum(mul(z, ab[h]), z.ndim() - 1);             // (n, 1)
      Tensor dist = hyperplane_distance(xb[h], ab[h], pb[h], k);
      Tensor na = mul(conformal_factor(pb[h], k), norm(ab[h]));  // Riemannian norm of a at p
      Tensor term = mul(mul(sign_t(ip), na), dist);
      acc = h == 0 ? term : add(acc, term);
    }
    logits.push_back(acc);
  }
  return concat(logits, 1);
}

Tensor uniform_init(Shape s, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(-bound, bound);
  std::vector<double> v(numel(s));
  for (auto& x : v) x = uni(rng);
  return Tensor(std::move(s), std::move(v));
}

}  // namespace fpst
