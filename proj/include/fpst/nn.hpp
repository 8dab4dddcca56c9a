#pragma once

#include <functional>
#include <random>

#include "fpst/geometry.hpp"
#include "fpst/tensor.hpp"

namespace fpst {

enum class Act { ReLU, ELU, Tanh, Sigmoid };

Tensor apply_act(const Tensor& x, Act act);

inline constexpr double kEpsLayerNorm = 1e-5;

// exp0 o f o log0, blockwise over the product signature. `f` sees tangent
// coordinates of shape (..., d); when it changes the width, `sig_out`
// names the output signature.
Tensor st_wrap(const Tensor& X, const ProductSignature& sig_in, const ProductSignature& sig_out,
               const std::function<Tensor(const Tensor&)>& f);
Tensor st_wrap(const Tensor& X, const ProductSignature& sig,
               const std::function<Tensor(const Tensor&)>& f);

Tensor st_linear(const Tensor& X, const Tensor& W, const ProductSignature& sig_in,
                 const ProductSignature& sig_out);
Tensor st_activation(const Tensor& X, Act act, const ProductSignature& sig);
Tensor st_layernorm(const Tensor& X, const Tensor& gain, const Tensor& bias,
                    const ProductSignature& sig);
// linear -> activation -> linear; the hidden space reuses the layer's
// curvatures with a wider head dimension. `dropout` (rate, generator) is
// applied on the hidden tangent coordinates when training.
Tensor st_ffn(const Tensor& X, const Tensor& W1, const Tensor& W2, Act act,
              const ProductSignature& sig, double dropout = 0.0, std::mt19937_64* rng = nullptr);
Tensor interlayer_transfer(const Tensor& X, const ProductSignature& sig_from,
                           const ProductSignature& sig_to);

// Signed stereographic logits: per class, per head, the signed
// hyperplane distance scaled by the Riemannian norm of the normal,
// summed over heads. A and P are (C, d).
Tensor st_logits(const Tensor& X, const Tensor& A, const Tensor& P, const ProductSignature& sig);

// tangent layer normalization (feature axis), gain/bias of shape (1, d)
Tensor layernorm_tangent(const Tensor& T, const Tensor& gain, const Tensor& bias);

// inverted dropout mask as a constant tensor (training-time only)
Tensor dropout_tangent(const Tensor& T, double rate, std::mt19937_64& rng);

Tensor uniform_init(Shape s, double bound, std::mt19937_64& rng);

}  // namespace fpst
