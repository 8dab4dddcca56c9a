#pragma once

#include "fpst/geometry.hpp"
#include "fpst/graph.hpp"

namespace fpst {

// Learnable pieces of the token construction. feat_proj maps raw node
// features to model width; id_proj maps the k Laplacian eigenvectors;
// type_ids distinguishes node from edge tokens.
struct TokenizerParams {
  Tensor feat_proj;       // (f, d); undefined when the graph has no features
  Tensor edge_feat_proj;  // optional (f_e, d)
  Tensor id_proj;         // (k, d)
  Tensor type_ids;        // (2, d)
};

// (N+M, d) token matrix: node u -> X_u + 2 P_u + E_0, edge (u,v) ->
// X_(u,v) + P_u + P_v + E_1. Nodes come first in id order, then edges in
// input order. Missing features contribute zeros.
Tensor tokenize(const Graph& g, const Tensor& node_features, const Tensor& eigvecs,
                const TokenizerParams& params, const Tensor& edge_features = Tensor());

// tokens are tangent vectors at the origin of the first layer's space
Tensor lift_to_manifold(const Tensor& tokens, const ProductSignature& sig);

}  // namespace fpst
