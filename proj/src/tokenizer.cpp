#include "fpst/tokenizer.hpp"

#include <stdexcept>

namespace fpst {

Tensor tokenize(const Graph& g, const Tensor& node_features, const Tensor& eigvecs,
                const TokenizerParams& params, const Tensor& edge_features) {
  if (!eigvecs.defined() || eigvecs.ndim() != 2 || eigvecs.shape()[0] != g.n)
    throw std::invalid_argument("fpst: tokenize expects (n, k) node identifiers");
  if (eigvecs.shape()[1] != params.id_proj.shape()[0])
    throw std::invalid_argument("fpst: identifier projection expects " +
                                std::to_string(eigvecs.shape()[1]) + " eigenvector columns, got " +
                                shape_str(params.id_proj.shape()));
  Tensor P = matmul(eigvecs, params.id_proj);  // (n, d)
  Tensor e0 = gather_rows(params.type_ids, {0});
  Tensor e1 = gather_rows(params.type_ids, {1});

  Tensor node_tokens = add(mul_scalar(P, 2.0), e0);
  if (node_features.defined()) {
    if (node_features.shape()[0] != g.n)
      throw std::invalid_argument("fpst: node feature rows do not match node count");
    node_tokens = add(node_tokens, matmul(node_features, params.feat_proj));
  }
  if (g.m() == 0) return node_tokens;

  std::vector<std::size_t> us, vs;
  us.reserve(g.m());
  vs.reserve(g.m());
  for (auto [u, v] : g.edges) {
    us.push_back(u);
    vs.push_back(v);
  }
  Tensor edge_tokens = add(add(gather_rows(P, us), gather_rows(P, vs)), e1);
  if (edge_features.defined())
    edge_tokens = add(edge_tokens, matmul(edge_features, params.edge_feat_proj));
  return concat({node_tokens, edge_tokens}, 0);
}

Tensor lift_to_manifold(const Tensor& tokens, const ProductSignature& sig) {
  return exp0_product(tokens, sig);
}

}  // namespace fpst
