#pragma once

#include <cstddef>
#include <random>
#include <utility>
#include <vector>

#include "fpst/tensor.hpp"

namespace fpst {

// Undirected simple graph. Edges are stored once with u < v.
struct Graph {
  std::size_t n = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::vector<int> labels;  // empty when absent
  std::vector<int> split;   // 0 train, 1 val, 2 test; empty when absent

  std::size_t m() const { return edges.size(); }
  std::vector<std::vector<std::size_t>> adjacency() const;
  std::vector<std::vector<bool>> adjacency_matrix() const;
};

Graph make_graph(std::size_t n, std::vector<std::pair<std::size_t, std::size_t>> edges);

// k smallest-eigenvalue eigenvectors of the symmetric normalized
// Laplacian I - D^{-1/2} A D^{-1/2}, columns ordered by eigenvalue and
// sign-fixed (largest-magnitude entry positive). Isolated nodes carry a
// zero D^{-1/2} entry. Result (n, k), no gradient.
Tensor laplacian_eigvecs(const Graph& g, std::size_t k, bool random_signs = false,
                         std::mt19937_64* rng = nullptr);

// `hops` applications of D^{-1/2} (A + I) D^{-1/2} to the feature rows
Tensor hop_premix(const Tensor& features, const Graph& g, std::size_t hops);

// BFS hop distances from src; -1 where unreachable
std::vector<long> bfs_distances(const Graph& g, std::size_t src);

}  // namespace fpst
