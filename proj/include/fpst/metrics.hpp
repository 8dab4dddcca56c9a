#pragma once

#include <random>
#include <vector>

#include "fpst/geometry.hpp"
#include "fpst/graph.hpp"

namespace fpst {

// Negative log-likelihood over softmax of negative distances: each
// directed edge (u, v) scores the positive against u's non-neighbors.
// neg_samples == 0 uses every non-neighbor; otherwise up to neg_samples
// are drawn per anchor from `rng`.
Tensor reconstruction_loss(const Tensor& reps, const Graph& g, const ProductSignature& sig,
                           std::size_t neg_samples = 0, std::mt19937_64* rng = nullptr);

// Mean over nodes of the average precision of the node's neighbor set
// under the distance ranking (ties broken by node id). Zero-degree nodes
// are excluded. Pure evaluation, no gradients.
double map_score(const Tensor& reps, const Graph& g, const ProductSignature& sig);

// softmax cross-entropy, mean over rows
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels);

struct ClfMetrics {
  double accuracy = 0.0;
  double micro_f1 = 0.0;
};
ClfMetrics classification_metrics(const std::vector<int>& preds, const std::vector<int>& labels,
                                  const std::vector<bool>& mask);

// Discrete sectional curvature from squared BFS distances; b and c must
// be distinct neighbors of m and the graph connected.
double graph_sectional_curvature(const Graph& g, std::size_t m, std::size_t b, std::size_t c);

struct CurvatureHistogram {
  std::vector<double> samples;
  double mean = 0.0;
};
// Up to samples_per_node random neighbor pairs for each node of degree
// >= 2; samples_per_node == 0 enumerates every pair.
CurvatureHistogram curvature_histogram(const Graph& g, std::size_t samples_per_node,
                                       std::uint64_t seed);

// fraction of edges joining equal-label endpoints
double homophily(const Graph& g);

}  // namespace fpst
