#include "fpst/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fpst {

namespace {

// full pairwise product distance matrix (n, n) via broadcasting
Tensor pairwise_product_distance(const Tensor& reps, const ProductSignature& sig) {
  std::size_t n = reps.shape()[0], d = reps.shape()[1];
  Tensor a = reshape(reps, {n, 1, d});
  Tensor b = reshape(reps, {1, n, d});
  return reshape(product_distance(a, b, sig), {n, n});
}

constexpr double kMaskedOut = -1e30;

}  // namespace

Tensor reconstruction_loss(const Tensor& reps, const Graph& g, const ProductSignature& sig,
                           std::size_t neg_samples, std::mt19937_64* rng) {
  if (reps.ndim() != 2 || reps.shape()[0] != g.n)
    throw std::invalid_argument("fpst: reconstruction_loss expects (n, d) node representations");
  std::size_t n = g.n;
  Tensor D = pairwise_product_distance(reps, sig);
  auto adjm = g.adjacency_matrix();

  // additive mask selecting each anchor's negative set
  std::vector<double> mask(n * n, kMaskedOut);
  for (std::size_t u = 0; u < n; ++u) {
    std::vector<std::size_t> negs;
    for (std::size_t v = 0; v < n; ++v)
      if (v != u && !adjm[u][v]) negs.push_back(v);
    if (neg_samples > 0 && negs.size() > neg_samples && rng) {
      std::shuffle(negs.begin(), negs.end(), *rng);
      negs.resize(neg_samples);
    }
    for (std::size_t v : negs) mask[u * n + v] = 0.0;
  }
  // per-anchor log-sum-exp over negatives of exp(-d)
  Tensor neg_lse = logsumexp(add(neg(D), Tensor({n, n}, std::move(mask))));  // (n, 1)

  std::vector<std::size_t> anchors, positives;
  anchors.reserve(2 * g.m());
  positives.reserve(2 * g.m());
  for (auto [u, v] : g.edges) {
    anchors.push_back(u);
    positives.push_back(v);
    anchors.push_back(v);
    positives.push_back(u);
  }
  std::size_t t = anchors.size();
  Tensor d_pos = reshape(gather_pairs(D, anchors, positives), {t, 1});
  Tensor a_row = gather_rows(neg_lse, anchors);  // (t, 1)
  // -log softmax of the positive within {v} + negatives
  Tensor denom = logsumexp(concat({neg(d_pos), a_row}, 1));  // (t, 1)
  return sum_all(add(d_pos, denom));
}

double map_score(const Tensor& reps, const Graph& g, const ProductSignature& sig) {
  if (g.n < 2) throw std::invalid_argument("fpst: map_score needs at least 2 nodes");
  Tensor D = pairwise_product_distance(reps.detached(), sig);
  auto adjm = g.adjacency_matrix();
  auto adj = g.adjacency();
  std::size_t n = g.n;
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t u = 0; u < n; ++u) {
    if (adj[u].empty()) continue;
    std::vector<std::size_t> order;
    order.reserve(n - 1);
    for (std::size_t v = 0; v < n; ++v)
      if (v != u) order.push_back(v);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      double da = D[u * n + a], db = D[u * n + b];
      if (da != db) return da < db;
      return a < b;
    });
    double hits = 0.0, ap = 0.0;
    for (std::size_t r = 0; r < order.size(); ++r)
      if (adjm[u][order[r]]) {
        hits += 1.0;
        ap += hits / double(r + 1);
      }
    total += ap / double(adj[u].size());
    ++counted;
  }
  return counted ? total / double(counted) : 0.0;
}

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
  if (logits.ndim() != 2 || logits.shape()[0] != labels.size())
    throw std::invalid_argument("fpst: cross_entropy logits " + shape_str(logits.shape()) +
                                " do not match " + std::to_string(labels.size()) + " labels");
  std::size_t rows = logits.shape()[0], C = logits.shape()[1];
  std::vector<std::size_t> I(rows), J(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    if (labels[r] < 0 || std::size_t(labels[r]) >= C)
      throw std::invalid_argument("fpst: label id out of range at row " + std::to_string(r));
    I[r] = r;
    J[r] = std::size_t(labels[r]);
  }
  Tensor lse = logsumexp(logits);                       // (rows, 1)
  Tensor truth = gather_pairs(logits, I, J);            // (rows)
  return mean(sub(reshape(lse, {rows}), truth), 0);
}

ClfMetrics classification_metrics(const std::vector<int>& preds, const std::vector<int>& labels,
                                  const std::vector<bool>& mask) {
  std::size_t tp = 0, total = 0;
  std::size_t fp = 0, fn = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (!mask[i]) continue;
    ++total;
    if (preds[i] == labels[i]) {
      ++tp;
    } else {
      ++fp;  // predicted class gains a false positive
      ++fn;  // true class gains a false negative
    }
  }
  ClfMetrics m;
  if (total == 0) return m;
  m.accuracy = double(tp) / double(total);
  m.micro_f1 = double(2 * tp) / double(2 * tp + fp + fn);
  return m;
}

double graph_sectional_curvature(const Graph& g, std::size_t m, std::size_t b, std::size_t c) {
  if (b == c) throw std::invalid_argument("fpst: sectional curvature needs distinct neighbors");
  auto adjm = g.adjacency_matrix();
  if (!adjm[m][b] || !adjm[m][c])
    throw std::invalid_argument("fpst: b and c must both be neighbors of m");
  auto dm = bfs_distances(g, m);
  auto db = bfs_distances(g, b);
  auto dc = bfs_distances(g, c);
  for (std::size_t a = 0; a < g.n; ++a)
    if (dm[a] < 0) throw std::runtime_error("fpst: sectional curvature requires a connected graph");
  double dbc2 = double(db[c] * db[c]);
  double acc = 0.0;
  for (std::size_t a = 0; a < g.n; ++a) {
    acc += double(dm[a] * dm[a]) + dbc2 / 4.0 -
           (double(db[a] * db[a]) + double(dc[a] * dc[a])) / 2.0;
  }
  return acc / double(g.n);
}

CurvatureHistogram curvature_histogram(const Graph& g, std::size_t samples_per_node,
                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto adj = g.adjacency();
  CurvatureHistogram out;
  for (std::size_t m = 0; m < g.n; ++m) {
    const auto& nb = adj[m];
    if (nb.size() < 2) continue;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < nb.size(); ++i)
      for (std::size_t j = i + 1; j < nb.size(); ++j) pairs.push_back({nb[i], nb[j]});
    if (samples_per_node > 0 && pairs.size() > samples_per_node) {
      std::shuffle(pairs.begin(), pairs.end(), rng);
      pairs.resize(samples_per_node);
    }
    for (auto [b, c] : pairs) out.samples.push_back(graph_sectional_curvature(g, m, b, c));
  }
  if (!out.samples.empty())
    out.mean = std::accumulate(out.samples.begin(), out.samples.end(), 0.0) /
               double(out.samples.size());
  return out;
}

double homophily(const Graph& g) {
  if (g.labels.size() != g.n) throw std::invalid_argument("fpst: homophily requires node labels");
  if (g.edges.empty()) throw std::invalid_argument("fpst: homophily of an edgeless graph");
  std::size_t same = 0;
  for (auto [u, v] : g.edges)
    if (g.labels[u] == g.labels[v]) ++same;
  return double(same) / double(g.m());
}

}  // namespace fpst
