#include "fpst/graph.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <stdexcept>

namespace fpst {

std::vector<std::vector<std::size_t>> Graph::adjacency() const {
  std::vector<std::vector<std::size_t>> adj(n);
  for (auto [u, v] : edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());
  return adj;
}

std::vector<std::vector<bool>> Graph::adjacency_matrix() const {
  std::vector<std::vector<bool>> a(n, std::vector<bool>(n, false));
  for (auto [u, v] : edges) {
    a[u][v] = true;
    a[v][u] = true;
  }
  return a;
}

Graph make_graph(std::size_t n, std::vector<std::pair<std::size_t, std::size_t>> edges) {
  Graph g;
  g.n = n;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (auto [u, v] : edges) {
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    if (v >= n) throw std::invalid_argument("fpst: edge endpoint out of range");
    if (seen.insert({u, v}).second) g.edges.push_back({u, v});
  }
  return g;
}

Tensor laplacian_eigvecs(const Graph& g, std::size_t k, bool random_signs, std::mt19937_64* rng) {
  if (k > g.n) throw std::invalid_argument("fpst: requested more eigenvectors than nodes");
  std::size_t n = g.n;
  Eigen::MatrixXd lap = Eigen::MatrixXd::Identity(long(n), long(n));
  std::vector<double> deg(n, 0.0);
  for (auto [u, v] : g.edges) {
    deg[u] += 1.0;
    deg[v] += 1.0;
  }
  std::vector<double> dinv(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) dinv[i] = deg[i] > 0.0 ? 1.0 / std::sqrt(deg[i]) : 0.0;
  for (auto [u, v] : g.edges) {
    double w = dinv[u] * dinv[v];
    lap(long(u), long(v)) -= w;
    lap(long(v), long(u)) -= w;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("fpst: laplacian eigendecomposition failed");
  const Eigen::MatrixXd& vecs = solver.eigenvectors();  // ascending eigenvalues
  std::vector<double> out(n * k);
  std::uniform_int_distribution<int> coin(0, 1);
  for (std::size_t c = 0; c < k; ++c) {
    double sign = 1.0;
    if (random_signs && rng) {
      sign = coin(*rng) ? 1.0 : -1.0;
    } else {
      std::size_t best = 0;
      double mag = -1.0;
      for (std::size_t r = 0; r < n; ++r) {
        double a = std::abs(vecs(long(r), long(c)));
        if (a > mag + 1e-12) {
          mag = a;
          best = r;
        }
      }
      if (vecs(long(best), long(c)) < 0.0) sign = -1.0;
    }
    for (std::size_t r = 0; r < n; ++r) out[r * k + c] = sign * vecs(long(r), long(c));
  }
  return Tensor({n, k}, std::move(out));
}

Tensor hop_premix(const Tensor& features, const Graph& g, std::size_t hops) {
  if (features.ndim() != 2 || features.shape()[0] != g.n)
    throw std::invalid_argument("fpst: hop_premix features must be (n, f), got " +
                                shape_str(features.shape()));
  if (hops == 0) return features;
  std::size_t n = g.n, f = features.shape()[1];
  std::vector<double> deg(n, 1.0);  // self-loop
  for (auto [u, v] : g.edges) {
    deg[u] += 1.0;
    deg[v] += 1.0;
  }
  std::vector<double> dinv(n);
  for (std::size_t i = 0; i < n; ++i) dinv[i] = 1.0 / std::sqrt(deg[i]);
  std::vector<double> cur = features.data();
  std::vector<double> next(n * f);
  for (std::size_t h = 0; h < hops; ++h) {
    for (std::size_t i = 0; i < n; ++i) {
      double w = dinv[i] * dinv[i];
      for (std::size_t j = 0; j < f; ++j) next[i * f + j] = w * cur[i * f + j];
    }
    for (auto [u, v] : g.edges) {
      double w = dinv[u] * dinv[v];
      for (std::size_t j = 0; j < f; ++j) {
        next[u * f + j] += w * cur[v * f + j];
        next[v * f + j] += w * cur[u * f + j];
      }
    }
    std::swap(cur, next);
  }
  return Tensor({n, f}, std::move(cur));
}

std::vector<long> bfs_distances(const Graph& g, std::size_t src) {
  auto adj = g.adjacency();
  std::vector<long> dist(g.n, -1);
  std::deque<std::size_t> q{src};
  dist[src] = 0;
  while (!q.empty()) {
    std::size_t u = q.front();
    q.pop_front();
    for (std::size_t v : adj[u])
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        q.push_back(v);
      }
  }
  return dist;
}

}  // namespace fpst
