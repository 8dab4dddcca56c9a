#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "fpst/attention.hpp"

using namespace fpst;

#include "flat_reference.hpp"

using flatref::Mat;
using flatref::make_block;
using flatref::mirror_block;
using flatref::to_mat;
namespace {

Tensor random_points(std::mt19937_64& rng, std::size_t n, std::size_t d, double scale = 0.3) {
  return uniform_init({n, d}, scale, rng);
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("qkv projection flat case and shapes") {
  std::mt19937_64 rng(1);
  AttentionHead head;
  head.Wq = uniform_init({4, 2}, 0.5, rng);
  head.Wk = uniform_init({4, 2}, 0.5, rng);
  head.Wv = uniform_init({4, 2}, 0.5, rng);
  head.kappa = Tensor::scalar(0.0);
  Tensor T = random_points(rng, 3, 4);
  QKV qkv = qkv_project(T, head);
  CHECK(qkv.Q.shape() == Shape{3, 2});
  CHECK(qkv.K.shape() == Shape{3, 2});
  CHECK(qkv.V.shape() == Shape{3, 2});
  CHECK(max_abs_diff(qkv.Q, matmul(T, head.Wq)) == 0.0);
  CHECK(max_abs_diff(qkv.V, matmul(T, head.Wv)) < 1e-15);

  // ball condition on V at kappa=-1
  head.kappa = Tensor::scalar(-1.0);
  QKV qb = qkv_project(T, head);
  Tensor nv = norm(qb.V);
  for (std::size_t i = 0; i < nv.size(); ++i) CHECK(nv[i] < 1.0);
}

TEST_CASE("attention scores flat limit and positivity") {
  std::mt19937_64 rng(2);
  AttentionHead head;
  head.Wq = uniform_init({4, 2}, 0.5, rng);
  head.Wk = uniform_init({4, 2}, 0.5, rng);
  head.Wv = uniform_init({4, 2}, 0.5, rng);
  head.kappa = Tensor::scalar(0.0);
  Tensor T = random_points(rng, 5, 4);
  QKV qkv = qkv_project(T, head);
  Tensor alpha = attention_scores(qkv, head.kappa);
  Tensor ref = matmul(add_scalar(elu(qkv.Q), 1.0), transpose(add_scalar(elu(qkv.K), 1.0)));
  CHECK(max_abs_diff(alpha, ref) < 1e-12);

  // zero Q, K give the constant d' matrix
  QKV zq;
  zq.Q = Tensor::zeros({3, 2});
  zq.K = Tensor::zeros({3, 2});
  zq.V = Tensor::zeros({3, 2});
  Tensor az = attention_scores(zq, Tensor::scalar(0.0));
  for (std::size_t i = 0; i < az.size(); ++i) CHECK(az[i] == doctest::Approx(2.0));

  // strict positivity at kappa=-0.8
  head.kappa = Tensor::scalar(-0.8);
  QKV qh = qkv_project(T, head);
  Tensor ah = attention_scores(qh, head.kappa);
  for (std::size_t i = 0; i < ah.size(); ++i) CHECK(ah[i] > 0.0);
}

TEST_CASE("dense aggregation flat limit is the kernel-weighted mean") {
  Tensor V({2, 2}, {1.0, 0.0, 3.0, 4.0});
  Tensor alpha({2, 2}, {1.0, 1.0, 3.0, 1.0});
  Tensor out = aggregate_dense(V, alpha, Tensor::scalar(0.0));
  CHECK(out[0] == doctest::Approx(2.0));
  CHECK(out[1] == doctest::Approx(2.0));
  CHECK(out[2] == doctest::Approx(1.5));
  CHECK(out[3] == doctest::Approx(1.0));

  // one-hot rows permute V
  Tensor perm({2, 2}, {0.0, 1.0, 1.0, 0.0});
  Tensor p = aggregate_dense(V, perm, Tensor::scalar(0.0));
  CHECK(p[0] == doctest::Approx(3.0));
  CHECK(p[2] == doctest::Approx(1.0));

  // symmetric pair collapses to the origin at kappa=-1
  Tensor Vs({2, 2}, {0.8, 0.0, -0.8, 0.0});
  Tensor u = Tensor::full({2, 2}, 1.0);
  Tensor s = aggregate_dense(Vs, u, Tensor::scalar(-1.0));
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(s[i]) < 1e-12);
}

TEST_CASE("dense and linearized agree to 1e-8") {
  std::mt19937_64 rng(3);
  for (double k : {-0.9, -0.2, 0.0, 0.3, 1.1}) {
    AttentionHead head;
    head.Wq = uniform_init({8, 4}, 0.4, rng);
    head.Wk = uniform_init({8, 4}, 0.4, rng);
    head.Wv = uniform_init({8, 4}, 0.4, rng);
    head.kappa = Tensor::scalar(k);
    Tensor T = random_points(rng, 64, 8);
    QKV qkv = qkv_project(T, head);
    Tensor dense = aggregate_dense(qkv.V, attention_scores(qkv, head.kappa), head.kappa);
    Tensor lin = aggregate_linearized(qkv, head.kappa);
    CHECK(max_abs_diff(dense, lin) < 1e-8);
  }
}

TEST_CASE("linearized peak allocation does not scale with token count") {
  std::mt19937_64 rng(4);
  AttentionHead head;
  head.Wq = uniform_init({8, 4}, 0.4, rng);
  head.Wk = uniform_init({8, 4}, 0.4, rng);
  head.Wv = uniform_init({8, 4}, 0.4, rng);
  head.kappa = Tensor::scalar(-0.5);
  auto peak_for = [&](std::size_t n) {
    Tensor T = random_points(rng, n, 8);
    QKV qkv = qkv_project(T, head);
    alloc_stats().reset_peaks();
    Tensor out = aggregate_linearized(qkv, head.kappa);
    std::size_t single = alloc_stats().max_single_alloc;
    return single;
  };
  std::size_t p1 = peak_for(1000);
  std::size_t p4 = peak_for(4000);
  // the largest intermediate stays (n, d'); nothing quadratic in n
  CHECK(p1 <= 1000 * 8 * sizeof(double) * 2);
  CHECK(p4 <= 4000 * 8 * sizeof(double) * 2);
  CHECK(p4 <= 4 * p1);
}

TEST_CASE("mha single head equals the head result") {
  std::mt19937_64 rng(5);
  BlockWeights b = make_block(rng, 4, 1, -0.6);
  ProductSignature sig = b.signature();
  Tensor X = project_product(random_points(rng, 6, 4), sig);
  Tensor full = mha(X, b.heads, sig, AttnMode::Dense);
  QKV qkv = qkv_project(log0_product(X, sig), b.heads[0]);
  Tensor one = aggregate_dense(qkv.V, attention_scores(qkv, b.heads[0].kappa), b.heads[0].kappa);
  CHECK(max_abs_diff(full, one) == 0.0);
}

TEST_CASE("flat mha matches the Euclidean reference") {
  std::mt19937_64 rng(6);
  BlockWeights b = make_block(rng, 8, 2, 0.0);
  Tensor X = random_points(rng, 10, 8);
  Tensor out = mha(X, b.heads, b.signature(), AttnMode::Dense);
  flatref::Block e = mirror_block(b);
  Mat ref = flatref::mha(to_mat(X), e.heads);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = 0; j < 8; ++j) CHECK(out[i * 8 + j] == doctest::Approx(ref[i][j]).epsilon(1e-8));
}

TEST_CASE("flat transformer block matches the Euclidean reference") {
  std::mt19937_64 rng(7);
  BlockWeights b = make_block(rng, 8, 2, 0.0);
  Tensor X = random_points(rng, 10, 8);
  for (AttnMode mode : {AttnMode::Dense, AttnMode::Linearized}) {
    Tensor out = transformer_block(X, b, mode);
    Mat ref = flatref::block(to_mat(X), mirror_block(b));
    for (std::size_t i = 0; i < 10; ++i)
      for (std::size_t j = 0; j < 8; ++j)
        CHECK(std::abs(out[i * 8 + j] - ref[i][j]) < 1e-7);
  }
}

TEST_CASE("flat 2-layer encode matches the Euclidean reference at (32,16,2,2)") {
  std::mt19937_64 rng(8);
  std::vector<BlockWeights> blocks = {make_block(rng, 16, 2, 0.0), make_block(rng, 16, 2, 0.0)};
  Tensor X = random_points(rng, 32, 16);
  Mat ref = flatref::block(flatref::block(to_mat(X), mirror_block(blocks[0])), mirror_block(blocks[1]));
  for (AttnMode mode : {AttnMode::Dense, AttnMode::Linearized}) {
    Tensor out = encode(X, blocks, mode);
    double m = 0;
    for (std::size_t i = 0; i < 32; ++i)
      for (std::size_t j = 0; j < 16; ++j) m = std::max(m, std::abs(out[i * 16 + j] - ref[i][j]));
    CHECK(m < 1e-7);
  }
}

TEST_CASE("zeroed attention and ffn weights leave X unchanged") {
  std::mt19937_64 rng(9);
  BlockWeights b = make_block(rng, 4, 2, -0.4);
  b.layernorm = false;
  for (auto& h : b.heads) {
    h.Wq = Tensor::zeros({4, 2});
    h.Wk = Tensor::zeros({4, 2});
    h.Wv = Tensor::zeros({4, 2});
  }
  b.W1 = Tensor::zeros({4, 8});
  b.W2 = Tensor::zeros({8, 4});
  ProductSignature sig = b.signature();
  Tensor X = project_product(random_points(rng, 5, 4), sig);
  Tensor out = transformer_block(X, b, AttnMode::Dense);
  CHECK(max_abs_diff(out, X) < 1e-9);
}

TEST_CASE("gradcheck through a block at mixed curvature") {
  std::mt19937_64 rng(10);
  BlockWeights b = make_block(rng, 4, 2, 0.0);
  b.heads[0].kappa = Tensor::scalar(-0.5);
  b.heads[1].kappa = Tensor::scalar(0.5);
  ProductSignature sig = b.signature();
  Tensor X = project_product(random_points(rng, 3, 4, 0.2), sig);
  Tensor W = b.heads[0].Wq;
  Tensor Wp({4, 2}, W.data(), true);
  auto f = [&](const Tensor& w) {
    BlockWeights bb = b;
    bb.heads[0].Wq = w;
    return sum_all(transformer_block(X, bb, AttnMode::Dense));
  };
  CHECK(gradcheck(f, Wp) < 1e-4);
  // curvature gradient through the block
  Tensor kp = Tensor::scalar(-0.5, true);
  auto g = [&](const Tensor& k) {
    BlockWeights bb = b;
    bb.heads[0].kappa = k;
    return sum_all(transformer_block(X, bb, AttnMode::Dense));
  };
  CHECK(gradcheck(g, kp) < 1e-4);
}

TEST_CASE("token permutation permutes outputs") {
  std::mt19937_64 rng(11);
  BlockWeights b = make_block(rng, 4, 2, -0.3);
  ProductSignature sig = b.signature();
  Tensor X = project_product(random_points(rng, 5, 4), sig);
  std::vector<std::size_t> perm = {3, 1, 4, 0, 2};
  Tensor Xp = gather_rows(X, perm);
  Tensor out = mha(X, b.heads, sig, AttnMode::Dense);
  Tensor outp = mha(Xp, b.heads, sig, AttnMode::Dense);
  Tensor expect = gather_rows(out, perm);
  CHECK(max_abs_diff(outp, expect) < 1e-12);
}

TEST_CASE("encode is deterministic at inference") {
  std::mt19937_64 rng(12);
  std::vector<BlockWeights> blocks = {make_block(rng, 4, 2, -0.2)};
  Tensor X = project_product(random_points(rng, 6, 4), blocks[0].signature());
  Tensor a = encode(X, blocks, AttnMode::Linearized);
  Tensor bo = encode(X, blocks, AttnMode::Linearized);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == bo[i]);
}
