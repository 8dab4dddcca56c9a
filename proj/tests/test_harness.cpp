#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fpst/train.hpp"

using namespace fpst;

namespace {

std::string write_tmp(const std::string& name, const std::string& content) {
  std::string path = "/tmp/fpst_test_" + name;
  std::ofstream out(path);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("edge list loading") {
  auto r = load_edge_list(write_tmp("e1.txt", "0 1\n1 2\n"));
  CHECK(r.graph.n == 3);
  CHECK(r.graph.m() == 2);

  auto dedup = load_edge_list(write_tmp("e2.txt", "0 1\n1 0\n# c\n"));
  CHECK(dedup.graph.m() == 1);
  CHECK(dedup.duplicates_dropped == 1);

  auto loops = load_edge_list(write_tmp("e3.txt", "0 0\n0 1\n"));
  CHECK(loops.graph.m() == 1);
  CHECK(loops.self_loops_dropped == 1);

  CHECK_THROWS(load_edge_list(write_tmp("e4.txt", "0 1\nx y\n")));
  CHECK_THROWS(load_edge_list(write_tmp("e5.txt", "")));
  CHECK_THROWS(load_edge_list("/tmp/fpst_test_does_not_exist"));
}

TEST_CASE("csv matrix loading") {
  Tensor m = load_csv_matrix(write_tmp("m1.csv", "1.5,2\n-3,4e-2\n"));
  CHECK(m.shape() == Shape{2, 2});
  CHECK(m[0] == doctest::Approx(1.5));
  CHECK(m[3] == doctest::Approx(0.04));
  CHECK_THROWS(load_csv_matrix(write_tmp("m2.csv", "1,2\n3\n")));
}

TEST_CASE("label loading with and without split column") {
  auto plain = load_labels(write_tmp("l1.txt", "0\n1\n2\n"));
  CHECK(plain.labels == std::vector<int>{0, 1, 2});
  CHECK(plain.split.empty());

  auto with_split = load_labels(write_tmp("l2.txt", "0 train\n1 val\n0 test\n"));
  CHECK(with_split.split == std::vector<int>{0, 1, 2});
  CHECK_THROWS(load_labels(write_tmp("l3.txt", "0 bogus\n")));
}

TEST_CASE("synthetic split shapes") {
  std::vector<int> labels(50);
  for (int i = 0; i < 50; ++i) labels[i] = i % 2;
  std::mt19937_64 rng(1);
  auto cite = synthesize_split(labels, SynthSplit::Citation, rng);
  std::size_t tr = 0, va = 0, te = 0;
  for (int s : cite) (s == 0 ? tr : s == 1 ? va : te)++;
  CHECK(tr == 40);  // 20 per class
  CHECK(va > 0);
  CHECK(te > 0);

  auto bal = synthesize_split(labels, SynthSplit::Balanced622, rng);
  tr = va = te = 0;
  for (int s : bal) (s == 0 ? tr : s == 1 ? va : te)++;
  CHECK(tr == 30);
  CHECK(va == 10);
  CHECK(te == 10);
}

TEST_CASE("checkpoint round trip reproduces forward outputs exactly") {
  Graph g = make_graph(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
  ModelConfig mc;
  mc.dim = 4;
  mc.heads = 2;
  mc.eigvecs = 4;
  mc.feat_dim = 4;
  mc.kappa_init = -0.3;
  std::mt19937_64 rng(5);
  FpsTModel model = FpsTModel::build(mc, rng);
  Tensor feats = Tensor::identity(4);
  Tensor eig = laplacian_eigvecs(g, 4);
  Tensor before = model.forward(g, feats, eig);

  std::string path = "/tmp/fpst_test_ckpt.bin";
  save_checkpoint(path, model);
  FpsTModel loaded = load_checkpoint(path);
  CHECK(loaded.config().dim == mc.dim);
  CHECK(loaded.config().kappa_init == mc.kappa_init);
  Tensor after = loaded.forward(g, feats, eig);
  REQUIRE(after.size() == before.size());
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(after[i] == before[i]);

  // magic bytes guard
  std::ifstream in(path, std::ios::binary);
  char magic[5] = {};
  in.read(magic, 5);
  CHECK(std::string(magic, 5) == "FPST1");
  CHECK_THROWS(load_checkpoint(write_tmp("bad_ckpt", "NOTACHECKPOINT")));
}

TEST_CASE("training is deterministic for a fixed seed") {
  Graph g = make_graph(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0}});
  RunConfig cfg;
  cfg.model.dim = 4;
  cfg.model.heads = 2;
  cfg.model.eigvecs = 4;
  cfg.epochs = 20;
  cfg.eval_interval = 10;
  cfg.seed = 3;
  std::ostringstream a, b;
  train_reconstruction(cfg, g, &a);
  train_reconstruction(cfg, g, &b);
  // wall-clock column varies; strip it before comparing
  auto strip = [](const std::string& csv) {
    std::istringstream in(csv);
    std::string line, out;
    while (std::getline(in, line)) {
      std::size_t c1 = 0;
      for (int k = 0; k < 3; ++k) c1 = line.find(',', c1) + 1;
      std::size_t c2 = line.find(',', c1);
      out += line.substr(0, c1) + line.substr(c2 + 1) + "\n";
    }
    return out;
  };
  CHECK(strip(a.str()) == strip(b.str()));
  CHECK(a.str().rfind("epoch,loss,metric,wall_ms,kappa_l1_h1,kappa_l1_h2", 0) == 0);
}

TEST_CASE("two-node reconstruction reaches mAP 1") {
  Graph g = make_graph(2, {{0, 1}});
  RunConfig cfg;
  cfg.model.dim = 4;
  cfg.model.heads = 2;
  cfg.model.eigvecs = 2;
  cfg.epochs = 200;
  cfg.eval_interval = 100;
  TrainResult r = train_reconstruction(cfg, g, nullptr);
  CHECK(r.final_metric == doctest::Approx(1.0));
}

TEST_CASE("features equal to labels classify perfectly") {
  Graph g = make_graph(8, {{0, 1}, {2, 3}, {4, 5}, {6, 7}});
  g.labels = {0, 1, 0, 1, 0, 1, 0, 1};
  g.split = {0, 0, 0, 0, 1, 1, 2, 2};
  Tensor feats({8, 2}, {1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1});
  RunConfig cfg;
  cfg.model.dim = 4;
  cfg.model.heads = 2;
  cfg.model.eigvecs = 4;
  cfg.epochs = 300;
  cfg.eval_interval = 50;
  TrainResult r = train_node_classification(cfg, g, feats, nullptr);
  CHECK(r.final_metric == doctest::Approx(1.0));
}

TEST_CASE("invalid run configurations raise") {
  Graph g = make_graph(2, {{0, 1}});
  RunConfig cfg;
  cfg.model.num_classes = 0;
  // node classification without labels
  CHECK_THROWS(train_node_classification(cfg, g, Tensor::identity(2), nullptr));
  // dense mode over the token budget
  RunConfig dense;
  dense.model.mode = AttnMode::Dense;
  std::vector<std::pair<std::size_t, std::size_t>> big;
  for (std::size_t i = 0; i + 1 < 5000; ++i) big.push_back({i, i + 1});
  Graph chain = make_graph(5000, big);
  CHECK_THROWS(train_reconstruction(dense, chain, nullptr));
}
