#include "fpst/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace fpst {

namespace {

using Clock = std::chrono::steady_clock;

long elapsed_ms(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
}

void write_header(std::ostream* csv, std::size_t layers, std::size_t heads) {
  if (!csv) return;
  *csv << "epoch,loss,metric,wall_ms";
  for (std::size_t l = 1; l <= layers; ++l)
    for (std::size_t h = 1; h <= heads; ++h) *csv << ",kappa_l" << l << "_h" << h;
  *csv << "\n";
}

void write_row(std::ostream* csv, std::size_t epoch, double loss, double metric, long wall_ms,
               const std::vector<double>& kappas) {
  if (!csv) return;
  char buf[64];
  *csv << epoch;
  std::snprintf(buf, sizeof buf, ",%.17g,%.17g", loss, metric);
  *csv << buf << "," << wall_ms;
  for (double k : kappas) {
    std::snprintf(buf, sizeof buf, ",%.17g", k);
    *csv << buf;
  }
  *csv << "\n";
}

Tensor one_hot_noisy_features(std::size_t n, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, sigma);
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
  for (auto& x : v) x += gauss(rng);
  return Tensor({n, n}, std::move(v));
}

std::size_t resolve_negatives(const RunConfig& cfg, std::size_t n) {
  if (cfg.neg_samples != kNegAuto) return cfg.neg_samples;
  return n <= 5000 ? 0 : 256;
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

}  // namespace

TrainResult train_reconstruction(const RunConfig& cfg, const Graph& g, std::ostream* csv,
                                 const Tensor& features, FpsTModel* out_model) {
  if (cfg.model.mode == AttnMode::Dense && g.n + g.m() > kDenseTokenLimit)
    throw std::runtime_error(
        "fpst: graph too large for dense attention (" + std::to_string(g.n + g.m()) +
        " tokens > " + std::to_string(kDenseTokenLimit) + "); use linearized mode");
  std::mt19937_64 rng(cfg.seed);
  // Synthesized features are one-hot with Gaussian jitter resampled every
  // epoch (augmentation); evaluation uses the clean one-hot encoding.
  bool synth_feats = !features.defined();
  Tensor feats = features.defined() ? features : one_hot_noisy_features(g.n, 0.0, rng);

  ModelConfig mc = cfg.model;
  mc.feat_dim = feats.shape()[1];
  mc.num_classes = 0;
  mc.eigvecs = std::min(mc.eigvecs, g.n);
  auto premix = [&](Tensor f) { return mc.hops > 0 ? hop_premix(f, g, mc.hops) : f; };
  Tensor eval_feats = premix(feats);
  FpsTModel model = FpsTModel::build(mc, rng);
  Tensor eig = laplacian_eigvecs(g, mc.eigvecs);
  std::size_t negs = resolve_negatives(cfg, g.n);

  // Curvature prior: pull the learned curvatures toward the graph's mean
  // discrete sectional curvature. The ranking loss is scale-seeking and by
  // itself under-determines the curvature sign, so this supplies the
  // structural signal (trees negative, cycles positive).
  bool use_prior = false;
  double kappa_target = 0.0;
  if (cfg.curv_prior > 0.0) {
    try {
      CurvatureHistogram hist = curvature_histogram(g, 32, cfg.seed);
      if (!hist.samples.empty()) {
        kappa_target = std::clamp(hist.mean, -1.0, 1.0);
        use_prior = true;
      }
    } catch (const std::exception&) {
      // disconnected graph: sectional curvature undefined, skip the prior
    }
  }
  std::size_t n_kappas = mc.layers * mc.heads;

  Adam opt;
  auto start = Clock::now();
  write_header(csv, mc.layers, mc.heads);
  TrainResult res;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Tensor train_feats =
        synth_feats ? premix(one_hot_noisy_features(g.n, cfg.feature_noise, rng)) : eval_feats;
    Tensor enc = model.forward(g, train_feats, eig, true, &rng);
    Tensor reps = FpsTModel::node_rows(enc, g.n);
    Tensor loss = reconstruction_loss(reps, g, model.last_signature(), negs, &rng);
    if (use_prior) {
      Tensor acc = Tensor::scalar(0.0);
      for (const auto& bw : model.blocks())
        for (const auto& head : bw.heads)
          acc = add(acc, square(add_scalar(head.kappa, -kappa_target)));
      loss = add(loss, mul_scalar(acc, cfg.curv_prior / double(n_kappas)));
    }
    backward(loss);
    opt.step(model.params(), cfg.lr, cfg.curv_lr, cfg.weight_decay);
    model.after_step();
    res.final_loss = loss.item();
    if (epoch % cfg.eval_interval == 0 || epoch == cfg.epochs) {
      Tensor eval_enc = model.forward(g, eval_feats, eig, false, nullptr);
      res.final_metric = map_score(FpsTModel::node_rows(eval_enc, g.n), g, model.last_signature());
      write_row(csv, epoch, res.final_loss, res.final_metric, elapsed_ms(start),
                model.kappa_values());
    }
  }
  res.kappas = model.kappa_values();
  res.mean_kappa = mean_of(res.kappas);
  if (!cfg.checkpoint_path.empty()) save_checkpoint(cfg.checkpoint_path, model);
  if (out_model) *out_model = model;
  return res;
}

TrainResult train_node_classification(const RunConfig& cfg, const Graph& g, const Tensor& features,
                                      std::ostream* csv, FpsTModel* out_model) {
  if (!features.defined()) throw std::invalid_argument("fpst: node classification requires features");
  if (g.labels.size() != g.n) throw std::invalid_argument("fpst: node classification requires labels");
  if (g.split.size() != g.n)
    throw std::invalid_argument("fpst: node classification requires train/val/test split masks");
  if (cfg.model.mode == AttnMode::Dense && g.n + g.m() > kDenseTokenLimit)
    throw std::runtime_error("fpst: graph too large for dense attention; use linearized mode");

  int classes = 0;
  for (int y : g.labels) classes = std::max(classes, y + 1);
  std::mt19937_64 rng(cfg.seed);
  Tensor feats = features;
  ModelConfig mc = cfg.model;
  mc.feat_dim = feats.shape()[1];
  mc.num_classes = std::size_t(classes);
  mc.eigvecs = std::min(mc.eigvecs, g.n);
  if (mc.hops > 0) feats = hop_premix(feats, g, mc.hops);
  FpsTModel model = FpsTModel::build(mc, rng);
  Tensor eig = laplacian_eigvecs(g, mc.eigvecs);

  std::vector<std::size_t> train_rows;
  std::vector<int> train_labels;
  std::vector<bool> val_mask(g.n, false), test_mask(g.n, false);
  for (std::size_t i = 0; i < g.n; ++i) {
    if (g.split[i] == 0) {
      train_rows.push_back(i);
      train_labels.push_back(g.labels[i]);
    } else if (g.split[i] == 1) {
      val_mask[i] = true;
    } else {
      test_mask[i] = true;
    }
  }
  if (train_rows.empty()) throw std::invalid_argument("fpst: empty training split");

  auto predict = [&](const Tensor& logits) {
    std::size_t C = logits.shape()[1];
    std::vector<int> preds(g.n, 0);
    for (std::size_t i = 0; i < g.n; ++i) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < C; ++c)
        if (logits[i * C + c] > logits[i * C + best]) best = c;
      preds[i] = int(best);
    }
    return preds;
  };

  Adam opt;
  auto start = Clock::now();
  write_header(csv, mc.layers, mc.heads);
  double best_val = -1.0;
  std::size_t evals_since_best = 0;
  std::vector<std::vector<double>> best_values;
  TrainResult res;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Tensor enc = model.forward(g, feats, eig, true, &rng);
    Tensor logits = model.logits(FpsTModel::node_rows(enc, g.n));
    Tensor loss = cross_entropy(gather_rows(logits, train_rows), train_labels);
    backward(loss);
    opt.step(model.params(), cfg.lr, cfg.curv_lr, cfg.weight_decay);
    model.after_step();
    res.final_loss = loss.item();
    if (epoch % cfg.eval_interval == 0 || epoch == cfg.epochs) {
      Tensor eval_enc = model.forward(g, feats, eig, false, nullptr);
      Tensor eval_logits = model.logits(FpsTModel::node_rows(eval_enc, g.n));
      auto preds = predict(eval_logits);
      double val_acc = classification_metrics(preds, g.labels, val_mask).accuracy;
      write_row(csv, epoch, res.final_loss, val_acc, elapsed_ms(start), model.kappa_values());
      if (val_acc > best_val) {
        best_val = val_acc;
        evals_since_best = 0;
        best_values.clear();
        for (const auto& p : model.params().all()) best_values.push_back(p.value.data());
      } else if (++evals_since_best >= cfg.patience) {
        break;
      }
    }
  }
  if (!best_values.empty()) {
    auto& ps = model.params().all();
    for (std::size_t i = 0; i < ps.size(); ++i) ps[i].value.node()->values = best_values[i];
  }
  Tensor enc = model.forward(g, feats, eig, false, nullptr);
  auto preds = predict(model.logits(FpsTModel::node_rows(enc, g.n)));
  ClfMetrics tm = classification_metrics(preds, g.labels, test_mask);
  res.final_metric = tm.accuracy;
  res.test_micro_f1 = tm.micro_f1;
  res.kappas = model.kappa_values();
  res.mean_kappa = mean_of(res.kappas);
  if (!cfg.checkpoint_path.empty()) save_checkpoint(cfg.checkpoint_path, model);
  if (out_model) *out_model = model;
  return res;
}

}  // namespace fpst
