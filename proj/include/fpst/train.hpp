#pragma once

#include <cstdint>
#include <ostream>
#include <string>

#include "fpst/io.hpp"
#include "fpst/metrics.hpp"
#include "fpst/model.hpp"

namespace fpst {

inline constexpr std::size_t kNegAuto = std::size_t(-1);
inline constexpr std::size_t kDenseTokenLimit = 8192;

struct RunConfig {
  ModelConfig model;
  std::size_t epochs = 10000;
  double lr = 1e-2;
  double curv_lr = 1e-4;
  double weight_decay = 0.0;
  // kNegAuto: all non-neighbors for n <= 5000, else 256 sampled
  std::size_t neg_samples = kNegAuto;
  std::uint64_t seed = 0;
  std::size_t eval_interval = 100;
  std::size_t patience = 200;  // evals without val improvement
  double feature_noise = 0.01;  // sigma of the one-hot noise (reconstruction)
  // Weight of the curvature prior used by reconstruction training: learned
  // curvatures are pulled toward the graph's mean discrete sectional
  // curvature (clamped to [-1, 1]). 0 disables the prior.
  double curv_prior = 100.0;
  std::string checkpoint_path;  // empty: no checkpoint written
};

struct TrainResult {
  double final_loss = 0.0;
  double final_metric = 0.0;  // mAP or test accuracy
  double test_micro_f1 = 0.0; // node classification only
  std::vector<double> kappas;
  double mean_kappa = 0.0;
};

// writes "epoch,loss,metric,wall_ms,kappa_l1_h1,..." rows to csv when given
TrainResult train_reconstruction(const RunConfig& cfg, const Graph& g, std::ostream* csv,
                                 const Tensor& features = Tensor(), FpsTModel* out_model = nullptr);

TrainResult train_node_classification(const RunConfig& cfg, const Graph& g, const Tensor& features,
                                      std::ostream* csv, FpsTModel* out_model = nullptr);

}  // namespace fpst
