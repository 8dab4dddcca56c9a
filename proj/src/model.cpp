#include "fpst/model.hpp"

#include <cmath>
#include <stdexcept>

namespace fpst {

FpsTModel FpsTModel::build(const ModelConfig& cfg, std::mt19937_64& rng) {
  if (cfg.dim % cfg.heads != 0)
    throw std::invalid_argument("fpst: model dim must divide by head count");
  if (cfg.layers == 0) throw std::invalid_argument("fpst: at least one layer required");
  FpsTModel m;
  m.cfg_ = cfg;
  std::size_t d = cfg.dim, dp = cfg.dim / cfg.heads;
  double bd = 1.0 / std::sqrt(double(d));

  if (cfg.feat_dim > 0)
    m.tok_.feat_proj = m.params_.add("tokenizer.feat_proj",
                                     uniform_init({cfg.feat_dim, d}, 1.0 / std::sqrt(double(cfg.feat_dim)), rng));
  m.tok_.id_proj = m.params_.add("tokenizer.id_proj",
                                 uniform_init({cfg.eigvecs, d}, 1.0 / std::sqrt(double(cfg.eigvecs)), rng));
  m.tok_.type_ids = m.params_.add("tokenizer.type_ids", uniform_init({2, d}, bd, rng));

  for (std::size_t l = 0; l < cfg.layers; ++l) {
    BlockWeights bw;
    bw.act = cfg.act;
    bw.layernorm = cfg.layernorm;
    std::string pre = "layer" + std::to_string(l) + ".";
    for (std::size_t h = 0; h < cfg.heads; ++h) {
      AttentionHead head;
      std::string hp = pre + "head" + std::to_string(h) + ".";
      head.Wq = m.params_.add(hp + "Wq", uniform_init({d, dp}, bd, rng));
      head.Wk = m.params_.add(hp + "Wk", uniform_init({d, dp}, bd, rng));
      head.Wv = m.params_.add(hp + "Wv", uniform_init({d, dp}, bd, rng));
      head.kappa = m.params_.add(hp + "kappa", Tensor::scalar(cfg.kappa_init),
                                 ParamGroup::Curvatures);
      bw.heads.push_back(head);
    }
    if (cfg.layernorm) {
      bw.ln1_gain = m.params_.add(pre + "ln1.gain", Tensor::full({1, d}, 1.0));
      bw.ln1_bias = m.params_.add(pre + "ln1.bias", Tensor::zeros({1, d}));
      bw.ln2_gain = m.params_.add(pre + "ln2.gain", Tensor::full({1, d}, 1.0));
      bw.ln2_bias = m.params_.add(pre + "ln2.bias", Tensor::zeros({1, d}));
    }
    std::size_t hidden = cfg.ffn_mult * d;
    bw.W1 = m.params_.add(pre + "ffn.W1", uniform_init({d, hidden}, bd, rng));
    bw.W2 = m.params_.add(pre + "ffn.W2", uniform_init({hidden, d}, 1.0 / std::sqrt(double(hidden)), rng));
    m.blocks_.push_back(bw);
  }

  if (cfg.num_classes > 0) {
    m.logit_a_ = m.params_.add("logit.a", uniform_init({cfg.num_classes, d}, bd, rng));
    m.logit_p_ = m.params_.add("logit.p", Tensor::zeros({cfg.num_classes, d}));
  }
  return m;
}

Tensor FpsTModel::forward(const Graph& g, const Tensor& node_features, const Tensor& eigvecs,
                          bool training, std::mt19937_64* rng) {
  Tensor tokens = tokenize(g, node_features, eigvecs, tok_);
  Tensor x = lift_to_manifold(tokens, first_signature());
  return encode(x, blocks_, cfg_.mode, training ? cfg_.dropout : 0.0, rng);
}

Tensor FpsTModel::node_rows(const Tensor& encoded, std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return gather_rows(encoded, idx);
}

Tensor FpsTModel::logits(const Tensor& node_reps) {
  if (cfg_.num_classes == 0) throw std::runtime_error("fpst: model built without a logit head");
  return st_logits(node_reps, logit_a_, logit_p_, last_signature());
}

void FpsTModel::after_step() {
  for (auto& bw : blocks_)
    for (auto& head : bw.heads) {
      auto& v = head.kappa.node()->values;
      if (v[0] > kKappaMax) v[0] = kKappaMax;
      if (v[0] < -kKappaMax) v[0] = -kKappaMax;
    }
  if (cfg_.num_classes > 0) {
    // keep each head block of every offset point inside its ball
    ProductSignature sig = last_signature();
    auto& v = logit_p_.node()->values;
    std::size_t dp = sig.head_dim;
    for (std::size_t c = 0; c < cfg_.num_classes; ++c)
      for (std::size_t h = 0; h < sig.heads(); ++h) {
        double kv = sig.kappas[h].item();
        if (kv >= 0.0) continue;
        double rmax = (1.0 - kEpsBall) / std::sqrt(-kv);
        double* p = v.data() + c * cfg_.dim + h * dp;
        double nrm = 0.0;
        for (std::size_t j = 0; j < dp; ++j) nrm += p[j] * p[j];
        nrm = std::sqrt(nrm);
        if (nrm > rmax)
          for (std::size_t j = 0; j < dp; ++j) p[j] *= rmax / nrm;
      }
  }
}

std::vector<double> FpsTModel::kappa_values() const {
  std::vector<double> out;
  for (const auto& bw : blocks_)
    for (const auto& head : bw.heads) out.push_back(head.kappa.item());
  return out;
}

}  // namespace fpst
