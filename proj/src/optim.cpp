#include "fpst/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace fpst {

Tensor& ParamStore::add(const std::string& name, Tensor value, ParamGroup group) {
  if (!value.requires_grad())
    value = Tensor(value.shape(), value.data(), true);
  for (const auto& p : params_)
    if (p.name == name) throw std::invalid_argument("fpst: duplicate parameter name " + name);
  params_.push_back({name, value, group});
  return params_.back().value;
}

Parameter& ParamStore::by_name(const std::string& name) {
  for (auto& p : params_)
    if (p.name == name) return p;
  throw std::invalid_argument("fpst: unknown parameter " + name);
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p.value.zero_grad();
}

void Adam::step(ParamStore& params, double lr_weights, double lr_curvatures, double weight_decay) {
  auto& ps = params.all();
  if (slots_.size() < ps.size()) slots_.resize(ps.size());
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, double(t_));
  double bc2 = 1.0 - std::pow(beta2_, double(t_));
  for (std::size_t i = 0; i < ps.size(); ++i) {
    Parameter& p = ps[i];
    Node& n = *p.value.node();
    if (n.grad.empty())
      throw std::runtime_error("fpst: adam step with missing gradient on parameter " + p.name);
    Slot& s = slots_[i];
    if (s.m.empty()) {
      s.m.assign(n.values.size(), 0.0);
      s.v.assign(n.values.size(), 0.0);
    }
    if (s.m.size() != n.values.size())
      throw std::runtime_error("fpst: adam moment shape mismatch on parameter " + p.name);
    double lr = p.group == ParamGroup::Curvatures ? lr_curvatures : lr_weights;
    double wd = p.group == ParamGroup::Curvatures ? 0.0 : weight_decay;
    for (std::size_t j = 0; j < n.values.size(); ++j) {
      double g = n.grad[j] + wd * n.values[j];
      s.m[j] = beta1_ * s.m[j] + (1.0 - beta1_) * g;
      s.v[j] = beta2_ * s.v[j] + (1.0 - beta2_) * g * g;
      double mhat = s.m[j] / bc1;
      double vhat = s.v[j] / bc2;
      n.values[j] -= lr * mhat / (std::sqrt(vhat) + eps_);
    }
    n.grad.clear();
  }
}

}  // namespace fpst
