#pragma once

#include <string>
#include <vector>

#include "fpst/tensor.hpp"

namespace fpst {

enum class ParamGroup { Weights, Curvatures };

struct Parameter {
  std::string name;
  Tensor value;  // requires_grad leaf
  ParamGroup group = ParamGroup::Weights;
};

// Flat registry of the model's trainable parameters. Indices are stable
// for the lifetime of the store (Adam slots key on them).
class ParamStore {
 public:
  Tensor& add(const std::string& name, Tensor value, ParamGroup group = ParamGroup::Weights);
  std::vector<Parameter>& all() { return params_; }
  const std::vector<Parameter>& all() const { return params_; }
  Parameter& by_name(const std::string& name);
  std::size_t count() const { return params_.size(); }
  void zero_grad();

 private:
  std::vector<Parameter> params_;
};

// Adam with two learning-rate groups (weights / curvatures). Grads are
// consumed and zeroed by step().
class Adam {
 public:
  Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ParamStore& params, double lr_weights, double lr_curvatures,
            double weight_decay = 0.0);
  long step_count() const { return t_; }

 private:
  struct Slot {
    std::vector<double> m, v;
  };
  std::vector<Slot> slots_;
  double beta1_, beta2_, eps_;
  long t_ = 0;
};

}  // namespace fpst
