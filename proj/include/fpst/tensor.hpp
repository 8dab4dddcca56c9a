#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace fpst {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& s);
std::string shape_str(const Shape& s);

struct Node;
using NodePtr = std::shared_ptr<Node>;

// Allocation accounting for the tensor engine. Used by the linearized
// attention tests to verify that no quadratic-size intermediate appears.
struct AllocStats {
  std::size_t live_bytes = 0;
  std::size_t peak_live_bytes = 0;
  std::size_t max_single_alloc = 0;
  void on_alloc(std::size_t bytes);
  void on_free(std::size_t bytes);
  void reset_peaks();
};
AllocStats& alloc_stats();

struct Node {
  Shape shape;
  std::vector<double> values;
  bool requires_grad = false;
  std::vector<double> grad;  // empty until first accumulation
  std::vector<NodePtr> parents;
  std::function<void(Node&)> backprop;  // reads this->grad, adds into parents

  Node(Shape s, std::vector<double> v, bool rg);
  ~Node();
  void ensure_grad();
};

// Dense row-major tensor of 64-bit floats with reverse-mode gradient
// tracking. Value semantics over a shared node; ops record a tape that
// backward() consumes and frees.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);
  explicit Tensor(NodePtr n) : n_(std::move(n)) {}

  static Tensor scalar(double v, bool requires_grad = false);
  static Tensor zeros(Shape s, bool requires_grad = false);
  static Tensor full(Shape s, double v, bool requires_grad = false);
  static Tensor identity(std::size_t n);

  bool defined() const { return n_ != nullptr; }
  const Shape& shape() const { return n_->shape; }
  std::size_t size() const { return n_->values.size(); }
  std::size_t ndim() const { return n_->shape.size(); }
  std::size_t extent(std::size_t axis) const { return n_->shape[axis]; }
  bool requires_grad() const { return n_->requires_grad; }

  const std::vector<double>& data() const { return n_->values; }
  std::vector<double>& mutable_data() { return n_->values; }
  const std::vector<double>& grad() const;
  double operator[](std::size_t i) const { return n_->values[i]; }
  double item() const;

  void zero_grad();
  // Leaf-only copy of values without touching the tape (used by gradcheck
  // and the optimizer).
  Tensor detached() const;

  NodePtr node() const { return n_; }

 private:
  NodePtr n_;
};

// Scalar loss -> populate grads of every requires_grad tensor reachable
// through the tape, then free the tape.
void backward(const Tensor& loss);

// ---- elementwise / scalar ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& x);
Tensor add_scalar(const Tensor& x, double c);
Tensor mul_scalar(const Tensor& x, double c);
Tensor square(const Tensor& x);

Tensor tanh_t(const Tensor& x);
Tensor tan_t(const Tensor& x);
Tensor atan_t(const Tensor& x);
Tensor sin_t(const Tensor& x);
Tensor asin_t(const Tensor& x);
Tensor sinh_t(const Tensor& x);
Tensor asinh_t(const Tensor& x);
Tensor atanh_t(const Tensor& x);
Tensor exp_t(const Tensor& x);
Tensor log_t(const Tensor& x);
Tensor sqrt_t(const Tensor& x);
Tensor abs_t(const Tensor& x);
Tensor sign_t(const Tensor& x);  // gradient 0 everywhere
Tensor elu(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);

// ---- linear algebra / structure ----
Tensor matmul(const Tensor& a, const Tensor& b);  // 2-D only
Tensor transpose(const Tensor& x);                // 2-D only
Tensor reshape(const Tensor& x, Shape s);
Tensor concat(const std::vector<Tensor>& xs, std::size_t axis);
std::vector<Tensor> split(const Tensor& x, std::size_t axis, std::size_t parts);
Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& idx);
// x is (n, m); result (k) with result[e] = x[i[e], j[e]]
Tensor gather_pairs(const Tensor& x, const std::vector<std::size_t>& i,
                    const std::vector<std::size_t>& j);

// ---- reductions (axis reductions keep the reduced dim as 1) ----
Tensor sum(const Tensor& x, std::size_t axis);
Tensor mean(const Tensor& x, std::size_t axis);
Tensor sum_all(const Tensor& x);
Tensor norm(const Tensor& x);        // L2 along last axis, keepdim
Tensor softmax(const Tensor& x);     // along last axis
Tensor logsumexp(const Tensor& x);   // along last axis, keepdim

// Max over coordinates of the relative error between the reverse-mode
// gradient of f at x and central finite differences with step h.
double gradcheck(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                 double h = 1e-5);

}  // namespace fpst
