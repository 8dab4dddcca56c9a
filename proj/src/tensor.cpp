#include "fpst/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace fpst {

std::size_t numel(const Shape& s) {
  std::size_t n = 1;
  for (auto e : s) n *= e;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ")";
  return os.str();
}

AllocStats& alloc_stats() {
  static AllocStats stats;
  return stats;
}

void AllocStats::on_alloc(std::size_t bytes) {
  live_bytes += bytes;
  peak_live_bytes = std::max(peak_live_bytes, live_bytes);
  max_single_alloc = std::max(max_single_alloc, bytes);
}
void AllocStats::on_free(std::size_t bytes) {
  live_bytes -= std::min(live_bytes, bytes);
}
void AllocStats::reset_peaks() {
  peak_live_bytes = live_bytes;
  max_single_alloc = 0;
}

Node::Node(Shape s, std::vector<double> v, bool rg)
    : shape(std::move(s)), values(std::move(v)), requires_grad(rg) {
  alloc_stats().on_alloc(values.size() * sizeof(double));
}
Node::~Node() { alloc_stats().on_free(values.size() * sizeof(double)); }
void Node::ensure_grad() {
  if (grad.empty()) grad.assign(values.size(), 0.0);
}

namespace {

void check_finite(const std::vector<double>& v, const char* op) {
  for (double x : v) {
    if (!std::isfinite(x))
      throw std::runtime_error(std::string("fpst: non-finite value produced by op '") + op + "'");
  }
}

NodePtr make_node(Shape s, std::vector<double> v, const char* op) {
  if (numel(s) != v.size())
    throw std::invalid_argument(std::string("fpst: shape/data mismatch in op '") + op + "'");
  check_finite(v, op);
  return std::make_shared<Node>(std::move(s), std::move(v), false);
}

// Attach tape record if any parent requires grad.
Tensor finish(NodePtr n, std::vector<NodePtr> parents, std::function<void(Node&)> bp) {
  bool rg = false;
  for (auto& p : parents) rg = rg || p->requires_grad;
  if (rg) {
    n->requires_grad = true;
    n->parents = std::move(parents);
    n->backprop = std::move(bp);
  }
  return Tensor(std::move(n));
}

// Row-major strides; broadcast-aware index mapping.
std::vector<std::size_t> strides_of(const Shape& s) {
  std::vector<std::size_t> st(s.size(), 1);
  for (std::size_t i = s.size(); i-- > 1;) st[i - 1] = st[i] * s[i];
  return st;
}

Shape broadcast_shape(const Shape& a, const Shape& b, const char* op) {
  Shape r(std::max(a.size(), b.size()));
  for (std::size_t i = 0; i < r.size(); ++i) {
    std::size_t ea = i < r.size() - a.size() ? 1 : a[i - (r.size() - a.size())];
    std::size_t eb = i < r.size() - b.size() ? 1 : b[i - (r.size() - b.size())];
    if (ea != eb && ea != 1 && eb != 1)
      throw std::invalid_argument(std::string("fpst: op '") + op + "' cannot broadcast shapes " +
                                  shape_str(a) + " and " + shape_str(b));
    r[i] = std::max(ea, eb);
  }
  return r;
}

// Strides of `s` when broadcast to `r` (0 stride on broadcast dims).
std::vector<std::size_t> broadcast_strides(const Shape& s, const Shape& r) {
  auto st = strides_of(s);
  std::vector<std::size_t> out(r.size(), 0);
  std::size_t off = r.size() - s.size();
  for (std::size_t i = 0; i < s.size(); ++i) out[off + i] = (s[i] == 1) ? 0 : st[i];
  return out;
}

// Enumerate offsets of a and b for each element of the broadcast result.
template <typename F>
void for_broadcast(const Shape& r, const std::vector<std::size_t>& sa,
                   const std::vector<std::size_t>& sb, F&& f) {
  std::size_t n = numel(r);
  std::vector<std::size_t> idx(r.size(), 0);
  std::size_t ia = 0, ib = 0;
  for (std::size_t lin = 0; lin < n; ++lin) {
    f(lin, ia, ib);
    for (std::size_t d = r.size(); d-- > 0;) {
      idx[d]++;
      ia += sa[d];
      ib += sb[d];
      if (idx[d] < r[d]) break;
      ia -= sa[d] * r[d];
      ib -= sb[d] * r[d];
      idx[d] = 0;
    }
  }
}

using BinF = double (*)(double, double);
using BinG = double (*)(double, double, double);  // (a, b, y) -> d/da or d/db

Tensor binary_op(const Tensor& a, const Tensor& b, const char* op, BinF f, BinG ga, BinG gb) {
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  Shape rs = broadcast_shape(as, bs, op);
  std::vector<double> out(numel(rs));
  if (as == bs) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a[i], b[i]);
  } else {
    auto sa = broadcast_strides(as, rs), sb = broadcast_strides(bs, rs);
    const auto& av = a.data();
    const auto& bv = b.data();
    for_broadcast(rs, sa, sb,
                  [&](std::size_t lin, std::size_t ia, std::size_t ib) { out[lin] = f(av[ia], bv[ib]); });
  }
  NodePtr n = make_node(rs, std::move(out), op);
  Shape rs2 = n->shape;
  return finish(n, {a.node(), b.node()}, [rs2, f, ga, gb](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) pa.ensure_grad();
    if (pb.requires_grad) pb.ensure_grad();
    auto sa = broadcast_strides(pa.shape, rs2), sb = broadcast_strides(pb.shape, rs2);
    for_broadcast(rs2, sa, sb, [&](std::size_t lin, std::size_t ia, std::size_t ib) {
      double g = self.grad[lin];
      double y = self.values[lin];
      if (pa.requires_grad) pa.grad[ia] += g * ga(pa.values[ia], pb.values[ib], y);
      if (pb.requires_grad) pb.grad[ib] += g * gb(pa.values[ia], pb.values[ib], y);
    });
  });
}

using UnF = double (*)(double);
using UnG = double (*)(double, double);  // (x, y) -> dy/dx

Tensor unary_op(const Tensor& x, const char* op, UnF f, UnG g) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x[i]);
  NodePtr n = make_node(x.shape(), std::move(out), op);
  return finish(n, {x.node()}, [g](Node& self) {
    Node& p = *self.parents[0];
    p.ensure_grad();
    for (std::size_t i = 0; i < self.values.size(); ++i)
      p.grad[i] += self.grad[i] * g(p.values[i], self.values[i]);
  });
}

}  // namespace

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad) {
  if (numel(shape) != values.size())
    throw std::invalid_argument("fpst: tensor shape " + shape_str(shape) + " does not match data length " +
                                std::to_string(values.size()));
  check_finite(values, "constructor");
  n_ = std::make_shared<Node>(std::move(shape), std::move(values), requires_grad);
}

Tensor Tensor::scalar(double v, bool rg) { return Tensor({1}, {v}, rg); }
Tensor Tensor::zeros(Shape s, bool rg) { return Tensor(s, std::vector<double>(numel(s), 0.0), rg); }
Tensor Tensor::full(Shape s, double v, bool rg) { return Tensor(s, std::vector<double>(numel(s), v), rg); }
Tensor Tensor::identity(std::size_t n) {
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
  return Tensor({n, n}, std::move(v));
}

const std::vector<double>& Tensor::grad() const {
  n_->ensure_grad();
  return n_->grad;
}

double Tensor::item() const {
  if (size() != 1) throw std::invalid_argument("fpst: item() on non-scalar tensor " + shape_str(shape()));
  return n_->values[0];
}

void Tensor::zero_grad() { n_->grad.clear(); }

Tensor Tensor::detached() const { return Tensor(shape(), data(), false); }

void backward(const Tensor& loss) {
  if (loss.size() != 1)
    throw std::invalid_argument("fpst: backward requires a scalar loss, got " + shape_str(loss.shape()));
  // topological order over the tape
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{loss.node().get()};
  std::vector<Node*> path;
  // iterative DFS with post-order emit
  struct Frame {
    Node* n;
    std::size_t next;
  };
  std::vector<Frame> frames{{loss.node().get(), 0}};
  seen.insert(loss.node().get());
  while (!frames.empty()) {
    Frame& f = frames.back();
    if (f.next < f.n->parents.size()) {
      Node* p = f.n->parents[f.next++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        frames.push_back({p, 0});
      }
    } else {
      order.push_back(f.n);
      frames.pop_back();
    }
  }
  loss.node()->ensure_grad();
  loss.node()->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backprop) {
      n->ensure_grad();
      n->backprop(*n);
    }
  }
  // free the tape; leaves keep their grads
  for (Node* n : order) {
    n->parents.clear();
    n->backprop = nullptr;
  }
}

// ---- elementwise ----

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, "add", [](double x, double y) { return x + y; },
      [](double, double, double) { return 1.0; }, [](double, double, double) { return 1.0; });
}
Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](double, double, double) { return 1.0; }, [](double, double, double) { return -1.0; });
}
Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](double, double y, double) { return y; }, [](double x, double, double) { return x; });
}
Tensor div(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, "div", [](double x, double y) { return x / y; },
      [](double, double y, double) { return 1.0 / y; },
      [](double, double y, double out) { return -out / y; });
}
Tensor neg(const Tensor& x) {
  return unary_op(
      x, "neg", [](double v) { return -v; }, [](double, double) { return -1.0; });
}
Tensor add_scalar(const Tensor& x, double c) { return add(x, Tensor::scalar(c)); }
Tensor mul_scalar(const Tensor& x, double c) { return mul(x, Tensor::scalar(c)); }
Tensor square(const Tensor& x) { return mul(x, x); }

Tensor tanh_t(const Tensor& x) {
  return unary_op(
      x, "tanh", [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}
Tensor tan_t(const Tensor& x) {
  return unary_op(
      x, "tan", [](double v) { return std::tan(v); },
      [](double, double y) { return 1.0 + y * y; });
}
Tensor atan_t(const Tensor& x) {
  return unary_op(
      x, "atan", [](double v) { return std::atan(v); },
      [](double v, double) { return 1.0 / (1.0 + v * v); });
}
Tensor sin_t(const Tensor& x) {
  return unary_op(
      x, "sin", [](double v) { return std::sin(v); },
      [](double v, double) { return std::cos(v); });
}
Tensor asin_t(const Tensor& x) {
  for (double v : x.data())
    if (std::abs(v) > 1.0)
      throw std::runtime_error("fpst: asin domain violation, |x| > 1");
  return unary_op(
      x, "asin", [](double v) { return std::asin(v); },
      [](double v, double) { return 1.0 / std::sqrt(std::max(1.0 - v * v, 1e-300)); });
}
Tensor sinh_t(const Tensor& x) {
  return unary_op(
      x, "sinh", [](double v) { return std::sinh(v); },
      [](double v, double) { return std::cosh(v); });
}
Tensor asinh_t(const Tensor& x) {
  return unary_op(
      x, "asinh", [](double v) { return std::asinh(v); },
      [](double v, double) { return 1.0 / std::sqrt(1.0 + v * v); });
}
Tensor atanh_t(const Tensor& x) {
  for (double v : x.data())
    if (std::abs(v) >= 1.0)
      throw std::runtime_error("fpst: atanh domain violation, |x| >= 1");
  return unary_op(
      x, "atanh", [](double v) { return std::atanh(v); },
      [](double v, double) { return 1.0 / (1.0 - v * v); });
}
Tensor exp_t(const Tensor& x) {
  return unary_op(
      x, "exp", [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}
Tensor log_t(const Tensor& x) {
  for (double v : x.data())
    if (v <= 0.0) throw std::runtime_error("fpst: log domain violation, x <= 0");
  return unary_op(
      x, "log", [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}
Tensor sqrt_t(const Tensor& x) {
  for (double v : x.data())
    if (v < 0.0) throw std::runtime_error("fpst: sqrt domain violation, x < 0");
  return unary_op(
      x, "sqrt", [](double v) { return std::sqrt(v); },
      [](double, double y) { return y > 0.0 ? 0.5 / y : 0.0; });
}
Tensor abs_t(const Tensor& x) {
  return unary_op(
      x, "abs", [](double v) { return std::abs(v); },
      [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}
Tensor sign_t(const Tensor& x) {
  return unary_op(
      x, "sign", [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); },
      [](double, double) { return 0.0; });
}
Tensor elu(const Tensor& x) {
  return unary_op(
      x, "elu", [](double v) { return v > 0.0 ? v : std::expm1(v); },
      [](double v, double y) { return v > 0.0 ? 1.0 : y + 1.0; });
}
Tensor relu(const Tensor& x) {
  return unary_op(
      x, "relu", [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}
Tensor sigmoid(const Tensor& x) {
  return unary_op(
      x, "sigmoid", [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double, double y) { return y * (1.0 - y); });
}

// ---- linear algebra / structure ----

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.shape()[1] != b.shape()[0])
    throw std::invalid_argument("fpst: matmul shape mismatch " + shape_str(a.shape()) + " x " +
                                shape_str(b.shape()));
  std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  std::vector<double> out(m * n, 0.0);
  const auto& av = a.data();
  const auto& bv = b.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      double av_ip = av[i * k + p];
      if (av_ip == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += av_ip * bv[p * n + j];
    }
  NodePtr node = make_node({m, n}, std::move(out), "matmul");
  return finish(node, {a.node(), b.node()}, [m, k, n](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          double g = self.grad[i * n + j];
          if (g == 0.0) continue;
          for (std::size_t p = 0; p < k; ++p) pa.grad[i * k + p] += g * pb.values[p * n + j];
        }
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double a_ip = pa.values[i * k + p];
          if (a_ip == 0.0) continue;
          for (std::size_t j = 0; j < n; ++j) pb.grad[p * n + j] += a_ip * self.grad[i * n + j];
        }
    }
  });
}

Tensor transpose(const Tensor& x) {
  if (x.ndim() != 2) throw std::invalid_argument("fpst: transpose expects 2-D, got " + shape_str(x.shape()));
  std::size_t m = x.shape()[0], n = x.shape()[1];
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = x[i * n + j];
  NodePtr node = make_node({n, m}, std::move(out), "transpose");
  return finish(node, {x.node()}, [m, n](Node& self) {
    Node& p = *self.parents[0];
    p.ensure_grad();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) p.grad[i * n + j] += self.grad[j * m + i];
  });
}

Tensor reshape(const Tensor& x, Shape s) {
  if (numel(s) != x.size())
    throw std::invalid_argument("fpst: reshape " + shape_str(x.shape()) + " -> " + shape_str(s) +
                                " changes element count");
  NodePtr node = make_node(std::move(s), x.data(), "reshape");
  return finish(node, {x.node()}, [](Node& self) {
    Node& p = *self.parents[0];
    p.ensure_grad();
    for (std::size_t i = 0; i < self.values.size(); ++i) p.grad[i] += self.grad[i];
  });
}

Tensor concat(const std::vector<Tensor>& xs, std::size_t axis) {
  if (xs.empty()) throw std::invalid_argument("fpst: concat of empty list");
  const Shape& s0 = xs[0].shape();
  if (axis >= s0.size()) throw std::invalid_argument("fpst: concat axis out of range");
  Shape rs = s0;
  std::size_t total = 0;
  for (const auto& x : xs) {
    const Shape& s = x.shape();
    if (s.size() != s0.size())
      throw std::invalid_argument("fpst: concat rank mismatch");
    for (std::size_t d = 0; d < s.size(); ++d)
      if (d != axis && s[d] != s0[d])
        throw std::invalid_argument("fpst: concat shape mismatch " + shape_str(s0) + " vs " + shape_str(s));
    total += s[axis];
  }
  rs[axis] = total;
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= s0[d];
  for (std::size_t d = axis + 1; d < s0.size(); ++d) inner *= s0[d];
  std::vector<double> out(numel(rs));
  std::size_t row = total * inner;
  std::size_t off = 0;
  for (const auto& x : xs) {
    std::size_t w = x.shape()[axis] * inner;
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(x.data().begin() + o * w, w, out.begin() + o * row + off);
    off += w;
  }
  NodePtr node = make_node(rs, std::move(out), "concat");
  std::vector<NodePtr> parents;
  std::vector<std::size_t> widths;
  for (const auto& x : xs) {
    parents.push_back(x.node());
    widths.push_back(x.shape()[axis] * inner);
  }
  return finish(node, parents, [outer, row, widths](Node& self) {
    std::size_t off = 0;
    for (std::size_t p = 0; p < self.parents.size(); ++p) {
      Node& pn = *self.parents[p];
      std::size_t w = widths[p];
      if (pn.requires_grad) {
        pn.ensure_grad();
        for (std::size_t o = 0; o < outer; ++o)
          for (std::size_t i = 0; i < w; ++i) pn.grad[o * w + i] += self.grad[o * row + off + i];
      }
      off += w;
    }
  });
}

std::vector<Tensor> split(const Tensor& x, std::size_t axis, std::size_t parts) {
  const Shape& s = x.shape();
  if (axis >= s.size() || parts == 0 || s[axis] % parts != 0)
    throw std::invalid_argument("fpst: cannot split " + shape_str(s) + " along axis " +
                                std::to_string(axis) + " into " + std::to_string(parts) + " parts");
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= s[d];
  for (std::size_t d = axis + 1; d < s.size(); ++d) inner *= s[d];
  std::size_t w = (s[axis] / parts) * inner;
  std::size_t row = s[axis] * inner;
  std::vector<Tensor> out;
  for (std::size_t p = 0; p < parts; ++p) {
    Shape ps = s;
    ps[axis] = s[axis] / parts;
    std::vector<double> v(numel(ps));
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(x.data().begin() + o * row + p * w, w, v.begin() + o * w);
    NodePtr node = make_node(ps, std::move(v), "split");
    std::size_t off = p * w;
    out.push_back(finish(node, {x.node()}, [outer, row, w, off](Node& self) {
      Node& pn = *self.parents[0];
      pn.ensure_grad();
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t i = 0; i < w; ++i) pn.grad[o * row + off + i] += self.grad[o * w + i];
    }));
  }
  return out;
}

Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& idx) {
  if (x.ndim() < 1) throw std::invalid_argument("fpst: gather_rows on scalar");
  std::size_t rows = x.shape()[0];
  std::size_t w = x.size() / rows;
  Shape rs = x.shape();
  rs[0] = idx.size();
  std::vector<double> out(idx.size() * w);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= rows) throw std::invalid_argument("fpst: gather_rows index out of range");
    std::copy_n(x.data().begin() + idx[r] * w, w, out.begin() + r * w);
  }
  NodePtr node = make_node(rs, std::move(out), "gather_rows");
  return finish(node, {x.node()}, [idx, w](Node& self) {
    Node& p = *self.parents[0];
    p.ensure_grad();
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t i = 0; i < w; ++i) p.grad[idx[r] * w + i] += self.grad[r * w + i];
  });
}

Tensor gather_pairs(const Tensor& x, const std::vector<std::size_t>& I,
                    const std::vector<std::size_t>& J) {
  if (x.ndim() != 2 || I.size() != J.size())
    throw std::invalid_argument("fpst: gather_pairs expects 2-D tensor and equal index lists");
  std::size_t n = x.shape()[0], m = x.shape()[1];
  std::vector<double> out(I.size());
  for (std::size_t e = 0; e < I.size(); ++e) {
    if (I[e] >= n || J[e] >= m) throw std::invalid_argument("fpst: gather_pairs index out of range");
    out[e] = x[I[e] * m + J[e]];
  }
  NodePtr node = make_node({I.size()}, std::move(out), "gather_pairs");
  return finish(node, {x.node()}, [I, J, m](Node& self) {
    Node& p = *self.parents[0];
    p.ensure_grad();
    for (std::size_t e = 0; e < I.size(); ++e) p.grad[I[e] * m + J[e]] += self.grad[e];
  });
}

// ---- reductions ----

namespace {
struct AxisInfo {
  std::size_t outer, extent, inner;
};
AxisInfo axis_info(const Shape& s, std::size_t axis) {
  if (axis >= s.size()) throw std::invalid_argument("fpst: reduction axis out of range");
  AxisInfo a{1, s[axis], 1};
  for (std::size_t d = 0; d < axis; ++d) a.outer *= s[d];
  for (std::size_t d = axis + 1; d < s.size(); ++d) a.inner *= s[d];
  return a;
}
}  // namespace

Tensor sum(const Tensor& x, std::size_t axis) {
  auto a = axis_info(x.shape(), axis);
  Shape rs = x.shape();
  rs[axis] = 1;
  std::vector<double> out(a.outer * a.inner, 0.0);
  for (std::size_t o = 0; o < a.outer; ++o)
    for (std::size_t e = 0; e < a.extent; ++e)
      for (std::size_t i = 0; i < a.inner; ++i)
        out[o * a.inner + i] += x[(o * a.extent + e) * a.inner + i];
  NodePtr node = make_node(rs, std::move(out), "sum");
  return finish(node, {x.node()}, [a](Node& self) {
    Node& p = *self.parents[0];
    p.ensure_grad();
    for (std::size_t o = 0; o < a.outer; ++o)
      for (std::size_t e = 0; e < a.extent; ++e)
        for (std::size_t i = 0; i < a.inner; ++i)
          p.grad[(o * a.extent + e) * a.inner + i] += self.grad[o * a.inner + i];
  });
}

Tensor mean(const Tensor& x, std::size_t axis) {
  return mul_scalar(sum(x, axis), 1.0 / double(x.shape()[axis]));
}

Tensor sum_all(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  NodePtr node = make_node({1}, {s}, "sum_all");
  return finish(node, {x.node()}, [](Node& self) {
    Node& p = *self.parents[0];
    p.ensure_grad();
    for (auto& g : p.grad) g += self.grad[0];
  });
}

Tensor norm(const Tensor& x) {
  std::size_t axis = x.ndim() - 1;
  auto a = axis_info(x.shape(), axis);
  Shape rs = x.shape();
  rs[axis] = 1;
  std::vector<double> out(a.outer, 0.0);
  for (std::size_t o = 0; o < a.outer; ++o) {
    double s = 0.0;
    for (std::size_t e = 0; e < a.extent; ++e) {
      double v = x[o * a.extent + e];
      s += v * v;
    }
    out[o] = std::sqrt(s);
  }
  NodePtr node = make_node(rs, std::move(out), "norm");
  return finish(node, {x.node()}, [a](Node& self) {
    Node& p = *self.parents[0];
    p.ensure_grad();
    for (std::size_t o = 0; o < a.outer; ++o) {
      double y = self.values[o];
      if (y <= 0.0) continue;  // subgradient 0 at the origin
      double g = self.grad[o] / y;
      for (std::size_t e = 0; e < a.extent; ++e) p.grad[o * a.extent + e] += g * p.values[o * a.extent + e];
    }
  });
}

Tensor softmax(const Tensor& x) {
  std::size_t axis = x.ndim() - 1;
  auto a = axis_info(x.shape(), axis);
  std::vector<double> out(x.size());
  for (std::size_t o = 0; o < a.outer; ++o) {
    double m = -1e308;
    for (std::size_t e = 0; e < a.extent; ++e) m = std::max(m, x[o * a.extent + e]);
    double z = 0.0;
    for (std::size_t e = 0; e < a.extent; ++e) z += std::exp(x[o * a.extent + e] - m);
    for (std::size_t e = 0; e < a.extent; ++e) out[o * a.extent + e] = std::exp(x[o * a.extent + e] - m) / z;
  }
  NodePtr node = make_node(x.shape(), std::move(out), "softmax");
  return finish(node, {x.node()}, [a](Node& self) {
    Node& p = *self.parents[0];
    p.ensure_grad();
    for (std::size_t o = 0; o < a.outer; ++o) {
      double dot = 0.0;
      for (std::size_t e = 0; e < a.extent; ++e)
        dot += self.grad[o * a.extent + e] * self.values[o * a.extent + e];
      for (std::size_t e = 0; e < a.extent; ++e) {
        double y = self.values[o * a.extent + e];
        p.grad[o * a.extent + e] += y * (self.grad[o * a.extent + e] - dot);
      }
    }
  });
}

Tensor logsumexp(const Tensor& x) {
  std::size_t axis = x.ndim() - 1;
  auto a = axis_info(x.shape(), axis);
  Shape rs = x.shape();
  rs[axis] = 1;
  std::vector<double> out(a.outer);
  for (std::size_t o = 0; o < a.outer; ++o) {
    double m = -1e308;
    for (std::size_t e = 0; e < a.extent; ++e) m = std::max(m, x[o * a.extent + e]);
    double z = 0.0;
    for (std::size_t e = 0; e < a.extent; ++e) z += std::exp(x[o * a.extent + e] - m);
    out[o] = m + std::log(z);
  }
  NodePtr node = make_node(rs, std::move(out), "logsumexp");
  return finish(node, {x.node()}, [a](Node& self) {
    Node& p = *self.parents[0];
    p.ensure_grad();
    for (std::size_t o = 0; o < a.outer; ++o) {
      double y = self.values[o];
      for (std::size_t e = 0; e < a.extent; ++e)
        p.grad[o * a.extent + e] += self.grad[o] * std::exp(p.values[o * a.extent + e] - y);
    }
  });
}

double gradcheck(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h) {
  if (h < 1e-7 || h > 1e-3) throw std::invalid_argument("fpst: gradcheck step h out of [1e-7, 1e-3]");
  Tensor xg(x.shape(), x.data(), true);
  Tensor y = f(xg);
  backward(y);
  std::vector<double> g = xg.grad();
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::vector<double> vp = x.data(), vm = x.data();
    vp[i] += h;
    vm[i] -= h;
    double fp = f(Tensor(x.shape(), vp)).item();
    double fm = f(Tensor(x.shape(), vm)).item();
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw std::runtime_error("fpst: gradcheck objective non-finite at perturbed point");
    double fd = (fp - fm) / (2.0 * h);
    double rel = std::abs(g[i] - fd) / std::max({1.0, std::abs(g[i]), std::abs(fd)});
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace fpst
