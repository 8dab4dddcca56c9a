#include "fpst/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fpst {

namespace {

void require_scalar(const Tensor& kappa) {
  if (kappa.size() != 1)
    throw std::invalid_argument("fpst: curvature must be a scalar tensor, got " +
                                shape_str(kappa.shape()));
}

// norm along the last axis plus a zero-safe unit direction. Rows of zero
// norm yield a zero unit vector (subgradient convention).
struct Radial {
  Tensor n;     // (..., 1)
  Tensor unit;  // (..., d)
};

Radial radial(const Tensor& x) {
  Tensor n = norm(x);
  bool any_zero = false;
  for (double v : n.data())
    if (v == 0.0) {
      any_zero = true;
      break;
    }
  if (!any_zero) return {n, div(x, n)};
  std::vector<double> mask(n.size(), 0.0);
  for (std::size_t i = 0; i < n.size(); ++i)
    if (n[i] == 0.0) mask[i] = 1.0;
  Tensor m(n.shape(), std::move(mask));
  return {n, div(x, add(n, m))};
}

Tensor dot_last(const Tensor& a, const Tensor& b) { return sum(mul(a, b), std::max(a.ndim(), b.ndim()) - 1); }

}  // namespace

Tensor tan_k(const Tensor& x, const Tensor& kappa) {
  require_scalar(kappa);
  double kv = kappa.item();
  if (kv > kKappaSwitch) {
    Tensor s = sqrt_t(kappa);
    Tensor arg = mul(x, s);
    for (double v : arg.data())
      if (std::abs(std::cos(v)) < 1e-12)
        throw std::runtime_error("fpst: tan_k evaluated at a pole (|cos(sqrt(k) x)| < 1e-12)");
    return div(tan_t(arg), s);
  }
  if (kv < -kKappaSwitch) {
    Tensor s = sqrt_t(neg(kappa));
    return div(tanh_t(mul(x, s)), s);
  }
  // order-5 series: x + k x^3/3 + 2 k^2 x^5/15
  Tensor x2 = square(x);
  Tensor x3 = mul(x2, x);
  Tensor x5 = mul(x3, x2);
  return add(x, add(mul(mul_scalar(x3, 1.0 / 3.0), kappa), mul(mul_scalar(x5, 2.0 / 15.0), square(kappa))));
}

Tensor arctan_k(const Tensor& x, const Tensor& kappa) {
  require_scalar(kappa);
  double kv = kappa.item();
  if (kv > kKappaSwitch) {
    Tensor s = sqrt_t(kappa);
    return div(atan_t(mul(x, s)), s);
  }
  if (kv < -kKappaSwitch) {
    Tensor s = sqrt_t(neg(kappa));
    return div(atanh_t(mul(x, s)), s);
  }
  // x - k x^3/3 + k^2 x^5/5
  Tensor x2 = square(x);
  Tensor x3 = mul(x2, x);
  Tensor x5 = mul(x3, x2);
  return add(x, add(mul(mul_scalar(x3, -1.0 / 3.0), kappa), mul(mul_scalar(x5, 1.0 / 5.0), square(kappa))));
}

Tensor sin_k(const Tensor& x, const Tensor& kappa) {
  require_scalar(kappa);
  double kv = kappa.item();
  if (kv > kKappaSwitch) {
    Tensor s = sqrt_t(kappa);
    return div(sin_t(mul(x, s)), s);
  }
  if (kv < -kKappaSwitch) {
    Tensor s = sqrt_t(neg(kappa));
    return div(sinh_t(mul(x, s)), s);
  }
  // x - k x^3/6 + k^2 x^5/120
  Tensor x2 = square(x);
  Tensor x3 = mul(x2, x);
  Tensor x5 = mul(x3, x2);
  return add(x, add(mul(mul_scalar(x3, -1.0 / 6.0), kappa), mul(mul_scalar(x5, 1.0 / 120.0), square(kappa))));
}

Tensor arcsin_k(const Tensor& x, const Tensor& kappa) {
  require_scalar(kappa);
  double kv = kappa.item();
  if (kv > kKappaSwitch) {
    Tensor s = sqrt_t(kappa);
    return div(asin_t(mul(x, s)), s);
  }
  if (kv < -kKappaSwitch) {
    Tensor s = sqrt_t(neg(kappa));
    return div(asinh_t(mul(x, s)), s);
  }
  // x + k x^3/6 + 3 k^2 x^5/40
  Tensor x2 = square(x);
  Tensor x3 = mul(x2, x);
  Tensor x5 = mul(x3, x2);
  return add(x, add(mul(mul_scalar(x3, 1.0 / 6.0), kappa), mul(mul_scalar(x5, 3.0 / 40.0), square(kappa))));
}

Tensor project_to_ball(const Tensor& x, const Tensor& kappa, double eps) {
  require_scalar(kappa);
  double kv = kappa.item();
  if (kv >= 0.0) return x;
  double rmax = (1.0 - eps) / std::sqrt(-kv);
  std::size_t d = x.shape().back();
  std::size_t rows = x.size() / d;
  bool clip = false;
  std::vector<double> scale(rows, 1.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += x[r * d + j] * x[r * d + j];
    s = std::sqrt(s);
    if (s > rmax) {
      clip = true;
      scale[r] = rmax / s;
    }
  }
  if (!clip) return x;
  Shape ss = x.shape();
  ss.back() = 1;
  return mul(x, Tensor(ss, std::move(scale)));
}

Tensor clip_to_chart(const Tensor& x, const Tensor& kappa, double frac) {
  require_scalar(kappa);
  double kv = kappa.item();
  if (kv <= 0.0) return x;
  double cap_v = frac / std::sqrt(kv);
  std::size_t d = x.shape().back();
  std::size_t rows = x.size() / d;
  bool clip = false;
  std::vector<double> over(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += x[r * d + j] * x[r * d + j];
    if (std::sqrt(s) > cap_v) {
      clip = true;
      over[r] = 1.0;
    }
  }
  if (!clip) return x;
  Shape ss = x.shape();
  ss.back() = 1;
  Tensor mask(ss, std::move(over));
  std::vector<double> keep(rows);
  for (std::size_t r = 0; r < rows; ++r) keep[r] = 1.0 - mask[r];
  Tensor inv_mask(ss, std::move(keep));
  // Differentiable radial rescale of the rows past the cap: the cap depends
  // on kappa, so curvature gradients flow through the clip as well.
  Tensor cap = div(Tensor::scalar(frac), sqrt_t(kappa));
  Tensor r_safe = add(mul(mask, norm(x)), inv_mask);  // clipped rows: ||x||, others: 1
  Tensor scale = add(mul(mask, div(cap, r_safe)), inv_mask);
  return mul(x, scale);
}

Tensor mobius_add(const Tensor& x, const Tensor& y, const Tensor& kappa) {
  require_scalar(kappa);
  Tensor x2 = sum(square(x), x.ndim() - 1);
  Tensor y2 = sum(square(y), y.ndim() - 1);
  Tensor xy = dot_last(x, y);
  Tensor k = kappa;
  Tensor cx = add_scalar(sub(neg(mul_scalar(mul(k, xy), 2.0)), mul(k, y2)), 1.0);
  Tensor cy = add_scalar(mul(k, x2), 1.0);
  Tensor num = add(mul(cx, x), mul(cy, y));
  Tensor den = add_scalar(add(neg(mul_scalar(mul(k, xy), 2.0)), mul(square(k), mul(x2, y2))), 1.0);
  for (double v : den.data())
    if (std::abs(v) < 1e-15)
      throw std::runtime_error("fpst: mobius_add denominator vanishes (antipodal points)");
  return project_to_ball(div(num, den), kappa);
}

Tensor mobius_scalar(double r, const Tensor& x, const Tensor& kappa) {
  require_scalar(kappa);
  Radial rx = radial(x);
  Tensor mag = tan_k(mul_scalar(arctan_k(rx.n, kappa), r), kappa);
  return project_to_ball(mul(rx.unit, mag), kappa);
}

Tensor conformal_factor(const Tensor& x, const Tensor& kappa) {
  require_scalar(kappa);
  Tensor den = add_scalar(mul(kappa, sum(square(x), x.ndim() - 1)), 1.0);
  for (double v : den.data())
    if (v <= 1e-12)
      throw std::runtime_error("fpst: conformal factor undefined, point outside the ball");
  return div(Tensor::scalar(2.0), den);
}

Tensor distance(const Tensor& x, const Tensor& y, const Tensor& kappa) {
  // ||-x (+) y|| = ||x - y|| / sqrt(1 + 2k<x,y> + k^2 ||x||^2 ||y||^2);
  // this form is symmetric in x and y down to the last bit
  std::size_t axis = x.ndim() - 1;
  Tensor ip = sum(mul(x, y), axis);
  Tensor x2 = sum(mul(x, x), axis);
  Tensor y2 = sum(mul(y, y), axis);
  Tensor den = add(add_scalar(mul_scalar(mul(kappa, ip), 2.0), 1.0),
                   mul(mul(kappa, kappa), mul(x2, y2)));
  for (std::size_t i = 0; i < den.size(); ++i)
    if (den[i] < kEpsDen)
      throw std::domain_error("fpst: distance between antipodal points is undefined");
  Tensor gamma = div(norm(sub(x, y)), sqrt_t(den));
  return mul_scalar(arctan_k(gamma, kappa), 2.0);
}

Tensor exp_map(const Tensor& x, const Tensor& v, const Tensor& kappa) {
  Radial rv = radial(v);
  Tensor lam = conformal_factor(x, kappa);
  Tensor mag = tan_k(mul_scalar(mul(lam, rv.n), 0.5), kappa);
  return mobius_add(x, mul(rv.unit, mag), kappa);
}

Tensor log_map(const Tensor& x, const Tensor& y, const Tensor& kappa) {
  Tensor z = mobius_add(neg(x), y, kappa);
  Radial rz = radial(z);
  Tensor lam = conformal_factor(x, kappa);
  Tensor mag = mul(div(Tensor::scalar(2.0), lam), arctan_k(rz.n, kappa));
  return mul(rz.unit, mag);
}

Tensor exp0(const Tensor& v, const Tensor& kappa) {
  Radial rv = radial(v);
  return project_to_ball(mul(rv.unit, tan_k(rv.n, kappa)), kappa);
}

Tensor log0(const Tensor& y, const Tensor& kappa) {
  Radial ry = radial(y);
  return mul(ry.unit, arctan_k(ry.n, kappa));
}

Tensor parallel_transport(const Tensor& x, const Tensor& y, const Tensor& v, const Tensor& kappa) {
  require_scalar(kappa);
  double kv = kappa.item();
  // Gyration is a linear map, so transport a safely-scaled copy of v and
  // scale back; this keeps every intermediate Mobius sum well inside the
  // model regardless of the tangent vector's length.
  double s = std::sqrt(std::abs(kv));
  std::size_t d = v.shape().back();
  std::size_t rows = v.size() / d;
  std::vector<double> c(rows, 1.0);
  bool scaled = false;
  for (std::size_t r = 0; r < rows; ++r) {
    double nv = 0.0;
    for (std::size_t j = 0; j < d; ++j) nv += v[r * d + j] * v[r * d + j];
    nv = std::sqrt(nv) * s;
    if (nv > 0.1) {
      c[r] = nv / 0.1;
      scaled = true;
    }
  }
  Shape cs = v.shape();
  cs.back() = 1;
  Tensor ct(cs, c);
  Tensor t = scaled ? div(v, ct) : v;
  Tensor w1 = mobius_add(y, neg(x), kappa);
  Tensor w2 = mobius_add(y, mobius_add(neg(x), t, kappa), kappa);
  Tensor g = mobius_add(neg(w1), w2, kappa);
  Tensor out = mul(g, div(conformal_factor(x, kappa), conformal_factor(y, kappa)));
  return scaled ? mul(out, ct) : out;
}

Tensor pt_to_origin(const Tensor& x, const Tensor& v, const Tensor& kappa) {
  Shape zs = x.shape();
  return parallel_transport(x, Tensor::zeros(zs), v, kappa);
}

Tensor einstein_midpoint(const Tensor& points, const Tensor& weights, const Tensor& kappa) {
  if (points.ndim() != 2 || weights.ndim() != 2 || weights.shape()[1] != points.shape()[0])
    throw std::invalid_argument("fpst: einstein_midpoint expects weights (m,n) and points (n,d), got " +
                                shape_str(weights.shape()) + " and " + shape_str(points.shape()));
  Tensor lam = conformal_factor(points, kappa);          // (n, 1)
  Tensor num_w = mul(weights, transpose(lam));           // (m, n)
  Tensor den = matmul(weights, add_scalar(lam, -1.0));   // (m, 1)
  for (std::size_t i = 0; i < den.size(); ++i)
    if (den[i] <= kEpsDen)
      throw std::runtime_error("fpst: einstein midpoint denominator below eps_den at row " +
                               std::to_string(i));
  Tensor s = div(matmul(num_w, points), den);
  return mobius_scalar(0.5, s, kappa);
}

Tensor hyperplane_distance(const Tensor& x, const Tensor& a, const Tensor& p, const Tensor& kappa) {
  double na = 0.0;
  for (double v : a.data()) na = std::max(na, std::abs(v));
  if (na < 1e-12) throw std::runtime_error("fpst: hyperplane normal is degenerate (|a| < 1e-12)");
  Tensor z = mobius_add(neg(p), x, kappa);
  Tensor ip = dot_last(z, a);
  Tensor z2 = sum(square(z), z.ndim() - 1);
  Tensor den = mul(add_scalar(mul(kappa, z2), 1.0), norm(a));
  Tensor q = div(mul_scalar(abs_t(ip), 2.0), den);
  Tensor kp = mul(kappa, abs_t(kappa));
  return arcsin_k(q, kp);
}

Tensor apply_blockwise(const Tensor& x, const ProductSignature& sig,
                       const std::function<Tensor(const Tensor&, const Tensor&)>& op) {
  if (x.shape().back() != sig.dim())
    throw std::invalid_argument("fpst: product point dim " + std::to_string(x.shape().back()) +
                                " does not match signature dim " + std::to_string(sig.dim()));
  if (sig.heads() == 1) return op(x, sig.kappas[0]);
  auto blocks = split(x, x.ndim() - 1, sig.heads());
  std::vector<Tensor> out;
  out.reserve(blocks.size());
  for (std::size_t h = 0; h < blocks.size(); ++h) out.push_back(op(blocks[h], sig.kappas[h]));
  return concat(out, x.ndim() - 1);
}

Tensor product_distance(const Tensor& x, const Tensor& y, const ProductSignature& sig) {
  if (x.shape().back() != sig.dim() || y.shape().back() != sig.dim())
    throw std::invalid_argument("fpst: product_distance signature mismatch for shapes " +
                                shape_str(x.shape()) + ", " + shape_str(y.shape()));
  auto bx = split(x, x.ndim() - 1, sig.heads());
  auto by = split(y, y.ndim() - 1, sig.heads());
  Tensor acc;
  for (std::size_t h = 0; h < sig.heads(); ++h) {
    Tensor d2 = square(distance(bx[h], by[h], sig.kappas[h]));
    acc = h == 0 ? d2 : add(acc, d2);
  }
  return sqrt_t(acc);
}

Tensor exp0_product(const Tensor& v, const ProductSignature& sig) {
  return apply_blockwise(v, sig, [](const Tensor& b, const Tensor& k) { return exp0(b, k); });
}

Tensor log0_product(const Tensor& y, const ProductSignature& sig) {
  return apply_blockwise(y, sig, [](const Tensor& b, const Tensor& k) { return log0(b, k); });
}

Tensor mobius_add_product(const Tensor& x, const Tensor& y, const ProductSignature& sig) {
  auto bx = split(x, x.ndim() - 1, sig.heads());
  auto by = split(y, y.ndim() - 1, sig.heads());
  std::vector<Tensor> out;
  for (std::size_t h = 0; h < sig.heads(); ++h)
    out.push_back(mobius_add(bx[h], by[h], sig.kappas[h]));
  return concat(out, x.ndim() - 1);
}

Tensor project_product(const Tensor& x, const ProductSignature& sig) {
  return apply_blockwise(x, sig, [](const Tensor& b, const Tensor& k) { return project_to_ball(b, k); });
}

}  // namespace fpst
