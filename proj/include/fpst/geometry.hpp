#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "fpst/tensor.hpp"

namespace fpst {

// Numerical policy for the stereographic operations.
inline constexpr double kKappaSwitch = 1e-5;  // Taylor-series threshold in kappa
inline constexpr double kEpsBall = 1e-5;      // projection margin inside the ball
inline constexpr double kKappaMax = 10.0;     // post-step clamp on |kappa|
inline constexpr double kEpsDen = 1e-12;      // midpoint denominator floor

// Product of H constant-curvature stereographic spaces of dimension
// head_dim each. Curvatures are scalar tensors (usually parameters).
struct ProductSignature {
  std::vector<Tensor> kappas;
  std::size_t head_dim = 0;
  std::size_t heads() const { return kappas.size(); }
  std::size_t dim() const { return kappas.size() * head_dim; }
};

// curvature-dependent trigonometry; smooth in kappa through 0
Tensor tan_k(const Tensor& x, const Tensor& kappa);
Tensor arctan_k(const Tensor& x, const Tensor& kappa);
Tensor sin_k(const Tensor& x, const Tensor& kappa);
Tensor arcsin_k(const Tensor& x, const Tensor& kappa);

// single-space operations; points are (..., d) with trailing feature axis
Tensor mobius_add(const Tensor& x, const Tensor& y, const Tensor& kappa);
Tensor mobius_scalar(double r, const Tensor& x, const Tensor& kappa);
Tensor conformal_factor(const Tensor& x, const Tensor& kappa);  // (..., 1)
Tensor distance(const Tensor& x, const Tensor& y, const Tensor& kappa);  // (..., 1)
Tensor exp_map(const Tensor& x, const Tensor& v, const Tensor& kappa);
Tensor log_map(const Tensor& x, const Tensor& y, const Tensor& kappa);
Tensor exp0(const Tensor& v, const Tensor& kappa);
Tensor log0(const Tensor& y, const Tensor& kappa);
Tensor parallel_transport(const Tensor& x, const Tensor& y, const Tensor& v, const Tensor& kappa);
Tensor pt_to_origin(const Tensor& x, const Tensor& v, const Tensor& kappa);
Tensor project_to_ball(const Tensor& x, const Tensor& kappa, double eps = kEpsBall);

// For positive curvature, radially pull rows that lie past frac of the
// equator radius 1/sqrt(kappa) back onto it, keeping attention inputs on
// the near hemisphere of the chart. Identity for kappa <= 0.
Tensor clip_to_chart(const Tensor& x, const Tensor& kappa, double frac = 0.9);

// weights (m, n) x points (n, d') -> (m, d'); one Einstein midpoint per row
Tensor einstein_midpoint(const Tensor& points, const Tensor& weights, const Tensor& kappa);

// distance from x to the hyperplane through p with tangent normal a
Tensor hyperplane_distance(const Tensor& x, const Tensor& a, const Tensor& p, const Tensor& kappa);

// product-space composition
Tensor apply_blockwise(const Tensor& x, const ProductSignature& sig,
                       const std::function<Tensor(const Tensor&, const Tensor&)>& op);
Tensor product_distance(const Tensor& x, const Tensor& y, const ProductSignature& sig);
Tensor exp0_product(const Tensor& v, const ProductSignature& sig);
Tensor log0_product(const Tensor& y, const ProductSignature& sig);
Tensor mobius_add_product(const Tensor& x, const Tensor& y, const ProductSignature& sig);
Tensor project_product(const Tensor& x, const ProductSignature& sig);

}  // namespace fpst
