#include "ntr/newton_model.hpp"

#include <cmath>

namespace ntr {

MonomialPoly QuadraticModel::to_monomial() const {
  const std::size_t n = dim();
  MonomialPoly p(n);
  // Expand c + g.(x - x0) + 1/2 (x - x0)' B (x - x0) into raw monomials.
  double c0 = constant;
  Vector lin(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    c0 -= gradient[i] * center[i];
    lin[i] += gradient[i];
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double b = hessian(i, j);
      c0 += 0.5 * b * center[i] * center[j];
      lin[i] -= 0.5 * b * center[j];
      lin[j] -= 0.5 * b * center[i];
    }
  p.constant_term() = c0;
  for (std::size_t i = 0; i < n; ++i) p.linear(i) = lin[i];
  for (std::size_t i = 0; i < n; ++i) {
    p.set_quad(i, i, 0.5 * hessian(i, i));
    for (std::size_t j = i + 1; j < n; ++j) p.set_quad(i, j, hessian(i, j));
  }
  return p;
}

DifferenceCoefficients generalized_finite_differences(const BlockedPointSet& points,
                                                      const NewtonBasis& basis) {
  if (!basis.complete)
    throw IncompleteBasisError("generalized_finite_differences: basis is incomplete");
  if (basis.total_polys() != points.total_points())
    throw std::invalid_argument("generalized_finite_differences: basis/point count mismatch");

  // lambda values tracked at the pivot points, keyed by (block, index).
  std::array<std::vector<double>, 3> lam;
  for (int l = 0; l < 3; ++l) {
    lam[l].resize(basis.pivot_flat[l].size());
    for (std::size_t j = 0; j < lam[l].size(); ++j)
      lam[l][j] = points.value(basis.pivot_flat[l][j]);
  }

  DifferenceCoefficients dc;
  for (int l = 0; l < 3; ++l) {
    dc.lambdas[l] = lam[l];
    // lambda_{l+1} = lambda_l - sum_j lambda_l(y_j^[l]) N_j^[l], evaluated at later pivots.
    for (int m = l + 1; m < 3; ++m)
      for (std::size_t k = 0; k < lam[m].size(); ++k) {
        double s = 0.0;
        for (std::size_t j = 0; j < dc.lambdas[l].size(); ++j)
          s += dc.lambdas[l][j] * basis.polys[l][j].value(basis.pivot_points[m][k]);
        lam[m][k] -= s;
      }
  }
  return dc;
}

QuadraticModel assemble_model(const BlockedPointSet& points, const NewtonBasis& basis,
                              const DifferenceCoefficients& coeffs) {
  if (!basis.complete) throw IncompleteBasisError("assemble_model: basis is incomplete");
  const std::size_t n = points.dim;
  MonomialPoly expansion(n);
  for (int l = 0; l < 3; ++l) {
    if (coeffs.lambdas[l].size() != basis.polys[l].size())
      throw std::invalid_argument("assemble_model: coefficient count mismatch");
    for (std::size_t j = 0; j < basis.polys[l].size(); ++j)
      expansion.add_scaled(basis.polys[l][j], coeffs.lambdas[l][j]);
  }

  QuadraticModel m;
  m.center = points.blocks[0][0];
  m.hessian = expansion.hessian();
  m.gradient = expansion.gradient(m.center);
  m.constant = expansion.value(m.center);
  return m;
}

double evaluate_model(const QuadraticModel& m, const Vector& x) {
  if (x.size() != m.dim()) throw std::invalid_argument("evaluate_model: dimension mismatch");
  const Vector s = x - m.center;
  return m.constant + dot(m.gradient, s) + 0.5 * dot(s, m.hessian.apply(s));
}

Vector model_gradient(const QuadraticModel& m, const Vector& x) {
  const Vector s = x - m.center;
  Vector g = m.hessian.apply(s);
  g += m.gradient;
  return g;
}

QuadraticModel recenter(const QuadraticModel& m, const Vector& new_center) {
  QuadraticModel r;
  r.center = new_center;
  r.hessian = m.hessian;
  r.constant = evaluate_model(m, new_center);
  r.gradient = model_gradient(m, new_center);
  return r;
}

}  // namespace ntr
