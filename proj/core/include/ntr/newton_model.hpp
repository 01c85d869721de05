#pragma once

#include <array>
#include <vector>

#include "ntr/interp_geometry.hpp"
#include "ntr/linalg.hpp"
#include "ntr/polynomial.hpp"

namespace ntr {

class IncompleteBasisError : public std::runtime_error {
public:
  explicit IncompleteBasisError(const std::string& what) : std::runtime_error(what) {}
};

/// Quadratic model m(x) = constant + g.(x - center) + 1/2 (x - center)' B (x - center).
struct QuadraticModel {
  Vector center;
  double constant = 0.0;
  Vector gradient;
  Matrix hessian;

  std::size_t dim() const { return center.size(); }
  MonomialPoly to_monomial() const;
};

/// Generalized finite-difference coefficients lambda_l(y_j^[l]), one per point.
struct DifferenceCoefficients {
  std::array<std::vector<double>, 3> lambdas;
};

/// Runs the difference recurrence numerically at the pivot points only:
/// lambda_0 = f, lambda_{l+1}(x) = lambda_l(x) - sum_j lambda_l(y_j^[l]) N_j^[l](x).
DifferenceCoefficients generalized_finite_differences(const BlockedPointSet& points,
                                                      const NewtonBasis& basis);

/// Expands sum lambda * N into monomial coefficients, then re-centers about
/// `center` (the block-0 point by default).
QuadraticModel assemble_model(const BlockedPointSet& points, const NewtonBasis& basis,
                              const DifferenceCoefficients& coeffs);

double evaluate_model(const QuadraticModel& m, const Vector& x);
Vector model_gradient(const QuadraticModel& m, const Vector& x);

/// Re-expresses the model about a new center; exact for quadratics.
QuadraticModel recenter(const QuadraticModel& m, const Vector& new_center);

}  // namespace ntr
