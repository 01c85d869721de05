#pragma once

#include "ntr/newton_model.hpp"
#include "ntr/tr_quadratic.hpp"
#include "ntr/trace.hpp"

namespace ntr {

struct TrsSolution {
  Vector step;
  double multiplier = 0.0;  // lambda >= 0 with (B + lambda I) s = -g
  bool on_boundary = false;
};

/// Exact minimizer of g's + 1/2 s'Bs over ||s|| <= delta, via the spectral
/// secular equation (hard case included).
TrsSolution solve_trust_region_subproblem(const Vector& g, const Matrix& b, double delta);

/// Classical derivative-free baseline: Newton-basis quadratic interpolation
/// model plus the Algorithm 1 acceptance/update logic, with the subproblem
/// solved exactly over the ball.
OptimizationResult run_newton_tr(const std::function<double(const Vector&)>& f, const Vector& x0,
                                 const TRConfig& cfg);

}  // namespace ntr
