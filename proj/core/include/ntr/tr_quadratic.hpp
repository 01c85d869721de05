#pragma once

#include <cstdint>
#include <optional>

#include "ntr/interp_geometry.hpp"
#include "ntr/linalg.hpp"
#include "ntr/neural_model.hpp"
#include "ntr/newton_model.hpp"
#include "ntr/objective.hpp"
#include "ntr/trace.hpp"

namespace ntr {

/// Basis-expansion weights of the parent-child net: gradient weights, packed
/// Hessian weights (upper triangle including diagonal), step weights, and the
/// squared reparametrization u with multiplier w* = u^2 >= 0.
struct QuadraticNTRWeights {
  Vector w_g;
  Vector w_h;  // packed (i <= j), diagonal enters the Hessian with factor 1/2
  Vector w_s;
  double u = 0.0;

  double w_star() const { return u * u; }
  static std::size_t packed_size(std::size_t n) { return n * (n + 1) / 2; }
  static std::size_t packed_index(std::size_t n, std::size_t i, std::size_t j);

  Matrix assemble_hessian() const;
  std::size_t dim() const { return w_g.size(); }
};

struct LossWeightsQuad {
  double zbar1 = 1.0, zbar2 = 0.0;       // data fit, parent curvature target
  double z1 = 1.0, z2 = 1.0, z3 = 0.0;   // stationarity, complementarity, child curvature
  double zt1 = 1.0, zt2 = 1.0, zt3 = 0.0;  // overall combination
  double c = 0.0;        // parent curvature target
  double c_tilde = 0.0;  // child curvature target / slack
  double c_star = 0.1;   // fraction of the Cauchy decrease to demand
};

struct TRConfig {
  double eta1 = 0.1, eta2 = 0.75;  // 0 < eta1 <= eta2 <= 1
  double g1 = 0.5, g2 = 2.0;       // 0 < g1 < 1 <= g2
  double delta0 = 1.0;
  double eps_delta = 1e-6;
  double eps_station = 1e-5;
  std::size_t max_iters = 500;
  std::uint64_t seed = 0;
  std::size_t budget = static_cast<std::size_t>(-1);
  double beta_check = 1e-6;   // accepted-step decrease assertion factor
  double tol_kkt = 1e-4;
  std::size_t restarts = 3;
  std::size_t descent_steps = 2000;
  double pivot_threshold = 1e-8;
  std::size_t adequacy_probes = 512;
  std::size_t repair_starts = 16;

  void validate() const;
};

struct TrustRegionState {
  Vector x;
  double delta = 1.0;
  std::optional<double> rho;
  BlockedPointSet set;
  std::size_t iter = 0;
  std::size_t evals = 0;
};

struct StepDiagnostics {
  double overall = kNaN;
  double l1 = kNaN, l2 = kNaN, l3 = kNaN;
  double kkt_stationarity = kNaN;
  double kkt_complementarity = kNaN;
  double lambda_min_shifted = kNaN;  // smallest eigenvalue of H + w* I
  double model_decrease = kNaN;
};

struct StepResult {
  Vector step;
  QuadraticNTRWeights weights;
  StepDiagnostics diagnostics;
};

/// Parent data-fit loss: zbar1 * RMSE of the basis-expansion quadratic over
/// the interpolation points (displacements from the block-0 point), plus
/// zbar2 * (lambda_min(H) - c)^2.
double loss_L1(const QuadraticNTRWeights& weights, const BlockedPointSet& set,
               const LossWeightsQuad& lw);

/// Child optimality loss: z1 ||(H + w* I)s + g||^2 + z2 [w*(delta - ||s||)]^2
/// + z3 (lambda_min(H + w* I) - c_tilde)^2.
double loss_L2(const QuadraticNTRWeights& weights, double delta, const LossWeightsQuad& lw);

/// Cauchy-fraction loss, clamped at zero from below.
double loss_L3(double model_decrease, double cauchy_decrease, const LossWeightsQuad& lw);

/// Exact decrease along the steepest-descent ray clipped to the ball.
double cauchy_decrease(const QuadraticModel& model, double delta);

/// (f_old - f_new) / (m_old - m_new); empty when the denominator degenerates.
std::optional<double> agreement_ratio(double f_old, double f_new, double m_old, double m_new);

/// Minimizes zt1 L1 + zt2 L2 + zt3 L3 over all weights by seeded multi-start
/// gradient descent with backtracking; enforces ||s|| <= delta by final radial
/// scaling and reports original-unit diagnostics.
StepResult solve_step_quadratic(const TrustRegionState& state, const TRConfig& cfg,
                                const LossWeightsQuad& lw, const TrainConfig& train,
                                const QuadraticNTRWeights* warm_start = nullptr);

OptimizationResult run_algorithm1(const std::function<double(const Vector&)>& f, const Vector& x0,
                                  const TRConfig& cfg, const LossWeightsQuad& lw,
                                  const TrainConfig& train);

/// Blocked start pattern: center, then (delta/2) e_i, then delta e_i and
/// (delta/2)(e_i + e_j); poised by construction.
std::vector<Vector> initial_pattern(const Vector& center, double delta);

}  // namespace ntr
