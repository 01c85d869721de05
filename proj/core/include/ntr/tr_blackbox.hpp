#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "ntr/interp_geometry.hpp"
#include "ntr/linalg.hpp"
#include "ntr/neural_model.hpp"
#include "ntr/objective.hpp"
#include "ntr/trace.hpp"
#include "ntr/tr_quadratic.hpp"

namespace ntr {

/// Sampled interior/boundary point sets S and T with their objective values.
struct SampledSets {
  Vector center;
  double delta = 1.0;
  std::vector<Vector> interior;
  Vector interior_values;
  std::vector<Vector> boundary;
  Vector boundary_values;

  std::size_t n_w() const { return interior.size(); }
  std::size_t n_b() const { return boundary.size(); }
};

enum class ChildLoss {
  ls_la,       // zt1 * L_s + zt2 * L_a
  lprime,      // L'_s + L'_a
  lbntr,       // g1 L_delta + g2 |decrease target| + g3 |rho - eta''|
  lbntr_star,  // g1 L_delta + g2 L_cauchy + g3 L_local + g4 cosh(rho - eta'')
};

struct BlackboxLossWeights {
  // L*_BNTR weights.
  double g1 = 1.0, g2 = 1.0, g3 = 0.1, g4 = 0.1;
  double g2p = 0.0, g2pp = 1.0;  // L_local = g2p |lambda'' - c| + g2pp mean grad^2
  double beta_p = 1e-4, beta_pp = 0.0;
  double eta_pp = 1.0;  // agreement target eta''
  double eta3 = 1.5;    // too-successful threshold (>= 1)
  double c = 0.01;      // eigenvalue target in L_local
  Vector c_i;           // leading-minor targets for L'; empty = zeros
  // L = zt1 L_s + zt2 L_a combination and L_s sub-weights.
  double zt1 = 1.0, zt2 = 1.0;
  double z1 = 1.0, z2 = 1.0, z3 = 0.0;
  double c_tilde = 0.0;
};

struct StepSearchState {
  Vector w_s;
  double u = 0.0;
  double w_star() const { return u * u; }
};

struct BBConfig {
  double eta1 = 0.1, eta2 = 0.75, eta3 = 1.5;  // 0 <= eta1 <= eta2 <= 1 <= eta3
  double g1 = 0.5, g2 = 1.0, g3 = 2.0;         // 0 < g1 < g2 <= 1 <= g3
  double delta0 = 1.0;
  double eps_delta = 1e-6;
  double eps_station = 1e-5;
  std::size_t max_iters = 500;
  std::uint64_t seed = 0;
  std::size_t budget = static_cast<std::size_t>(-1);
  std::size_t n_w = 0;  // 0 = (n+1)(n+2)/2
  std::size_t n_b = 0;  // 0 = 2n; boundary sampling skipped entirely when set
                        // to the sentinel below
  bool boundary_enabled = true;
  std::size_t refresh_cadence = 25;  // true-f refresh inside the step search
  std::size_t child_starts = 2;
  std::size_t child_steps = 200;
  ChildLoss child_loss = ChildLoss::lbntr_star;
  double gate_tol = 1e-8;  // accepted-step decrease gate slack
  bool allow_boundary_relaxation = false;
  double relax_gamma = 1.0;
  double local_min_tol = 1e-3;
  std::size_t adequacy_probes = 512;
  double pivot_threshold = 1e-8;
  std::size_t repair_starts = 16;
  std::size_t clarke_dirs = 16;

  void validate() const;
  std::size_t default_n_w(std::size_t n) const { return n_w ? n_w : (n + 1) * (n + 2) / 2; }
  std::size_t default_n_b(std::size_t n) const {
    return boundary_enabled ? (n_b ? n_b : 2 * n) : 0;
  }
};

/// Reuses in-ball points from `existing`, tops up the interior with seeded
/// low-discrepancy samples and the boundary with normalized gaussian
/// directions; evaluates f only at new points.
SampledSets sample_sets(Evaluator& eval, const Vector& center, double delta, std::size_t n_w,
                        std::size_t n_b, const std::vector<std::pair<Vector, double>>& existing,
                        std::uint64_t seed);

/// Balanced interior + boundary mean squared residual (boundary term 0 when empty).
double loss_mse_lb(const FeedForwardNet& net, const SampledSets& sets);

/// Optimality-conditions loss at x^k + s using the net's input derivatives.
double loss_Ls(const FeedForwardNet& net, const Vector& center, const StepSearchState& step,
               double delta, const BlackboxLossWeights& lw);

/// Too-successful agreement loss (rho - eta3)^2; rho uses the true objective.
double loss_La(Evaluator& eval, const FeedForwardNet& net, const Vector& center,
               const Vector& step, const BlackboxLossWeights& lw);

/// Relaxed local-minimum loss L'_s (mean squared partials + leading-minor targets).
double loss_Lprime_s(const FeedForwardNet& net, const Vector& center, const Vector& step,
                     const BlackboxLossWeights& lw);
double loss_Lprime(Evaluator& eval, const FeedForwardNet& net, const Vector& center,
                   const Vector& step, const BlackboxLossWeights& lw);

/// Piecewise step-length penalty; zero inside the ball, C^1 at the seam.
double l_delta_penalty(double step_norm, double delta);

double loss_LBNTR(Evaluator& eval, const FeedForwardNet& net, const Vector& center,
                  const Vector& step, double delta, const BlackboxLossWeights& lw);

struct LBntrStarTerms {
  double l_delta = 0.0;
  double l_cauchy = 0.0;
  double l_local = 0.0;
  double l_agreement = 0.0;
  double total = 0.0;
};

LBntrStarTerms loss_LBNTR_star(Evaluator& eval, const FeedForwardNet& net, const Vector& center,
                               const Vector& step, double delta, const BlackboxLossWeights& lw);

struct ModelStepDiagnostics {
  double train_mse = kNaN;
  double test_mse = kNaN;
  LBntrStarTerms child_terms;
  double model_decrease = kNaN;
  double grad_norm_at_step = kNaN;
  double lambda_min_at_step = kNaN;
  bool local_min_ok = false;
  std::vector<std::size_t> train_indices, test_indices, gradient_ids;
  std::size_t leaked_test_ids = 0;
};

struct ModelStepResult {
  FeedForwardNet net;
  Vector step;
  ModelStepDiagnostics diagnostics;
};

/// Algorithm 3: split, train on the training subsets (early-stop on held-out
/// stagnation), then search the step through the configured child loss.
ModelStepResult model_and_step(Evaluator& eval, const SampledSets& sets, const Vector& center,
                               double delta, const BBConfig& cfg, const BlackboxLossWeights& lw,
                               const TrainConfig& train);

/// Sampled Clarke stationarity surrogate: min over random unit directions of
/// the max difference quotient over scales {r, r/4, r/16}.
double clarke_stationarity_proxy(const std::function<double(const Vector&)>& f, const Vector& x,
                                 double radius, std::size_t n_dirs, std::uint64_t seed);

OptimizationResult run_algorithm2(const std::function<double(const Vector&)>& f, const Vector& x0,
                                  const BBConfig& cfg, const BlackboxLossWeights& lw,
                                  const TrainConfig& train);

}  // namespace ntr
