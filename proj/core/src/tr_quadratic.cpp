#include "ntr/tr_quadratic.hpp"

#include <algorithm>
#include <cmath>

#include "ntr/sampling.hpp"

namespace ntr {

std::size_t QuadraticNTRWeights::packed_index(std::size_t n, std::size_t i, std::size_t j) {
  if (i > j) std::swap(i, j);
  if (j >= n) throw std::invalid_argument("packed_index: out of range");
  std::size_t off = 0;
  for (std::size_t r = 0; r < i; ++r) off += n - r;
  return off + (j - i);
}

Matrix QuadraticNTRWeights::assemble_hessian() const {
  const std::size_t n = dim();
  Matrix h(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      const double w = w_h[packed_index(n, i, j)];
      if (i == j) {
        h(i, i) = 0.5 * w;
      } else {
        h(i, j) = w;
        h(j, i) = w;
      }
    }
  return h;
}

void TRConfig::validate() const {
  if (!(eta1 > 0.0 && eta1 <= eta2 && eta2 <= 1.0))
    throw std::invalid_argument("TRConfig: need 0 < eta1 <= eta2 <= 1");
  if (!(g1 > 0.0 && g1 < 1.0 && g2 >= 1.0))
    throw std::invalid_argument("TRConfig: need 0 < g1 < 1 <= g2");
  if (delta0 <= 0.0 || eps_delta <= 0.0 || eps_station <= 0.0)
    throw std::invalid_argument("TRConfig: tolerances must be positive");
  if (restarts == 0 || descent_steps == 0)
    throw std::invalid_argument("TRConfig: optimizer settings must be positive");
}

double loss_L1(const QuadraticNTRWeights& weights, const BlockedPointSet& set,
               const LossWeightsQuad& lw) {
  const std::size_t p = set.total_points();
  if (p == 0) throw std::invalid_argument("loss_L1: empty set");
  const Vector& xk = set.blocks[0][0];
  const double fk = set.values[0][0];
  const Matrix h = weights.assemble_hessian();

  double q = 0.0;
  for (std::size_t i = 0; i < p; ++i) {
    const Vector s = set.point(i) - xk;
    const double pred = fk + dot(weights.w_g, s) + 0.5 * dot(s, h.apply(s));
    const double r = pred - set.value(i);
    q += r * r;
  }
  double loss = lw.zbar1 * std::sqrt(q / static_cast<double>(p));
  if (lw.zbar2 != 0.0) {
    const double lam = smallest_eigenpair(h).value;
    loss += lw.zbar2 * (lam - lw.c) * (lam - lw.c);
  }
  return loss;
}

double loss_L2(const QuadraticNTRWeights& weights, double delta, const LossWeightsQuad& lw) {
  if (delta <= 0.0) throw std::invalid_argument("loss_L2: delta must be > 0");
  const std::size_t n = weights.dim();
  const Matrix h = weights.assemble_hessian();
  const double ws = weights.w_star();

  Vector v = h.apply(weights.w_s);
  for (std::size_t i = 0; i < n; ++i) v[i] += ws * weights.w_s[i] + weights.w_g[i];
  double loss = lw.z1 * dot(v, v);

  const double comp = ws * (delta - norm2(weights.w_s));
  loss += lw.z2 * comp * comp;

  if (lw.z3 != 0.0) {
    const double lam = smallest_eigenpair(h).value + ws;
    loss += lw.z3 * (lam - lw.c_tilde) * (lam - lw.c_tilde);
  }
  return loss;
}

double loss_L3(double model_decrease, double cauchy_decrease, const LossWeightsQuad& lw) {
  const double d = model_decrease - lw.c_star * cauchy_decrease;
  return std::max(0.0, d * d - lw.c_tilde);
}

double cauchy_decrease(const QuadraticModel& model, double delta) {
  if (delta <= 0.0) throw std::invalid_argument("cauchy_decrease: delta must be > 0");
  const Vector g = model.gradient;
  const double gn = norm2(g);
  if (gn == 0.0) return 0.0;
  const double curv = dot(g, model.hessian.apply(g));  // g' H g
  const double t_max = delta / gn;
  double t = t_max;
  if (curv > 0.0) t = std::min(gn * gn / curv, t_max);
  return t * gn * gn - 0.5 * t * t * curv;
}

std::optional<double> agreement_ratio(double f_old, double f_new, double m_old, double m_new) {
  const double denom = m_old - m_new;
  if (std::abs(denom) < 1e-14 * (1.0 + std::abs(f_old))) return std::nullopt;
  return (f_old - f_new) / denom;
}

std::vector<Vector> initial_pattern(const Vector& center, double delta) {
  const std::size_t n = center.size();
  std::vector<Vector> pts;
  pts.push_back(center);
  for (std::size_t i = 0; i < n; ++i) {
    Vector p = center;
    p[i] += 0.5 * delta;
    pts.push_back(std::move(p));
  }
  for (std::size_t i = 0; i < n; ++i) {
    Vector p = center;
    p[i] += delta;
    pts.push_back(std::move(p));
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      Vector p = center;
      p[i] += 0.5 * delta;
      p[j] += 0.5 * delta;
      pts.push_back(std::move(p));
    }
  return pts;
}

namespace {

// Scaled formulation: displacements z = (y - x^k)/delta, values
// phi = (f(y) - f(x^k))/V. Parameters theta = [g_hat, wh_hat, s_hat, u_hat].
struct ScaledProblem {
  std::size_t n = 0;
  std::size_t m = 0;  // packed Hessian size
  std::vector<Vector> z;
  Vector phi;
  double value_scale = 1.0;  // V
  double delta = 1.0;        // original radius
  LossWeightsQuad lw;

  std::size_t dim() const { return 2 * n + m + 1; }
  double kappa() const { return value_scale / (delta * delta); }  // H_orig = kappa * H_hat

  Matrix assemble(const double* wh) const {
    Matrix h(n, n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j, ++k) {
        if (i == j)
          h(i, i) = 0.5 * wh[k];
        else
          h(i, j) = h(j, i) = wh[k];
      }
    return h;
  }

  double eval(const Vector& theta, Vector* grad) const;
};

double ScaledProblem::eval(const Vector& theta, Vector* grad) const {
  const double* g = theta.data();
  const double* wh = theta.data() + n;
  const double* s = theta.data() + n + m;
  const double u = theta[2 * n + m];
  const double w = u * u;

  if (grad) std::fill(grad->begin(), grad->end(), 0.0);
  auto g_g = [&](std::size_t i) -> double& { return (*grad)[i]; };
  auto g_wh = [&](std::size_t k) -> double& { return (*grad)[n + k]; };
  auto g_s = [&](std::size_t i) -> double& { return (*grad)[n + m + i]; };
  auto g_u = [&]() -> double& { return (*grad)[2 * n + m]; };

  const Matrix h = assemble(wh);
  double total = 0.0;

  // Parent fit: zbar1 * RMSE of the expansion over the displacements.
  if (lw.zbar1 != 0.0 && !z.empty()) {
    const std::size_t p = z.size();
    Vector res(p);
    double q = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
      double pred = 0.0;
      for (std::size_t a = 0; a < n; ++a) pred += g[a] * z[i][a];
      pred += 0.5 * dot(z[i], h.apply(z[i]));
      res[i] = pred - phi[i];
      q += res[i] * res[i];
    }
    const double rmse = std::sqrt(q / static_cast<double>(p));
    total += lw.zt1 * lw.zbar1 * rmse;
    if (grad && rmse > 1e-14) {
      const double f = lw.zt1 * lw.zbar1 / (rmse * static_cast<double>(p));
      for (std::size_t i = 0; i < p; ++i) {
        const double fi = f * res[i];
        for (std::size_t a = 0; a < n; ++a) g_g(a) += fi * z[i][a];
        std::size_t k = 0;
        for (std::size_t a = 0; a < n; ++a)
          for (std::size_t b = a; b < n; ++b, ++k)
            g_wh(k) += fi * (a == b ? 0.25 * z[i][a] * z[i][a] : z[i][a] * z[i][b]);
      }
    }
  }

  // Child stationarity: z1 ||(H + w I)s + g||^2.
  Vector v = h.apply(Vector(s, s + n));
  for (std::size_t i = 0; i < n; ++i) v[i] += w * s[i] + g[i];
  if (lw.z1 != 0.0) {
    total += lw.zt2 * lw.z1 * dot(v, v);
    if (grad) {
      const double f = 2.0 * lw.zt2 * lw.z1;
      for (std::size_t a = 0; a < n; ++a) g_g(a) += f * v[a];
      Vector hv = h.apply(v);
      double vs = 0.0;
      for (std::size_t a = 0; a < n; ++a) {
        g_s(a) += f * (hv[a] + w * v[a]);
        vs += v[a] * s[a];
      }
      g_u() += f * vs * 2.0 * u;
      std::size_t k = 0;
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a; b < n; ++b, ++k)
          g_wh(k) += f * (a == b ? 0.5 * v[a] * s[a] : v[a] * s[b] + v[b] * s[a]);
    }
  }

  // Complementarity: z2 [w (1 - ||s||)]^2 (scaled radius is 1).
  const double snorm = norm2(Vector(s, s + n));
  if (lw.z2 != 0.0) {
    const double e = w * (1.0 - snorm);
    total += lw.zt2 * lw.z2 * e * e;
    if (grad) {
      const double f = 2.0 * lw.zt2 * lw.z2 * e;
      g_u() += f * (1.0 - snorm) * 2.0 * u;
      if (snorm > 1e-15)
        for (std::size_t a = 0; a < n; ++a) g_s(a) += f * w * (-s[a] / snorm);
    }
  }

  // Eigenvalue targets, expressed in original units via kappa.
  if (lw.zbar2 != 0.0 || lw.z3 != 0.0) {
    const EigenSystem es = jacobi_eigensystem(h);
    const double lam_hat = es.values[0];
    // Averaged projector over the (numerically) repeated smallest eigenspace.
    std::size_t mult = 1;
    while (mult < es.values.size() && es.values[mult] - lam_hat < 1e-9) ++mult;
    Matrix proj(n, n);
    for (std::size_t c = 0; c < mult; ++c)
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
          proj(a, b) += es.vectors(a, c) * es.vectors(b, c) / static_cast<double>(mult);

    auto add_eig_term = [&](double weight, double lam_orig, double target, double du_extra) {
      const double diff = lam_orig - target;
      total += weight * diff * diff;
      if (grad) {
        const double f = 2.0 * weight * diff * kappa();
        std::size_t k = 0;
        for (std::size_t a = 0; a < n; ++a)
          for (std::size_t b = a; b < n; ++b, ++k)
            g_wh(k) += f * (a == b ? 0.5 * proj(a, a) : 2.0 * proj(a, b));
        g_u() += 2.0 * weight * diff * du_extra;
      }
    };
    if (lw.zbar2 != 0.0)
      add_eig_term(lw.zt1 * lw.zbar2, kappa() * lam_hat, lw.c, 0.0);
    if (lw.z3 != 0.0)
      add_eig_term(lw.zt2 * lw.z3, kappa() * (lam_hat + w), lw.c_tilde, kappa() * 2.0 * u);
  }

  // Cauchy-fraction term.
  if (lw.zt3 != 0.0) {
    double md = 0.0;
    for (std::size_t a = 0; a < n; ++a) md -= g[a] * s[a];
    const Vector hs = h.apply(Vector(s, s + n));
    for (std::size_t a = 0; a < n; ++a) md -= 0.5 * s[a] * hs[a];

    const Vector gv(g, g + n);
    const double gn2 = dot(gv, gv);
    double cd = 0.0;
    Vector dcd_g(n, 0.0);
    Matrix dcd_h(n, n);
    if (gn2 > 1e-24) {
      const Vector hg = h.apply(gv);
      const double curv = dot(gv, hg);
      const double gn = std::sqrt(gn2);
      const bool interior = curv > 0.0 && gn2 / curv <= 1.0 / gn;
      if (interior) {
        cd = 0.5 * gn2 * gn2 / curv;
        for (std::size_t a = 0; a < n; ++a)
          dcd_g[a] = 2.0 * gn2 * g[a] / curv - gn2 * gn2 * hg[a] / (curv * curv);
        for (std::size_t a = 0; a < n; ++a)
          for (std::size_t b = 0; b < n; ++b)
            dcd_h(a, b) = -0.5 * gn2 * gn2 / (curv * curv) * g[a] * g[b];
      } else {
        cd = gn - 0.5 * curv / gn2;
        for (std::size_t a = 0; a < n; ++a)
          dcd_g[a] = g[a] / gn - hg[a] / gn2 + curv * g[a] / (gn2 * gn2);
        for (std::size_t a = 0; a < n; ++a)
          for (std::size_t b = 0; b < n; ++b) dcd_h(a, b) = -0.5 / gn2 * g[a] * g[b];
      }
    }
    const double inner = value_scale * (md - lw.c_star * cd);
    const double l3 = inner * inner - lw.c_tilde;
    if (l3 > 0.0) {
      total += lw.zt3 * l3;
      if (grad) {
        const double f = lw.zt3 * 2.0 * inner * value_scale;
        for (std::size_t a = 0; a < n; ++a) {
          g_g(a) += f * (-s[a] - lw.c_star * dcd_g[a]);
          g_s(a) += f * (-(g[a] + hs[a]));
        }
        std::size_t k = 0;
        for (std::size_t a = 0; a < n; ++a)
          for (std::size_t b = a; b < n; ++b, ++k) {
            const double dmd = (a == b) ? -0.25 * s[a] * s[a] : -s[a] * s[b];
            const double dcd = (a == b) ? 0.5 * dcd_h(a, a) : 2.0 * dcd_h(a, b);
            g_wh(k) += f * (dmd - lw.c_star * dcd);
          }
      }
    }
  }

  return total;
}

// Plain steepest descent with Armijo backtracking; deterministic.
void armijo_descent(const ScaledProblem& sp, Vector& theta, std::size_t max_steps) {
  Vector grad(theta.size());
  double fx = sp.eval(theta, &grad);
  double step = 0.1;
  for (std::size_t it = 0; it < max_steps; ++it) {
    const double gn2 = dot(grad, grad);
    if (gn2 < 1e-28 || !std::isfinite(fx)) break;
    bool moved = false;
    step = std::min(step * 1.5, 1e3);
    while (step > 1e-18) {
      Vector trial(theta.size());
      for (std::size_t i = 0; i < theta.size(); ++i) trial[i] = theta[i] - step * grad[i];
      Vector tg(theta.size());
      const double ft = sp.eval(trial, &tg);
      if (std::isfinite(ft) && ft <= fx - 1e-4 * step * gn2) {
        theta = std::move(trial);
        grad = std::move(tg);
        fx = ft;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
}

StepDiagnostics make_diagnostics(const QuadraticNTRWeights& w, const BlockedPointSet& set,
                                 double delta, const LossWeightsQuad& lw) {
  StepDiagnostics d;
  d.l1 = loss_L1(w, set, lw);
  d.l2 = loss_L2(w, delta, lw);

  const Matrix h = w.assemble_hessian();
  const double ws = w.w_star();
  Vector v = h.apply(w.w_s);
  for (std::size_t i = 0; i < w.dim(); ++i) v[i] += ws * w.w_s[i] + w.w_g[i];
  d.kkt_stationarity = norm2(v);
  d.kkt_complementarity = std::abs(ws * (delta - norm2(w.w_s)));
  d.lambda_min_shifted = smallest_eigenpair(h).value + ws;

  d.model_decrease = -(dot(w.w_g, w.w_s) + 0.5 * dot(w.w_s, h.apply(w.w_s)));
  QuadraticModel qm{set.blocks[0][0], set.values[0][0], w.w_g, h};
  d.l3 = loss_L3(d.model_decrease, cauchy_decrease(qm, delta), lw);
  d.overall = lw.zt1 * d.l1 + lw.zt2 * d.l2 + lw.zt3 * d.l3;
  return d;
}

}  // namespace

StepResult solve_step_quadratic(const TrustRegionState& state, const TRConfig& cfg,
                                const LossWeightsQuad& lw, const TrainConfig& train,
                                const QuadraticNTRWeights* warm_start) {
  const std::size_t n = state.x.size();
  const std::size_t m = QuadraticNTRWeights::packed_size(n);

  ScaledProblem sp;
  sp.n = n;
  sp.m = m;
  sp.delta = state.delta;
  sp.lw = lw;
  const double fk = state.set.values[0][0];
  double vmax = 0.0;
  for (std::size_t i = 0; i < state.set.total_points(); ++i) {
    Vector z = state.set.point(i) - state.x;
    for (double& c : z) c /= state.delta;
    sp.z.push_back(std::move(z));
    sp.phi.push_back(state.set.value(i) - fk);
    vmax = std::max(vmax, std::abs(sp.phi.back()));
  }
  sp.value_scale = std::max(vmax, 1e-8);
  for (double& v : sp.phi) v /= sp.value_scale;

  auto to_original = [&](const Vector& theta) {
    QuadraticNTRWeights w;
    w.w_g.assign(theta.begin(), theta.begin() + n);
    w.w_h.assign(theta.begin() + n, theta.begin() + n + m);
    w.w_s.assign(theta.begin() + n + m, theta.begin() + 2 * n + m);
    const double u_hat = theta[2 * n + m];
    const double gs = sp.value_scale / state.delta;
    for (double& v : w.w_g) v *= gs;
    for (double& v : w.w_h) v *= sp.kappa();
    for (double& v : w.w_s) v *= state.delta;
    w.u = u_hat * std::sqrt(sp.value_scale) / state.delta;
    return w;
  };
  auto to_scaled = [&](const QuadraticNTRWeights& w) {
    Vector theta(sp.dim(), 0.0);
    for (std::size_t i = 0; i < n; ++i) theta[i] = w.w_g[i] * state.delta / sp.value_scale;
    for (std::size_t k = 0; k < m; ++k) theta[n + k] = w.w_h[k] / sp.kappa();
    for (std::size_t i = 0; i < n; ++i) theta[n + m + i] = w.w_s[i] / state.delta;
    theta[2 * n + m] = w.u * state.delta / std::sqrt(sp.value_scale);
    return theta;
  };

  std::vector<Vector> inits;
  Rng rng(cfg.seed * 0x2545f4914f6cdd1dull + train.seed + 1);
  for (std::size_t r = 0; r < cfg.restarts; ++r) {
    Vector theta(sp.dim(), 0.0);
    for (std::size_t i = 0; i < n + m; ++i) theta[i] = rng.uniform(-0.5, 0.5);
    Vector sdir = rng.unit_direction(n);
    const double slen = (r == 0) ? 0.3 : 0.9;
    for (std::size_t i = 0; i < n; ++i) theta[n + m + i] = slen * sdir[i];
    // First restart pins the multiplier at its sticky zero (interior basin);
    // later restarts start on the boundary side.
    theta[2 * n + m] = (r == 0) ? 0.0 : 0.4 + 0.5 * static_cast<double>(r);
    inits.push_back(std::move(theta));
  }
  if (warm_start && warm_start->dim() == n) inits.push_back(to_scaled(*warm_start));

  StepResult best;
  double best_score = std::numeric_limits<double>::infinity();
  for (Vector& theta : inits) {
    armijo_descent(sp, theta, cfg.descent_steps);
    QuadraticNTRWeights w = to_original(theta);
    // Projection guard: the returned step never leaves the ball.
    const double sn = norm2(w.w_s);
    if (sn > state.delta)
      for (double& v : w.w_s) v *= state.delta / sn;
    const StepDiagnostics diag = make_diagnostics(w, state.set, state.delta, lw);
    if (!std::isfinite(diag.overall)) continue;
    if (diag.overall < best_score) {
      best_score = diag.overall;
      best.step = w.w_s;
      best.weights = w;
      best.diagnostics = diag;
    }
  }
  if (!std::isfinite(best_score))
    throw TrainingFailureError("solve_step_quadratic: training diverged (non-finite loss)");
  return best;
}

namespace {

struct EngineSet {
  std::vector<Vector> points;
  Vector values;

  BlockedPointSet blocked(std::size_t n) const {
    return BlockedPointSet::from_flat(n, points, values);
  }
  void promote_center(std::size_t idx) {
    if (idx != 0) {
      std::swap(points[0], points[idx]);
      std::swap(values[0], values[idx]);
    }
  }
};

}  // namespace

OptimizationResult run_algorithm1(const std::function<double(const Vector&)>& f, const Vector& x0,
                                  const TRConfig& cfg, const LossWeightsQuad& lw,
                                  const TrainConfig& train) {
  cfg.validate();
  const std::size_t n = x0.size();
  const auto phi = quadratic_basis(n);

  OptimizationResult res;
  res.schema = TraceSchema::quadratic;
  res.x = x0;
  res.terminated_by = TerminationReason::max_iters;

  Evaluator eval(f, cfg.budget);
  EngineSet es;
  double delta = cfg.delta0;
  try {
    for (const Vector& p : initial_pattern(x0, delta)) {
      const double v = eval(p);
      es.points.push_back(p);
      es.values.push_back(v);
    }
  } catch (const BudgetExceededError&) {
    res.terminated_by = TerminationReason::budget;
    res.f = es.values.empty() ? kNaN : es.values[0];
    res.evals = eval.evals();
    return res;
  } catch (const ObjectiveFailureError& e) {
    res.terminated_by = TerminationReason::failure;
    res.failure_message = e.what();
    res.evals = eval.evals();
    return res;
  }

  Vector x = x0;
  double fx = es.values[0];
  QuadraticNTRWeights warm;
  bool have_warm = false;

  try {
    for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
      BlockedPointSet set = es.blocked(n);
      NewtonBasis basis = build_newton_basis(set, cfg.pivot_threshold);
      if (!basis.complete) {
        // Restore poisedness before asking for a step.
        const auto prop = select_exit_point_inadequate(set, x, delta, phi, cfg.repair_starts,
                                                       cfg.seed + 7919 * iter, 0);
        const double v = eval(prop.replacement);
        es.points[prop.exit_index] = prop.replacement;
        es.values[prop.exit_index] = v;
        set = es.blocked(n);
        basis = build_newton_basis(set, cfg.pivot_threshold);
      }

      TrustRegionState state{x, delta, std::nullopt, set, iter, eval.evals()};
      IterationRecord rec;
      rec.iter = iter;
      rec.x = x;
      rec.f = fx;
      rec.delta = delta;
      rec.update_kind = "none";

      StepResult sr;
      bool train_failed = false;
      try {
        sr = solve_step_quadratic(state, cfg, lw, train, have_warm ? &warm : nullptr);
      } catch (const TrainingFailureError&) {
        train_failed = true;
      }

      if (!train_failed) {
        rec.step_norm = norm2(sr.step);
        rec.model_decrease = sr.diagnostics.model_decrease;
        rec.kkt_stationarity = sr.diagnostics.kkt_stationarity;
        rec.kkt_complementarity = sr.diagnostics.kkt_complementarity;
        rec.kkt_curvature = sr.diagnostics.lambda_min_shifted;

        // Stationarity proxy: small model gradient with adequate geometry.
        if (norm2(sr.weights.w_g) <= cfg.eps_station) {
          const auto adq = check_adequacy(basis, set, x, delta,
                                          default_kappa_n(set.blocks[2].size()),
                                          cfg.adequacy_probes);
          if (adq.adequate) {
            rec.evals = eval.evals();
            res.trace.push_back(rec);
            res.iters = iter + 1;
            res.terminated_by = TerminationReason::stationarity;
            break;
          }
        }
      }

      bool accepted = false;
      if (!train_failed) {
        const Vector x_trial = x + sr.step;
        const double f_trial = eval(x_trial);
        const double md = sr.diagnostics.model_decrease;
        const auto rho = agreement_ratio(fx, f_trial, fx, fx - md);
        rec.rho = rho ? *rho : kNaN;
        accepted = rho && *rho >= cfg.eta1;

        if (accepted) {
          if (md < cfg.beta_check * dot(sr.step, sr.step)) ++res.beta_violations;
          const std::size_t exit = select_exit_point_success(set, x_trial, phi);
          es.points[exit] = x_trial;
          es.values[exit] = f_trial;
          es.promote_center(exit);
          // Warm start re-anchored at the accepted point.
          warm = sr.weights;
          const Matrix h = sr.weights.assemble_hessian();
          const Vector g_new = sr.weights.w_g + h.apply(sr.step);
          warm.w_g = g_new;
          std::fill(warm.w_s.begin(), warm.w_s.end(), 0.0);
          have_warm = true;

          x = x_trial;
          fx = f_trial;
          delta *= cfg.g2;
          rec.accepted = true;
          rec.update_kind = "success-swap";
        }
      }

      if (!accepted) {
        const auto adq = check_adequacy(basis, set, x, delta,
                                        default_kappa_n(set.blocks[2].size()),
                                        cfg.adequacy_probes);
        if (!adq.adequate) {
          try {
            const auto prop = select_exit_point_inadequate(set, x, delta, phi, cfg.repair_starts,
                                                           cfg.seed + 104729 * (iter + 1), 0);
            const double v = eval(prop.replacement);
            es.points[prop.exit_index] = prop.replacement;
            es.values[prop.exit_index] = v;
            rec.update_kind = "geometry-repair";
          } catch (const GeometryRepairError&) {
            delta *= cfg.g1;
            rec.update_kind = "shrink";
          }
        } else {
          delta *= cfg.g1;
          rec.update_kind = "shrink";
        }
      }

      rec.evals = eval.evals();
      res.trace.push_back(rec);
      res.iters = iter + 1;

      if (delta < cfg.eps_delta) {
        res.terminated_by = TerminationReason::delta;
        break;
      }
    }
  } catch (const BudgetExceededError&) {
    res.terminated_by = TerminationReason::budget;
  } catch (const ObjectiveFailureError& e) {
    res.terminated_by = TerminationReason::failure;
    res.failure_message = e.what();
  }

  res.x = x;
  res.f = fx;
  res.evals = eval.evals();
  if (res.iters == cfg.max_iters && res.terminated_by == TerminationReason::max_iters) {
    // loop ran out; reason already set
  }
  return res;
}

}  // namespace ntr
