#include "ntr/newton_tr.hpp"

#include <algorithm>
#include <cmath>

namespace ntr {

TrsSolution solve_trust_region_subproblem(const Vector& g, const Matrix& b, double delta) {
  if (delta <= 0.0) throw std::invalid_argument("trs: delta must be > 0");
  const std::size_t n = g.size();
  const EigenSystem es = jacobi_eigensystem(b);

  Vector gt(n, 0.0);  // Q' g
  for (std::size_t c = 0; c < n; ++c)
    for (std::size_t r = 0; r < n; ++r) gt[c] += es.vectors(r, c) * g[r];

  auto step_for = [&](double lam) {
    Vector st(n, 0.0);
    for (std::size_t c = 0; c < n; ++c) {
      const double d = es.values[c] + lam;
      st[c] = (d != 0.0) ? -gt[c] / d : 0.0;
    }
    return st;
  };
  auto norm_for = [&](double lam) {
    double s = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      const double d = es.values[c] + lam;
      if (d != 0.0) s += (gt[c] / d) * (gt[c] / d);
    }
    return std::sqrt(s);
  };
  auto to_x = [&](const Vector& st) {
    Vector s(n, 0.0);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) s[r] += es.vectors(r, c) * st[c];
    return s;
  };

  const double lam_min = es.values.front();
  TrsSolution sol;

  // Interior candidate: positive definite B with ||B^-1 g|| <= delta.
  if (lam_min > 0.0 && norm_for(0.0) <= delta) {
    sol.step = to_x(step_for(0.0));
    sol.multiplier = 0.0;
    sol.on_boundary = false;
    return sol;
  }

  // Boundary: find lambda > max(0, -lam_min) with ||s(lambda)|| = delta.
  const double lam_floor = std::max(0.0, -lam_min);
  double lo = lam_floor + 1e-14 * (1.0 + std::abs(lam_floor));
  if (norm_for(lo) < delta) {
    // Hard case: g is (numerically) orthogonal to the bottom eigenspace.
    const double lam = lam_floor;
    Vector st(n, 0.0);
    for (std::size_t c = 0; c < n; ++c) {
      const double d = es.values[c] + lam;
      st[c] = (std::abs(d) > 1e-12 * (1.0 + std::abs(lam))) ? -gt[c] / d : 0.0;
    }
    double nrm2v = 0.0;
    for (double v : st) nrm2v += v * v;
    const double tau = std::sqrt(std::max(0.0, delta * delta - nrm2v));
    // Move along the bottom eigenvector to reach the boundary.
    st[0] += tau;
    sol.step = to_x(st);
    sol.multiplier = lam;
    sol.on_boundary = true;
    return sol;
  }

  double hi = lo + 1.0;
  while (norm_for(hi) > delta) hi = lo + (hi - lo) * 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (norm_for(mid) > delta)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-15 * (1.0 + hi)) break;
  }
  const double lam = 0.5 * (lo + hi);
  sol.step = to_x(step_for(lam));
  sol.multiplier = lam;
  sol.on_boundary = true;
  // Polish the radius exactly.
  const double sn = norm2(sol.step);
  if (sn > 0.0)
    for (double& v : sol.step) v *= delta / sn;
  return sol;
}

OptimizationResult run_newton_tr(const std::function<double(const Vector&)>& f, const Vector& x0,
                                 const TRConfig& cfg) {
  cfg.validate();
  const std::size_t n = x0.size();
  const auto phi = quadratic_basis(n);

  OptimizationResult res;
  res.schema = TraceSchema::quadratic;
  res.x = x0;
  res.terminated_by = TerminationReason::max_iters;

  Evaluator eval(f, cfg.budget);
  std::vector<Vector> pts;
  Vector vals;
  double delta = cfg.delta0;
  try {
    for (const Vector& p : initial_pattern(x0, delta)) {
      const double v = eval(p);
      pts.push_back(p);
      vals.push_back(v);
    }
  } catch (const BudgetExceededError&) {
    res.terminated_by = TerminationReason::budget;
    res.f = vals.empty() ? kNaN : vals[0];
    res.evals = eval.evals();
    return res;
  } catch (const ObjectiveFailureError& e) {
    res.terminated_by = TerminationReason::failure;
    res.failure_message = e.what();
    res.evals = eval.evals();
    return res;
  }

  Vector x = x0;
  double fx = vals[0];

  try {
    for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
      BlockedPointSet set = BlockedPointSet::from_flat(n, pts, vals);
      NewtonBasis basis = build_newton_basis(set, cfg.pivot_threshold);
      if (!basis.complete) {
        const auto prop = select_exit_point_inadequate(set, x, delta, phi, cfg.repair_starts,
                                                       cfg.seed + 7919 * iter, 0);
        const double v = eval(prop.replacement);
        pts[prop.exit_index] = prop.replacement;
        vals[prop.exit_index] = v;
        set = BlockedPointSet::from_flat(n, pts, vals);
        basis = build_newton_basis(set, cfg.pivot_threshold);
      }

      const auto coeffs = generalized_finite_differences(set, basis);
      QuadraticModel model = assemble_model(set, basis, coeffs);
      model = recenter(model, x);

      IterationRecord rec;
      rec.iter = iter;
      rec.x = x;
      rec.f = fx;
      rec.delta = delta;
      rec.update_kind = "none";

      if (norm2(model.gradient) <= cfg.eps_station) {
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

      const TrsSolution trs = solve_trust_region_subproblem(model.gradient, model.hessian, delta);
      const Vector x_trial = x + trs.step;
      const double m_new = evaluate_model(model, x_trial);
      const double md = model.constant - m_new;
      rec.step_norm = norm2(trs.step);
      rec.model_decrease = md;
      {
        Vector v = model.hessian.apply(trs.step);
        for (std::size_t i = 0; i < n; ++i) v[i] += trs.multiplier * trs.step[i] + model.gradient[i];
        rec.kkt_stationarity = norm2(v);
        rec.kkt_complementarity = std::abs(trs.multiplier * (delta - norm2(trs.step)));
        rec.kkt_curvature = smallest_eigenpair(model.hessian).value + trs.multiplier;
      }

      const double f_trial = eval(x_trial);
      const auto rho = agreement_ratio(fx, f_trial, model.constant, m_new);
      rec.rho = rho ? *rho : kNaN;
      const bool accepted = rho && *rho >= cfg.eta1;

      if (accepted) {
        if (md < cfg.beta_check * dot(trs.step, trs.step)) ++res.beta_violations;
        const std::size_t exit = select_exit_point_success(set, x_trial, phi);
        pts[exit] = x_trial;
        vals[exit] = f_trial;
        if (exit != 0) {
          std::swap(pts[0], pts[exit]);
          std::swap(vals[0], vals[exit]);
        }
        x = x_trial;
        fx = f_trial;
        delta *= cfg.g2;
        rec.accepted = true;
        rec.update_kind = "success-swap";
      } else {
        const auto adq = check_adequacy(basis, set, x, delta,
                                        default_kappa_n(set.blocks[2].size()),
                                        cfg.adequacy_probes);
        if (!adq.adequate) {
          try {
            const auto prop = select_exit_point_inadequate(set, x, delta, phi, cfg.repair_starts,
                                                           cfg.seed + 104729 * (iter + 1), 0);
            const double v = eval(prop.replacement);
            pts[prop.exit_index] = prop.replacement;
            vals[prop.exit_index] = v;
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
  return res;
}

}  // namespace ntr
