#include "ntr/tr_blackbox.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ntr/sampling.hpp"

namespace ntr {

void BBConfig::validate() const {
  if (!(eta1 >= 0.0 && eta1 <= eta2 && eta2 <= 1.0 && 1.0 <= eta3))
    throw std::invalid_argument("BBConfig: need 0 <= eta1 <= eta2 <= 1 <= eta3");
  if (!(g1 > 0.0 && g1 < g2 && g2 <= 1.0 && 1.0 <= g3))
    throw std::invalid_argument("BBConfig: need 0 < g1 < g2 <= 1 <= g3");
  if (delta0 <= 0.0 || eps_delta <= 0.0 || eps_station <= 0.0)
    throw std::invalid_argument("BBConfig: tolerances must be positive");
  if (child_starts == 0 || child_steps == 0 || refresh_cadence == 0)
    throw std::invalid_argument("BBConfig: child search settings must be positive");
}

SampledSets sample_sets(Evaluator& eval, const Vector& center, double delta, std::size_t n_w,
                        std::size_t n_b, const std::vector<std::pair<Vector, double>>& existing,
                        std::uint64_t seed) {
  if (n_w < 1) throw std::invalid_argument("sample_sets: n_w must be >= 1");
  if (delta <= 0.0) throw std::invalid_argument("sample_sets: delta must be > 0");
  SampledSets s;
  s.center = center;
  s.delta = delta;

  auto contains = [&](const Vector& p) {
    for (const Vector& q : s.interior)
      if (norm2(q - p) < 1e-14 * (1.0 + delta)) return true;
    for (const Vector& q : s.boundary)
      if (norm2(q - p) < 1e-14 * (1.0 + delta)) return true;
    return false;
  };

  for (const auto& [p, v] : existing) {
    const double d = norm2(p - center);
    if (d < delta && s.interior.size() < n_w && !contains(p)) {
      s.interior.push_back(p);
      s.interior_values.push_back(v);
    } else if (std::abs(d - delta) <= 1e-10 * delta && s.boundary.size() < n_b && !contains(p)) {
      s.boundary.push_back(p);
      s.boundary_values.push_back(v);
    }
  }

  // Interior top-up: low-discrepancy, offset deterministically by the seed.
  std::uint64_t halton_index = 1 + (seed % 1024) * 131;
  while (s.interior.size() < n_w) {
    const auto pts = halton_ball_points(center, delta, n_w - s.interior.size(), halton_index);
    halton_index += pts.size();
    for (const Vector& p : pts) {
      if (s.interior.size() >= n_w) break;
      if (contains(p) || norm2(p - center) >= delta) continue;
      s.interior.push_back(p);
      s.interior_values.push_back(eval(p));
    }
  }

  Rng rng(seed + 0xb0a7ull);
  while (s.boundary.size() < n_b) {
    const Vector p = random_sphere_points(center, delta, 1, rng)[0];
    if (contains(p)) continue;
    s.boundary.push_back(p);
    s.boundary_values.push_back(eval(p));
  }
  return s;
}

double loss_mse_lb(const FeedForwardNet& net, const SampledSets& sets) {
  if (sets.interior.empty()) throw std::invalid_argument("loss_mse_lb: interior set is empty");
  double mw = 0.0;
  for (std::size_t i = 0; i < sets.interior.size(); ++i) {
    const double r = forward(net, sets.interior[i]) - sets.interior_values[i];
    mw += r * r;
  }
  mw /= static_cast<double>(sets.interior.size());
  double mb = 0.0;
  if (!sets.boundary.empty()) {
    for (std::size_t j = 0; j < sets.boundary.size(); ++j) {
      const double r = forward(net, sets.boundary[j]) - sets.boundary_values[j];
      mb += r * r;
    }
    mb /= static_cast<double>(sets.boundary.size());
  }
  return mw + mb;
}

double loss_Ls(const FeedForwardNet& net, const Vector& center, const StepSearchState& step,
               double delta, const BlackboxLossWeights& lw) {
  const Vector x = center + step.w_s;
  const Vector g = input_gradient(net, x);
  const double ws = step.w_star();

  Vector v = g;
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += ws * step.w_s[i];
  double loss = lw.z1 * dot(v, v);

  const double comp = ws * (delta - norm2(step.w_s));
  loss += lw.z2 * comp * comp;

  if (lw.z3 != 0.0) {
    const auto hr = input_hessian(net, x);
    const double lam = smallest_eigenpair(hr.hessian).value + ws;
    loss += lw.z3 * (lam - lw.c_tilde) * (lam - lw.c_tilde);
  }
  return loss;
}

namespace {

std::optional<double> blackbox_rho(Evaluator& eval, const FeedForwardNet& net,
                                   const Vector& center, const Vector& step) {
  const double fx = eval(center);
  const double ft = eval(center + step);
  const double m0 = forward(net, center);
  const double m1 = forward(net, center + step);
  return agreement_ratio(fx, ft, m0, m1);
}

}  // namespace

double loss_La(Evaluator& eval, const FeedForwardNet& net, const Vector& center,
               const Vector& step, const BlackboxLossWeights& lw) {
  const auto rho = blackbox_rho(eval, net, center, step);
  if (!rho) throw std::invalid_argument("loss_La: degenerate model-decrease denominator");
  const double d = *rho - lw.eta3;
  return d * d;
}

double loss_Lprime_s(const FeedForwardNet& net, const Vector& center, const Vector& step,
                     const BlackboxLossWeights& lw) {
  const Vector x = center + step;
  const Vector g = input_gradient(net, x);
  const std::size_t n = g.size();
  double gq = 0.0;
  for (double v : g) gq += v * v;
  gq /= static_cast<double>(n);

  const auto hr = input_hessian(net, x);
  const Vector minors = leading_principal_minors(hr.hessian);
  double mq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double target = i < lw.c_i.size() ? lw.c_i[i] : 0.0;
    mq += (minors[i] - target) * (minors[i] - target);
  }
  mq /= static_cast<double>(n);
  return gq + mq;
}

double loss_Lprime(Evaluator& eval, const FeedForwardNet& net, const Vector& center,
                   const Vector& step, const BlackboxLossWeights& lw) {
  return loss_Lprime_s(net, center, step, lw) + loss_La(eval, net, center, step, lw);
}

double l_delta_penalty(double step_norm, double delta) {
  if (step_norm <= delta) return 0.0;
  return step_norm * (std::exp(step_norm - delta) - 1.0) - 0.5 * step_norm * step_norm +
         0.5 * delta * delta;
}

double loss_LBNTR(Evaluator& eval, const FeedForwardNet& net, const Vector& center,
                  const Vector& step, double delta, const BlackboxLossWeights& lw) {
  const double sn = norm2(step);
  const double m0 = forward(net, center);
  const double m1 = forward(net, center + step);
  double loss = lw.g1 * l_delta_penalty(sn, delta);
  loss += lw.g2 * std::abs(m1 - m0 + lw.beta_p * sn * sn - lw.beta_pp);
  const auto rho = blackbox_rho(eval, net, center, step);
  if (!rho) throw std::invalid_argument("loss_LBNTR: degenerate model-decrease denominator");
  loss += lw.g3 * std::abs(*rho - lw.eta_pp);
  return loss;
}

LBntrStarTerms loss_LBNTR_star(Evaluator& eval, const FeedForwardNet& net, const Vector& center,
                               const Vector& step, double delta, const BlackboxLossWeights& lw) {
  LBntrStarTerms t;
  const double sn = norm2(step);
  const double m0 = forward(net, center);
  const double m1 = forward(net, center + step);
  t.l_delta = l_delta_penalty(sn, delta);
  t.l_cauchy = std::abs(m1 - m0 + lw.beta_p * sn * sn - lw.beta_pp);

  const Vector x = center + step;
  const Vector g = input_gradient(net, x);
  double gq = 0.0;
  for (double v : g) gq += v * v;
  gq /= static_cast<double>(g.size());
  double lam_term = 0.0;
  if (lw.g2p != 0.0) {
    const auto hr = input_hessian(net, x);
    lam_term = std::abs(smallest_eigenpair(hr.hessian).value - lw.c);
  }
  t.l_local = lw.g2p * lam_term + lw.g2pp * gq;

  const auto rho = blackbox_rho(eval, net, center, step);
  if (!rho) throw std::invalid_argument("loss_LBNTR_star: degenerate model-decrease denominator");
  t.l_agreement = std::cosh(*rho - lw.eta_pp);

  t.total = lw.g1 * t.l_delta + lw.g2 * t.l_cauchy + lw.g3 * t.l_local + lw.g4 * t.l_agreement;
  return t;
}

double clarke_stationarity_proxy(const std::function<double(const Vector&)>& f, const Vector& x,
                                 double radius, std::size_t n_dirs, std::uint64_t seed) {
  if (radius <= 0.0) throw std::invalid_argument("clarke_stationarity_proxy: radius must be > 0");
  if (n_dirs < 8) throw std::invalid_argument("clarke_stationarity_proxy: need n_dirs >= 8");
  Rng rng(seed + 0xc1a2ull);
  const double fx = f(x);
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t d = 0; d < n_dirs; ++d) {
    const Vector dir = rng.unit_direction(x.size());
    double best = -std::numeric_limits<double>::infinity();
    for (double alpha : {radius, radius / 4.0, radius / 16.0}) {
      Vector y = x;
      for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * dir[i];
      best = std::max(best, (f(y) - fx) / alpha);
    }
    worst = std::min(worst, best);
  }
  return worst;
}

namespace {

struct ChildObjective {
  Evaluator* eval;
  const FeedForwardNet* net;
  Vector center;
  double delta;
  const BBConfig* cfg;
  const BlackboxLossWeights* lw;
  double fx;        // f at the center
  double m0;        // model at the center
  // Frozen true value at the last refresh point.
  double f_frozen = 0.0;
  bool have_frozen = false;

  void refresh(const Vector& s) {
    f_frozen = (*eval)(center + s);
    have_frozen = true;
  }

  double rho_surrogate(double m1) const {
    const double denom = m0 - m1;
    const double guard = 1e-14 * (1.0 + std::abs(fx));
    const double safe = std::abs(denom) < guard ? (denom < 0 ? -guard : guard) : denom;
    double r = (fx - f_frozen) / safe;
    return std::clamp(r, lw->eta_pp - 5.0, lw->eta_pp + 5.0);
  }

  bool uses_rho() const {
    switch (cfg->child_loss) {
      case ChildLoss::ls_la: return lw->zt2 != 0.0;
      case ChildLoss::lprime: return true;
      case ChildLoss::lbntr: return lw->g3 != 0.0;
      case ChildLoss::lbntr_star: return lw->g4 != 0.0;
    }
    return false;
  }

  // Loss value and gradient with respect to s (rho numerator frozen).
  double eval_loss(const Vector& s, Vector* grad) const;
};

double ChildObjective::eval_loss(const Vector& s, Vector* grad) const {
  const std::size_t n = s.size();
  if (grad) std::fill(grad->begin(), grad->end(), 0.0);
  const Vector x = center + s;
  const double m1 = forward(*net, x);
  const Vector gm = input_gradient(*net, x);
  const double sn = norm2(s);
  double total = 0.0;

  auto add_ldelta = [&](double weight) {
    total += weight * l_delta_penalty(sn, delta);
    if (grad && sn > delta && sn > 0.0) {
      const double d = sn - delta;
      const double dpen = (std::exp(d) - 1.0) + sn * std::exp(d) - sn;
      for (std::size_t i = 0; i < n; ++i) (*grad)[i] += weight * dpen * s[i] / sn;
    }
  };
  auto add_cauchy = [&](double weight) {
    const double arg = m1 - m0 + lw->beta_p * sn * sn - lw->beta_pp;
    total += weight * std::abs(arg);
    if (grad) {
      const double sgn = arg >= 0.0 ? 1.0 : -1.0;
      for (std::size_t i = 0; i < n; ++i)
        (*grad)[i] += weight * sgn * (gm[i] + 2.0 * lw->beta_p * s[i]);
    }
  };
  auto add_gradsq = [&](double weight) {
    double gq = 0.0;
    for (double v : gm) gq += v * v;
    gq /= static_cast<double>(n);
    total += weight * gq;
    if (grad) {
      const auto hr = input_hessian(*net, x);
      const Vector hg = hr.hessian.apply(gm);
      for (std::size_t i = 0; i < n; ++i)
        (*grad)[i] += weight * 2.0 / static_cast<double>(n) * hg[i];
    }
  };
  auto add_agreement_cosh = [&](double weight) {
    const double r = rho_surrogate(m1);
    total += weight * std::cosh(r - lw->eta_pp);
    if (grad) {
      const double denom = m0 - m1;
      const double guard = 1e-14 * (1.0 + std::abs(fx));
      if (std::abs(denom) > guard && std::abs(r - lw->eta_pp) < 5.0) {
        // d rho / d s = rho * grad_m / denom with the numerator frozen
        const double f = weight * std::sinh(r - lw->eta_pp) * r / denom;
        for (std::size_t i = 0; i < n; ++i) (*grad)[i] += f * gm[i];
      }
    }
  };
  auto add_agreement_sq = [&](double weight, double target) {
    const double r = rho_surrogate(m1);
    total += weight * (r - target) * (r - target);
    if (grad) {
      const double denom = m0 - m1;
      const double guard = 1e-14 * (1.0 + std::abs(fx));
      if (std::abs(denom) > guard && std::abs(r - lw->eta_pp) < 5.0) {
        const double f = weight * 2.0 * (r - target) * r / denom;
        for (std::size_t i = 0; i < n; ++i) (*grad)[i] += f * gm[i];
      }
    }
  };
  auto add_agreement_abs = [&](double weight, double target) {
    const double r = rho_surrogate(m1);
    total += weight * std::abs(r - target);
    if (grad) {
      const double denom = m0 - m1;
      const double guard = 1e-14 * (1.0 + std::abs(fx));
      if (std::abs(denom) > guard && std::abs(r - lw->eta_pp) < 5.0) {
        const double f = weight * (r >= target ? 1.0 : -1.0) * r / denom;
        for (std::size_t i = 0; i < n; ++i) (*grad)[i] += f * gm[i];
      }
    }
  };

  switch (cfg->child_loss) {
    case ChildLoss::lbntr_star: {
      add_ldelta(lw->g1);
      add_cauchy(lw->g2);
      if (lw->g2pp != 0.0) add_gradsq(lw->g3 * lw->g2pp);
      if (lw->g2p != 0.0) {
        // Eigenvalue target differentiated by central differences, term-wise.
        const auto hr = input_hessian(*net, x);
        const double lam = smallest_eigenpair(hr.hessian).value;
        total += lw->g3 * lw->g2p * std::abs(lam - lw->c);
        if (grad) {
          const double h = 1e-6 * (1.0 + sn);
          for (std::size_t i = 0; i < n; ++i) {
            Vector sp = s, sm = s;
            sp[i] += h;
            sm[i] -= h;
            const double lp =
                smallest_eigenpair(input_hessian(*net, center + sp).hessian).value;
            const double lm =
                smallest_eigenpair(input_hessian(*net, center + sm).hessian).value;
            (*grad)[i] += lw->g3 * lw->g2p * (std::abs(lp - lw->c) - std::abs(lm - lw->c)) /
                          (2.0 * h);
          }
        }
      }
      if (lw->g4 != 0.0 && have_frozen) add_agreement_cosh(lw->g4);
      break;
    }
    case ChildLoss::lbntr: {
      add_ldelta(lw->g1);
      add_cauchy(lw->g2);
      if (lw->g3 != 0.0 && have_frozen) add_agreement_abs(lw->g3, lw->eta_pp);
      break;
    }
    case ChildLoss::lprime: {
      add_gradsq(1.0);
      // Leading-minor targets, differentiated by central differences.
      {
        const auto hr = input_hessian(*net, x);
        const Vector minors = leading_principal_minors(hr.hessian);
        double mq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double target = i < lw->c_i.size() ? lw->c_i[i] : 0.0;
          mq += (minors[i] - target) * (minors[i] - target);
        }
        total += mq / static_cast<double>(n);
        if (grad) {
          const double h = 1e-6 * (1.0 + sn);
          for (std::size_t i = 0; i < n; ++i) {
            Vector sp = s, sm = s;
            sp[i] += h;
            sm[i] -= h;
            auto mval = [&](const Vector& sv) {
              const Vector mm = leading_principal_minors(input_hessian(*net, center + sv).hessian);
              double acc = 0.0;
              for (std::size_t k = 0; k < n; ++k) {
                const double target = k < lw->c_i.size() ? lw->c_i[k] : 0.0;
                acc += (mm[k] - target) * (mm[k] - target);
              }
              return acc / static_cast<double>(n);
            };
            (*grad)[i] += (mval(sp) - mval(sm)) / (2.0 * h);
          }
        }
      }
      if (have_frozen) add_agreement_sq(1.0, lw->eta3);
      break;
    }
    case ChildLoss::ls_la: {
      // zt1 * L_s with w* = 0 during the search (the multiplier enters the
      // public loss_Ls; the search treats the step only) + zt2 * L_a.
      double gq = 0.0;
      for (double v : gm) gq += v * v;
      total += lw->zt1 * lw->z1 * gq;
      if (grad) {
        const auto hr = input_hessian(*net, x);
        const Vector hg = hr.hessian.apply(gm);
        for (std::size_t i = 0; i < n; ++i) (*grad)[i] += lw->zt1 * lw->z1 * 2.0 * hg[i];
      }
      add_ldelta(1.0);  // keep the search inside the ball
      if (lw->zt2 != 0.0 && have_frozen) add_agreement_sq(lw->zt2, lw->eta3);
      break;
    }
  }
  return total;
}

void child_descent(ChildObjective& obj, Vector& s, std::size_t max_steps,
                   std::size_t refresh_cadence) {
  Vector grad(s.size());
  if (obj.uses_rho()) obj.refresh(s);
  double fx = obj.eval_loss(s, &grad);
  double step = 0.25 * obj.delta;
  for (std::size_t it = 0; it < max_steps; ++it) {
    if (obj.uses_rho() && it > 0 && it % refresh_cadence == 0) {
      obj.refresh(s);
      fx = obj.eval_loss(s, &grad);
    }
    const double gn2 = dot(grad, grad);
    if (gn2 < 1e-24 || !std::isfinite(fx)) break;
    bool moved = false;
    step = std::min(step * 1.5, 10.0 * obj.delta);
    while (step > 1e-16 * obj.delta) {
      Vector trial(s.size());
      const double gn = std::sqrt(gn2);
      for (std::size_t i = 0; i < s.size(); ++i) trial[i] = s[i] - step * grad[i] / gn;
      Vector tg(s.size());
      const double ft = obj.eval_loss(trial, &tg);
      if (std::isfinite(ft) && ft <= fx - 1e-4 * step * gn) {
        s = std::move(trial);
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

}  // namespace

ModelStepResult model_and_step(Evaluator& eval, const SampledSets& sets, const Vector& center,
                               double delta, const BBConfig& cfg, const BlackboxLossWeights& lw,
                               const TrainConfig& train) {
  if (sets.interior.size() < 2) throw std::invalid_argument("model_and_step: need >= 2 interior samples");
  const std::size_t n = center.size();

  // Step 1: split S and T independently.
  Rng rng(train.seed + cfg.seed * 0x9e37ull + 0x51ull);
  auto split = [&](std::size_t count) {
    std::vector<std::size_t> tr, te;
    const auto perm = rng.permutation(count);
    std::size_t keep = static_cast<std::size_t>(
        std::ceil(train.split_fraction * static_cast<double>(count)));
    keep = std::min(std::max<std::size_t>(keep, 1), count);
    for (std::size_t k = 0; k < count; ++k)
      (k < keep ? tr : te).push_back(perm[k]);
    return std::make_pair(tr, te);
  };
  const auto [s_tr, s_te] = split(sets.interior.size());
  auto [t_tr, t_te] = sets.boundary.empty()
                          ? std::make_pair(std::vector<std::size_t>{}, std::vector<std::size_t>{})
                          : split(sets.boundary.size());

  ModelStepResult out;
  auto& diag = out.diagnostics;
  // Global ids: interior points first, then boundary points.
  for (std::size_t i : s_tr) diag.train_indices.push_back(i);
  for (std::size_t i : t_tr) diag.train_indices.push_back(sets.interior.size() + i);
  for (std::size_t i : s_te) diag.test_indices.push_back(i);
  for (std::size_t i : t_te) diag.test_indices.push_back(sets.interior.size() + i);

  std::vector<std::pair<Vector, double>> train_s, train_t, test_s, test_t;
  std::vector<std::size_t> train_s_ids, train_t_ids;
  for (std::size_t i : s_tr) {
    train_s.emplace_back(sets.interior[i], sets.interior_values[i]);
    train_s_ids.push_back(i);
  }
  for (std::size_t i : t_tr) {
    train_t.emplace_back(sets.boundary[i], sets.boundary_values[i]);
    train_t_ids.push_back(sets.interior.size() + i);
  }
  for (std::size_t i : s_te) test_s.emplace_back(sets.interior[i], sets.interior_values[i]);
  for (std::size_t i : t_te) test_t.emplace_back(sets.boundary[i], sets.boundary_values[i]);

  // Step 2: train on the training subsets with the balanced loss.
  std::vector<std::size_t> layer_sizes{n};
  for (std::size_t h : train.hidden_sizes) layer_sizes.push_back(h);
  layer_sizes.push_back(1);
  FeedForwardNet net(layer_sizes, train.with_bias);
  net.set_input_map(AffineInputMap{center, delta});
  net.seed_weights(train.seed + 1);

  auto test_mse_lb = [&]() {
    double m = 0.0;
    if (!test_s.empty()) m += batch_loss(net, test_s);
    if (!test_t.empty()) m += batch_loss(net, test_t);
    if (test_s.empty() && test_t.empty())
      m = batch_loss(net, train_s) + (train_t.empty() ? 0.0 : batch_loss(net, train_t));
    return m;
  };

  std::vector<Matrix> vel;
  std::vector<Vector> velb;
  for (std::size_t r = 0; r < net.num_layers(); ++r) {
    vel.emplace_back(net.weight(r).rows(), net.weight(r).cols());
    velb.emplace_back(net.weight(r).rows(), 0.0);
  }
  double best_test = std::numeric_limits<double>::infinity();
  std::size_t stagnant = 0;
  const std::size_t patience = train.patience ? train.patience : 40;
  for (std::size_t epoch = 0; epoch < train.epochs; ++epoch) {
    WeightGradients g =
        weight_gradients(net, train_s, LossKind::mean_squared, &diag.gradient_ids, &train_s_ids);
    if (!train_t.empty()) {
      const WeightGradients gt =
          weight_gradients(net, train_t, LossKind::mean_squared, &diag.gradient_ids, &train_t_ids);
      for (std::size_t r = 0; r < g.weights.size(); ++r) {
        g.weights[r] += gt.weights[r];
        for (std::size_t i = 0; i < g.biases[r].size(); ++i) g.biases[r][i] += gt.biases[r][i];
      }
    }
    for (std::size_t r = 0; r < net.num_layers(); ++r)
      for (std::size_t i = 0; i < net.weight(r).rows(); ++i) {
        for (std::size_t j = 0; j < net.weight(r).cols(); ++j) {
          vel[r](i, j) = train.momentum * vel[r](i, j) - train.learning_rate * g.weights[r](i, j);
          net.weight(r)(i, j) += vel[r](i, j);
          if (!std::isfinite(net.weight(r)(i, j)))
            throw TrainingFailureError("model_and_step: training diverged");
        }
        if (net.has_bias()) {
          velb[r][i] = train.momentum * velb[r][i] - train.learning_rate * g.biases[r][i];
          net.bias(r)[i] += velb[r][i];
        }
      }
    if (epoch % 10 == 9) {
      const double tl = test_mse_lb();
      if (tl < best_test - train.min_delta) {
        best_test = tl;
        stagnant = 0;
      } else if (++stagnant >= patience) {
        break;
      }
    }
  }
  diag.train_mse = batch_loss(net, train_s) + (train_t.empty() ? 0.0 : batch_loss(net, train_t));
  diag.test_mse = test_mse_lb();

  // Leakage accounting: gradient ids must avoid the test ids entirely.
  {
    std::set<std::size_t> test_ids(diag.test_indices.begin(), diag.test_indices.end());
    for (std::size_t id : diag.gradient_ids)
      if (test_ids.count(id)) ++diag.leaked_test_ids;
  }

  // Step 3: child step search over the configured loss.
  ChildObjective obj{&eval, &net, center, delta, &cfg, &lw, eval(center), forward(net, center)};

  std::vector<Vector> starts;
  {
    // Best sampled point (no extra evaluations).
    std::size_t bi = 0;
    double bv = sets.interior_values[0];
    for (std::size_t i = 1; i < sets.interior.size(); ++i)
      if (sets.interior_values[i] < bv) {
        bv = sets.interior_values[i];
        bi = i;
      }
    Vector s0 = sets.interior[bi] - center;
    bool boundary_better = false;
    for (std::size_t j = 0; j < sets.boundary.size(); ++j)
      if (sets.boundary_values[j] < bv) {
        bv = sets.boundary_values[j];
        s0 = sets.boundary[j] - center;
        boundary_better = true;
      }
    (void)boundary_better;
    starts.push_back(std::move(s0));
    // Model steepest-descent start.
    Vector g0 = input_gradient(net, center);
    const double gn = norm2(g0);
    if (gn > 1e-12) {
      Vector s1(n);
      for (std::size_t i = 0; i < n; ++i) s1[i] = -0.5 * delta * g0[i] / gn;
      starts.push_back(std::move(s1));
    }
    Rng srng(train.seed + cfg.seed + 0x57a7ull);
    while (starts.size() < cfg.child_starts + 1)
      starts.push_back(random_ball_points(Vector(n, 0.0), 0.7 * delta, 1, srng)[0]);
  }

  Vector best_step;
  double best_loss = std::numeric_limits<double>::infinity();
  for (Vector& s : starts) {
    child_descent(obj, s, cfg.child_steps, cfg.refresh_cadence);
    if (obj.uses_rho()) obj.refresh(s);  // fair comparison with a fresh numerator
    const double l = obj.eval_loss(s, nullptr);
    if (std::isfinite(l) && l < best_loss) {
      best_loss = l;
      best_step = s;
    }
  }
  if (!std::isfinite(best_loss))
    throw TrainingFailureError("model_and_step: step search diverged");

  out.step = best_step;
  const Vector xs = center + best_step;
  diag.grad_norm_at_step = norm2(input_gradient(net, xs));
  diag.lambda_min_at_step = smallest_eigenpair(input_hessian(net, xs).hessian).value;
  diag.local_min_ok = diag.grad_norm_at_step * diag.grad_norm_at_step /
                              static_cast<double>(n) <=
                          cfg.local_min_tol &&
                      diag.lambda_min_at_step >= -cfg.local_min_tol;
  diag.model_decrease = forward(net, center) - forward(net, xs);
  if (obj.uses_rho()) {
    diag.child_terms = loss_LBNTR_star(eval, net, center, best_step, delta, lw);
  } else {
    diag.child_terms.l_delta = l_delta_penalty(norm2(best_step), delta);
    diag.child_terms.total = best_loss;
  }
  out.net = std::move(net);
  return out;
}

OptimizationResult run_algorithm2(const std::function<double(const Vector&)>& f, const Vector& x0,
                                  const BBConfig& cfg, const BlackboxLossWeights& lw,
                                  const TrainConfig& train) {
  cfg.validate();
  const std::size_t n = x0.size();
  const auto phi = quadratic_basis(n);
  const std::size_t quad_capacity = (n + 1) * (n + 2) / 2;

  OptimizationResult res;
  res.schema = TraceSchema::blackbox;
  res.x = x0;
  res.terminated_by = TerminationReason::max_iters;

  Evaluator eval(f, cfg.budget);
  Vector x = x0;
  double fx = 0.0;
  std::vector<std::pair<Vector, double>> pool;
  try {
    fx = eval(x);
    pool.emplace_back(x, fx);
  } catch (const BudgetExceededError&) {
    res.terminated_by = TerminationReason::budget;
    res.evals = eval.evals();
    return res;
  } catch (const ObjectiveFailureError& e) {
    res.terminated_by = TerminationReason::failure;
    res.failure_message = e.what();
    res.evals = eval.evals();
    return res;
  }

  double delta = cfg.delta0;
  std::size_t extra_interior = 0;

  auto blocked_subset = [&](const SampledSets& sets) -> std::optional<BlockedPointSet> {
    // Quadratic-sized subset: the center plus the nearest sampled points.
    std::vector<std::pair<double, std::size_t>> ranked;
    for (std::size_t i = 0; i < sets.interior.size(); ++i) {
      const double d = norm2(sets.interior[i] - x);
      if (d > 1e-14 * (1.0 + delta)) ranked.emplace_back(d, i);
    }
    for (std::size_t j = 0; j < sets.boundary.size(); ++j)
      ranked.emplace_back(delta, sets.interior.size() + j);
    std::sort(ranked.begin(), ranked.end());
    std::vector<Vector> pts{x};
    Vector vals{fx};
    for (const auto& [d, id] : ranked) {
      if (pts.size() >= quad_capacity) break;
      if (id < sets.interior.size()) {
        pts.push_back(sets.interior[id]);
        vals.push_back(sets.interior_values[id]);
      } else {
        pts.push_back(sets.boundary[id - sets.interior.size()]);
        vals.push_back(sets.boundary_values[id - sets.interior.size()]);
      }
    }
    if (pts.size() < quad_capacity) return std::nullopt;
    return BlockedPointSet::from_flat(n, pts, vals);
  };

  try {
    for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
      const SampledSets sets = sample_sets(eval, x, delta, cfg.default_n_w(n) + extra_interior,
                                           cfg.default_n_b(n), pool, cfg.seed + iter);
      pool.clear();
      for (std::size_t i = 0; i < sets.interior.size(); ++i)
        pool.emplace_back(sets.interior[i], sets.interior_values[i]);
      for (std::size_t j = 0; j < sets.boundary.size(); ++j)
        pool.emplace_back(sets.boundary[j], sets.boundary_values[j]);

      IterationRecord rec;
      rec.iter = iter;
      rec.x = x;
      rec.f = fx;
      rec.delta = delta;
      rec.update_kind = "none";
      rec.n_w = sets.n_w();
      rec.n_b = sets.n_b();

      ModelStepResult mas;
      bool train_failed = false;
      try {
        TrainConfig tcfg = train;
        tcfg.seed = train.seed + 31 * iter;
        mas = model_and_step(eval, sets, x, delta, cfg, lw, tcfg);
      } catch (const TrainingFailureError&) {
        train_failed = true;
      }

      bool accepted = false;
      if (!train_failed) {
        Vector step = mas.step;
        double sn = norm2(step);
        bool outside = sn > delta;
        bool relaxed = false;
        if (outside && cfg.allow_boundary_relaxation && mas.diagnostics.local_min_ok) {
          relaxed = true;  // provisional; confirmed by the rho test below
        } else if (outside && sn > 0.0) {
          for (double& v : step) v *= delta / sn;
          sn = delta;
          outside = false;
        }

        rec.train_mse = mas.diagnostics.train_mse;
        rec.test_mse = mas.diagnostics.test_mse;
        rec.loss_ldelta = mas.diagnostics.child_terms.l_delta;
        rec.loss_cauchy = mas.diagnostics.child_terms.l_cauchy;
        rec.loss_local = mas.diagnostics.child_terms.l_local;
        rec.loss_agreement = mas.diagnostics.child_terms.l_agreement;
        rec.step_norm = sn;

        const double m0 = forward(mas.net, x);
        const double m1 = forward(mas.net, x + step);
        const double md = m0 - m1;
        rec.model_decrease = md;

        const double f_trial = eval(x + step);
        const auto rho = agreement_ratio(fx, f_trial, m0, m1);
        rec.rho = rho ? *rho : kNaN;

        const bool gate = md >= lw.beta_p * sn * sn - lw.beta_pp - cfg.gate_tol;
        const double rho_needed = relaxed ? cfg.eta2 : cfg.eta1;
        accepted = rho && *rho >= rho_needed && gate && f_trial < fx;

        if (accepted) {
          // Retire one sampled point through its Lagrange score when the
          // quadratic-sized subset is available.
          pool.emplace_back(x + step, f_trial);
          x = x + step;
          fx = f_trial;
          if (relaxed) {
            delta = cfg.relax_gamma * sn;
            rec.update_kind = "success-swap";
          } else if (*rho >= cfg.eta2) {
            delta *= cfg.g3;
            rec.update_kind = "success-swap";
          } else {
            delta *= cfg.g2;
            rec.update_kind = "success-swap";
          }
          extra_interior = 0;
          rec.accepted = true;
        }
      }

      if (!accepted) {
        // Inadequate geometry -> repair; otherwise shrink (and optionally
        // enrich the sample).
        bool repaired = false;
        const auto subset = blocked_subset(sets);
        if (subset) {
          const NewtonBasis basis = build_newton_basis(*subset, cfg.pivot_threshold);
          const auto adq = check_adequacy(basis, *subset, x, delta,
                                          default_kappa_n(subset->blocks[2].size()),
                                          cfg.adequacy_probes);
          if (!adq.adequate) {
            try {
              const auto prop = select_exit_point_inadequate(
                  *subset, x, delta, phi, cfg.repair_starts, cfg.seed + 104729 * (iter + 1), 0);
              const double v = eval(prop.replacement);
              pool.emplace_back(prop.replacement, v);
              // Drop the exiting subset point from the pool.
              const Vector& gone = subset->point(prop.exit_index);
              for (auto it = pool.begin(); it != pool.end(); ++it)
                if (norm2(it->first - gone) < 1e-14 * (1.0 + delta)) {
                  pool.erase(it);
                  break;
                }
              rec.update_kind = "geometry-repair";
              repaired = true;
            } catch (const GeometryRepairError&) {
            }
          }
        }
        if (!repaired) {
          delta *= cfg.g1;
          extra_interior = (cfg.default_n_w(n) + 3) / 4;
          rec.update_kind = "shrink";
        }
      }

      rec.evals = eval.evals();
      res.trace.push_back(rec);
      res.iters = iter + 1;

      if (delta < cfg.eps_delta) {
        const double proxy_radius = std::max(delta, std::sqrt(cfg.eps_delta));
        double proxy = kNaN;
        if (eval.remaining() >= cfg.clarke_dirs * 3 + 1) {
          proxy = clarke_stationarity_proxy([&](const Vector& p) { return eval(p); }, x,
                                            proxy_radius, cfg.clarke_dirs, cfg.seed + 9001);
        }
        res.clarke_proxy = proxy;
        if (!res.trace.empty()) res.trace.back().clarke_proxy = proxy;
        res.terminated_by = std::isfinite(proxy) && proxy >= -cfg.eps_station
                                ? TerminationReason::stationarity
                                : TerminationReason::delta;
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
