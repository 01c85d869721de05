// Command-line harness: run any engine on any registered problem, print
// Newton bases, run the diagnostic suite, and extract plot-ready series.

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "ntr/interp_geometry.hpp"
#include "ntr/newton_tr.hpp"
#include "ntr/problems.hpp"
#include "ntr/sampling.hpp"
#include "ntr/tr_blackbox.hpp"
#include "ntr/tr_quadratic.hpp"
#include "ntr/trace.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitObjectiveFailure = 2;
constexpr int kExitConfigError = 3;

struct RunConfig {
  std::string problem;
  std::string algorithm = "quad_ntr";  // newton_tr | quad_ntr | blackbox_ntr
  std::uint64_t seed = 0;
  std::size_t budget = 100000;
  std::string trace_path;
  std::string summary_path;
  std::vector<double> x0;

  ntr::TRConfig tr;
  ntr::BBConfig bb;
  ntr::LossWeightsQuad lwq;
  ntr::BlackboxLossWeights lwb;
  ntr::TrainConfig train;
};

ntr::Vector default_start(const ntr::Problem& p) {
  if (p.name == "example3") return ntr::Vector(p.dim, 0.0);
  if (p.name == "rosenbrock") return {-1.2, 1.0};
  if (p.name == "piecewise_quad") return {2.0, 0.5};
  return ntr::Vector(p.dim, 2.0);  // spheres, quad_illcond, l1norm, maxabs
}

bool apply_key(RunConfig& rc, const std::string& key, const std::string& value) {
  auto d = [&] { return std::stod(value); };
  auto u = [&] { return static_cast<std::size_t>(std::stoull(value)); };
  static const std::map<std::string, std::function<void(RunConfig&, const std::string&)>> table = {
      {"problem", [](RunConfig& r, const std::string& v) { r.problem = v; }},
      {"algorithm", [](RunConfig& r, const std::string& v) { r.algorithm = v; }},
      {"seed",
       [](RunConfig& r, const std::string& v) {
         r.seed = std::stoull(v);
       }},
      {"budget", [](RunConfig& r, const std::string& v) { r.budget = std::stoull(v); }},
  };
  auto it = table.find(key);
  if (it != table.end()) {
    it->second(rc, value);
    return true;
  }

  // Engine parameters, flat key space.
  if (key == "eta1") { rc.tr.eta1 = rc.bb.eta1 = d(); return true; }
  if (key == "eta2") { rc.tr.eta2 = rc.bb.eta2 = d(); return true; }
  if (key == "eta3") { rc.bb.eta3 = rc.lwb.eta3 = d(); return true; }
  // Radius factors: Algorithm 1 grows with gamma2 >= 1, the black-box engine
  // keeps its own triple (its gamma2 must stay <= 1), so the keys are split.
  if (key == "gamma1") { rc.tr.g1 = d(); return true; }
  if (key == "gamma2") { rc.tr.g2 = d(); return true; }
  if (key == "bb_radius1") { rc.bb.g1 = d(); return true; }
  if (key == "bb_radius2") { rc.bb.g2 = d(); return true; }
  if (key == "bb_radius3") { rc.bb.g3 = d(); return true; }
  if (key == "delta0") { rc.tr.delta0 = rc.bb.delta0 = d(); return true; }
  if (key == "eps_delta") { rc.tr.eps_delta = rc.bb.eps_delta = d(); return true; }
  if (key == "eps_station") { rc.tr.eps_station = rc.bb.eps_station = d(); return true; }
  if (key == "max_iters") { rc.tr.max_iters = rc.bb.max_iters = u(); return true; }
  if (key == "beta_check") { rc.tr.beta_check = d(); return true; }
  if (key == "tol_kkt") { rc.tr.tol_kkt = d(); return true; }
  if (key == "restarts") { rc.tr.restarts = u(); return true; }
  if (key == "descent_steps") { rc.tr.descent_steps = u(); return true; }
  if (key == "pivot_threshold") { rc.tr.pivot_threshold = rc.bb.pivot_threshold = d(); return true; }
  if (key == "adequacy_probes") { rc.tr.adequacy_probes = rc.bb.adequacy_probes = u(); return true; }
  if (key == "repair_starts") { rc.tr.repair_starts = rc.bb.repair_starts = u(); return true; }
  if (key == "n_w") { rc.bb.n_w = u(); return true; }
  if (key == "n_b") { rc.bb.n_b = u(); rc.bb.boundary_enabled = u() > 0; return true; }
  if (key == "refresh_cadence") { rc.bb.refresh_cadence = u(); return true; }
  if (key == "child_starts") { rc.bb.child_starts = u(); return true; }
  if (key == "child_steps") { rc.bb.child_steps = u(); return true; }
  if (key == "clarke_dirs") { rc.bb.clarke_dirs = u(); return true; }
  if (key == "gate_tol") { rc.bb.gate_tol = d(); return true; }
  if (key == "boundary_relaxation") { rc.bb.allow_boundary_relaxation = d() != 0.0; return true; }
  if (key == "relax_gamma") { rc.bb.relax_gamma = d(); return true; }
  if (key == "child_loss") {
    if (value == "ls_la") rc.bb.child_loss = ntr::ChildLoss::ls_la;
    else if (value == "lprime") rc.bb.child_loss = ntr::ChildLoss::lprime;
    else if (value == "lbntr") rc.bb.child_loss = ntr::ChildLoss::lbntr;
    else if (value == "lbntr_star") rc.bb.child_loss = ntr::ChildLoss::lbntr_star;
    else return false;
    return true;
  }
  if (key == "zbar1") { rc.lwq.zbar1 = d(); return true; }
  if (key == "zbar2") { rc.lwq.zbar2 = d(); return true; }
  if (key == "z1") { rc.lwq.z1 = rc.lwb.z1 = d(); return true; }
  if (key == "z2") { rc.lwq.z2 = rc.lwb.z2 = d(); return true; }
  if (key == "z3") { rc.lwq.z3 = rc.lwb.z3 = d(); return true; }
  if (key == "zt1") { rc.lwq.zt1 = rc.lwb.zt1 = d(); return true; }
  if (key == "zt2") { rc.lwq.zt2 = rc.lwb.zt2 = d(); return true; }
  if (key == "zt3") { rc.lwq.zt3 = d(); return true; }
  if (key == "c") { rc.lwq.c = rc.lwb.c = d(); return true; }
  if (key == "c_tilde") { rc.lwq.c_tilde = rc.lwb.c_tilde = d(); return true; }
  if (key == "c_star") { rc.lwq.c_star = d(); return true; }
  if (key == "bb_gamma1") { rc.lwb.g1 = d(); return true; }
  if (key == "bb_gamma2") { rc.lwb.g2 = d(); return true; }
  if (key == "bb_gamma3") { rc.lwb.g3 = d(); return true; }
  if (key == "bb_gamma4") { rc.lwb.g4 = d(); return true; }
  if (key == "bb_gamma2p") { rc.lwb.g2p = d(); return true; }
  if (key == "bb_gamma2pp") { rc.lwb.g2pp = d(); return true; }
  if (key == "beta_p") { rc.lwb.beta_p = d(); return true; }
  if (key == "beta_pp") { rc.lwb.beta_pp = d(); return true; }
  if (key == "eta_pp") { rc.lwb.eta_pp = d(); return true; }
  if (key == "epochs") { rc.train.epochs = u(); return true; }
  if (key == "learning_rate") { rc.train.learning_rate = d(); return true; }
  if (key == "split_fraction") { rc.train.split_fraction = d(); return true; }
  if (key == "momentum") { rc.train.momentum = d(); return true; }
  if (key == "bias") { rc.train.with_bias = d() != 0.0; return true; }
  if (key == "patience") { rc.train.patience = u(); return true; }
  if (key == "hidden") {
    rc.train.hidden_sizes.clear();
    std::istringstream hs(value);
    std::string tok;
    while (std::getline(hs, tok, ',')) rc.train.hidden_sizes.push_back(std::stoul(tok));
    return !rc.train.hidden_sizes.empty();
  }
  if (key == "x0") {
    rc.x0.clear();
    std::istringstream xs(value);
    std::string tok;
    while (std::getline(xs, tok, ',')) rc.x0.push_back(std::stod(tok));
    return !rc.x0.empty();
  }
  return false;
}

int load_config_file(RunConfig& rc, const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "config error: cannot open " << path << "\n";
    return kExitConfigError;
  }
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (eq == std::string::npos) {
      std::cerr << "config error: line " << lineno << " is not key=value: " << line << "\n";
      return kExitConfigError;
    }
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (!apply_key(rc, key, value)) {
        std::cerr << "config error: unknown key '" << key << "'\n";
        return kExitConfigError;
      }
    } catch (const std::exception&) {
      std::cerr << "config error: bad value for key '" << key << "': " << value << "\n";
      return kExitConfigError;
    }
  }
  return kExitOk;
}

int write_outputs(const RunConfig& rc, const ntr::OptimizationResult& res, double wall_s,
                  std::size_t dim) {
  if (!rc.trace_path.empty()) {
    std::ofstream ts(rc.trace_path);
    if (!ts) {
      std::cerr << "config error: cannot write trace file " << rc.trace_path << "\n";
      return kExitConfigError;
    }
    ntr::write_trace_csv(ts, res.schema, dim, res.trace);
  }
  std::ostringstream sum;
  sum << "problem=" << rc.problem << "\n";
  sum << "algorithm=" << rc.algorithm << "\n";
  sum << "seed=" << rc.seed << "\n";
  sum << "budget=" << rc.budget << "\n";
  sum << "final_f=" << ntr::format_double17(res.f) << "\n";
  sum << "final_x=";
  for (std::size_t i = 0; i < res.x.size(); ++i)
    sum << (i ? " " : "") << ntr::format_double17(res.x[i]);
  sum << "\n";
  sum << "evals=" << res.evals << "\n";
  sum << "iters=" << res.iters << "\n";
  sum << "terminated_by=" << ntr::to_string(res.terminated_by) << "\n";
  sum << "beta_violations=" << res.beta_violations << "\n";
  sum << "clarke_proxy=" << ntr::format_double17(res.clarke_proxy) << "\n";
  sum << "wall_time_s=" << ntr::format_double17(wall_s) << "\n";
  if (rc.summary_path.empty()) {
    std::cout << sum.str();
  } else {
    std::ofstream ss(rc.summary_path);
    if (!ss) {
      std::cerr << "config error: cannot write summary file " << rc.summary_path << "\n";
      return kExitConfigError;
    }
    ss << sum.str();
  }
  return kExitOk;
}

int cmd_solve(RunConfig rc) {
  ntr::Problem prob;
  try {
    prob = ntr::get_problem(rc.problem);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  ntr::Vector x0 = rc.x0.empty() ? default_start(prob) : ntr::Vector(rc.x0);
  if (x0.size() != prob.dim) {
    std::cerr << "config error: x0 has dimension " << x0.size() << ", problem needs " << prob.dim
              << "\n";
    return kExitConfigError;
  }
  rc.tr.seed = rc.bb.seed = rc.seed;
  rc.train.seed = rc.seed;
  rc.tr.budget = rc.bb.budget = rc.budget;

  ntr::OptimizationResult res;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (rc.algorithm == "newton_tr") {
      res = ntr::run_newton_tr(prob.evaluate, x0, rc.tr);
    } else if (rc.algorithm == "quad_ntr") {
      res = ntr::run_algorithm1(prob.evaluate, x0, rc.tr, rc.lwq, rc.train);
    } else if (rc.algorithm == "blackbox_ntr") {
      res = ntr::run_algorithm2(prob.evaluate, x0, rc.bb, rc.lwb, rc.train);
    } else {
      std::cerr << "config error: unknown algorithm '" << rc.algorithm << "'\n";
      return kExitConfigError;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  const double wall_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const int rcio = write_outputs(rc, res, wall_s, prob.dim);
  if (rcio != kExitOk) return rcio;
  if (res.terminated_by == ntr::TerminationReason::failure) {
    std::cerr << "objective failure: " << res.failure_message << "\n";
    return kExitObjectiveFailure;
  }
  return kExitOk;
}

int cmd_basis(const std::string& points_path, bool paper_order, bool with_values,
              double pivot_threshold, const std::string& beta_order) {
  std::ifstream in(points_path);
  if (!in) {
    std::cerr << "config error: cannot open point set " << points_path << "\n";
    return kExitConfigError;
  }
  ntr::BlockedPointSet set;
  try {
    set = ntr::read_point_set(in, with_values);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }

  const auto names = ntr::MonomialPoly::basis_names(set.dim);
  std::cout << "monomials:";
  for (const auto& nm : names) std::cout << ' ' << nm;
  std::cout << "\n";

  // Optional seeding order, e.g. "1,x1,x2,x1^2,x2^2,x1*x2".
  std::vector<ntr::MonomialPoly> seeds;
  const std::vector<ntr::MonomialPoly>* seeds_ptr = nullptr;
  if (!beta_order.empty()) {
    std::istringstream bs(beta_order);
    std::string tok;
    while (std::getline(bs, tok, ',')) {
      const auto pos = std::find(names.begin(), names.end(), tok);
      if (pos == names.end()) {
        std::cerr << "config error: unknown monomial '" << tok << "' in --beta\n";
        return kExitConfigError;
      }
      seeds.push_back(ntr::MonomialPoly::basis_element(
          set.dim, static_cast<std::size_t>(pos - names.begin())));
    }
    seeds_ptr = &seeds;
  }

  const auto basis = ntr::build_newton_basis(
      set, pivot_threshold, paper_order ? ntr::PivotOrder::paper : ntr::PivotOrder::max_abs,
      seeds_ptr);
  std::cout << "status: " << (basis.complete ? "complete" : "incomplete") << "\n";
  if (!basis.complete)
    std::cout << "fail: block=" << basis.fail_block << " index=" << basis.fail_index + 1
              << " best_abs=" << ntr::format_double17(basis.fail_best_abs) << "\n";
  for (int l = 0; l < 3; ++l)
    for (std::size_t i = 0; i < basis.polys[l].size(); ++i) {
      std::cout << "N[" << l << "][" << i + 1 << "]:";
      for (double c : basis.polys[l][i].coeffs()) std::cout << ' ' << ntr::format_double17(c);
      std::cout << "\n";
    }

  // Interpolation determinant over the first p canonical monomials.
  std::vector<ntr::MonomialPoly> phi;
  for (std::size_t k = 0; k < set.total_points(); ++k)
    phi.push_back(ntr::MonomialPoly::basis_element(set.dim, k));
  std::cout << "D(Y): " << ntr::format_double17(ntr::poisedness_determinant(set, phi)) << "\n";
  return kExitOk;
}

int cmd_check(bool force_fail) {
  bool all_ok = true;
  auto report = [&](const std::string& name, bool ok) {
    std::cout << name << ": " << (ok ? "pass" : "fail") << "\n";
    all_ok = all_ok && ok;
  };

  // Derivative oracles on seeded random nets.
  {
    double worst_g = 0.0, worst_h = 0.0, worst_cg = 0.0, worst_ch = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      ntr::Rng rng(seed);
      const std::size_t n = 1 + rng.index(4);
      const std::size_t h = 2 + rng.index(6);
      ntr::FeedForwardNet net({n, h, 1}, seed % 2 == 0);
      net.seed_weights(seed * 17 + 1);
      ntr::Vector x(n);
      for (double& v : x) v = rng.uniform(-1.0, 1.0);

      const ntr::Vector g = ntr::input_gradient(net, x);
      const ntr::Matrix hess = ntr::input_hessian(net, x).hessian;
      const double fd_h = 1e-5;
      for (std::size_t i = 0; i < n; ++i) {
        ntr::Vector xp = x, xm = x;
        xp[i] += fd_h;
        xm[i] -= fd_h;
        const double fd = (ntr::forward(net, xp) - ntr::forward(net, xm)) / (2.0 * fd_h);
        worst_g = std::max(worst_g, std::abs(fd - g[i]) / (1.0 + std::abs(fd)));
        const ntr::Vector gp = ntr::input_gradient(net, xp);
        const ntr::Vector gm = ntr::input_gradient(net, xm);
        for (std::size_t j = 0; j < n; ++j) {
          const double fdh = (gp[j] - gm[j]) / (2.0 * fd_h);
          worst_h = std::max(worst_h, std::abs(fdh - hess(i, j)) / (1.0 + std::abs(fdh)));
        }
      }
      const ntr::Vector cg = ntr::input_gradient_closed_form(net, x);
      const ntr::Matrix ch = ntr::input_hessian_closed_form(net, x);
      for (std::size_t i = 0; i < n; ++i) {
        worst_cg = std::max(worst_cg, std::abs(cg[i] - g[i]));
        for (std::size_t j = 0; j < n; ++j)
          worst_ch = std::max(worst_ch, std::abs(ch(i, j) - hess(i, j)));
      }
    }
    report("input_gradient_fd", worst_g <= 1e-5);
    report("input_hessian_fd", worst_h <= 1e-4);
    report("closed_form_gradient", worst_cg <= 1e-12);
    report("closed_form_hessian", worst_ch <= 1e-12);
  }

  // Eigen reconstruction and determinant consistency.
  {
    ntr::Rng rng(99);
    bool ok_rec = true, ok_det = true;
    for (int rep = 0; rep < 5; ++rep) {
      const std::size_t n = 2 + rng.index(4);
      ntr::Matrix m(n, n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) m(i, j) = m(j, i) = rng.uniform(-2.0, 2.0);
      const auto es = ntr::jacobi_eigensystem(m);
      ntr::Matrix rec(n, n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t k = 0; k < n; ++k)
            rec(i, j) += es.values[k] * es.vectors(i, k) * es.vectors(j, k);
      double err = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) err = std::max(err, std::abs(rec(i, j) - m(i, j)));
      ok_rec = ok_rec && err <= 1e-9 * (1.0 + ntr::frobenius_norm(m));
      double prod = 1.0;
      for (double v : es.values) prod *= v;
      ok_det = ok_det && std::abs(prod - ntr::determinant(m)) <=
                             1e-8 * std::max(1.0, std::abs(prod));
    }
    report("eig_reconstruction", ok_rec);
    report("determinant_vs_eigs", ok_det);
  }

  report("sigmoid_limits", ntr::sigmoid(-40.0) < 1e-15 && 1.0 - ntr::sigmoid(40.0) < 1e-15);

  // Step-length penalty seam: continuous value and first derivative.
  {
    const double delta = 0.7;
    const double eps = 1e-7;
    const double v_in = ntr::l_delta_penalty(delta - eps, delta);
    const double v_out = ntr::l_delta_penalty(delta + eps, delta);
    const double d_out = (ntr::l_delta_penalty(delta + 2 * eps, delta) - v_out) / eps;
    report("seam_c1", std::abs(v_in) < 1e-10 && std::abs(v_out) < 1e-10 && std::abs(d_out) < 1e-4);
    const double h = 1e-4;
    const double d2_out = (ntr::l_delta_penalty(delta + 2 * h, delta) -
                           2 * ntr::l_delta_penalty(delta + h, delta) +
                           ntr::l_delta_penalty(delta, delta)) /
                          (h * h);
    std::cout << "seam_c2_jump: value=" << ntr::format_double17(d2_out)
              << " info (second derivative steps from 0 to delta+1 across the seam)\n";
  }

  if (force_fail) report("forced_failure", false);
  return all_ok ? kExitOk : 1;
}

int cmd_trace_plotdata(const std::string& trace_path, const std::string& out_prefix) {
  std::ifstream in(trace_path);
  if (!in) {
    std::cerr << "config error: cannot open trace " << trace_path << "\n";
    return kExitConfigError;
  }
  std::string header;
  if (!std::getline(in, header)) {
    std::cerr << "config error: empty trace file\n";
    return kExitConfigError;
  }
  std::vector<std::string> cols;
  {
    std::istringstream hs(header);
    std::string tok;
    while (std::getline(hs, tok, ',')) cols.push_back(tok);
  }
  auto col_of = [&](const std::string& name) {
    for (std::size_t i = 0; i < cols.size(); ++i)
      if (cols[i] == name) return static_cast<long>(i);
    return -1L;
  };
  const long c_iter = col_of("iter"), c_f = col_of("f"), c_delta = col_of("delta"),
             c_rho = col_of("rho"), c_evals = col_of("evals");
  if (c_iter < 0 || c_f < 0 || c_delta < 0 || c_rho < 0 || c_evals < 0) {
    std::cerr << "config error: trace is missing required columns\n";
    return kExitConfigError;
  }

  std::ofstream fe(out_prefix + "f_vs_evals.dat"), di(out_prefix + "delta_vs_iter.dat"),
      ri(out_prefix + "rho_vs_iter.dat");
  if (!fe || !di || !ri) {
    std::cerr << "config error: cannot write output series\n";
    return kExitConfigError;
  }
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> parts;
    std::istringstream ls(line);
    std::string tok;
    while (std::getline(ls, tok, ',')) parts.push_back(tok);
    if (parts.size() < cols.size()) continue;
    fe << parts[c_evals] << ' ' << parts[c_f] << "\n";
    di << parts[c_iter] << ' ' << parts[c_delta] << "\n";
    ri << parts[c_iter] << ' ' << parts[c_rho] << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"derivative-free neural trust-region toolkit"};
  app.require_subcommand(1);

  RunConfig rc;
  std::string config_path;

  auto* solve = app.add_subcommand("solve", "run an engine on a problem");
  solve->add_option("--problem", rc.problem, "problem name (see `list`)");
  solve->add_option("--algorithm", rc.algorithm, "newton_tr | quad_ntr | blackbox_ntr");
  solve->add_option("--config", config_path, "key=value config file");
  solve->add_option("--seed", rc.seed, "run seed");
  solve->add_option("--budget", rc.budget, "max true objective evaluations");
  solve->add_option("--trace", rc.trace_path, "trace CSV output path");
  solve->add_option("--summary", rc.summary_path, "summary output path (default stdout)");
  std::string x0_flag;
  solve->add_option("--x0", x0_flag, "comma-separated start point");

  auto* basis = app.add_subcommand("basis", "build and print a Newton fundamental basis");
  std::string points_path, beta_order;
  bool paper_order = false, with_values = false;
  double pivot_threshold = 1e-8;
  basis->add_option("points", points_path, "point-set file")->required();
  basis->add_flag("--paper-order", paper_order, "pivot each slot at its own block point");
  basis->add_flag("--with-values", with_values, "lines carry a trailing objective value");
  basis->add_option("--pivot-threshold", pivot_threshold, "pivot rejection threshold");
  basis->add_option("--beta", beta_order, "comma-separated monomial seeding order");

  auto* check = app.add_subcommand("check", "run the diagnostic suite");
  bool force_fail = false;
  check->add_flag("--force-fail", force_fail, "emit one failing check (testing hook)");

  auto* plot = app.add_subcommand("trace-plotdata", "extract plot-ready series from a trace CSV");
  std::string trace_in, out_prefix;
  plot->add_option("--trace", trace_in, "trace CSV")->required();
  plot->add_option("--out", out_prefix, "output path prefix")->required();

  auto* list = app.add_subcommand("list", "list registered problems");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfigError;
  }

  try {
    if (solve->parsed()) {
      if (!config_path.empty()) {
        RunConfig from_file;
        const int rcfg = load_config_file(from_file, config_path);
        if (rcfg != kExitOk) return rcfg;
        // Explicit flags win over file values.
        const RunConfig flags = rc;
        rc = from_file;
        if (!flags.problem.empty()) rc.problem = flags.problem;
        if (solve->count("--algorithm")) rc.algorithm = flags.algorithm;
        if (solve->count("--seed")) rc.seed = flags.seed;
        if (solve->count("--budget")) rc.budget = flags.budget;
        rc.trace_path = flags.trace_path;
        rc.summary_path = flags.summary_path;
      }
      if (!x0_flag.empty() && !apply_key(rc, "x0", x0_flag)) {
        std::cerr << "config error: bad --x0\n";
        return kExitConfigError;
      }
      if (rc.problem.empty()) {
        std::cerr << "config error: no problem selected\n";
        return kExitConfigError;
      }
      return cmd_solve(rc);
    }
    if (basis->parsed())
      return cmd_basis(points_path, paper_order, with_values, pivot_threshold, beta_order);
    if (check->parsed()) return cmd_check(force_fail);
    if (plot->parsed()) return cmd_trace_plotdata(trace_in, out_prefix);
    if (list->parsed()) {
      for (const auto& info : ntr::list_problems())
        std::cout << info.name << " dim=" << info.dim << " smooth=" << (info.smooth ? 1 : 0)
                  << "\n";
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
  return kExitOk;
}
