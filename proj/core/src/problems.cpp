#include "ntr/problems.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace ntr {

namespace {

double example3_f(const Vector& x) {
  const double a = x[0] - 2.0, b = x[1] - 1.0;
  return a * a * a * a + b * b * b + std::exp(x[0] + x[1]);
}

Problem make_sphere(const std::string& name, std::size_t n) {
  Problem p;
  p.name = name;
  p.dim = n;
  p.evaluate = [](const Vector& x) { return dot(x, x); };
  p.known_minimizer = Vector(n, 0.0);
  p.known_minimum = 0.0;
  p.smooth = true;
  p.lipschitz_note = "smooth, gradient Lipschitz with constant 2";
  return p;
}

std::map<std::string, Problem> build_registry() {
  std::map<std::string, Problem> reg;

  {
    Problem p;
    p.name = "example3";
    p.dim = 2;
    p.evaluate = example3_f;
    p.smooth = true;
    p.lipschitz_note = "smooth; unbounded below in x2, descent fixture only";
    reg[p.name] = p;
  }
  reg["sphere"] = make_sphere("sphere", 2);
  reg["sphere5"] = make_sphere("sphere5", 5);
  reg["sphere10"] = make_sphere("sphere10", 10);
  {
    Problem p;
    p.name = "rosenbrock";
    p.dim = 2;
    p.evaluate = [](const Vector& x) {
      const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
      return a * a + 100.0 * b * b;
    };
    p.known_minimizer = Vector{1.0, 1.0};
    p.known_minimum = 0.0;
    p.smooth = true;
    p.lipschitz_note = "smooth, locally Lipschitz gradient";
    reg[p.name] = p;
  }
  {
    Problem p;
    p.name = "quad_illcond";
    p.dim = 2;
    p.evaluate = [](const Vector& x) { return 0.5 * (x[0] * x[0] + 1e4 * x[1] * x[1]); };
    p.known_minimizer = Vector{0.0, 0.0};
    p.known_minimum = 0.0;
    p.smooth = true;
    p.lipschitz_note = "smooth quadratic, condition number 1e4";
    reg[p.name] = p;
  }
  {
    Problem p;
    p.name = "l1norm";
    p.dim = 2;
    p.evaluate = [](const Vector& x) { return norm1(x); };
    p.known_minimizer = Vector{0.0, 0.0};
    p.known_minimum = 0.0;
    p.smooth = false;
    p.lipschitz_note = "globally Lipschitz with constant sqrt(n), kinks on the axes";
    reg[p.name] = p;
  }
  {
    Problem p;
    p.name = "maxabs";
    p.dim = 2;
    p.evaluate = [](const Vector& x) { return norm_inf(x); };
    p.known_minimizer = Vector{0.0, 0.0};
    p.known_minimum = 0.0;
    p.smooth = false;
    p.lipschitz_note = "globally Lipschitz with constant 1, nonsmooth on diagonals";
    reg[p.name] = p;
  }
  {
    Problem p;
    p.name = "piecewise_quad";
    p.dim = 2;
    p.evaluate = [](const Vector& x) {
      const double q1 = x[0] * x[0] + x[1] * x[1];
      const double q2 = (x[0] - 1.0) * (x[0] - 1.0) + x[1] * x[1];
      return std::max(q1, q2);
    };
    p.known_minimizer = Vector{0.5, 0.0};
    p.known_minimum = 0.25;
    p.smooth = false;
    p.lipschitz_note = "max of two convex quadratics, kink on the bisector x1 = 1/2";
    reg[p.name] = p;
  }
  return reg;
}

const std::map<std::string, Problem>& registry() {
  static const std::map<std::string, Problem> reg = build_registry();
  return reg;
}

}  // namespace

Problem get_problem(const std::string& name) {
  const auto& reg = registry();
  auto it = reg.find(name);
  if (it == reg.end()) throw std::invalid_argument("unknown problem: " + name);
  return it->second;
}

std::vector<ProblemInfo> list_problems() {
  std::vector<ProblemInfo> out;
  for (const auto& [name, p] : registry()) out.push_back({name, p.dim, p.smooth});
  std::sort(out.begin(), out.end(),
            [](const ProblemInfo& a, const ProblemInfo& b) { return a.name < b.name; });
  return out;
}

}  // namespace ntr
