#include <doctest.h>

#include <cmath>

#include "ntr/newton_model.hpp"
#include "ntr/sampling.hpp"
#include "ntr/tr_quadratic.hpp"  // initial_pattern

using namespace ntr;

namespace {

double example3_f(const Vector& x) {
  const double a = x[0] - 2.0, b = x[1] - 1.0;
  return a * a * a * a + b * b * b + std::exp(x[0] + x[1]);
}

BlockedPointSet example3_set() {
  BlockedPointSet s;
  s.dim = 2;
  s.blocks[0] = {{0.0, 0.0}};
  s.blocks[1] = {{1.0, 0.0}, {0.0, 1.0}};
  s.blocks[2] = {{2.0, 0.0}, {1.0, 1.0}, {0.0, 2.0}};
  for (int b = 0; b < 3; ++b) {
    s.values[b].clear();
    for (const auto& p : s.blocks[b]) s.values[b].push_back(example3_f(p));
  }
  return s;
}

BlockedPointSet with_values(BlockedPointSet s, const std::function<double(const Vector&)>& f) {
  for (int b = 0; b < 3; ++b)
    for (std::size_t i = 0; i < s.blocks[b].size(); ++i) s.values[b][i] = f(s.blocks[b][i]);
  return s;
}

// Independent oracle: solve the p x p interpolation system directly by a
// test-local Gauss elimination (no pivot search, full pivoting not needed at
// this scale but kept simple and separate from the library path).
std::vector<double> direct_interpolation_coeffs(const BlockedPointSet& set) {
  const std::size_t p = set.total_points();
  const auto basis = quadratic_basis(set.dim);
  REQUIRE(basis.size() == p);
  std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) a[i][j] = basis[j].value(set.point(i));
    a[i][p] = set.value(i);
  }
  for (std::size_t k = 0; k < p; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < p; ++i)
      if (std::abs(a[i][k]) > std::abs(a[piv][k])) piv = i;
    std::swap(a[k], a[piv]);
    REQUIRE(std::abs(a[k][k]) > 1e-14);
    for (std::size_t i = 0; i < p; ++i) {
      if (i == k) continue;
      const double f = a[i][k] / a[k][k];
      for (std::size_t j = k; j <= p; ++j) a[i][j] -= f * a[k][j];
    }
  }
  std::vector<double> c(p);
  for (std::size_t k = 0; k < p; ++k) c[k] = a[k][p] / a[k][k];
  return c;
}

QuadraticModel assemble_from(const BlockedPointSet& set, PivotOrder order) {
  const auto basis = build_newton_basis(set, 1e-8, order);
  REQUIRE(basis.complete);
  const auto coeffs = generalized_finite_differences(set, basis);
  return assemble_model(set, basis, coeffs);
}

}  // namespace

TEST_CASE("difference coefficients on the quartic-cubic-exponential fixture") {
  const auto set = example3_set();
  const auto basis = build_newton_basis(set, 1e-8, PivotOrder::paper);
  REQUIRE(basis.complete);
  const auto dc = generalized_finite_differences(set, basis);

  const double e = std::exp(1.0);
  CHECK(dc.lambdas[0][0] == doctest::Approx(16.0).epsilon(1e-14));
  // lambda_1 at the two degree-1 pivots: f - 16 evaluated there.
  CHECK(dc.lambdas[1][0] == doctest::Approx(e - 16.0).epsilon(1e-13));
  CHECK(dc.lambdas[1][1] == doctest::Approx(e).epsilon(1e-13));
  // lambda_2 at the degree-2 pivots (derived by running the recurrence by
  // hand: lambda_2 = f - 16 - (e-16) x1 - e x2).
  CHECK(dc.lambdas[2][0] == doctest::Approx(e * e - 2.0 * e + 15.0).epsilon(1e-12));
  CHECK(dc.lambdas[2][1] == doctest::Approx(e * e - 2.0 * e + 1.0).epsilon(1e-12));
  CHECK(dc.lambdas[2][2] == doctest::Approx(e * e - 2.0 * e + 1.0).epsilon(1e-12));
}

TEST_CASE("difference coefficients: constants and Kronecker patterns") {
  SUBCASE("constant objective") {
    auto set = example3_set();
    set = with_values(set, [](const Vector&) { return 4.25; });
    const auto basis = build_newton_basis(set, 1e-8, PivotOrder::paper);
    const auto dc = generalized_finite_differences(set, basis);
    CHECK(dc.lambdas[0][0] == doctest::Approx(4.25));
    for (int l = 1; l < 3; ++l)
      for (double v : dc.lambdas[l]) CHECK(std::abs(v) < 1e-12);
  }
  SUBCASE("objective equal to one Newton polynomial") {
    auto set = example3_set();
    const auto basis0 = build_newton_basis(set, 1e-8, PivotOrder::paper);
    REQUIRE(basis0.complete);
    // f = N_2^[2]; running the recurrence by hand with the Kronecker property
    // leaves exactly one unit coefficient.
    const MonomialPoly target = basis0.polys[2][1];
    set = with_values(set, [&](const Vector& x) { return target.value(x); });
    const auto basis = build_newton_basis(set, 1e-8, PivotOrder::paper);
    const auto dc = generalized_finite_differences(set, basis);
    CHECK(std::abs(dc.lambdas[0][0]) < 1e-12);
    for (double v : dc.lambdas[1]) CHECK(std::abs(v) < 1e-12);
    CHECK(dc.lambdas[2][0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(dc.lambdas[2][1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(dc.lambdas[2][2] == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("incomplete basis rejected") {
    BlockedPointSet s;
    s.dim = 2;
    s.blocks[0] = {{0.0, 0.0}};
    s.blocks[1] = {{1.0, 0.0}, {2.0, 0.0}};  // collinear block: no complete basis
    s.values[0] = {0.0};
    s.values[1] = {0.0, 0.0};
    const auto nb = build_newton_basis(s, 1e-8);
    REQUIRE_FALSE(nb.complete);
    CHECK_THROWS_AS(generalized_finite_differences(s, nb), IncompleteBasisError);
  }
}

TEST_CASE("assembled model interpolates and matches the direct-solve oracle") {
  const auto set = example3_set();
  const QuadraticModel m = assemble_from(set, PivotOrder::paper);

  // Interpolation conditions.
  double maxabs = 0.0;
  for (std::size_t i = 0; i < set.total_points(); ++i)
    maxabs = std::max(maxabs, std::abs(set.value(i)));
  for (std::size_t i = 0; i < set.total_points(); ++i)
    CHECK(std::abs(evaluate_model(m, set.point(i)) - set.value(i)) <= 1e-9 * (1.0 + maxabs));

  // Monomial coefficients against the independent oracle.
  const auto oracle = direct_interpolation_coeffs(set);
  const MonomialPoly mono = m.to_monomial();
  for (std::size_t k = 0; k < oracle.size(); ++k)
    CHECK(mono.coeffs()[k] ==
          doctest::Approx(oracle[k]).epsilon(1e-10).scale(std::max(1.0, std::abs(oracle[k]))));

  // Closed forms for the grouped coefficients, run through the recurrence by
  // hand: 16, e-16, e, (e^2-2e+15)/2, e^2-2e+1, (e^2-2e+1)/2.
  const double e = std::exp(1.0);
  const double alpha = (e * e - 2.0 * e + 15.0) / 2.0;
  const double beta = e * e - 2.0 * e + 1.0;
  const double gamma = (e * e - 2.0 * e + 1.0) / 2.0;
  CHECK(mono.constant_term() == doctest::Approx(16.0).epsilon(1e-12));
  CHECK(mono.quad(0, 0) == doctest::Approx(alpha).epsilon(1e-12));
  CHECK(mono.quad(0, 1) == doctest::Approx(beta).epsilon(1e-12));
  CHECK(mono.quad(1, 1) == doctest::Approx(gamma).epsilon(1e-12));
  CHECK(mono.linear(0) + alpha == doctest::Approx(e - 16.0).epsilon(1e-12));
  CHECK(mono.linear(1) + gamma == doctest::Approx(e).epsilon(1e-12));
}

TEST_CASE("model evaluation") {
  const auto set = example3_set();
  const QuadraticModel m = assemble_from(set, PivotOrder::paper);
  const double e = std::exp(1.0);
  CHECK(evaluate_model(m, {0.0, 0.0}) == doctest::Approx(16.0).epsilon(1e-12));
  CHECK(evaluate_model(m, {1.0, 1.0}) == doctest::Approx(1.0 + e * e).epsilon(1e-12));

  QuadraticModel flat;
  flat.center = {0.0, 0.0};
  flat.constant = 3.5;
  flat.gradient = {0.0, 0.0};
  flat.hessian = Matrix(2, 2);
  CHECK(evaluate_model(flat, {10.0, -3.0}) == doctest::Approx(3.5));
}

TEST_CASE("quadratic reproduction on random poised sets") {
  Rng rng(29);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 1 + rng.index(3);
    // Random quadratic q(x) = c + g.x + 1/2 x'Hx.
    const double c = rng.uniform(-2.0, 2.0);
    Vector g(n);
    for (double& v : g) v = rng.uniform(-2.0, 2.0);
    Matrix h(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) h(i, j) = h(j, i) = rng.uniform(-2.0, 2.0);
    auto q = [&](const Vector& x) { return c + dot(g, x) + 0.5 * dot(x, h.apply(x)); };

    // Random poised set: jittered standard pattern.
    Vector center(n);
    for (double& v : center) v = rng.uniform(-1.0, 1.0);
    std::vector<Vector> pts;
    for (const Vector& p : initial_pattern(center, 1.0)) {
      Vector jit = p;
      for (double& v : jit) v += rng.uniform(-0.05, 0.05);
      pts.push_back(jit);
    }
    Vector vals;
    for (const auto& p : pts) vals.push_back(q(p));
    const auto set = BlockedPointSet::from_flat(n, pts, vals);
    const auto basis = build_newton_basis(set, 1e-10);
    if (!basis.complete) continue;
    const auto model = assemble_model(set, basis, generalized_finite_differences(set, basis));
    const MonomialPoly mono = model.to_monomial();

    CHECK(mono.constant_term() == doctest::Approx(c).epsilon(1e-8));
    for (std::size_t i = 0; i < n; ++i)
      CHECK(mono.linear(i) == doctest::Approx(g[i]).epsilon(1e-8));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) {
        const double expect = (i == j) ? 0.5 * h(i, i) : h(i, j);
        CHECK(mono.quad(i, j) == doctest::Approx(expect).epsilon(1e-8));
      }
  }
}

TEST_CASE("assembled model is independent of the pivot order") {
  const auto set = example3_set();
  const QuadraticModel a = assemble_from(set, PivotOrder::paper);
  const QuadraticModel b = assemble_from(set, PivotOrder::max_abs);
  const auto ca = a.to_monomial().coeffs();
  const auto cb = b.to_monomial().coeffs();
  for (std::size_t k = 0; k < ca.size(); ++k)
    CHECK(std::abs(ca[k] - cb[k]) <= 1e-9 * (1.0 + std::abs(ca[k])));
}

TEST_CASE("recentering is exact for quadratics") {
  const auto set = example3_set();
  const QuadraticModel m = assemble_from(set, PivotOrder::paper);
  const QuadraticModel r = recenter(m, {0.7, -0.4});
  Rng rng(31);
  for (int rep = 0; rep < 10; ++rep) {
    const Vector x{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
    CHECK(evaluate_model(r, x) == doctest::Approx(evaluate_model(m, x)).epsilon(1e-12));
  }
}
