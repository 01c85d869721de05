#include <doctest.h>

#include <cmath>

#include "ntr/polynomial.hpp"
#include "ntr/sampling.hpp"

using namespace ntr;

TEST_CASE("canonical quadratic basis layout") {
  // n = 2: {1, x1, x2, x1^2, x1*x2, x2^2}
  const auto basis = quadratic_basis(2);
  REQUIRE(basis.size() == 6);
  const Vector x{2.0, 3.0};
  CHECK(basis[0].value(x) == 1.0);
  CHECK(basis[1].value(x) == 2.0);
  CHECK(basis[2].value(x) == 3.0);
  CHECK(basis[3].value(x) == 4.0);
  CHECK(basis[4].value(x) == 6.0);
  CHECK(basis[5].value(x) == 9.0);

  const auto names = MonomialPoly::basis_names(2);
  CHECK(names == std::vector<std::string>{"1", "x1", "x2", "x1^2", "x1*x2", "x2^2"});
  CHECK(MonomialPoly::basis_degree(2, 0) == 0);
  CHECK(MonomialPoly::basis_degree(2, 2) == 1);
  CHECK(MonomialPoly::basis_degree(2, 5) == 2);
}

TEST_CASE("gradient and hessian of a quadratic") {
  // q = 1 + 2 x1 - x2 + 3 x1^2 + 4 x1 x2 + 0.5 x2^2
  MonomialPoly q(2);
  q.constant_term() = 1.0;
  q.linear(0) = 2.0;
  q.linear(1) = -1.0;
  q.set_quad(0, 0, 3.0);
  q.set_quad(0, 1, 4.0);
  q.set_quad(1, 1, 0.5);

  const Vector x{0.7, -1.3};
  CHECK(q.value(x) == doctest::Approx(1 + 2 * 0.7 + 1.3 + 3 * 0.49 + 4 * 0.7 * -1.3 +
                                      0.5 * 1.69));
  const Vector g = q.gradient(x);
  CHECK(g[0] == doctest::Approx(2 + 6 * 0.7 + 4 * -1.3));
  CHECK(g[1] == doctest::Approx(-1 + 4 * 0.7 + 1.0 * -1.3));
  const Matrix h = q.hessian();
  CHECK(h(0, 0) == doctest::Approx(6.0));
  CHECK(h(0, 1) == doctest::Approx(4.0));
  CHECK(h(1, 0) == doctest::Approx(4.0));
  CHECK(h(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("gradient matches finite differences on random polynomials") {
  Rng rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 1 + rng.index(5);
    MonomialPoly q(n);
    for (double& c : q.coeffs()) c = rng.uniform(-2.0, 2.0);
    Vector x(n);
    for (double& v : x) v = rng.uniform(-1.5, 1.5);
    const Vector g = q.gradient(x);
    for (std::size_t i = 0; i < n; ++i) {
      Vector xp = x, xm = x;
      xp[i] += 1e-6;
      xm[i] -= 1e-6;
      const double fd = (q.value(xp) - q.value(xm)) / 2e-6;
      CHECK(g[i] == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("arithmetic helpers") {
  MonomialPoly a(2), b(2);
  a.linear(0) = 1.0;
  b.set_quad(0, 1, 2.0);
  a.add_scaled(b, 3.0);
  CHECK(a.value({1.0, 1.0}) == doctest::Approx(1.0 + 6.0));
  a.scale(0.5);
  CHECK(a.value({1.0, 1.0}) == doctest::Approx(3.5));
}
