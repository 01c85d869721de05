#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ntr/interp_geometry.hpp"
#include "ntr/sampling.hpp"

using namespace ntr;

namespace {

// Test-side determinant oracle: recursive cofactor expansion.
double cofactor_det(const Matrix& m) {
  const std::size_t n = m.rows();
  if (n == 1) return m(0, 0);
  double acc = 0.0;
  double sign = 1.0;
  for (std::size_t j = 0; j < n; ++j) {
    Matrix minor(n - 1, n - 1);
    for (std::size_t r = 1; r < n; ++r) {
      std::size_t cc = 0;
      for (std::size_t c = 0; c < n; ++c) {
        if (c == j) continue;
        minor(r - 1, cc++) = m(r, c);
      }
    }
    acc += sign * m(0, j) * cofactor_det(minor);
    sign = -sign;
  }
  return acc;
}

double oracle_poisedness(const BlockedPointSet& set, const std::vector<MonomialPoly>& basis) {
  const std::size_t p = set.total_points();
  Matrix m(p, p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) m(i, j) = basis[j].value(set.point(i));
  return cofactor_det(m);
}

BlockedPointSet example1_set() {
  BlockedPointSet s;
  s.dim = 2;
  s.blocks[0] = {{0.0, 0.0}};
  s.blocks[1] = {{0.5, 0.0}, {0.0, 0.5}};
  s.blocks[2] = {{1.0, 0.0}, {0.5, 0.5}, {0.0, 1.0}};
  for (int b = 0; b < 3; ++b) s.values[b].assign(s.blocks[b].size(), 0.0);
  return s;
}

BlockedPointSet example2_set() {
  BlockedPointSet s;
  s.dim = 2;
  s.blocks[0] = {{0.0, 0.0}};
  s.blocks[1] = {{1.0, 0.0}, {0.0, 2.0}};
  s.blocks[2] = {{3.0, 0.0}, {1.0, 2.0}, {2.0, 1.0}};
  for (int b = 0; b < 3; ++b) s.values[b].assign(s.blocks[b].size(), 0.0);
  return s;
}

bool poly_equals(const MonomialPoly& p, const std::vector<double>& coeffs, double tol = 1e-12) {
  REQUIRE(p.coeffs().size() == coeffs.size());
  for (std::size_t k = 0; k < coeffs.size(); ++k)
    if (std::abs(p.coeffs()[k] - coeffs[k]) > tol) return false;
  return true;
}

// The second fixture's seeding order lists x2^2 before x1*x2.
std::vector<MonomialPoly> example2_beta() {
  std::vector<MonomialPoly> beta;
  for (std::size_t k : {0, 1, 2, 3, 5, 4}) beta.push_back(MonomialPoly::basis_element(2, k));
  return beta;
}

BlockedPointSet affine_image(const BlockedPointSet& s, const Matrix& a, const Vector& b) {
  BlockedPointSet t = s;
  for (int blk = 0; blk < 3; ++blk)
    for (auto& p : t.blocks[blk]) p = a.apply(p) + b;
  return t;
}

}  // namespace

TEST_CASE("complete Newton basis on the six-point fixture (paper pivot order)") {
  const auto set = example1_set();
  const auto nb = build_newton_basis(set, 1e-8, PivotOrder::paper);
  REQUIRE(nb.complete);
  // Final list: 1, 2x1, 2x2, 2x1^2 - x1, 4x1x2, 2x2^2 - x2
  CHECK(poly_equals(nb.polys[0][0], {1, 0, 0, 0, 0, 0}));
  CHECK(poly_equals(nb.polys[1][0], {0, 2, 0, 0, 0, 0}));
  CHECK(poly_equals(nb.polys[1][1], {0, 0, 2, 0, 0, 0}));
  CHECK(poly_equals(nb.polys[2][0], {0, -1, 0, 2, 0, 0}));
  CHECK(poly_equals(nb.polys[2][1], {0, 0, 0, 0, 4, 0}));
  CHECK(poly_equals(nb.polys[2][2], {0, 0, -1, 0, 0, 2}));
}

TEST_CASE("Kronecker property of complete bases") {
  for (const PivotOrder order : {PivotOrder::paper, PivotOrder::max_abs}) {
    const auto set = example1_set();
    const auto nb = build_newton_basis(set, 1e-8, order);
    REQUIRE(nb.complete);
    // N_i^[l] is 1 at its own pivot and 0 at pivots of earlier slots.
    for (int l = 0; l < 3; ++l)
      for (std::size_t i = 0; i < nb.polys[l].size(); ++i) {
        CHECK(nb.polys[l][i].value(nb.pivot_points[l][i]) == doctest::Approx(1.0).epsilon(1e-10));
        for (int m = 0; m <= l; ++m)
          for (std::size_t j = 0; j < nb.polys[m].size(); ++j) {
            if (m == l && j >= i) continue;
            CHECK(std::abs(nb.polys[l][i].value(nb.pivot_points[m][j])) < 1e-10);
          }
      }
  }
}

TEST_CASE("incomplete basis on the second fixture under paper pivot order") {
  const auto set = example2_set();
  const auto beta = example2_beta();
  const auto nb = build_newton_basis(set, 1e-8, PivotOrder::paper, &beta);
  CHECK_FALSE(nb.complete);
  CHECK(nb.fail_block == 2);
  CHECK(nb.fail_index == 1);  // N_2^[2] = x2^2 - 2 x2, zero at its paired point (1,2)
  CHECK(nb.fail_best_abs < 1e-8);
}

TEST_CASE("the second fixture is actually poised, and max-abs pivoting completes it") {
  const auto set = example2_set();
  const auto basis = quadratic_basis(2);
  const double d = poisedness_determinant(set, basis);
  const double oracle = oracle_poisedness(set, basis);
  CHECK(d == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(std::abs(d) == doctest::Approx(24.0).epsilon(1e-12));
  const auto nb = build_newton_basis(set, 1e-8, PivotOrder::max_abs);
  CHECK(nb.complete);
}

TEST_CASE("poisedness determinant on fixed sets") {
  SUBCASE("six-point fixture") {
    const auto set = example1_set();
    const auto basis = quadratic_basis(2);
    const double d = poisedness_determinant(set, basis);
    CHECK(d == doctest::Approx(1.0 / 64.0).epsilon(1e-12));
    CHECK(d == doctest::Approx(oracle_poisedness(set, basis)).epsilon(1e-12));
  }
  SUBCASE("single point") {
    BlockedPointSet s;
    s.dim = 1;
    s.blocks[0] = {{0.3}};
    s.values[0] = {0.0};
    std::vector<MonomialPoly> basis{MonomialPoly::basis_element(1, 0)};
    CHECK(poisedness_determinant(s, basis) == doctest::Approx(1.0));
  }
  SUBCASE("count mismatch") {
    CHECK_THROWS_AS(poisedness_determinant(example1_set(), quadratic_basis(3)),
                    std::invalid_argument);
  }
}

TEST_CASE("one-dimensional basis sweep") {
  BlockedPointSet s;
  s.dim = 1;
  s.blocks[0] = {{0.0}};
  s.blocks[1] = {{1.0}};
  s.blocks[2] = {{2.0}};
  for (int b = 0; b < 3; ++b) s.values[b].assign(1, 0.0);
  const auto nb = build_newton_basis(s, 1e-8, PivotOrder::paper);
  REQUIRE(nb.complete);
  CHECK(poly_equals(nb.polys[0][0], {1, 0, 0}));
  CHECK(poly_equals(nb.polys[1][0], {0, 1, 0}));
  CHECK(poly_equals(nb.polys[2][0], {0, -0.5, 0.5}));  // (x^2 - x) / 2
}

TEST_CASE("duplicated points are rejected before construction") {
  auto set = example1_set();
  set.blocks[2][0] = set.blocks[1][0];
  CHECK_THROWS_AS(build_newton_basis(set, 1e-8), DuplicatePointsError);
}

TEST_CASE("adequacy checks") {
  SUBCASE("six-point fixture is adequate at kappa 9") {
    const auto set = example1_set();
    const auto nb = build_newton_basis(set, 1e-8, PivotOrder::paper);
    const auto rep = check_adequacy(nb, set, {0.0, 0.0}, 1.0, 9.0, 200);
    CHECK(rep.adequate);
    CHECK(rep.cardinality_ok);
    CHECK(rep.max_abs_value <= 9.0);
    CHECK(rep.max_abs_value > 0.0);
  }
  SUBCASE("cardinality failure") {
    BlockedPointSet s;
    s.dim = 2;
    s.blocks[0] = {{0.0, 0.0}};
    s.values[0] = {0.0};
    const auto nb = build_newton_basis(s, 1e-8);
    const auto rep = check_adequacy(nb, s, {0.0, 0.0}, 1.0, 3.0, 64);
    CHECK_FALSE(rep.adequate);
    CHECK_FALSE(rep.cardinality_ok);
  }
  SUBCASE("incomplete basis is never adequate") {
    const auto set = example2_set();
    const auto beta = example2_beta();
    const auto nb = build_newton_basis(set, 1e-8, PivotOrder::paper, &beta);
    REQUIRE_FALSE(nb.complete);
    const auto rep = check_adequacy(nb, set, {0.0, 0.0}, 3.0, default_kappa_n(3), 128);
    CHECK_FALSE(rep.adequate);
    CHECK(rep.cardinality_ok);
  }
  SUBCASE("kappa_n precondition") {
    const auto set = example1_set();
    const auto nb = build_newton_basis(set, 1e-8);
    CHECK_THROWS_AS(check_adequacy(nb, set, {0.0, 0.0}, 1.0, 8.0, 16), std::invalid_argument);
  }
}

TEST_CASE("Lagrange polynomials") {
  SUBCASE("Kronecker matrix on the six-point fixture") {
    const auto set = example1_set();
    const auto lag = lagrange_polynomials(set, quadratic_basis(2));
    REQUIRE(lag.size() == 6);
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 6; ++j)
        CHECK(std::abs(lag[i].value(set.point(j)) - (i == j ? 1.0 : 0.0)) < 1e-10);
  }
  SUBCASE("single point") {
    BlockedPointSet s;
    s.dim = 1;
    s.blocks[0] = {{0.7}};
    s.values[0] = {0.0};
    const auto lag = lagrange_polynomials(s, {MonomialPoly::basis_element(1, 0)});
    CHECK(lag[0].value({-3.0}) == doctest::Approx(1.0));
  }
  SUBCASE("two linear points") {
    BlockedPointSet s;
    s.dim = 1;
    s.blocks[0] = {{0.0}};
    s.blocks[1] = {{1.0}};
    s.values[0] = {0.0};
    s.values[1] = {0.0};
    std::vector<MonomialPoly> basis{MonomialPoly::basis_element(1, 0),
                                    MonomialPoly::basis_element(1, 1)};
    const auto lag = lagrange_polynomials(s, basis);
    CHECK(lag[0].value({0.25}) == doctest::Approx(0.75));  // 1 - x
    CHECK(lag[1].value({0.25}) == doctest::Approx(0.25));  // x
  }
  SUBCASE("partition of unity at random points") {
    const auto set = example1_set();
    const auto lag = lagrange_polynomials(set, quadratic_basis(2));
    Rng rng(5);
    for (int rep = 0; rep < 50; ++rep) {
      const Vector x{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
      double s = 0.0;
      for (const auto& li : lag) s += li.value(x);
      CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("exit-point selection after a successful step") {
  const auto set = example1_set();
  const auto basis = quadratic_basis(2);
  SUBCASE("dominating Lagrange value near (1,0)") {
    CHECK(select_exit_point_success(set, {0.9, 0.0}, basis) == 3);
  }
  SUBCASE("existing point maps to itself") {
    for (std::size_t i = 0; i < 6; ++i)
      CHECK(select_exit_point_success(set, set.point(i), basis) == i);
  }
  SUBCASE("tie broken by distance, then index") {
    BlockedPointSet s;
    s.dim = 2;
    s.blocks[0] = {{0.0, 0.0}};
    s.blocks[1] = {{1.0, 0.0}, {0.0, 1.0}};
    for (int b = 0; b < 2; ++b) s.values[b].assign(s.blocks[b].size(), 0.0);
    std::vector<MonomialPoly> lin{MonomialPoly::basis_element(2, 0),
                                  MonomialPoly::basis_element(2, 1),
                                  MonomialPoly::basis_element(2, 2)};
    // All three Lagrange values equal 1/3 at the barycenter; the two unit
    // points tie on distance and the lower index wins.
    CHECK(select_exit_point_success(s, {1.0 / 3.0, 1.0 / 3.0}, lin) == 1);
  }
}

TEST_CASE("geometry repair proposals") {
  const auto basis = quadratic_basis(2);
  SUBCASE("repair never lowers |D| and fixes near-degenerate sets") {
    auto set = example1_set();
    // Collapse one block-2 point near another: |D| becomes tiny.
    set.blocks[2][1] = {1.0 - 1e-7, 1e-7};
    const double d0 = std::abs(poisedness_determinant(set, basis));
    REQUIRE(d0 < 1e-6);
    const auto prop = select_exit_point_inadequate(set, {0.0, 0.0}, 1.0, basis, 16, 7);
    CHECK(prop.abs_det_after >= prop.abs_det_before);
    CHECK(prop.abs_det_after > 10.0 * d0);
  }
  SUBCASE("already well-poised set still improves or holds") {
    const auto set = example1_set();
    const double d0 = std::abs(poisedness_determinant(set, basis));
    const auto prop = select_exit_point_inadequate(set, {0.0, 0.0}, 1.0, basis, 16, 11);
    CHECK(prop.abs_det_after >= d0);
  }
  SUBCASE("single point: any ball point but the center") {
    BlockedPointSet s;
    s.dim = 2;
    s.blocks[0] = {{0.0, 0.0}};
    s.values[0] = {0.0};
    std::vector<MonomialPoly> b1{MonomialPoly::basis_element(2, 0)};
    const auto prop = select_exit_point_inadequate(s, {0.0, 0.0}, 1.0, b1, 8, 3);
    CHECK(prop.exit_index == 0);
    CHECK(norm2(prop.replacement) > 1e-9);
    CHECK(norm2(prop.replacement) <= 1.0 + 1e-12);
  }
}

TEST_CASE("max-abs completeness tracks poisedness under affine maps") {
  // Poisedness is affine invariant for the full quadratic space, and a poised
  // set always admits a complete basis under max-abs pivoting: a slot stuck at
  // zero on every remaining point would exhibit a nonzero quadratic vanishing
  // on the whole set. Both fixtures are poised, so both must stay complete.
  Rng rng(17);
  const auto basis = quadratic_basis(2);
  for (int rep = 0; rep < 10; ++rep) {
    Matrix a(2, 2);
    do {
      for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) a(i, j) = rng.uniform(-1.5, 1.5);
    } while (std::abs(determinant(a)) < 0.5);
    const Vector b{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};

    for (const auto& base : {example1_set(), example2_set()}) {
      const auto image = affine_image(base, a, b);
      CHECK(std::abs(poisedness_determinant(image, basis)) > 1e-10);
      CHECK(build_newton_basis(image, 1e-8, PivotOrder::max_abs).complete);
    }
    // The first fixture also stays complete under identity pairing for
    // generic well-conditioned maps.
    CHECK(build_newton_basis(affine_image(example1_set(), a, b), 1e-8, PivotOrder::paper)
              .complete);
  }
}

TEST_CASE("point-set text round trip") {
  const auto set = example1_set();
  std::ostringstream out;
  write_point_set(out, set);
  std::istringstream in(out.str());
  const auto back = read_point_set(in, /*with_values=*/true);
  REQUIRE(back.total_points() == set.total_points());
  for (std::size_t i = 0; i < set.total_points(); ++i) {
    CHECK(back.point(i) == set.point(i));
    CHECK(back.value(i) == set.value(i));
  }
}
