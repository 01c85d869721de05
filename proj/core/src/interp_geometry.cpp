#include "ntr/interp_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "ntr/sampling.hpp"

namespace ntr {

const Vector& BlockedPointSet::point(std::size_t flat) const {
  auto [b, i] = locate(flat);
  return blocks[b][i];
}

double BlockedPointSet::value(std::size_t flat) const {
  auto [b, i] = locate(flat);
  return values[b][i];
}

void BlockedPointSet::set_point(std::size_t flat, Vector p, double v) {
  auto [b, i] = locate(flat);
  blocks[b][i] = std::move(p);
  values[b][i] = v;
}

std::pair<std::size_t, std::size_t> BlockedPointSet::locate(std::size_t flat) const {
  for (std::size_t b = 0; b < 3; ++b) {
    if (flat < blocks[b].size()) return {b, flat};
    flat -= blocks[b].size();
  }
  throw std::out_of_range("BlockedPointSet: flat index out of range");
}

BlockedPointSet BlockedPointSet::from_flat(std::size_t dim, const std::vector<Vector>& points,
                                           const std::vector<double>& values) {
  if (points.empty()) throw std::invalid_argument("from_flat: empty point list");
  if (points.size() != values.size())
    throw std::invalid_argument("from_flat: point/value count mismatch");
  BlockedPointSet s;
  s.dim = dim;
  const std::size_t cap1 = dim;
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::size_t b;
    if (i == 0)
      b = 0;
    else if (i <= cap1)
      b = 1;
    else
      b = 2;
    s.blocks[b].push_back(points[i]);
    s.values[b].push_back(values[i]);
  }
  s.validate();
  return s;
}

void BlockedPointSet::validate() const {
  if (dim == 0) throw std::invalid_argument("BlockedPointSet: dim must be >= 1");
  if (blocks[0].size() != 1) throw std::invalid_argument("BlockedPointSet: block 0 must hold one point");
  if (blocks[1].size() > dim) throw std::invalid_argument("BlockedPointSet: block 1 exceeds n");
  if (blocks[2].size() > dim * (dim + 1) / 2)
    throw std::invalid_argument("BlockedPointSet: block 2 exceeds n(n+1)/2");
  for (std::size_t b = 0; b < 3; ++b) {
    if (blocks[b].size() != values[b].size())
      throw std::invalid_argument("BlockedPointSet: value count mismatch");
    for (std::size_t i = 0; i < blocks[b].size(); ++i) {
      if (blocks[b][i].size() != dim)
        throw std::invalid_argument("BlockedPointSet: point dimension mismatch");
      for (double c : blocks[b][i])
        if (!std::isfinite(c)) throw std::invalid_argument("BlockedPointSet: non-finite coordinate");
      if (!std::isfinite(values[b][i]))
        throw std::invalid_argument("BlockedPointSet: non-finite objective value");
    }
  }
}

BlockedPointSet read_point_set(std::istream& in, bool with_values) {
  BlockedPointSet s;
  std::size_t dim_hint = 0;
  std::string line;
  std::vector<std::tuple<int, Vector, double>> rows;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (line[first] == '#') {
      const auto pos = line.find("dim=");
      if (pos != std::string::npos) dim_hint = std::stoul(line.substr(pos + 4));
      continue;
    }
    std::istringstream ls(line);
    std::vector<double> nums;
    double v;
    while (ls >> v) nums.push_back(v);
    if (nums.size() < 2) throw std::invalid_argument("point set: short line: " + line);
    const int block = static_cast<int>(nums[0]);
    if (block < 0 || block > 2 || nums[0] != block)
      throw std::invalid_argument("point set: bad block tag in line: " + line);
    const std::size_t ncoord = nums.size() - 1 - (with_values ? 1 : 0);
    if (ncoord == 0) throw std::invalid_argument("point set: no coordinates in line: " + line);
    Vector p(nums.begin() + 1, nums.begin() + 1 + ncoord);
    const double val = with_values ? nums.back() : 0.0;
    rows.emplace_back(block, std::move(p), val);
  }
  if (rows.empty()) throw std::invalid_argument("point set: no points");
  s.dim = dim_hint ? dim_hint : std::get<1>(rows.front()).size();
  for (auto& [b, p, val] : rows) {
    if (p.size() != s.dim) throw std::invalid_argument("point set: inconsistent dimensions");
    s.blocks[b].push_back(std::move(p));
    s.values[b].push_back(val);
  }
  s.validate();
  return s;
}

void write_point_set(std::ostream& out, const BlockedPointSet& set) {
  out << "# dim=" << set.dim << "\n";
  char buf[64];
  for (std::size_t b = 0; b < 3; ++b)
    for (std::size_t i = 0; i < set.blocks[b].size(); ++i) {
      out << b;
      for (double c : set.blocks[b][i]) {
        std::snprintf(buf, sizeof buf, " %.17g", c);
        out << buf;
      }
      std::snprintf(buf, sizeof buf, " %.17g", set.values[b][i]);
      out << buf << "\n";
    }
}

namespace {

void reject_duplicates(const BlockedPointSet& set) {
  double scale = 1.0;
  const std::size_t p = set.total_points();
  for (std::size_t i = 0; i < p; ++i) scale = std::max(scale, norm2(set.point(i)));
  const double tol = 1e-12 * scale;
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j)
      if (norm2(set.point(i) - set.point(j)) < tol)
        throw DuplicatePointsError("interpolation set contains duplicated points");
}

// Degree-l monomial basis slots, in canonical order.
std::vector<std::size_t> degree_slots(std::size_t dim, int degree) {
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < MonomialPoly::basis_size(dim); ++k)
    if (MonomialPoly::basis_degree(dim, k) == degree) idx.push_back(k);
  return idx;
}

}  // namespace

NewtonBasis build_newton_basis(const BlockedPointSet& points, double pivot_threshold,
                               PivotOrder order, const std::vector<MonomialPoly>* init_basis) {
  points.validate();
  if (pivot_threshold <= 0.0) throw std::invalid_argument("build_newton_basis: threshold must be > 0");
  reject_duplicates(points);

  const std::size_t n = points.dim;
  NewtonBasis nb;
  nb.dim = n;
  for (int l = 0; l < 3; ++l) {
    const std::size_t count = points.blocks[l].size();
    std::vector<MonomialPoly> seeds;
    if (init_basis) {
      for (const MonomialPoly& p : *init_basis) {
        if (p.dim() != n) throw std::invalid_argument("build_newton_basis: init basis dimension");
        // A pure degree-l monomial has exactly one nonzero coefficient.
        std::size_t nz = 0, idx = 0;
        for (std::size_t k = 0; k < p.coeffs().size(); ++k)
          if (p.coeffs()[k] != 0.0) {
            ++nz;
            idx = k;
          }
        if (nz != 1 || p.coeffs()[idx] != 1.0)
          throw std::invalid_argument("build_newton_basis: init basis must consist of monomials");
        if (MonomialPoly::basis_degree(n, idx) == l) seeds.push_back(p);
      }
    } else {
      for (std::size_t k : degree_slots(n, l)) seeds.push_back(MonomialPoly::basis_element(n, k));
    }
    if (count > seeds.size())
      throw std::invalid_argument("build_newton_basis: block larger than its monomial capacity");
    for (std::size_t i = 0; i < count; ++i) nb.polys[l].push_back(seeds[i]);
  }

  const std::size_t p = points.total_points();
  std::vector<bool> used(p, false);
  // Flat offsets of each block.
  std::array<std::size_t, 3> off = {0, points.blocks[0].size(),
                                    points.blocks[0].size() + points.blocks[1].size()};

  for (int l = 0; l < 3; ++l) {
    for (std::size_t i = 0; i < nb.polys[l].size(); ++i) {
      MonomialPoly& cur = nb.polys[l][i];
      std::size_t best_flat = p;
      double best_abs = -1.0;
      double best_val = 0.0;
      if (order == PivotOrder::paper) {
        const std::size_t flat = off[l] + i;
        if (!used[flat]) {
          best_flat = flat;
          best_val = cur.value(points.point(flat));
          best_abs = std::abs(best_val);
        }
      } else {
        for (std::size_t flat = 0; flat < p; ++flat) {
          if (used[flat]) continue;
          const double v = cur.value(points.point(flat));
          if (std::abs(v) > best_abs) {
            best_abs = std::abs(v);
            best_val = v;
            best_flat = flat;
          }
        }
      }
      if (best_flat == p || best_abs < pivot_threshold) {
        nb.complete = false;
        nb.fail_block = l;
        nb.fail_index = static_cast<int>(i);
        nb.fail_best_abs = std::max(best_abs, 0.0);
        return nb;
      }
      used[best_flat] = true;
      cur.scale(1.0 / best_val);
      nb.pivot_flat[l].push_back(best_flat);
      nb.pivot_points[l].push_back(points.point(best_flat));
      // Sweep the pivot out of every slot that is still unprocessed.
      const Vector& y = points.point(best_flat);
      for (int m = l; m < 3; ++m) {
        const std::size_t j0 = (m == l) ? i + 1 : 0;
        for (std::size_t j = j0; j < nb.polys[m].size(); ++j) {
          const double v = nb.polys[m][j].value(y);
          if (v != 0.0) nb.polys[m][j].add_scaled(cur, -v);
        }
      }
    }
  }
  nb.complete = true;
  return nb;
}

double poisedness_determinant(const BlockedPointSet& points,
                              const std::vector<MonomialPoly>& basis) {
  const std::size_t p = points.total_points();
  if (basis.size() != p)
    throw std::invalid_argument("poisedness_determinant: basis/point count mismatch");
  Matrix m(p, p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) m(i, j) = basis[j].value(points.point(i));
  return determinant(m);
}

double default_kappa_n(std::size_t block2_size) {
  return std::pow(2.0, static_cast<double>(block2_size)) + 1.0;
}

AdequacyReport check_adequacy(const NewtonBasis& basis, const BlockedPointSet& points,
                              const Vector& center, double radius, double kappa_n,
                              std::size_t probes) {
  if (radius <= 0.0) throw std::invalid_argument("check_adequacy: radius must be > 0");
  if (kappa_n <= std::pow(2.0, static_cast<double>(points.blocks[2].size())))
    throw std::invalid_argument("check_adequacy: kappa_n must exceed 2^|Y2|");

  AdequacyReport rep;
  rep.kappa_n = kappa_n;
  rep.cardinality_ok = points.total_points() >= points.dim + 1;
  if (!basis.complete) {
    rep.adequate = false;
    return rep;
  }

  double maxabs = 0.0;
  // Cross-block pivot values |N_i^[l](y^{j,[l+1]})|.
  for (int l = 0; l < 2; ++l)
    for (const MonomialPoly& poly : basis.polys[l])
      for (const Vector& y : basis.pivot_points[l + 1])
        maxabs = std::max(maxabs, std::abs(poly.value(y)));

  // Sampled "for all x in the trust region", plus the points themselves.
  std::vector<Vector> xs = halton_ball_points(center, radius, probes);
  for (std::size_t i = 0; i < points.total_points(); ++i) xs.push_back(points.point(i));
  for (int l = 0; l < 3; ++l)
    for (const MonomialPoly& poly : basis.polys[l])
      for (const Vector& x : xs) maxabs = std::max(maxabs, std::abs(poly.value(x)));

  rep.max_abs_value = maxabs;
  rep.adequate = rep.cardinality_ok && maxabs <= kappa_n;
  return rep;
}

std::vector<MonomialPoly> lagrange_polynomials(const BlockedPointSet& points,
                                               const std::vector<MonomialPoly>& basis) {
  const std::size_t p = points.total_points();
  if (basis.size() != p)
    throw std::invalid_argument("lagrange_polynomials: basis/point count mismatch");
  Matrix m(p, p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) m(i, j) = basis[j].value(points.point(i));

  std::vector<MonomialPoly> lag;
  lag.reserve(p);
  for (std::size_t i = 0; i < p; ++i) {
    Vector e(p, 0.0);
    e[i] = 1.0;
    Vector c;
    try {
      c = solve_linear(m, e);
    } catch (const SingularMatrixError&) {
      throw NonPoisedError("lagrange_polynomials: interpolation system is singular");
    }
    MonomialPoly li(points.dim);
    for (std::size_t k = 0; k < p; ++k) li.add_scaled(basis[k], c[k]);
    lag.push_back(std::move(li));
  }
  return lag;
}

std::size_t select_exit_point_success(const BlockedPointSet& points, const Vector& new_point,
                                      const std::vector<MonomialPoly>& basis,
                                      std::optional<std::size_t> exclude) {
  for (double c : new_point)
    if (!std::isfinite(c)) throw std::invalid_argument("select_exit_point_success: non-finite point");
  const auto lag = lagrange_polynomials(points, basis);
  const Vector& center = points.blocks[0][0];

  const std::size_t p = points.total_points();
  std::size_t best = p;
  double best_abs = 0.0;
  double best_dist = 0.0;
  for (std::size_t i = 0; i < p; ++i) {
    if (exclude && *exclude == i) continue;
    const double a = std::abs(lag[i].value(new_point));
    const double d = norm2(points.point(i) - center);
    if (best == p) {
      best = i;
      best_abs = a;
      best_dist = d;
      continue;
    }
    const double rel = 1e-12 * std::max(1.0, std::max(a, best_abs));
    if (a > best_abs + rel) {
      best = i;
      best_abs = a;
      best_dist = d;
    } else if (a >= best_abs - rel && d > best_dist + 1e-15) {
      best = i;
      best_abs = std::max(best_abs, a);
      best_dist = d;
    }
  }
  if (best == p) throw std::invalid_argument("select_exit_point_success: no admissible point");
  return best;
}

Vector maximize_abs_over_ball(const MonomialPoly& q, const Vector& center, double radius,
                              std::size_t starts, std::uint64_t seed) {
  Rng rng(seed * 0x9e3779b97f4a7c15ull + 1);
  const std::size_t n = center.size();

  Vector best;
  double best_abs = -1.0;
  auto consider = [&](const Vector& x) {
    const double a = std::abs(q.value(x));
    if (a > best_abs) {
      best_abs = a;
      best = x;
    }
  };

  // Interior stationary point, when the Hessian admits one.
  {
    const Matrix h = q.hessian();
    const Vector zero(n, 0.0);
    const Vector g0 = q.gradient(zero);
    try {
      Vector xs = solve_linear(h, Vector(g0));
      for (double& v : xs) v = -v;
      if (norm2(xs - center) <= radius) consider(xs);
    } catch (const SingularMatrixError&) {
      // no isolated stationary point
    }
  }

  auto project = [&](Vector& x) {
    const Vector d = x - center;
    const double nd = norm2(d);
    if (nd > radius) {
      const double f = radius / nd;
      for (std::size_t i = 0; i < n; ++i) x[i] = center[i] + f * d[i];
    }
  };

  for (std::size_t s = 0; s < starts; ++s) {
    for (double sign : {1.0, -1.0}) {
      Vector x = random_ball_points(center, radius, 1, rng)[0];
      double step = radius;
      double fx = sign * q.value(x);
      for (int it = 0; it < 200; ++it) {
        Vector g = q.gradient(x);
        double gn = norm2(g);
        if (gn < 1e-15) break;
        bool improved = false;
        while (step > 1e-14 * radius) {
          Vector xn = x;
          for (std::size_t i = 0; i < n; ++i) xn[i] += sign * step * g[i] / gn;
          project(xn);
          const double fn = sign * q.value(xn);
          if (fn > fx + 1e-16) {
            x = std::move(xn);
            fx = fn;
            step *= 1.5;
            improved = true;
            break;
          }
          step *= 0.5;
        }
        if (!improved) break;
      }
      consider(x);
    }
  }
  return best;
}

RepairProposal select_exit_point_inadequate(const BlockedPointSet& points, const Vector& center,
                                            double radius, const std::vector<MonomialPoly>& basis,
                                            std::size_t starts, std::uint64_t seed,
                                            std::optional<std::size_t> exclude) {
  if (radius <= 0.0) throw std::invalid_argument("select_exit_point_inadequate: radius must be > 0");
  if (starts == 0) throw std::invalid_argument("select_exit_point_inadequate: starts must be >= 1");
  const std::size_t p = points.total_points();
  const double d0 = std::abs(poisedness_determinant(points, basis));

  auto det_after_swap = [&](std::size_t i, const Vector& y) {
    BlockedPointSet trial = points;
    trial.set_point(i, y, trial.value(i));
    return std::abs(poisedness_determinant(trial, basis));
  };

  RepairProposal out;
  out.abs_det_before = d0;

  std::vector<std::pair<std::size_t, Vector>> candidates;
  bool poised_route = true;
  try {
    const auto lag = lagrange_polynomials(points, basis);
    for (std::size_t i = 0; i < p; ++i) {
      if (exclude && *exclude == i) continue;
      candidates.emplace_back(i, maximize_abs_over_ball(lag[i], center, radius, starts, seed + i));
    }
  } catch (const NonPoisedError&) {
    poised_route = false;
  }

  if (!poised_route) {
    // Singular set: score direct swaps against a deterministic candidate pool.
    std::vector<Vector> pool = halton_ball_points(center, radius, std::max<std::size_t>(starts * 4, 32));
    Rng rng(seed + 17);
    const auto extra = random_ball_points(center, radius, starts, rng);
    pool.insert(pool.end(), extra.begin(), extra.end());
    for (std::size_t i = 0; i < p; ++i) {
      if (exclude && *exclude == i) continue;
      for (const Vector& y : pool) candidates.emplace_back(i, y);
    }
  }

  double best_after = -1.0;
  for (auto& [i, y] : candidates) {
    // Skip replacements that duplicate an existing point (no-op swaps
    // included); they cannot improve the geometry.
    bool dup = false;
    for (std::size_t k = 0; k < p; ++k)
      if (norm2(points.point(k) - y) < 1e-12 * std::max(1.0, radius)) dup = true;
    if (dup) continue;
    const double da = det_after_swap(i, y);
    if (da > best_after) {
      best_after = da;
      out.exit_index = i;
      out.replacement = y;
    }
  }

  out.abs_det_after = best_after;
  if (best_after < d0 || (d0 == 0.0 && best_after <= 0.0))
    throw GeometryRepairError("select_exit_point_inadequate: no improving replacement found");
  return out;
}

}  // namespace ntr
