#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "ntr/linalg.hpp"
#include "ntr/polynomial.hpp"

namespace ntr {

class NonPoisedError : public std::runtime_error {
public:
  explicit NonPoisedError(const std::string& what) : std::runtime_error(what) {}
};

class DuplicatePointsError : public std::runtime_error {
public:
  explicit DuplicatePointsError(const std::string& what) : std::runtime_error(what) {}
};

class GeometryRepairError : public std::runtime_error {
public:
  explicit GeometryRepairError(const std::string& what) : std::runtime_error(what) {}
};

/// Interpolation set organized into degree blocks Y[0], Y[1], Y[2] with one
/// objective value per point. Block capacities are 1, n, n(n+1)/2.
struct BlockedPointSet {
  std::size_t dim = 0;
  std::array<std::vector<Vector>, 3> blocks;
  std::array<std::vector<double>, 3> values;

  std::size_t total_points() const {
    return blocks[0].size() + blocks[1].size() + blocks[2].size();
  }

  /// Point by flat index (block 0 first, then 1, then 2, input order).
  const Vector& point(std::size_t flat) const;
  double value(std::size_t flat) const;
  void set_point(std::size_t flat, Vector p, double v);
  std::pair<std::size_t, std::size_t> locate(std::size_t flat) const;  // (block, idx)

  /// Builds a set from a flat list: first point becomes block 0, the next
  /// points fill block 1 up to n, the rest go to block 2.
  static BlockedPointSet from_flat(std::size_t dim, const std::vector<Vector>& points,
                                   const std::vector<double>& values);

  /// Throws std::invalid_argument on capacity/dimension/value violations.
  void validate() const;
};

/// Plain-text point set format: optional "# dim=N" header, then one point per
/// line: "<block> <x1> ... <xn> [value]".
BlockedPointSet read_point_set(std::istream& in, bool with_values);
void write_point_set(std::ostream& out, const BlockedPointSet& set);

enum class PivotOrder {
  max_abs,  // threshold pivoting over all unused points, ties by input order
  paper,    // slot (l, i) pivots at point i of block l, no search
};

struct NewtonBasis {
  std::size_t dim = 0;
  bool complete = false;
  std::array<std::vector<MonomialPoly>, 3> polys;
  std::array<std::vector<std::size_t>, 3> pivot_flat;  // flat index of each pivot point
  std::array<std::vector<Vector>, 3> pivot_points;
  // Set when incomplete: the slot whose best available pivot fell below threshold.
  int fail_block = -1;
  int fail_index = -1;
  double fail_best_abs = 0.0;

  std::size_t total_polys() const {
    return polys[0].size() + polys[1].size() + polys[2].size();
  }
};

/// Block-wise pivot/normalize/update sweep over the degree-graded monomial
/// basis. Returns complete=false when some slot sees only values below
/// pivot_threshold among its admissible pivots. `init_basis`, when given,
/// fixes the order in which monomials seed the slots (it must be a
/// permutation of the canonical quadratic basis); block l takes the first
/// |Y^[l]| degree-l entries.
NewtonBasis build_newton_basis(const BlockedPointSet& points, double pivot_threshold = 1e-8,
                               PivotOrder order = PivotOrder::max_abs,
                               const std::vector<MonomialPoly>* init_basis = nullptr);

/// D(Y) = det[phi_j(y^i)] over the flattened point list.
double poisedness_determinant(const BlockedPointSet& points,
                              const std::vector<MonomialPoly>& basis);

struct AdequacyReport {
  bool adequate = false;
  double kappa_n = 0.0;
  double max_abs_value = 0.0;
  bool cardinality_ok = false;
};

/// Adequacy of the interpolation geometry inside the ball: cardinality >= n+1,
/// cross-block pivot values bounded by kappa_n, and |N(x)| <= kappa_n at
/// `probes` low-discrepancy ball samples plus the interpolation points.
AdequacyReport check_adequacy(const NewtonBasis& basis, const BlockedPointSet& points,
                              const Vector& center, double radius, double kappa_n,
                              std::size_t probes = 512);

/// Smallest kappa_n admitted for a block-2 size, per the strict bound.
double default_kappa_n(std::size_t block2_size);

/// Lagrange polynomials L_i with L_i(y^j) = delta_ij, in the monomial basis.
std::vector<MonomialPoly> lagrange_polynomials(const BlockedPointSet& points,
                                               const std::vector<MonomialPoly>& basis);

/// Index of the point whose Lagrange polynomial has the largest |L_i(new_point)|;
/// ties broken by distance from the block-0 point, then by lowest index.
std::size_t select_exit_point_success(const BlockedPointSet& points, const Vector& new_point,
                                      const std::vector<MonomialPoly>& basis,
                                      std::optional<std::size_t> exclude = std::nullopt);

struct RepairProposal {
  std::size_t exit_index = 0;
  Vector replacement;
  double abs_det_before = 0.0;
  double abs_det_after = 0.0;
};

/// Scores every point's best in-ball replacement through its Lagrange
/// polynomial (multi-start ascent on |L_i|) and returns the swap that most
/// improves |D(Y)|. Falls back to direct determinant search when the set is
/// numerically non-poised; throws GeometryRepairError when nothing improves.
RepairProposal select_exit_point_inadequate(const BlockedPointSet& points, const Vector& center,
                                            double radius, const std::vector<MonomialPoly>& basis,
                                            std::size_t starts = 16, std::uint64_t seed = 0,
                                            std::optional<std::size_t> exclude = std::nullopt);

/// Approximate maximizer of |q| over the ball: interior stationary point plus
/// seeded multi-start projected gradient ascent on q and -q.
Vector maximize_abs_over_ball(const MonomialPoly& q, const Vector& center, double radius,
                              std::size_t starts, std::uint64_t seed);

}  // namespace ntr
