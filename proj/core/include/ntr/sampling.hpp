#pragma once

#include <cstdint>
#include <vector>

#include "ntr/linalg.hpp"

namespace ntr {

/// Deterministic uniform/gaussian source. Wraps a fixed 64-bit engine and
/// hand-rolled transforms so that seeded runs replay bit-identically.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

  std::uint64_t next_u64();
  double uniform01();                       // in [0, 1)
  double uniform(double lo, double hi);
  double gaussian();                        // Box-Muller, one value per call
  std::size_t index(std::size_t n);         // in [0, n)

  /// Fisher-Yates permutation of {0, ..., n-1}.
  std::vector<std::size_t> permutation(std::size_t n);

  Vector unit_direction(std::size_t dim);

private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Halton low-discrepancy sequence point (1-based index), one value per base.
double halton(std::uint64_t index, unsigned base);

/// `count` quasi-uniform points in the ball ||x - center|| <= radius,
/// built from the Halton sequence starting at `start_index`.
std::vector<Vector> halton_ball_points(const Vector& center, double radius,
                                       std::size_t count, std::uint64_t start_index = 1);

/// `count` pseudo-random points uniform in the ball (seeded).
std::vector<Vector> random_ball_points(const Vector& center, double radius,
                                       std::size_t count, Rng& rng);

/// `count` points with ||x - center|| == radius (normalized gaussian directions).
std::vector<Vector> random_sphere_points(const Vector& center, double radius,
                                         std::size_t count, Rng& rng);

}  // namespace ntr
