#include "ntr/sampling.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ntr {

std::uint64_t Rng::next_u64() {
  // splitmix64: tiny state, good equidistribution at this scale.
  state_ += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double Rng::uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

double Rng::gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = uniform01();
  while (u1 <= 0.0) u1 = uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  have_spare_ = true;
  return r * std::cos(a);
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw std::invalid_argument("Rng::index: empty range");
  return static_cast<std::size_t>(next_u64() % n);
}

std::vector<std::size_t> Rng::permutation(std::size_t n) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  for (std::size_t i = n; i-- > 1;) {
    const std::size_t j = index(i + 1);
    std::swap(p[i], p[j]);
  }
  return p;
}

Vector Rng::unit_direction(std::size_t dim) {
  Vector d(dim);
  double nrm = 0.0;
  while (nrm == 0.0) {
    for (std::size_t i = 0; i < dim; ++i) d[i] = gaussian();
    nrm = norm2(d);
  }
  for (double& x : d) x /= nrm;
  return d;
}

double halton(std::uint64_t index, unsigned base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * static_cast<double>(index % base);
    index /= base;
  }
  return r;
}

namespace {

constexpr unsigned kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,
                                31, 37, 41, 43, 47, 53, 59, 61, 67, 71};

double inv_gaussian_like(double u) {
  // Quasi-gaussian via the logistic quantile; only direction quality matters here.
  u = std::min(std::max(u, 1e-12), 1.0 - 1e-12);
  return std::log(u / (1.0 - u));
}

}  // namespace

std::vector<Vector> halton_ball_points(const Vector& center, double radius,
                                       std::size_t count, std::uint64_t start_index) {
  const std::size_t n = center.size();
  if (n == 0) throw std::invalid_argument("halton_ball_points: empty center");
  if (n + 1 > sizeof(kPrimes) / sizeof(kPrimes[0]))
    throw std::invalid_argument("halton_ball_points: dimension too large");
  std::vector<Vector> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::uint64_t idx = start_index + k;
    Vector d(n);
    double nrm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d[i] = inv_gaussian_like(halton(idx, kPrimes[i]));
      nrm += d[i] * d[i];
    }
    nrm = std::sqrt(std::max(nrm, 1e-300));
    const double u = halton(idx, kPrimes[n]);
    const double r = radius * std::pow(u, 1.0 / static_cast<double>(n));
    Vector p(center);
    for (std::size_t i = 0; i < n; ++i) p[i] += r * d[i] / nrm;
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Vector> random_ball_points(const Vector& center, double radius,
                                       std::size_t count, Rng& rng) {
  const std::size_t n = center.size();
  std::vector<Vector> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Vector d = rng.unit_direction(n);
    const double r = radius * std::pow(rng.uniform01(), 1.0 / static_cast<double>(n));
    Vector p(center);
    for (std::size_t i = 0; i < n; ++i) p[i] += r * d[i];
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Vector> random_sphere_points(const Vector& center, double radius,
                                         std::size_t count, Rng& rng) {
  const std::size_t n = center.size();
  std::vector<Vector> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Vector d = rng.unit_direction(n);
    Vector p(center);
    for (std::size_t i = 0; i < n; ++i) p[i] += radius * d[i];
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace ntr
