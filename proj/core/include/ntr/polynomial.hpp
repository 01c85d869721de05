#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ntr/linalg.hpp"

namespace ntr {

/// Multivariate polynomial of total degree <= 2 stored as coefficients over
/// the canonical quadratic basis {1, x_1..x_n, x_1^2, x_1 x_2, ..., x_n^2}
/// (degree-graded, pair-lexicographic within degree two).
class MonomialPoly {
public:
  MonomialPoly() = default;
  explicit MonomialPoly(std::size_t dim) : dim_(dim), coeffs_(basis_size(dim), 0.0) {}

  static std::size_t basis_size(std::size_t dim) { return (dim + 1) * (dim + 2) / 2; }

  /// The k-th canonical basis monomial as a polynomial.
  static MonomialPoly basis_element(std::size_t dim, std::size_t k);

  /// Total degree (0, 1 or 2) of the k-th canonical basis monomial.
  static int basis_degree(std::size_t dim, std::size_t k);

  /// Flat index of the monomial x_i * x_j (i <= j) in the canonical basis.
  static std::size_t quad_index(std::size_t dim, std::size_t i, std::size_t j);

  std::size_t dim() const { return dim_; }
  const std::vector<double>& coeffs() const { return coeffs_; }
  std::vector<double>& coeffs() { return coeffs_; }

  double constant_term() const { return coeffs_[0]; }
  double linear(std::size_t i) const { return coeffs_[1 + i]; }
  double quad(std::size_t i, std::size_t j) const;

  double& constant_term() { return coeffs_[0]; }
  double& linear(std::size_t i) { return coeffs_[1 + i]; }
  void set_quad(std::size_t i, std::size_t j, double v);

  double value(const Vector& x) const;
  Vector gradient(const Vector& x) const;
  Matrix hessian() const;  // constant for a quadratic

  MonomialPoly& scale(double a);
  MonomialPoly& add_scaled(const MonomialPoly& other, double a);

  /// Human/machine readable monomial names, canonical order ("1", "x1", "x1*x2", "x1^2").
  static std::vector<std::string> basis_names(std::size_t dim);

private:
  std::size_t dim_ = 0;
  std::vector<double> coeffs_;
};

/// The full canonical quadratic basis for dimension n, in order.
std::vector<MonomialPoly> quadratic_basis(std::size_t dim);

}  // namespace ntr
