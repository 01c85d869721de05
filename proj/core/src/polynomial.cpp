#include "ntr/polynomial.hpp"

#include <stdexcept>

namespace ntr {

std::size_t MonomialPoly::quad_index(std::size_t dim, std::size_t i, std::size_t j) {
  if (i > j) std::swap(i, j);
  if (j >= dim) throw std::invalid_argument("quad_index: index out of range");
  // Offset of row i in the upper-triangular pair enumeration.
  std::size_t off = 0;
  for (std::size_t r = 0; r < i; ++r) off += dim - r;
  return 1 + dim + off + (j - i);
}

MonomialPoly MonomialPoly::basis_element(std::size_t dim, std::size_t k) {
  MonomialPoly p(dim);
  if (k >= p.coeffs_.size()) throw std::invalid_argument("basis_element: index out of range");
  p.coeffs_[k] = 1.0;
  return p;
}

int MonomialPoly::basis_degree(std::size_t dim, std::size_t k) {
  if (k == 0) return 0;
  if (k <= dim) return 1;
  if (k < basis_size(dim)) return 2;
  throw std::invalid_argument("basis_degree: index out of range");
}

double MonomialPoly::quad(std::size_t i, std::size_t j) const {
  return coeffs_[quad_index(dim_, i, j)];
}

void MonomialPoly::set_quad(std::size_t i, std::size_t j, double v) {
  coeffs_[quad_index(dim_, i, j)] = v;
}

double MonomialPoly::value(const Vector& x) const {
  if (x.size() != dim_) throw std::invalid_argument("MonomialPoly::value: dimension mismatch");
  double s = coeffs_[0];
  for (std::size_t i = 0; i < dim_; ++i) s += coeffs_[1 + i] * x[i];
  std::size_t k = 1 + dim_;
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = i; j < dim_; ++j) s += coeffs_[k++] * x[i] * x[j];
  return s;
}

Vector MonomialPoly::gradient(const Vector& x) const {
  if (x.size() != dim_) throw std::invalid_argument("MonomialPoly::gradient: dimension mismatch");
  Vector g(dim_, 0.0);
  for (std::size_t i = 0; i < dim_; ++i) g[i] = coeffs_[1 + i];
  std::size_t k = 1 + dim_;
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = i; j < dim_; ++j) {
      const double c = coeffs_[k++];
      if (i == j) {
        g[i] += 2.0 * c * x[i];
      } else {
        g[i] += c * x[j];
        g[j] += c * x[i];
      }
    }
  return g;
}

Matrix MonomialPoly::hessian() const {
  Matrix h(dim_, dim_);
  std::size_t k = 1 + dim_;
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = i; j < dim_; ++j) {
      const double c = coeffs_[k++];
      if (i == j) {
        h(i, i) = 2.0 * c;
      } else {
        h(i, j) = c;
        h(j, i) = c;
      }
    }
  return h;
}

MonomialPoly& MonomialPoly::scale(double a) {
  for (double& c : coeffs_) c *= a;
  return *this;
}

MonomialPoly& MonomialPoly::add_scaled(const MonomialPoly& other, double a) {
  if (other.dim_ != dim_) throw std::invalid_argument("add_scaled: dimension mismatch");
  for (std::size_t k = 0; k < coeffs_.size(); ++k) coeffs_[k] += a * other.coeffs_[k];
  return *this;
}

std::vector<std::string> MonomialPoly::basis_names(std::size_t dim) {
  std::vector<std::string> names;
  names.reserve(basis_size(dim));
  names.push_back("1");
  for (std::size_t i = 0; i < dim; ++i) names.push_back("x" + std::to_string(i + 1));
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = i; j < dim; ++j) {
      if (i == j)
        names.push_back("x" + std::to_string(i + 1) + "^2");
      else
        names.push_back("x" + std::to_string(i + 1) + "*x" + std::to_string(j + 1));
    }
  return names;
}

std::vector<MonomialPoly> quadratic_basis(std::size_t dim) {
  std::vector<MonomialPoly> basis;
  const std::size_t p = MonomialPoly::basis_size(dim);
  basis.reserve(p);
  for (std::size_t k = 0; k < p; ++k) basis.push_back(MonomialPoly::basis_element(dim, k));
  return basis;
}

}  // namespace ntr
