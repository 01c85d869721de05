#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ntr {

using Vector = std::vector<double>;

/// Dense row-major matrix, sized for desk-scale problems (dim <= ~20).
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static Matrix diagonal(const Vector& d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  bool square() const { return rows_ == cols_ && rows_ > 0; }
  bool symmetric(double tol = 0.0) const;
  bool finite() const;

  Matrix transposed() const;
  Vector apply(const Vector& x) const;  // m * x

  Matrix& operator+=(const Matrix& o);
  Matrix& operator*=(double a);

private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);

struct EigenPair {
  double value = 0.0;
  Vector vector;
};

struct EigenSystem {
  Vector values;    // ascending
  Matrix vectors;   // columns are the matching unit eigenvectors
};

class SingularMatrixError : public std::runtime_error {
public:
  explicit SingularMatrixError(const std::string& what) : std::runtime_error(what) {}
};

// Vector helpers.
double dot(const Vector& a, const Vector& b);
double norm2(const Vector& v);
double norm1(const Vector& v);
double norm_inf(const Vector& v);
Vector operator+(const Vector& a, const Vector& b);
Vector operator-(const Vector& a, const Vector& b);
Vector operator*(double a, const Vector& v);
Vector& operator+=(Vector& a, const Vector& b);
double frobenius_norm(const Matrix& m);

/// Full symmetric eigendecomposition by cyclic Jacobi rotations.
/// Converges when the off-diagonal Frobenius norm drops below 1e-12 * ||m||_F.
EigenSystem jacobi_eigensystem(const Matrix& m);

/// Algebraically smallest eigenvalue and a unit eigenvector of a symmetric matrix.
EigenPair smallest_eigenpair(const Matrix& m);

/// Determinant via partially pivoted elimination.
double determinant(const Matrix& m);

/// (H_1, ..., H_n) where H_i is the determinant of the top-left i x i block.
Vector leading_principal_minors(const Matrix& m);

/// Solves a*x = b; throws SingularMatrixError when a pivot falls below
/// 1e-12 relative to its row scale.
Vector solve_linear(const Matrix& a, const Vector& b);

}  // namespace ntr
