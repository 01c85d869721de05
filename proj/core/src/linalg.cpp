#include "ntr/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ntr {

bool Matrix::symmetric(double tol) const {
  if (!square()) return false;
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = i + 1; j < cols_; ++j)
      if (std::abs((*this)(i, j) - (*this)(j, i)) > tol) return false;
  return true;
}

bool Matrix::finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Vector Matrix::apply(const Vector& x) const {
  if (x.size() != cols_) throw std::invalid_argument("Matrix::apply: dimension mismatch");
  Vector y(rows_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) s += (*this)(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

Matrix& Matrix::operator+=(const Matrix& o) {
  if (rows_ != o.rows_ || cols_ != o.cols_)
    throw std::invalid_argument("Matrix::operator+=: shape mismatch");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
  return *this;
}

Matrix& Matrix::operator*=(double a) {
  for (double& v : data_) v *= a;
  return *this;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("Matrix product: shape mismatch");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm2(const Vector& v) { return std::sqrt(dot(v, v)); }

double norm1(const Vector& v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

double norm_inf(const Vector& v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

Vector operator+(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("vector +: dimension mismatch");
  Vector c(a);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += b[i];
  return c;
}

Vector operator-(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("vector -: dimension mismatch");
  Vector c(a);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] -= b[i];
  return c;
}

Vector operator*(double a, const Vector& v) {
  Vector c(v);
  for (double& x : c) x *= a;
  return c;
}

Vector& operator+=(Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("vector +=: dimension mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

double frobenius_norm(const Matrix& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) s += m(i, j) * m(i, j);
  return std::sqrt(s);
}

namespace {

double offdiag_frobenius(const Matrix& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (i != j) s += m(i, j) * m(i, j);
  return std::sqrt(s);
}

}  // namespace

EigenSystem jacobi_eigensystem(const Matrix& m) {
  if (!m.square()) throw std::invalid_argument("jacobi_eigensystem: matrix must be square");
  if (!m.finite()) throw std::invalid_argument("jacobi_eigensystem: non-finite entries");
  if (!m.symmetric(0.0) && !m.symmetric(1e-14 * (1.0 + frobenius_norm(m))))
    throw std::invalid_argument("jacobi_eigensystem: matrix must be symmetric");

  const std::size_t n = m.rows();
  Matrix a = m;
  Matrix v = Matrix::identity(n);
  const double target = 1e-12 * std::max(frobenius_norm(m), 1e-300);

  for (int sweep = 0; sweep < 100; ++sweep) {
    if (offdiag_frobenius(a) <= target) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

  EigenSystem es;
  es.values.resize(n);
  es.vectors = Matrix(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    es.values[c] = a(order[c], order[c]);
    double nrm = 0.0;
    for (std::size_t r = 0; r < n; ++r) nrm += v(r, order[c]) * v(r, order[c]);
    nrm = std::sqrt(nrm);
    for (std::size_t r = 0; r < n; ++r) es.vectors(r, c) = v(r, order[c]) / nrm;
  }
  return es;
}

EigenPair smallest_eigenpair(const Matrix& m) {
  EigenSystem es = jacobi_eigensystem(m);
  EigenPair p;
  p.value = es.values.front();
  p.vector.resize(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) p.vector[r] = es.vectors(r, 0);
  return p;
}

namespace {

// Elimination with partial pivoting shared by determinant() and solve_linear().
// Returns false (singular) when a pivot falls below 1e-12 of its row scale.
struct Elimination {
  Matrix lu;
  std::vector<std::size_t> perm;
  int sign = 1;
  bool singular = false;
};

Elimination eliminate(const Matrix& m) {
  const std::size_t n = m.rows();
  Elimination e{m, {}, 1, false};
  e.perm.resize(n);
  std::iota(e.perm.begin(), e.perm.end(), 0);

  Vector scale(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) scale[i] = std::max(scale[i], std::abs(m(i, j)));

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    double best = std::abs(e.lu(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      const double cand = std::abs(e.lu(i, k));
      if (cand > best) {
        best = cand;
        piv = i;
      }
    }
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(e.lu(k, j), e.lu(piv, j));
      std::swap(e.perm[k], e.perm[piv]);
      std::swap(scale[k], scale[piv]);
      e.sign = -e.sign;
    }
    const double rowscale = std::max(scale[k], 1e-300);
    if (std::abs(e.lu(k, k)) < 1e-12 * rowscale) {
      e.singular = true;
      return e;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = e.lu(i, k) / e.lu(k, k);
      e.lu(i, k) = f;
      for (std::size_t j = k + 1; j < n; ++j) e.lu(i, j) -= f * e.lu(k, j);
    }
  }
  return e;
}

}  // namespace

double determinant(const Matrix& m) {
  if (!m.square()) throw std::invalid_argument("determinant: matrix must be square");
  if (!m.finite()) throw std::invalid_argument("determinant: non-finite entries");
  Elimination e = eliminate(m);
  if (e.singular) return 0.0;
  double d = e.sign;
  for (std::size_t k = 0; k < m.rows(); ++k) d *= e.lu(k, k);
  return d;
}

Vector leading_principal_minors(const Matrix& m) {
  if (!m.square()) throw std::invalid_argument("leading_principal_minors: matrix must be square");
  const std::size_t n = m.rows();
  Vector minors(n);
  for (std::size_t k = 1; k <= n; ++k) {
    Matrix sub(k, k);
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) sub(i, j) = m(i, j);
    minors[k - 1] = determinant(sub);
  }
  return minors;
}

Vector solve_linear(const Matrix& a, const Vector& b) {
  if (!a.square()) throw std::invalid_argument("solve_linear: matrix must be square");
  if (a.rows() != b.size()) throw std::invalid_argument("solve_linear: dimension mismatch");
  if (!a.finite()) throw std::invalid_argument("solve_linear: non-finite entries");
  Elimination e = eliminate(a);
  if (e.singular) throw SingularMatrixError("solve_linear: pivot below tolerance");

  const std::size_t n = a.rows();
  Vector y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[e.perm[i]];
    for (std::size_t j = 0; j < i; ++j) s -= e.lu(i, j) * y[j];
    y[i] = s;
  }
  Vector x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t j = ii + 1; j < n; ++j) s -= e.lu(ii, j) * x[j];
    x[ii] = s / e.lu(ii, ii);
  }
  return x;
}

}  // namespace ntr
