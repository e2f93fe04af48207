#include "dsplit/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <Eigen/Dense>

#include "dsplit/errors.hpp"

namespace dsplit {

Matrix::Matrix(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0 || rows > max_dim || cols > max_dim)
    throw precondition_error("matrix shape out of range");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = static_cast<int>(rows.size());
  cols_ = rows_ ? static_cast<int>(rows.begin()->size()) : 0;
  if (rows_ > max_dim || cols_ > max_dim) throw precondition_error("matrix shape out of range");
  int r = 0;
  for (auto& row : rows) {
    if (static_cast<int>(row.size()) != cols_) throw precondition_error("ragged matrix literal");
    int c = 0;
    for (double v : row) (*this)(r, c++) = v;
    ++r;
  }
}

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> d) {
  int n = static_cast<int>(d.size());
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = d[i];
  return m;
}

Matrix Matrix::column(std::span<const double> v) {
  Matrix m(static_cast<int>(v.size()), 1);
  for (int i = 0; i < m.rows(); ++i) m(i, 0) = v[i];
  return m;
}

std::vector<double> Matrix::col(int c) const {
  std::vector<double> v(rows_);
  for (int i = 0; i < rows_; ++i) v[i] = (*this)(i, c);
  return v;
}

void Matrix::set_col(int c, std::span<const double> v) {
  for (int i = 0; i < rows_; ++i) (*this)(i, c) = v[i];
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double Matrix::max_abs() const {
  double m = 0.0;
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) m = std::max(m, std::abs((*this)(i, j)));
  return m;
}

double Matrix::trace() const {
  double t = 0.0;
  for (int i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
  return t;
}

std::string Matrix::str() const {
  std::string s = "[";
  char buf[32];
  for (int i = 0; i < rows_; ++i) {
    s += i ? "; " : "";
    for (int j = 0; j < cols_; ++j) {
      std::snprintf(buf, sizeof buf, "%s%.6g", j ? " " : "", (*this)(i, j));
      s += buf;
    }
  }
  return s + "]";
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw precondition_error("matrix product shape mismatch");
  Matrix c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (int k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw precondition_error("matrix sum shape mismatch");
  Matrix c(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) c(i, j) = a(i, j) + b(i, j);
  return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw precondition_error("matrix difference shape mismatch");
  Matrix c(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) c(i, j) = a(i, j) - b(i, j);
  return c;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix c = a;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) c(i, j) *= s;
  return c;
}

std::vector<double> operator*(const Matrix& a, std::span<const double> v) {
  if (static_cast<int>(v.size()) != a.cols()) throw precondition_error("matrix-vector shape mismatch");
  std::vector<double> r(a.rows(), 0.0);
  for (int i = 0; i < a.rows(); ++i)
    for (int k = 0; k < a.cols(); ++k) r[i] += a(i, k) * v[k];
  return r;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

double determinant(const Matrix& a) {
  if (a.rows() != a.cols()) throw precondition_error("determinant of non-square matrix");
  int n = a.rows();
  Matrix m = a;
  double det = 1.0;
  for (int k = 0; k < n; ++k) {
    int p = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(m(i, k)) > std::abs(m(p, k))) p = i;
    if (m(p, k) == 0.0) return 0.0;
    if (p != k) {
      for (int j = 0; j < n; ++j) std::swap(m(p, j), m(k, j));
      det = -det;
    }
    det *= m(k, k);
    for (int i = k + 1; i < n; ++i) {
      double f = m(i, k) / m(k, k);
      for (int j = k; j < n; ++j) m(i, j) -= f * m(k, j);
    }
  }
  return det;
}

Matrix inverse(const Matrix& a) {
  if (a.rows() != a.cols()) throw precondition_error("inverse of non-square matrix");
  int n = a.rows();
  Matrix m = a, inv = Matrix::identity(n);
  double scale = a.max_abs();
  for (int k = 0; k < n; ++k) {
    int p = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(m(i, k)) > std::abs(m(p, k))) p = i;
    if (std::abs(m(p, k)) <= 1e-14 * scale || scale == 0.0)
      throw precondition_error("matrix is numerically singular");
    for (int j = 0; j < n; ++j) {
      std::swap(m(p, j), m(k, j));
      std::swap(inv(p, j), inv(k, j));
    }
    double d = m(k, k);
    for (int j = 0; j < n; ++j) {
      m(k, j) /= d;
      inv(k, j) /= d;
    }
    for (int i = 0; i < n; ++i) {
      if (i == k) continue;
      double f = m(i, k);
      if (f == 0.0) continue;
      for (int j = 0; j < n; ++j) {
        m(i, j) -= f * m(k, j);
        inv(i, j) -= f * inv(k, j);
      }
    }
  }
  return inv;
}

bool is_orthogonal(const Matrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  Matrix e = a.transpose() * a - Matrix::identity(a.rows());
  return e.max_abs() <= tol;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

using Small = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, max_dim, max_dim>;

Small to_eigen(const Matrix& a) {
  Small m(a.rows(), a.cols());
  for (int r = 0; r < a.rows(); ++r)
    for (int c = 0; c < a.cols(); ++c) m(r, c) = a(r, c);
  return m;
}

Matrix from_eigen(const Small& m, int cols) {
  Matrix out(static_cast<int>(m.rows()), cols);
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < cols; ++c) out(r, c) = m(r, c);
  return out;
}

Svd svd(const Matrix& a) {
  Eigen::JacobiSVD<Small> d(to_eigen(a), Eigen::ComputeThinU | Eigen::ComputeThinV);
  int p = std::min(a.rows(), a.cols());
  Svd out{from_eigen(d.matrixU(), p), std::vector<double>(p), from_eigen(d.matrixV(), p)};
  for (int i = 0; i < p; ++i) out.s[i] = d.singularValues()(i);
#ifdef DSPLIT_BROKEN_SVD
  // fault injection for the verification suite
  out.s.back() *= 0.5;
#endif
  return out;
}

std::vector<double> singular_values(const Matrix& a) { return svd(a).s; }

double spectral_norm(const Matrix& a) {
  auto s = singular_values(a);
  return s.empty() ? 0.0 : s.front();
}

Qr thin_qr(const Matrix& a) {
  if (a.rows() < a.cols()) throw precondition_error("thin_qr needs rows >= cols");
  int r = a.rows(), c = a.cols();
  Eigen::HouseholderQR<Small> h(to_eigen(a));
  Small q = h.householderQ();
  Small rr = h.matrixQR().template triangularView<Eigen::Upper>();
  Qr out{Matrix(r, c), Matrix(c, c)};
  for (int j = 0; j < c; ++j) {
    // diag(R) >= 0
    double sg = rr(j, j) < 0.0 ? -1.0 : 1.0;
    for (int i = 0; i < r; ++i) out.q(i, j) = sg * q(i, j);
    for (int k = 0; k < c; ++k) out.r(j, k) = sg * rr(j, k);
  }
  return out;
}

}  // namespace dsplit
