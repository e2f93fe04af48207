#pragma once

#include <array>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace dsplit {

inline constexpr int max_dim = 4;

// small dense matrix, at most 4x4, row-major
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(int n);
  static Matrix diagonal(std::span<const double> d);
  static Matrix column(std::span<const double> v);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double& operator()(int r, int c) { return a_[r * max_dim + c]; }
  double operator()(int r, int c) const { return a_[r * max_dim + c]; }

  std::vector<double> col(int c) const;
  void set_col(int c, std::span<const double> v);
  Matrix transpose() const;
  double max_abs() const;
  double trace() const;
  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  std::string str() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::array<double, max_dim * max_dim> a_{};
};

Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);
std::vector<double> operator*(const Matrix& a, std::span<const double> v);

double frobenius_norm(const Matrix& a);
double determinant(const Matrix& a);
// throws precondition_error when |det| <= 1e-300 relative to scale
Matrix inverse(const Matrix& a);
bool is_orthogonal(const Matrix& a, double tol = 1e-10);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

// thin SVD, A = U diag(s) V^T, s descending, p = min(rows, cols)
struct Svd {
  Matrix u;  // rows x p
  std::vector<double> s;
  Matrix v;  // cols x p
};
Svd svd(const Matrix& a);
std::vector<double> singular_values(const Matrix& a);
double spectral_norm(const Matrix& a);

// thin QR for rows >= cols, Q has orthonormal columns, diag(R) >= 0
struct Qr {
  Matrix q;
  Matrix r;
};
Qr thin_qr(const Matrix& a);

}  // namespace dsplit
