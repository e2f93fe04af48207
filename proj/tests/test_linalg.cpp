#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>

#include "dsplit/errors.hpp"
#include "dsplit/linalg.hpp"
#include "dsplit/quaternion.hpp"

using namespace dsplit;

namespace {

double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Matrix random_matrix(std::mt19937_64& rng, int r, int c) {
  Matrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = 2.0 * unit_draw(rng) - 1.0;
  return m;
}

Quat random_quat(std::mt19937_64& rng) {
  Quat q{2 * unit_draw(rng) - 1, 2 * unit_draw(rng) - 1, 2 * unit_draw(rng) - 1, 2 * unit_draw(rng) - 1};
  return normalized(q);
}

// closed form for 2x2: s^2 are the roots of t^2 - |A|_F^2 t + det^2
std::pair<double, double> sv2(const Matrix& a) {
  double f = a(0, 0) * a(0, 0) + a(0, 1) * a(0, 1) + a(1, 0) * a(1, 0) + a(1, 1) * a(1, 1);
  double d = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  double disc = std::sqrt(std::max(0.0, f * f - 4 * d * d));
  return {std::sqrt(0.5 * (f + disc)), std::sqrt(std::max(0.0, 0.5 * (f - disc)))};
}

}  // namespace

TEST_CASE("svd of 2x2 matches the closed form") {
  std::mt19937_64 rng(101);
  for (int rep = 0; rep < 500; ++rep) {
    Matrix a = random_matrix(rng, 2, 2);
    auto [s1, s2] = sv2(a);
    auto s = singular_values(a);
    CHECK(s[0] == doctest::Approx(s1).epsilon(1e-12));
    CHECK(std::abs(s[1] - s2) <= 1e-12 * s1);
  }
}

TEST_CASE("svd reconstructs and has orthonormal factors") {
  std::mt19937_64 rng(102);
  for (int n : {2, 3, 4}) {
    for (int rep = 0; rep < 100; ++rep) {
      Matrix a = random_matrix(rng, n, n);
      Svd d = svd(a);
      CHECK(is_orthogonal(d.u, 1e-10));
      CHECK(is_orthogonal(d.v, 1e-10));
      for (std::size_t i = 1; i < d.s.size(); ++i) CHECK(d.s[i - 1] >= d.s[i]);
      Matrix sig(n, n);
      for (int i = 0; i < n; ++i) sig(i, i) = d.s[i];
      CHECK(frobenius_norm(d.u * sig * d.v.transpose() - a) <= 1e-12);
    }
  }
}

TEST_CASE("thin qr has nonnegative diagonal and reconstructs") {
  std::mt19937_64 rng(103);
  for (int rep = 0; rep < 200; ++rep) {
    int cols = 1 + static_cast<int>(rng() % 3);
    Matrix a = random_matrix(rng, 4, cols);
    Qr f = thin_qr(a);
    CHECK(f.q.rows() == 4);
    CHECK(f.q.cols() == cols);
    CHECK(frobenius_norm(f.q.transpose() * f.q - Matrix::identity(cols)) <= 1e-12);
    for (int i = 0; i < cols; ++i) {
      CHECK(f.r(i, i) >= 0.0);
      for (int j = 0; j < i; ++j) CHECK(f.r(i, j) == 0.0);
    }
    CHECK(frobenius_norm(f.q * f.r - a) <= 1e-12);
  }
}

TEST_CASE("inverse and determinant") {
  Matrix a{{2, 1}, {1, 1}};
  CHECK(determinant(a) == doctest::Approx(1.0));
  Matrix ai = inverse(a);
  CHECK(frobenius_norm(ai - Matrix{{1, -1}, {-1, 2}}) <= 1e-14);
  Matrix b{{0, 0, 1}, {0, 2, 0}, {3, 0, 0}};
  CHECK(determinant(b) == doctest::Approx(-6.0));
  CHECK_THROWS_AS(inverse(Matrix{{1, 2}, {2, 4}}), precondition_error);

  std::mt19937_64 rng(104);
  for (int rep = 0; rep < 100; ++rep) {
    Matrix m = random_matrix(rng, 3, 3);
    Matrix n = random_matrix(rng, 3, 3);
    CHECK(determinant(m * n) == doctest::Approx(determinant(m) * determinant(n)).epsilon(1e-9));
    if (std::abs(determinant(m)) > 1e-3) CHECK(frobenius_norm(m * inverse(m) - Matrix::identity(3)) <= 1e-9);
  }
}

TEST_CASE("rho of 1 and i") {
  CHECK(frobenius_norm(quaternion_to_rotation(Quat{1, 0, 0, 0}) - Matrix::identity(3)) <= 1e-15);
  Matrix ri = quaternion_to_rotation(Quat{0, 1, 0, 0});
  CHECK(frobenius_norm(ri - Matrix{{1, 0, 0}, {0, -1, 0}, {0, 0, -1}}) <= 1e-15);
}

TEST_CASE("rho is an anti-homomorphism into SO(3), even in q") {
  std::mt19937_64 rng(105);
  for (int rep = 0; rep < 1000; ++rep) {
    Quat a = random_quat(rng), b = random_quat(rng);
    Matrix ra = quaternion_to_rotation(a);
    CHECK(frobenius_norm(ra - quaternion_to_rotation(-a)) <= 1e-12);
    CHECK(is_orthogonal(ra, 1e-12));
    CHECK(determinant(ra) == doctest::Approx(1.0).epsilon(1e-12));
    Matrix rab = quaternion_to_rotation(a * b);
    CHECK(frobenius_norm(rab - quaternion_to_rotation(b) * ra) <= 1e-12);
  }
}

TEST_CASE("rotation_to_quaternion round trip") {
  std::mt19937_64 rng(106);
  for (int rep = 0; rep < 1000; ++rep) {
    Quat q = random_quat(rng);
    Quat p = rotation_to_quaternion(quaternion_to_rotation(q));
    CHECK(std::abs(std::abs(qdot(p, q)) - 1.0) <= 1e-12);
  }
}

TEST_CASE("axis_angle and rotation_angle") {
  Matrix rz = axis_angle({0, 0, 2}, std::numbers::pi / 2);
  std::vector<double> e1{1, 0, 0};
  auto v = rz * std::span<const double>(e1);
  CHECK(v[0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(std::abs(v[1] - 1.0) <= 1e-15);
  CHECK(rotation_angle(rz) == doctest::Approx(std::numbers::pi / 2));
  CHECK(rotation_angle(axis_angle({1, 1, 1}, 3.0)) == doctest::Approx(3.0));
  CHECK(rotation_angle(axis_angle({1, 0, 0}, -0.4)) == doctest::Approx(0.4));
}
