#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dsplit/base_dynamics.hpp"
#include "dsplit/linalg.hpp"
#include "dsplit/quaternion.hpp"

namespace dsplit {

// theta(x) = offset + 2 pi (wx x0 + wy x1) + amplitude sin(2 pi x0 + phase)
struct AngleField {
  double offset = 0.0;
  int winding = 0;
  int winding_y = 0;
  double amplitude = 0.0;
  double phase = 0.0;

  double operator()(const TorusPoint& x) const;
};

enum class CocycleKind {
  constant,
  rotation2,
  rotation3,
  diagonal,
  quaternion_power,
  product,
  perturbation,
  coboundary,
  sampled,
};

struct CocycleNode;

// immutable expression tree, cheap to copy
class Cocycle {
 public:
  static Cocycle constant(const Matrix& m);
  static Cocycle identity(int m) { return constant(Matrix::identity(m)); }
  static Cocycle rotation2(AngleField angle);
  static Cocycle rotation3(Vec3 axis, AngleField angle);
  // diag(exp(log_diag[i] + log_amplitude[i] sin(2 pi x0)))
  static Cocycle diagonal(std::vector<double> log_diag, std::vector<double> log_amplitude = {});
  // rho(P_n(q(x))) with q(x) = exp(pi x u1) exp(twist sin(2 pi x) u2); class is n mod 2
  static Cocycle quaternion_power(int power, double twist = 0.0, Vec3 axis = {0, 0, 1},
                                  Vec3 twist_axis = {1, 0, 0});
  // pointwise A1(x) A2(x) ... Ak(x)
  static Cocycle product(std::vector<Cocycle> factors);
  // base(x) (I + amplitude bump(x) D), bump supported on |x0 - center| < width
  static Cocycle perturbation(Cocycle base, const Matrix& direction, double amplitude, double center,
                              double width);
  // transfer(x + alpha) transfer(x)^-1
  static Cocycle coboundary(Cocycle transfer, const TorusTranslation& f);
  // nearest-sample lookup on a uniform circle grid
  static Cocycle sampled(std::vector<Matrix> values);

  Matrix operator()(const TorusPoint& x) const;
  int dim() const;
  bool isometry() const;
  CocycleKind kind() const;
  std::string kind_name() const;
  // transfer of a coboundary node, null otherwise
  const Cocycle* transfer() const;

 private:
  friend struct CocycleAccess;
  std::shared_ptr<const CocycleNode> node_;
};

// product with overflow guard; the matrix is scale * exp(log_scale)
struct ScaledMatrix {
  Matrix m;
  double log_scale = 0.0;
};

ScaledMatrix scaled_cocycle_product(const Cocycle& A, const TorusTranslation& f, const TorusPoint& x,
                                    long n);
// raw variant; overflow_error when an entry would exceed 1e300
Matrix cocycle_product(const Cocycle& A, const TorusTranslation& f, const TorusPoint& x, long n);

std::vector<double> lyapunov_spectrum(const Cocycle& A, const TorusTranslation& f, const TorusPoint& x0,
                                      long n);
double birkhoff_log_det(const Cocycle& A, const TorusTranslation& f, const TorusPoint& x0, long n);

// sigma_k / sigma_{k+1} (k is 1-based), exactly 1 for numerically equal values
double singular_gap(const Matrix& m, int k);

struct KPlane {
  Matrix frame;  // m x k, orthonormal columns

  static KPlane span_of(const Matrix& vectors);
  static KPlane line(std::span<const double> v);
  static KPlane coordinate(int m, std::initializer_list<int> axes);
  int k() const { return frame.cols(); }
  int m() const { return frame.rows(); }
};

struct DominationCertificate {
  int k = 1;
  int ell = 1;
  double c = 1.0;
  double evidence = 0.0;  // min over the grid of the singular gap
  std::size_t witness = 0;  // grid index where the min is attained
  bool pass = false;
};

DominationCertificate domination_test(const Cocycle& A, const TorusTranslation& f, int k, int ell, double c,
                                      const GridSpec& grid);
std::optional<DominationCertificate> find_domination(const Cocycle& A, const TorusTranslation& f, int k,
                                                     int ell_max, double c, const GridSpec& grid);

// same tests for a cocycle sampled on a finite invertible model of the base:
// values[i] over point i, next[i] its image
DominationCertificate domination_test_sampled(std::span<const Matrix> values, std::span<const std::size_t> next,
                                              int k, int ell, double c);
std::optional<DominationCertificate> find_domination_sampled(std::span<const Matrix> values,
                                                             std::span<const std::size_t> next, int k,
                                                             int ell_max, double c);

KPlane grass_action(const Matrix& a, const KPlane& p);
std::vector<double> principal_angles(const KPlane& p, const KPlane& q);
double grass_distance(const KPlane& p, const KPlane& q);

struct RotationNumber {
  double lifted = 0.0;  // mean angle / 2 pi along the orbit
  double mod1 = 0.0;
};
RotationNumber fibered_rotation_number(const Cocycle& A, const TorusTranslation& f, long n);

}  // namespace dsplit
