#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "dsplit/cocycle.hpp"
#include "dsplit/errors.hpp"

namespace dsplit {

namespace {

// keeps entries near 1 in magnitude; returns the log of the removed factor
double renormalize(Matrix& m) {
  double a = m.max_abs();
  if (a > 1e100 || (a < 1e-100 && a > 0.0)) {
    m = (1.0 / a) * m;
    return std::log(a);
  }
  return 0.0;
}

}  // namespace

ScaledMatrix scaled_cocycle_product(const Cocycle& A, const TorusTranslation& f, const TorusPoint& x, long n) {
  ScaledMatrix out{Matrix::identity(A.dim()), 0.0};
  if (n >= 0) {
    for (long j = 0; j < n; ++j) {
      out.m = A(iterate(f, x, j)) * out.m;
      out.log_scale += renormalize(out.m);
    }
  } else {
    for (long j = 1; j <= -n; ++j) {
      out.m = inverse(A(iterate(f, x, -j))) * out.m;
      out.log_scale += renormalize(out.m);
    }
  }
  return out;
}

Matrix cocycle_product(const Cocycle& A, const TorusTranslation& f, const TorusPoint& x, long n) {
  ScaledMatrix s = scaled_cocycle_product(A, f, x, n);
  double a = s.m.max_abs();
  if (a > 0.0 && s.log_scale + std::log(a) > std::log(1e300))
    throw overflow_error("cocycle product entries exceed 1e300; use scaled_cocycle_product");
  return std::exp(s.log_scale) * s.m;
}

std::vector<double> lyapunov_spectrum(const Cocycle& A, const TorusTranslation& f, const TorusPoint& x0, long n) {
  if (n < 1) throw precondition_error("lyapunov_spectrum needs n >= 1");
  int m = A.dim();
  Matrix q = Matrix::identity(m);
  std::vector<double> sums(m, 0.0);
  for (long j = 0; j < n; ++j) {
    Qr qr = thin_qr(A(iterate(f, x0, j)) * q);
    q = qr.q;
    for (int i = 0; i < m; ++i) sums[i] += std::log(qr.r(i, i));
  }
  for (double& s : sums) s /= static_cast<double>(n);
  std::sort(sums.begin(), sums.end(), std::greater<>());
  return sums;
}

double birkhoff_log_det(const Cocycle& A, const TorusTranslation& f, const TorusPoint& x0, long n) {
  if (n < 1) throw precondition_error("birkhoff_log_det needs n >= 1");
  double s = 0.0;
  for (long j = 0; j < n; ++j) s += std::log(std::abs(determinant(A(iterate(f, x0, j)))));
  return s / static_cast<double>(n);
}

double singular_gap(const Matrix& m, int k) {
  auto s = singular_values(m);
  if (k < 1 || k >= static_cast<int>(s.size())) throw precondition_error("domination index out of range");
  double hi = s[k - 1], lo = s[k];
  if (hi - lo <= 1e-12 * hi) return 1.0;
  if (lo == 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

namespace {

void check_domination_args(int m, int k, int ell, double c) {
  if (k < 1 || k >= m) throw precondition_error("domination needs 1 <= k < m");
  if (ell < 1) throw precondition_error("domination window must be >= 1");
  if (!(c > 1.0)) throw precondition_error("domination gap must exceed 1");
}

// running products over every starting point, advanced one step at a time
struct Sweep {
  std::vector<Matrix> prod;
  void gap(DominationCertificate& cert) const {
    cert.evidence = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < prod.size(); ++p) {
      double g = singular_gap(prod[p], cert.k);
      if (g < cert.evidence) {
        cert.evidence = g;
        cert.witness = p;
      }
    }
    cert.pass = cert.evidence >= cert.c;
  }
};

}  // namespace

DominationCertificate domination_test(const Cocycle& A, const TorusTranslation& f, int k, int ell, double c,
                                      const GridSpec& grid) {
  check_domination_args(A.dim(), k, ell, c);
  DominationCertificate cert{k, ell, c, 0.0, 0, false};
  Sweep sw;
  sw.prod.reserve(grid.size());
  for (std::size_t p = 0; p < grid.size(); ++p) sw.prod.push_back(scaled_cocycle_product(A, f, grid.point(p), ell).m);
  sw.gap(cert);
  return cert;
}

std::optional<DominationCertificate> find_domination(const Cocycle& A, const TorusTranslation& f, int k,
                                                     int ell_max, double c, const GridSpec& grid) {
  check_domination_args(A.dim(), k, ell_max, c);
  Sweep sw;
  sw.prod.assign(grid.size(), Matrix::identity(A.dim()));
  for (int ell = 1; ell <= ell_max; ++ell) {
    for (std::size_t p = 0; p < grid.size(); ++p) {
      sw.prod[p] = A(iterate(f, grid.point(p), ell - 1)) * sw.prod[p];
      renormalize(sw.prod[p]);
    }
    DominationCertificate cert{k, ell, c, 0.0, 0, false};
    sw.gap(cert);
    if (cert.pass) return cert;
  }
  return std::nullopt;
}

DominationCertificate domination_test_sampled(std::span<const Matrix> values, std::span<const std::size_t> next,
                                              int k, int ell, double c) {
  if (values.empty() || values.size() != next.size()) throw precondition_error("sampled cocycle shape mismatch");
  check_domination_args(values.front().rows(), k, ell, c);
  Sweep sw;
  sw.prod.assign(values.size(), Matrix::identity(values.front().rows()));
  for (std::size_t p = 0; p < values.size(); ++p) {
    std::size_t i = p;
    for (int j = 0; j < ell; ++j) {
      sw.prod[p] = values[i] * sw.prod[p];
      renormalize(sw.prod[p]);
      i = next[i];
    }
  }
  DominationCertificate cert{k, ell, c, 0.0, 0, false};
  sw.gap(cert);
  return cert;
}

std::optional<DominationCertificate> find_domination_sampled(std::span<const Matrix> values,
                                                             std::span<const std::size_t> next, int k,
                                                             int ell_max, double c) {
  if (values.empty() || values.size() != next.size()) throw precondition_error("sampled cocycle shape mismatch");
  check_domination_args(values.front().rows(), k, ell_max, c);
  Sweep sw;
  sw.prod.assign(values.size(), Matrix::identity(values.front().rows()));
  std::vector<std::size_t> at(values.size());
  for (std::size_t p = 0; p < at.size(); ++p) at[p] = p;
  for (int ell = 1; ell <= ell_max; ++ell) {
    for (std::size_t p = 0; p < values.size(); ++p) {
      sw.prod[p] = values[at[p]] * sw.prod[p];
      renormalize(sw.prod[p]);
      at[p] = next[at[p]];
    }
    DominationCertificate cert{k, ell, c, 0.0, 0, false};
    sw.gap(cert);
    if (cert.pass) return cert;
  }
  return std::nullopt;
}

KPlane KPlane::span_of(const Matrix& vectors) {
  if (vectors.cols() < 1 || vectors.cols() >= vectors.rows() + 1) throw precondition_error("bad k-plane shape");
  auto s = singular_values(vectors);
  if (s.back() < 1e-12) throw rank_loss_error("spanning vectors are numerically dependent");
  return KPlane{thin_qr(vectors).q};
}

KPlane KPlane::line(std::span<const double> v) { return span_of(Matrix::column(v)); }

KPlane KPlane::coordinate(int m, std::initializer_list<int> axes) {
  Matrix f(m, static_cast<int>(axes.size()));
  int j = 0;
  for (int a : axes) f(a, j++) = 1.0;
  return KPlane{f};
}

KPlane grass_action(const Matrix& a, const KPlane& p) {
  if (a.cols() != p.m()) throw precondition_error("grass_action shape mismatch");
  Matrix img = a * p.frame;
  auto s = singular_values(img);
  if (s.back() < 1e-12) throw rank_loss_error("image frame is numerically rank deficient");
  return KPlane{thin_qr(img).q};
}

std::vector<double> principal_angles(const KPlane& p, const KPlane& q) {
  if (p.m() != q.m() || p.k() != q.k()) throw precondition_error("principal angles need equal (k, m)");
  int k = p.k();
  // cosines from P^T Q, sines from the part of Q off P; atan2 is accurate at
  // both ends of [0, pi/2]
  Matrix overlap = p.frame.transpose() * q.frame;
  Matrix resid = q.frame - p.frame * overlap;
  auto c = singular_values(overlap);
  auto s = singular_values(resid);
  std::vector<double> th(k);
  for (int i = 0; i < k; ++i) th[i] = std::atan2(s[k - 1 - i], std::min(1.0, c[i]));
  return th;
}

double grass_distance(const KPlane& p, const KPlane& q) {
  double s = 0.0;
  for (double t : principal_angles(p, q)) s += t * t;
  return std::sqrt(s);
}

RotationNumber fibered_rotation_number(const Cocycle& A, const TorusTranslation& f, long n) {
  if (A.dim() != 2 || f.dim != 1) throw precondition_error("fibered rotation number needs m = 2 over the circle");
  if (n < 1) throw precondition_error("fibered rotation number needs n >= 1");
  double total = 0.0;
  TorusPoint x = TorusPoint::circle(0.0);
  for (long j = 0; j < n; ++j) {
    Matrix r = A(iterate(f, x, j));
    total += std::atan2(r(1, 0), r(0, 0));  // principal branch (-pi, pi]
  }
  RotationNumber rn;
  rn.lifted = total / (2.0 * std::numbers::pi * static_cast<double>(n));
  rn.mod1 = wrap_unit(rn.lifted);
  return rn;
}

}  // namespace dsplit
