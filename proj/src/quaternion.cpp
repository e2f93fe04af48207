#include "dsplit/quaternion.hpp"

#include <algorithm>
#include <cmath>

#include "dsplit/errors.hpp"

namespace dsplit {

Quat operator*(const Quat& a, const Quat& b) {
  return Quat{a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
              a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
              a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
              a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

Quat operator-(const Quat& q) { return Quat{-q.w, -q.x, -q.y, -q.z}; }

Quat conj(const Quat& q) { return Quat{q.w, -q.x, -q.y, -q.z}; }

double qdot(const Quat& a, const Quat& b) { return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z; }

double qnorm(const Quat& q) { return std::sqrt(qdot(q, q)); }

Quat normalized(const Quat& q) {
  double n = qnorm(q);
  if (!(n > 0.0)) throw precondition_error("cannot normalise the zero quaternion");
  return Quat{q.w / n, q.x / n, q.y / n, q.z / n};
}

Quat qexp(const Vec3& u, double theta) {
  double s = std::sin(theta);
  return Quat{std::cos(theta), s * u[0], s * u[1], s * u[2]};
}

Quat qpow(const Quat& q, int n) {
  Quat r;
  Quat b = n < 0 ? conj(q) : q;
  for (int k = 0; k < std::abs(n); ++k) r = r * b;
  return r;
}

double sphere_angle(const Quat& a, const Quat& b) {
  // atan2 form stays accurate near 0 and pi
  Quat d{a.w - b.w, a.x - b.x, a.y - b.y, a.z - b.z};
  Quat s{a.w + b.w, a.x + b.x, a.y + b.y, a.z + b.z};
  return 2.0 * std::atan2(qnorm(d), qnorm(s));
}

Quat slerp(const Quat& a, const Quat& b, double t) {
  double th = sphere_angle(a, b);
  if (th < 1e-12) return normalized(Quat{a.w + t * (b.w - a.w), a.x + t * (b.x - a.x),
                                          a.y + t * (b.y - a.y), a.z + t * (b.z - a.z)});
  double s = std::sin(th);
  double ca = std::sin((1.0 - t) * th) / s, cb = std::sin(t * th) / s;
  return normalized(Quat{ca * a.w + cb * b.w, ca * a.x + cb * b.x, ca * a.y + cb * b.y, ca * a.z + cb * b.z});
}

Matrix quaternion_to_rotation(const Quat& q) {
  // conjugation by q^-1 = conj(q): the usual q v q* formula with q conjugated
  double w = q.w, x = -q.x, y = -q.y, z = -q.z;
  return Matrix{{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
                {2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
                {2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}};
}

Quat rotation_to_quaternion(const Matrix& r) {
  // Shepperd: standard quaternion of R, then conjugate for our convention
  double t = r.trace();
  Quat s;
  if (t >= std::max({r(0, 0), r(1, 1), r(2, 2)})) {
    double k = std::sqrt(1.0 + t) * 2.0;
    s = Quat{0.25 * k, (r(2, 1) - r(1, 2)) / k, (r(0, 2) - r(2, 0)) / k, (r(1, 0) - r(0, 1)) / k};
  } else if (r(0, 0) >= r(1, 1) && r(0, 0) >= r(2, 2)) {
    double k = std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2)) * 2.0;
    s = Quat{(r(2, 1) - r(1, 2)) / k, 0.25 * k, (r(0, 1) + r(1, 0)) / k, (r(0, 2) + r(2, 0)) / k};
  } else if (r(1, 1) >= r(2, 2)) {
    double k = std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2)) * 2.0;
    s = Quat{(r(0, 2) - r(2, 0)) / k, (r(0, 1) + r(1, 0)) / k, 0.25 * k, (r(1, 2) + r(2, 1)) / k};
  } else {
    double k = std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1)) * 2.0;
    s = Quat{(r(1, 0) - r(0, 1)) / k, (r(0, 2) + r(2, 0)) / k, (r(1, 2) + r(2, 1)) / k, 0.25 * k};
  }
  return normalized(conj(s));
}

Vec3 unit(const Vec3& v) {
  double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  if (!(n > 0.0)) throw precondition_error("zero axis");
  return Vec3{v[0] / n, v[1] / n, v[2] / n};
}

Matrix axis_angle(const Vec3& axis, double angle) {
  Vec3 u = unit(axis);
  double c = std::cos(angle), s = std::sin(angle), k = 1.0 - c;
  return Matrix{{c + u[0] * u[0] * k, u[0] * u[1] * k - u[2] * s, u[0] * u[2] * k + u[1] * s},
                {u[1] * u[0] * k + u[2] * s, c + u[1] * u[1] * k, u[1] * u[2] * k - u[0] * s},
                {u[2] * u[0] * k - u[1] * s, u[2] * u[1] * k + u[0] * s, c + u[2] * u[2] * k}};
}

double rotation_angle(const Matrix& r) {
  // via the quaternion, better conditioned than acos of the trace near 0 and pi
  Quat q = rotation_to_quaternion(r);
  double v = std::sqrt(q.x * q.x + q.y * q.y + q.z * q.z);
  return 2.0 * std::atan2(v, std::abs(q.w));
}

}  // namespace dsplit
