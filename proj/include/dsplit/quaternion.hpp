#pragma once

#include <array>

#include "dsplit/linalg.hpp"

namespace dsplit {

using Vec3 = std::array<double, 3>;

struct Quat {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;
};

Quat operator*(const Quat& a, const Quat& b);
Quat operator-(const Quat& q);
Quat conj(const Quat& q);
double qdot(const Quat& a, const Quat& b);
double qnorm(const Quat& q);
Quat normalized(const Quat& q);
// exp(theta * u) for a unit imaginary u
Quat qexp(const Vec3& u, double theta);
Quat qpow(const Quat& q, int n);
// angle on the unit 3-sphere
double sphere_angle(const Quat& a, const Quat& b);
Quat slerp(const Quat& a, const Quat& b, double t);

// matrix of v -> q^-1 v q on imaginary quaternions (note: this is an
// anti-homomorphism, rotation_of(a*b) = rotation_of(b) * rotation_of(a))
Matrix quaternion_to_rotation(const Quat& q);
// some q with quaternion_to_rotation(q) == R; sign not normalised
Quat rotation_to_quaternion(const Matrix& r);

Vec3 unit(const Vec3& v);
Matrix axis_angle(const Vec3& axis, double angle);
// rotation angle in [0, pi]
double rotation_angle(const Matrix& r);

}  // namespace dsplit
