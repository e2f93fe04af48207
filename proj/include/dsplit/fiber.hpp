#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "dsplit/cocycle.hpp"
#include "dsplit/quaternion.hpp"

namespace dsplit {

enum class FiberKind { sphere2, rotation3, unit_quaternions, grassmann };

struct FiberSpace {
  FiberKind kind = FiberKind::sphere2;
  int k = 1, m = 3;  // grassmann only

  static FiberSpace sphere2() { return {FiberKind::sphere2, 1, 3}; }
  static FiberSpace rotation3() { return {FiberKind::rotation3, 1, 3}; }
  static FiberSpace unit_quaternions() { return {FiberKind::unit_quaternions, 1, 4}; }
  static FiberSpace grassmann(int k, int m) { return {FiberKind::grassmann, k, m}; }
  // "S2", "SO3", "S3", "Gr(k,m)"
  static FiberSpace parse(const std::string& tag);

  std::string name() const;
  double diameter() const;
  bool simply_connected() const;
  bool operator==(const FiberSpace& o) const { return kind == o.kind && k == o.k && m == o.m; }
};

// S2: unit Vec3; SO3: rotation Matrix; S3: unit Quat; Gr: KPlane
using FiberPoint = std::variant<Vec3, Matrix, Quat, KPlane>;

void validate_point(const FiberSpace& space, const FiberPoint& p, double tol = 1e-10);

double fiber_distance(const FiberSpace& space, const FiberPoint& p, const FiberPoint& q);
FiberPoint geodesic_point(const FiberSpace& space, const FiberPoint& p, const FiberPoint& q, double t);

struct FiberPath {
  std::vector<FiberPoint> samples;  // uniform parameter grid on [0,1]
};

// checks the no-aliasing invariant (consecutive samples within max_step)
void check_path(const FiberSpace& space, const FiberPath& path, double max_step = 0.5);

FiberPath lift_rotation_path(const FiberPath& path);

enum class HomotopyClass { trivial, nontrivial };
HomotopyClass operator+(HomotopyClass a, HomotopyClass b);
std::string to_string(HomotopyClass c);

HomotopyClass loop_class(const FiberSpace& space, const FiberPath& loop);

// a point of the simply connected cover, always a unit vector in R^3 or R^4
struct CoverPoint {
  int n = 4;
  std::array<double, 4> v{};
};

struct Homotopy {
  FiberSpace space;
  std::vector<double> t;  // uniform on [0,1]
  std::vector<std::vector<FiberPoint>> rows;  // rows[x][j] = F(x, t_j)
  bool rel_endpoints = false;
  int nudged = 0;  // samples moved off the cut locus
  std::vector<CoverPoint> lift0, lift1;  // cover tracks, for evaluation between samples

  std::size_t x_count() const { return rows.size(); }
  // F(x, s) for any s in [0,1]; exact on the stored rows at s = 0 and 1
  FiberPoint at(std::size_t x, double s) const;
};

Homotopy lipschitz_homotopy(const FiberSpace& space, const FiberPath& path0, const FiberPath& path1,
                            bool rel_endpoints, int t_count = 33);
// same construction from given cover tracks; the fiber paths, when given,
// supply the exact t = 0 and t = 1 rows
Homotopy homotopy_from_lifts(const FiberSpace& space, std::vector<CoverPoint> lift0, std::vector<CoverPoint> lift1,
                             bool rel_endpoints, int t_count, const FiberPath* path0 = nullptr,
                             const FiberPath* path1 = nullptr);
double measured_lipschitz(const Homotopy& h);

// isometries of the supported fibers are 3x3 orthogonal matrices acting on
// S2 (v -> Mv), SO3 (R -> MR) and Gr(k,3) (span P -> span MP)
FiberPoint apply_isometry(const FiberSpace& space, const Matrix& g, const FiberPoint& p);

// geometry on the cover (S2 for S2 and Gr(1,3), S3 for SO3 and S3)
CoverPoint cover_lift(const FiberSpace& space, const FiberPoint& p);
FiberPoint cover_project(const FiberSpace& space, const CoverPoint& c);
std::vector<CoverPoint> lift_cover_path(const FiberSpace& space, const FiberPath& path);
// c or its antipode, whichever is nearer
CoverPoint cover_sheet_near(const CoverPoint& c, const CoverPoint& near);
CoverPoint cover_slerp(const CoverPoint& a, const CoverPoint& b, double t);
double cover_angle(const CoverPoint& a, const CoverPoint& b);

}  // namespace dsplit
