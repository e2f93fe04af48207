#include "dsplit/fiber.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <regex>

#include "dsplit/errors.hpp"

namespace dsplit {

namespace {

constexpr double pi = std::numbers::pi;

double vec_angle(const Vec3& a, const Vec3& b) {
  Vec3 c{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
  double cr = std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]);
  return std::atan2(cr, a[0] * b[0] + a[1] * b[1] + a[2] * b[2]);
}

Quat to_quat(const CoverPoint& c) { return Quat{c.v[0], c.v[1], c.v[2], c.v[3]}; }
CoverPoint from_quat(const Quat& q) { return CoverPoint{4, {q.w, q.x, q.y, q.z}}; }
CoverPoint from_vec(const Vec3& v) { return CoverPoint{3, {v[0], v[1], v[2], 0.0}}; }
Vec3 to_vec(const CoverPoint& c) { return Vec3{c.v[0], c.v[1], c.v[2]}; }

double cdot(const CoverPoint& a, const CoverPoint& b) {
  double s = 0.0;
  for (int i = 0; i < a.n; ++i) s += a.v[i] * b.v[i];
  return s;
}

CoverPoint negated(CoverPoint c) {
  for (double& x : c.v) x = -x;
  return c;
}

// nonnegative first coordinate, ties broken by the first nonzero coordinate
CoverPoint canonical(CoverPoint c) {
  for (int i = 0; i < c.n; ++i) {
    if (c.v[i] > 0.0) return c;
    if (c.v[i] < 0.0) return negated(c);
  }
  return c;
}

bool is_line_space(const FiberSpace& s) { return s.kind == FiberKind::grassmann && s.k == 1 && s.m == 3; }

void require_cover(const FiberSpace& s) {
  if (s.kind == FiberKind::grassmann && !is_line_space(s))
    throw precondition_error("path and homotopy operations support Gr(1,3) only");
}

// one point of the cover over p; sign not normalised for double covers
CoverPoint raw_lift(const FiberSpace& s, const FiberPoint& p) {
  switch (s.kind) {
    case FiberKind::sphere2: return from_vec(std::get<Vec3>(p));
    case FiberKind::unit_quaternions: return from_quat(std::get<Quat>(p));
    case FiberKind::rotation3: return from_quat(rotation_to_quaternion(std::get<Matrix>(p)));
    case FiberKind::grassmann: {
      const Matrix& f = std::get<KPlane>(p).frame;
      return from_vec(Vec3{f(0, 0), f(1, 0), f(2, 0)});
    }
  }
  throw precondition_error("unknown fiber");
}

FiberPoint project(const FiberSpace& s, const CoverPoint& c) {
  switch (s.kind) {
    case FiberKind::sphere2: return to_vec(c);
    case FiberKind::unit_quaternions: return to_quat(c);
    case FiberKind::rotation3: return quaternion_to_rotation(to_quat(c));
    case FiberKind::grassmann: {
      Matrix f(3, 1);
      f(0, 0) = c.v[0];
      f(1, 0) = c.v[1];
      f(2, 0) = c.v[2];
      return KPlane{f};
    }
  }
  throw precondition_error("unknown fiber");
}

bool double_cover(const FiberSpace& s) { return s.kind == FiberKind::rotation3 || s.kind == FiberKind::grassmann; }

// largest step the local lift can take without ambiguity
double lift_step_limit(const FiberSpace& s) {
  return s.kind == FiberKind::rotation3 ? pi - 1e-3 : pi / 2 - 1e-3;
}

std::vector<CoverPoint> lift_path(const FiberSpace& s, const FiberPath& path, const CoverPoint* start_near) {
  require_cover(s);
  std::vector<CoverPoint> out;
  out.reserve(path.samples.size());
  for (std::size_t i = 0; i < path.samples.size(); ++i) {
    CoverPoint c = raw_lift(s, path.samples[i]);
    if (!double_cover(s)) {
      out.push_back(c);
      continue;
    }
    if (i == 0) {
      c = canonical(c);
      if (start_near && cdot(c, *start_near) < 0.0) c = negated(c);
    } else {
      if (fiber_distance(s, path.samples[i - 1], path.samples[i]) > lift_step_limit(s))
        throw aliasing_error("consecutive path samples too far apart for a unique lift (index " +
                             std::to_string(i) + ")");
      if (cdot(c, out.back()) < 0.0) c = negated(c);
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace

CoverPoint cover_lift(const FiberSpace& space, const FiberPoint& p) {
  require_cover(space);
  CoverPoint c = raw_lift(space, p);
  return double_cover(space) ? canonical(c) : c;
}

FiberPoint cover_project(const FiberSpace& space, const CoverPoint& c) { return project(space, c); }

std::vector<CoverPoint> lift_cover_path(const FiberSpace& space, const FiberPath& path) {
  return lift_path(space, path, nullptr);
}

CoverPoint cover_sheet_near(const CoverPoint& c, const CoverPoint& near) {
  return cdot(c, near) < 0.0 ? negated(c) : c;
}

CoverPoint cover_slerp(const CoverPoint& a, const CoverPoint& b, double t) {
  double th = cover_angle(a, b);
  CoverPoint r{a.n, {}};
  if (th < 1e-12) {
    for (int i = 0; i < a.n; ++i) r.v[i] = a.v[i] + t * (b.v[i] - a.v[i]);
  } else {
    double s = std::sin(th), ca = std::sin((1.0 - t) * th) / s, cb = std::sin(t * th) / s;
    for (int i = 0; i < a.n; ++i) r.v[i] = ca * a.v[i] + cb * b.v[i];
  }
  double nn = std::sqrt(cdot(r, r));
  for (int i = 0; i < a.n; ++i) r.v[i] /= nn;
  return r;
}

double cover_angle(const CoverPoint& a, const CoverPoint& b) {
  double d = 0.0, s = 0.0;
  for (int i = 0; i < a.n; ++i) {
    d += (a.v[i] - b.v[i]) * (a.v[i] - b.v[i]);
    s += (a.v[i] + b.v[i]) * (a.v[i] + b.v[i]);
  }
  return 2.0 * std::atan2(std::sqrt(d), std::sqrt(s));
}

FiberSpace FiberSpace::parse(const std::string& tag) {
  if (tag == "S2") return sphere2();
  if (tag == "SO3") return rotation3();
  if (tag == "S3") return unit_quaternions();
  static const std::regex gr(R"(Gr\((\d),(\d)\))");
  std::smatch m;
  if (std::regex_match(tag, m, gr)) {
    int k = std::stoi(m[1]), mm = std::stoi(m[2]);
    if (k < 1 || k >= mm || mm > max_dim) throw precondition_error("Grassmannian indices out of range: " + tag);
    return grassmann(k, mm);
  }
  throw precondition_error("unknown fiber space tag: " + tag);
}

std::string FiberSpace::name() const {
  switch (kind) {
    case FiberKind::sphere2: return "S2";
    case FiberKind::rotation3: return "SO3";
    case FiberKind::unit_quaternions: return "S3";
    case FiberKind::grassmann: return "Gr(" + std::to_string(k) + "," + std::to_string(m) + ")";
  }
  return "?";
}

double FiberSpace::diameter() const {
  if (kind == FiberKind::grassmann) return 0.5 * pi * std::sqrt(static_cast<double>(std::min(k, m - k)));
  return pi;
}

bool FiberSpace::simply_connected() const {
  return kind == FiberKind::sphere2 || kind == FiberKind::unit_quaternions;
}

void validate_point(const FiberSpace& space, const FiberPoint& p, double tol) {
  switch (space.kind) {
    case FiberKind::sphere2: {
      const Vec3* v = std::get_if<Vec3>(&p);
      if (!v || std::abs(std::sqrt((*v)[0] * (*v)[0] + (*v)[1] * (*v)[1] + (*v)[2] * (*v)[2]) - 1.0) > tol)
        throw precondition_error("S2 point must be a unit 3-vector");
      return;
    }
    case FiberKind::rotation3: {
      const Matrix* r = std::get_if<Matrix>(&p);
      if (!r || r->rows() != 3 || !is_orthogonal(*r, tol) || std::abs(determinant(*r) - 1.0) > tol)
        throw precondition_error("SO3 point must be a rotation matrix");
      return;
    }
    case FiberKind::unit_quaternions: {
      const Quat* q = std::get_if<Quat>(&p);
      if (!q || std::abs(qnorm(*q) - 1.0) > tol) throw precondition_error("S3 point must be a unit quaternion");
      return;
    }
    case FiberKind::grassmann: {
      const KPlane* k = std::get_if<KPlane>(&p);
      if (!k || k->k() != space.k || k->m() != space.m ||
          (k->frame.transpose() * k->frame - Matrix::identity(space.k)).max_abs() > tol)
        throw precondition_error("Grassmann point must be an orthonormal frame of the right shape");
      return;
    }
  }
}

double fiber_distance(const FiberSpace& space, const FiberPoint& p, const FiberPoint& q) {
  switch (space.kind) {
    case FiberKind::sphere2: return vec_angle(std::get<Vec3>(p), std::get<Vec3>(q));
    case FiberKind::unit_quaternions: return sphere_angle(std::get<Quat>(p), std::get<Quat>(q));
    case FiberKind::rotation3:
      return rotation_angle(std::get<Matrix>(p) * std::get<Matrix>(q).transpose());
    case FiberKind::grassmann: return grass_distance(std::get<KPlane>(p), std::get<KPlane>(q));
  }
  throw precondition_error("unknown fiber");
}

FiberPoint geodesic_point(const FiberSpace& space, const FiberPoint& p, const FiberPoint& q, double t) {
  if (t == 0.0) return p;
  if (t == 1.0) return q;
  if (space.kind == FiberKind::grassmann) {
    const KPlane& a = std::get<KPlane>(p);
    const KPlane& b = std::get<KPlane>(q);
    auto th = principal_angles(a, b);
    if (th.back() > pi / 2 - 1e-6) throw cut_locus_error("Grassmann points at the cut locus (orthogonal direction)");
    Svd s = svd(a.frame.transpose() * b.frame);
    Matrix y = a.frame * s.u, z = b.frame * s.v;
    Matrix out(space.m, space.k);
    for (int i = 0; i < space.k; ++i) {
      double c = std::min(1.0, s.s[i]);
      std::vector<double> w(space.m);
      for (int r = 0; r < space.m; ++r) w[r] = z(r, i) - y(r, i) * c;
      double sn = norm(w);
      double ang = std::atan2(sn, c);
      for (int r = 0; r < space.m; ++r) {
        double dir = sn > 1e-300 ? w[r] / sn : 0.0;
        out(r, i) = y(r, i) * std::cos(t * ang) + dir * std::sin(t * ang);
      }
    }
    return KPlane{thin_qr(out).q};
  }
  double d = fiber_distance(space, p, q);
  if (d > space.diameter() - 1e-6) throw cut_locus_error("points at or near the cut locus of " + space.name());
  switch (space.kind) {
    case FiberKind::sphere2: {
      CoverPoint r = cover_slerp(from_vec(std::get<Vec3>(p)), from_vec(std::get<Vec3>(q)), t);
      return to_vec(r);
    }
    case FiberKind::unit_quaternions: return slerp(std::get<Quat>(p), std::get<Quat>(q), t);
    case FiberKind::rotation3: {
      Quat a = rotation_to_quaternion(std::get<Matrix>(p));
      Quat b = rotation_to_quaternion(std::get<Matrix>(q));
      if (qdot(a, b) < 0.0) b = -b;
      return quaternion_to_rotation(slerp(a, b, t));
    }
    default: break;
  }
  throw precondition_error("unknown fiber");
}

void check_path(const FiberSpace& space, const FiberPath& path, double max_step) {
  for (std::size_t i = 1; i < path.samples.size(); ++i)
    if (fiber_distance(space, path.samples[i - 1], path.samples[i]) > max_step)
      throw aliasing_error("path samples " + std::to_string(i - 1) + " and " + std::to_string(i) +
                           " are too far apart");
}

FiberPath lift_rotation_path(const FiberPath& path) {
  auto lift = lift_path(FiberSpace::rotation3(), path, nullptr);
  FiberPath out;
  out.samples.reserve(lift.size());
  for (const auto& c : lift) out.samples.emplace_back(to_quat(c));
  return out;
}

HomotopyClass operator+(HomotopyClass a, HomotopyClass b) {
  return a == b ? HomotopyClass::trivial : HomotopyClass::nontrivial;
}

std::string to_string(HomotopyClass c) { return c == HomotopyClass::trivial ? "trivial" : "nontrivial"; }

HomotopyClass loop_class(const FiberSpace& space, const FiberPath& loop) {
  if (loop.samples.empty()) throw precondition_error("empty loop");
  if (fiber_distance(space, loop.samples.front(), loop.samples.back()) >= 1e-6)
    throw precondition_error("loop is not closed");
  if (space.simply_connected()) return HomotopyClass::trivial;
  auto lift = lift_path(space, loop, nullptr);
  return cdot(lift.front(), lift.back()) < 0.0 ? HomotopyClass::nontrivial : HomotopyClass::trivial;
}

FiberPoint Homotopy::at(std::size_t x, double s) const {
  const auto& row = rows.at(x);
  if (s <= 0.0) return row.front();
  if (s >= 1.0) return row.back();
  if (rel_endpoints && (x == 0 || x + 1 == rows.size())) return row.front();
  return project(space, cover_slerp(lift0[x], lift1[x], s));
}

Homotopy lipschitz_homotopy(const FiberSpace& space, const FiberPath& path0, const FiberPath& path1,
                            bool rel_endpoints, int t_count) {
  require_cover(space);
  std::size_t nx = path0.samples.size();
  if (nx == 0 || path1.samples.size() != nx) throw precondition_error("homotopy paths need equal nonzero length");
  if (t_count < 2) throw precondition_error("homotopy needs at least two t samples");
  if (rel_endpoints) {
    if (fiber_distance(space, path0.samples.front(), path1.samples.front()) > 1e-8 ||
        fiber_distance(space, path0.samples.back(), path1.samples.back()) > 1e-8)
      throw precondition_error("rel-endpoint homotopy needs matching endpoints");
  }
  auto lift0 = lift_path(space, path0, nullptr);
  auto lift1 = lift_path(space, path1, &lift0.front());
  if (rel_endpoints && double_cover(space) && cdot(lift0.back(), lift1.back()) < 0.0)
    throw class_mismatch_error("paths are not homotopic rel endpoints (lifts end on opposite sheets)");
  return homotopy_from_lifts(space, std::move(lift0), std::move(lift1), rel_endpoints, t_count, &path0, &path1);
}

Homotopy homotopy_from_lifts(const FiberSpace& space, std::vector<CoverPoint> lift0, std::vector<CoverPoint> lift1,
                             bool rel_endpoints, int t_count, const FiberPath* path0, const FiberPath* path1) {
  require_cover(space);
  std::size_t nx = lift0.size();
  if (nx == 0 || lift1.size() != nx) throw precondition_error("homotopy lifts need equal nonzero length");
  if (t_count < 2) throw precondition_error("homotopy needs at least two t samples");
  if (rel_endpoints && (cover_angle(lift0.front(), lift1.front()) > 1e-8 ||
                        cover_angle(lift0.back(), lift1.back()) > 1e-8))
    throw class_mismatch_error("lifted ends differ; the paths are not homotopic rel endpoints");
  Homotopy h;
  h.space = space;
  h.rel_endpoints = rel_endpoints;
  h.lift0 = std::move(lift0);
  h.lift1 = std::move(lift1);
  // antipodal cover pairs: push the second track 1e-6 toward a fixed direction
  for (std::size_t x = 0; x < nx; ++x) {
    if (cover_angle(h.lift0[x], h.lift1[x]) <= pi - 1e-6) continue;
    CoverPoint& c = h.lift1[x];
    CoverPoint dir{c.n, {}};
    for (int e = 0; e < c.n; ++e) {
      dir = CoverPoint{c.n, {}};
      dir.v[e] = 1.0;
      double p = cdot(dir, c);
      for (int i = 0; i < c.n; ++i) dir.v[i] -= p * c.v[i];
      if (std::sqrt(cdot(dir, dir)) > 0.5) break;
    }
    double dn = std::sqrt(cdot(dir, dir));
    for (int i = 0; i < c.n; ++i) c.v[i] = std::cos(1e-6) * c.v[i] + std::sin(1e-6) * dir.v[i] / dn;
    ++h.nudged;
  }
  h.t.resize(t_count);
  for (int j = 0; j < t_count; ++j) h.t[j] = static_cast<double>(j) / (t_count - 1);
  h.rows.assign(nx, {});
  for (std::size_t x = 0; x < nx; ++x) {
    auto& row = h.rows[x];
    row.reserve(t_count);
    bool pinned = rel_endpoints && (x == 0 || x + 1 == nx);
    for (int j = 0; j < t_count; ++j) {
      if (pinned || j == 0) row.push_back(path0 ? path0->samples[x] : project(space, h.lift0[x]));
      else if (j == t_count - 1) row.push_back(path1 ? path1->samples[x] : project(space, h.lift1[x]));
      else row.push_back(project(space, cover_slerp(h.lift0[x], h.lift1[x], h.t[j])));
    }
  }
  return h;
}

double measured_lipschitz(const Homotopy& h) {
  double best = 0.0;
  for (const auto& row : h.rows)
    for (std::size_t j = 0; j + 1 < row.size(); ++j) {
      double dt = h.t[j + 1] - h.t[j];
      best = std::max(best, fiber_distance(h.space, row[j], row[j + 1]) / dt);
    }
  return best;
}

FiberPoint apply_isometry(const FiberSpace& space, const Matrix& g, const FiberPoint& p) {
  switch (space.kind) {
    case FiberKind::sphere2: {
      const Vec3& v = std::get<Vec3>(p);
      auto r = g * std::span<const double>(v.data(), 3);
      return Vec3{r[0], r[1], r[2]};
    }
    case FiberKind::rotation3: return g * std::get<Matrix>(p);
    case FiberKind::grassmann: return grass_action(g, std::get<KPlane>(p));
    case FiberKind::unit_quaternions: {
      const Quat& q = std::get<Quat>(p);
      std::array<double, 4> v{q.w, q.x, q.y, q.z};
      auto r = g * std::span<const double>(v.data(), 4);
      return Quat{r[0], r[1], r[2], r[3]};
    }
  }
  throw precondition_error("unknown fiber");
}

}  // namespace dsplit
