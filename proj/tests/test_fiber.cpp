#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>

#include "dsplit/errors.hpp"
#include "dsplit/fiber.hpp"

using namespace dsplit;

namespace {

constexpr double pi = std::numbers::pi;

double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Vec3 random_unit(std::mt19937_64& rng) {
  for (;;) {
    Vec3 v{2 * unit_draw(rng) - 1, 2 * unit_draw(rng) - 1, 2 * unit_draw(rng) - 1};
    double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    if (n > 0.1 && n < 1.0) return {v[0] / n, v[1] / n, v[2] / n};
  }
}

Matrix random_rotation(std::mt19937_64& rng) { return axis_angle(random_unit(rng), pi * unit_draw(rng)); }

FiberPath z_loop(double turns, int samples) {
  FiberPath p;
  for (int i = 0; i < samples; ++i) p.samples.emplace_back(axis_angle({0, 0, 1}, 2 * pi * turns * i / (samples - 1)));
  return p;
}

FiberPath concat(const FiberPath& a, const FiberPath& b) {
  FiberPath out = a;
  out.samples.insert(out.samples.end(), b.samples.begin() + 1, b.samples.end());
  return out;
}

// great-circle arc from a to b with n samples (a, b not antipodal)
FiberPath sphere_arc(Vec3 a, Vec3 b, int n) {
  double ang = std::acos(std::clamp(a[0] * b[0] + a[1] * b[1] + a[2] * b[2], -1.0, 1.0));
  FiberPath p;
  for (int i = 0; i < n; ++i) {
    double t = static_cast<double>(i) / (n - 1);
    double wa = std::sin((1 - t) * ang) / std::sin(ang), wb = std::sin(t * ang) / std::sin(ang);
    p.samples.emplace_back(Vec3{wa * a[0] + wb * b[0], wa * a[1] + wb * b[1], wa * a[2] + wb * b[2]});
  }
  return p;
}

Vec3 as_vec(const FiberPoint& p) { return std::get<Vec3>(p); }

}  // namespace

TEST_CASE("fiber tags") {
  CHECK(FiberSpace::parse("Gr(1,3)") == FiberSpace::grassmann(1, 3));
  CHECK(FiberSpace::parse("SO3").name() == "SO3");
  CHECK(FiberSpace::sphere2().simply_connected());
  CHECK(FiberSpace::unit_quaternions().simply_connected());
  CHECK_FALSE(FiberSpace::rotation3().simply_connected());
  CHECK_FALSE(FiberSpace::grassmann(1, 3).simply_connected());
  CHECK_THROWS_AS(FiberSpace::parse("T2"), precondition_error);
}

TEST_CASE("sphere distances") {
  auto S2 = FiberSpace::sphere2();
  CHECK(fiber_distance(S2, Vec3{0, 0, 1}, Vec3{0, 0, 1}) == 0.0);
  CHECK(fiber_distance(S2, Vec3{0, 0, 1}, Vec3{0, 0, -1}) == doctest::Approx(pi));
}

TEST_CASE("rotation distance matches the trace formula") {
  std::mt19937_64 rng(401);
  auto SO3 = FiberSpace::rotation3();
  for (int rep = 0; rep < 500; ++rep) {
    Matrix p = random_rotation(rng), q = random_rotation(rng);
    double tr = (p * q.transpose()).trace();
    double oracle = std::acos(std::clamp((tr - 1) / 2, -1.0, 1.0));
    CHECK(fiber_distance(SO3, p, q) == doctest::Approx(oracle).epsilon(1e-7));
    CHECK(fiber_distance(SO3, p, p) <= 1e-7);
  }
}

TEST_CASE("sphere geodesic midpoint") {
  auto S2 = FiberSpace::sphere2();
  Vec3 m = as_vec(geodesic_point(S2, Vec3{0, 0, 1}, Vec3{1, 0, 0}, 0.5));
  CHECK(m[0] == doctest::Approx(std::sqrt(0.5)));
  CHECK(std::abs(m[1]) <= 1e-15);
  CHECK(m[2] == doctest::Approx(std::sqrt(0.5)));
  Vec3 p0 = as_vec(geodesic_point(S2, Vec3{0, 0, 1}, Vec3{1, 0, 0}, 0.0));
  CHECK(p0[2] == 1.0);
}

TEST_CASE("rotation geodesics: equidistant midpoints and slerp agreement") {
  std::mt19937_64 rng(402);
  auto SO3 = FiberSpace::rotation3();
  for (int rep = 0; rep < 300; ++rep) {
    Matrix p = random_rotation(rng), q = random_rotation(rng);
    if (fiber_distance(SO3, p, q) > pi - 1e-3) continue;
    Matrix mid = std::get<Matrix>(geodesic_point(SO3, p, q, 0.5));
    CHECK(fiber_distance(SO3, p, mid) == doctest::Approx(fiber_distance(SO3, mid, q)).epsilon(1e-8));
    Quat a = rotation_to_quaternion(p), b = rotation_to_quaternion(q);
    if (qdot(a, b) < 0) b = -b;
    Matrix oracle = quaternion_to_rotation(slerp(a, b, 0.5));
    CHECK(frobenius_norm(mid - oracle) <= 1e-8);
  }
}

TEST_CASE("geodesics have constant speed and the right ends") {
  std::mt19937_64 rng(403);
  for (auto space : {FiberSpace::sphere2(), FiberSpace::rotation3(), FiberSpace::grassmann(1, 3)}) {
    for (int rep = 0; rep < 100; ++rep) {
      FiberPoint p, q;
      if (space.kind == FiberKind::sphere2) p = random_unit(rng), q = random_unit(rng);
      else if (space.kind == FiberKind::rotation3) p = random_rotation(rng), q = random_rotation(rng);
      else p = KPlane::line(random_unit(rng)), q = KPlane::line(random_unit(rng));
      double d = fiber_distance(space, p, q);
      if (d > space.diameter() - 1e-3) continue;
      CHECK(fiber_distance(space, geodesic_point(space, p, q, 0.0), p) <= 1e-8);
      CHECK(fiber_distance(space, geodesic_point(space, p, q, 1.0), q) <= 1e-8);
      double t = unit_draw(rng);
      CHECK(fiber_distance(space, p, geodesic_point(space, p, q, t)) == doctest::Approx(t * d).epsilon(1e-6));
    }
  }
}

TEST_CASE("lifting rotation loops") {
  FiberPath c;
  for (int i = 0; i < 10; ++i) c.samples.emplace_back(Matrix::identity(3));
  for (const auto& q : lift_rotation_path(c).samples) CHECK(std::abs(std::get<Quat>(q).w) == doctest::Approx(1.0));

  auto two = lift_rotation_path(z_loop(1, 65)).samples;
  Quat a = std::get<Quat>(two.front()), b = std::get<Quat>(two.back());
  CHECK(qdot(a, b) == doctest::Approx(-1.0));
  auto four = lift_rotation_path(z_loop(2, 129)).samples;
  CHECK(qdot(std::get<Quat>(four.front()), std::get<Quat>(four.back())) == doctest::Approx(1.0));
}

TEST_CASE("rotation loop classes") {
  auto SO3 = FiberSpace::rotation3();
  CHECK(loop_class(SO3, z_loop(0, 5)) == HomotopyClass::trivial);
  CHECK(loop_class(SO3, z_loop(1, 65)) == HomotopyClass::nontrivial);
  CHECK(loop_class(SO3, concat(z_loop(1, 65), z_loop(1, 65))) == HomotopyClass::trivial);
  CHECK(loop_class(FiberSpace::sphere2(), sphere_arc({1, 0, 0}, {1, 0, 0}, 3)) == HomotopyClass::trivial);
}

TEST_CASE("loop class is a Z2 homomorphism on random loops") {
  std::mt19937_64 rng(404);
  auto SO3 = FiberSpace::rotation3();
  auto random_loop = [&](int& expect) {
    // a full turn about a random axis, conjugated by a wobble that closes up
    int turns = static_cast<int>(rng() % 4);
    Vec3 ax = random_unit(rng);
    double wob = unit_draw(rng);
    Vec3 wax = random_unit(rng);
    FiberPath p;
    const int n = 64 * (turns + 1) + 1;
    for (int i = 0; i < n; ++i) {
      double s = static_cast<double>(i) / (n - 1);
      p.samples.emplace_back(axis_angle(wax, wob * std::sin(2 * pi * s)) * axis_angle(ax, 2 * pi * turns * s));
    }
    expect = turns % 2;
    return p;
  };
  for (int rep = 0; rep < 50; ++rep) {
    int ea = 0, eb = 0;
    FiberPath a = random_loop(ea), b = random_loop(eb);
    HomotopyClass ca = loop_class(SO3, a), cb = loop_class(SO3, b);
    CHECK((ca == HomotopyClass::nontrivial) == (ea == 1));
    CHECK(loop_class(SO3, concat(a, b)) == ca + cb);
  }
}

TEST_CASE("line loops agree with unit-vector holonomy") {
  std::mt19937_64 rng(405);
  auto gr = FiberSpace::grassmann(1, 3);
  for (int rep = 0; rep < 100; ++rep) {
    int half_turns = static_cast<int>(rng() % 4);
    Vec3 ax = random_unit(rng), r0 = random_unit(rng), wax = random_unit(rng);
    // w orthogonal to the axis, so a half turn sends the line to itself
    Vec3 w = unit({ax[1] * r0[2] - ax[2] * r0[1], ax[2] * r0[0] - ax[0] * r0[2], ax[0] * r0[1] - ax[1] * r0[0]});
    double wob = unit_draw(rng);
    const int n = 200;
    FiberPath p;
    std::vector<std::vector<double>> dirs;
    for (int i = 0; i < n; ++i) {
      double s = static_cast<double>(i) / (n - 1);
      Matrix r = axis_angle(wax, wob * std::sin(2 * pi * s)) * axis_angle(ax, pi * half_turns * s);
      std::vector<double> v = r * std::span<const double>(w.data(), 3);
      dirs.push_back(v);
      p.samples.emplace_back(KPlane::line(v));
    }
    // carry a unit vector continuously along the sampled lines
    std::vector<double> u = dirs[0];
    for (int i = 1; i < n; ++i) {
      std::vector<double> v = dirs[i];
      if (dot(u, v) < 0)
        for (double& c : v) c = -c;
      u = v;
    }
    bool flipped = dot(u, dirs[0]) < 0;
    CHECK(flipped == (half_turns % 2 == 1));
    CHECK((loop_class(gr, p) == HomotopyClass::nontrivial) == flipped);
  }
}

TEST_CASE("identical paths give a constant homotopy") {
  auto S2 = FiberSpace::sphere2();
  FiberPath p = sphere_arc({0, 0, 1}, {1, 0, 0}, 33);
  Homotopy h = lipschitz_homotopy(S2, p, p, true);
  CHECK(measured_lipschitz(h) <= 1e-12);
}

TEST_CASE("quarter arcs with shared ends") {
  auto S2 = FiberSpace::sphere2();
  FiberPath p0 = sphere_arc({0, 0, 1}, {1, 0, 0}, 33);
  Vec3 m{1 / std::sqrt(3.0), 1 / std::sqrt(3.0), 1 / std::sqrt(3.0)};
  FiberPath p1 = concat(sphere_arc({0, 0, 1}, m, 17), sphere_arc(m, {1, 0, 0}, 17));
  Homotopy h = lipschitz_homotopy(S2, p0, p1, true);
  double L = measured_lipschitz(h);
  CHECK(L > 0.0);
  CHECK(L <= pi);
  // t = 0 and t = 1 rows reproduce the inputs; the end rows stay put
  for (std::size_t x = 0; x < h.x_count(); ++x) {
    CHECK(fiber_distance(S2, h.rows[x].front(), p0.samples[x]) <= 1e-9);
    CHECK(fiber_distance(S2, h.rows[x].back(), p1.samples[x]) <= 1e-9);
  }
  for (const auto& q : h.rows.front()) CHECK(as_vec(q) == as_vec(h.rows.front().front()));
  for (const auto& q : h.rows.back()) CHECK(as_vec(q) == as_vec(h.rows.back().front()));
}

TEST_CASE("class mismatch is reported") {
  auto SO3 = FiberSpace::rotation3();
  CHECK_THROWS_AS(lipschitz_homotopy(SO3, z_loop(1, 65), z_loop(0, 65), true), class_mismatch_error);
  CHECK_NOTHROW(lipschitz_homotopy(SO3, z_loop(2, 65), z_loop(0, 65), true));
}

TEST_CASE("a single geodesic has Lipschitz constant equal to its length") {
  auto S2 = FiberSpace::sphere2();
  FiberPath p0, p1;
  Vec3 a{0, 0, 1}, b{std::sin(1.3), 0, std::cos(1.3)};
  p0.samples = {a, a};
  p1.samples = {b, b};
  Homotopy h = lipschitz_homotopy(S2, p0, p1, false, 65);
  CHECK(std::abs(measured_lipschitz(h) - 1.3) <= 1e-6);
}

TEST_CASE("random homotopies respect the cover bound") {
  std::mt19937_64 rng(406);
  for (auto space : {FiberSpace::sphere2(), FiberSpace::rotation3(), FiberSpace::unit_quaternions()}) {
    for (int rep = 0; rep < 20; ++rep) {
      auto make = [&](FiberPath& out) {
        Vec3 ax = random_unit(rng);
        Matrix base = random_rotation(rng);
        double speed = 2 * unit_draw(rng);
        for (int i = 0; i < 41; ++i) {
          Matrix r = base * axis_angle(ax, speed * i / 40.0);
          if (space.kind == FiberKind::sphere2) {
            std::vector<double> v = r.col(2);
            out.samples.emplace_back(Vec3{v[0], v[1], v[2]});
          } else if (space.kind == FiberKind::rotation3) {
            out.samples.emplace_back(r);
          } else {
            out.samples.emplace_back(rotation_to_quaternion(r));
          }
        }
      };
      FiberPath a, b;
      make(a);
      make(b);
      if (space.kind == FiberKind::unit_quaternions) {
        // keep the quaternion samples continuous
        for (auto* p : {&a, &b})
          for (std::size_t i = 1; i < p->samples.size(); ++i) {
            Quat q = std::get<Quat>(p->samples[i]);
            if (qdot(q, std::get<Quat>(p->samples[i - 1])) < 0) p->samples[i] = -q;
          }
      }
      Homotopy h = lipschitz_homotopy(space, a, b, false);
      // pi on the sphere covers, doubled to 2 pi in the SO3 metric
      double bound = (space.kind == FiberKind::rotation3 ? 2 * pi : pi) + 0.1;
      CHECK(measured_lipschitz(h) <= bound);
    }
  }
}

TEST_CASE("isometries act on the fibers") {
  Matrix r = axis_angle({0, 0, 1}, pi / 2);
  Vec3 v = as_vec(apply_isometry(FiberSpace::sphere2(), r, Vec3{1, 0, 0}));
  CHECK(std::abs(v[0]) <= 1e-15);
  CHECK(v[1] == doctest::Approx(1.0));
  KPlane e1 = KPlane::coordinate(3, {0});
  auto img = std::get<KPlane>(apply_isometry(FiberSpace::grassmann(1, 3), r, e1));
  CHECK(grass_distance(img, KPlane::coordinate(3, {1})) <= 1e-12);
}

TEST_CASE("aliasing paths are rejected") {
  FiberPath p = sphere_arc({0, 0, 1}, {1, 0, 0}, 2);
  CHECK_THROWS_AS(check_path(FiberSpace::sphere2(), p), aliasing_error);
  CHECK_NOTHROW(check_path(FiberSpace::sphere2(), sphere_arc({0, 0, 1}, {1, 0, 0}, 9)));
}
