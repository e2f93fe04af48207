#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>

#include "dsplit/errors.hpp"
#include "dsplit/sections.hpp"

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

const CircleLattice& lat() {
  static const CircleLattice l(10000, golden_alpha);
  return l;
}

const TorusTranslation golden = TorusTranslation::circle(golden_alpha);

// isotopy ending at A(f^-1 y)^-1, so the constant section is invariant at t = 0
IsotopyFamily pull_back_isotopy(const LatticeCocycle& g) {
  std::vector<Matrix> h1(g.lattice.size());
  for (std::size_t y = 0; y < h1.size(); ++y) h1[y] = g.values[g.preimage(y)].transpose();
  return IsotopyFamily::nullhomotopy(h1);
}

FiberSection smooth_sphere_section(std::mt19937_64& rng, std::size_t n) {
  Vec3 ax = random_unit(rng), v = random_unit(rng);
  int w = static_cast<int>(rng() % 3);
  FiberSection s{FiberSpace::sphere2(), {}};
  for (std::size_t i = 0; i < n; ++i) {
    Matrix r = axis_angle(ax, 2 * pi * w * static_cast<double>(i) / n);
    auto u = r * std::span<const double>(v.data(), 3);
    s.values.emplace_back(Vec3{u[0], u[1], u[2]});
  }
  return s;
}

Cocycle random_rotation_cocycle(std::mt19937_64& rng) {
  return Cocycle::rotation3(random_unit(rng), AngleField{6 * unit_draw(rng), static_cast<int>(rng() % 5) - 2, 0,
                                                        unit_draw(rng), 6 * unit_draw(rng)});
}

}  // namespace

TEST_CASE("push_section agrees with direct evaluation") {
  std::mt19937_64 rng(601);
  for (int rep = 0; rep < 5; ++rep) {
    LatticeCocycle g = LatticeCocycle::sample(random_rotation_cocycle(rng), lat());
    FiberSection s = smooth_sphere_section(rng, lat().size());
    FiberSection p = push_section(g, s);
    for (int k = 0; k < 100; ++k) {
      std::size_t i = rng() % lat().size();
      Vec3 v = std::get<Vec3>(s.values[i]);
      Matrix a = g.values[i];
      Vec3 got = std::get<Vec3>(p.values[lat().next(i)]);
      for (int r = 0; r < 3; ++r)
        CHECK(got[r] == doctest::Approx(a(r, 0) * v[0] + a(r, 1) * v[1] + a(r, 2) * v[2]).epsilon(1e-12));
    }
  }
}

TEST_CASE("identity cocycle shifts the section") {
  std::mt19937_64 rng(602);
  LatticeCocycle g = LatticeCocycle::sample(Cocycle::identity(3), lat());
  FiberSection s = smooth_sphere_section(rng, lat().size());
  FiberSection p = push_section(g, s);
  for (std::size_t i = 0; i < lat().size(); i += 97) CHECK(std::get<Vec3>(p.values[lat().next(i)]) == std::get<Vec3>(s.values[i]));
}

TEST_CASE("constant isometry on a constant section") {
  Matrix R = axis_angle({1, 0, 0}, pi / 2);
  LatticeCocycle g = LatticeCocycle::sample(Cocycle::constant(R), lat());
  FiberSection p = push_section(g, FiberSection::constant(FiberSpace::sphere2(), Vec3{0, 0, 1}, lat().size()));
  for (std::size_t i = 0; i < lat().size(); i += 101) {
    Vec3 v = std::get<Vec3>(p.values[i]);
    CHECK(std::abs(v[0]) <= 1e-15);
    CHECK(v[1] == doctest::Approx(-1.0));
    CHECK(std::abs(v[2]) <= 1e-15);
  }
}

TEST_CASE("push_section is equivariant under composition") {
  std::mt19937_64 rng(603);
  for (int rep = 0; rep < 5; ++rep) {
    LatticeCocycle g = LatticeCocycle::sample(random_rotation_cocycle(rng), lat());
    LatticeCocycle h = LatticeCocycle::sample(random_rotation_cocycle(rng), lat());
    FiberSection s = smooth_sphere_section(rng, lat().size());
    CHECK(section_distance(push_section(compose(g, h), s), push_section(g, push_section(h, s))) <= 1e-7);
  }
}

TEST_CASE("section distance and defect of constants") {
  auto S2 = FiberSpace::sphere2();
  FiberSection a = FiberSection::constant(S2, Vec3{0, 0, 1}, 100);
  FiberSection b = FiberSection::constant(S2, Vec3{std::sin(0.7), 0, std::cos(0.7)}, 100);
  CHECK(section_distance(a, a) == 0.0);
  CHECK(section_distance(a, b) == doctest::Approx(0.7));
  LatticeCocycle id = LatticeCocycle::sample(Cocycle::identity(3), lat());
  CHECK(defect(id, FiberSection::constant(S2, Vec3{0, 1, 0}, lat().size())) == 0.0);
  LatticeCocycle rz = LatticeCocycle::sample(Cocycle::constant(axis_angle({0, 0, 1}, 0.3)), lat());
  CHECK(defect(rz, FiberSection::constant(S2, Vec3{1, 0, 0}, lat().size())) == doctest::Approx(0.3));
  CHECK(defect(rz, FiberSection::constant(S2, Vec3{0, 0, 1}, lat().size())) <= 1e-12);
}

TEST_CASE("exact coboundaries have defect within the grid modulus") {
  // B rotates about z by 0.3 + 2 pi x: Lipschitz 2 pi in the SO(3) metric
  Cocycle B = Cocycle::rotation3({0, 0, 1}, AngleField{0.3, 1});
  Cocycle A = Cocycle::coboundary(B, golden);
  LatticeCocycle g = LatticeCocycle::sample(A, lat());
  FiberSection s{FiberSpace::rotation3(), {}};
  for (std::size_t i = 0; i < lat().size(); ++i) s.values.emplace_back(B(TorusPoint::circle(lat().x(i))));
  double modulus = 2 * pi * lat().resolution_error();
  CHECK(defect(g, s) <= modulus + 1e-9);
  CHECK(max_adjacent_jump(s) <= 2 * pi / 10000 + 1e-9);
}

TEST_CASE("isotopy families") {
  IsotopyFamily id = IsotopyFamily::identity(5);
  CHECK(frobenius_norm(id.at(3, 0.7) - Matrix::identity(3)) == 0.0);
  std::vector<Matrix> h1;
  for (int i = 0; i < 64; ++i) h1.push_back(axis_angle({0, 1, 0}, 4 * pi * i / 64.0));
  IsotopyFamily n = IsotopyFamily::nullhomotopy(h1);
  for (std::size_t i = 0; i < h1.size(); ++i) {
    CHECK(frobenius_norm(n.at(i, 0.0) - Matrix::identity(3)) <= 1e-12);
    CHECK(frobenius_norm(n.at(i, 1.0) - h1[i]) <= 1e-12);
  }
  std::vector<Matrix> odd;
  for (int i = 0; i < 64; ++i) odd.push_back(axis_angle({0, 1, 0}, 2 * pi * i / 64.0));
  CHECK_THROWS_AS(IsotopyFamily::nullhomotopy(odd), class_mismatch_error);
}

TEST_CASE("concentration leaves an invariant section alone") {
  LatticeCocycle g = LatticeCocycle::sample(Cocycle::identity(3), lat());
  FiberSection s = FiberSection::constant(FiberSpace::sphere2(), Vec3{0, 0, 1}, lat().size());
  LatticeTower t = build_lattice_tower(lat(), lattice_arc_from(lat(), RegionK::arc(0.0, 0.01)), 50);
  Concentration c = concentrate_noninvariance(g, IsotopyFamily::identity(lat().size()), s, t.arc);
  for (double tt : {0.0, 0.3, 1.0}) CHECK(section_distance(c.at(tt), s) <= 1e-12);
  Homotopy z = boundary_homotopy(c, 9);
  CHECK(measured_lipschitz(z) <= 1e-9);
  FiberSection w = tower_dissipate(g, c.at(1.0), t, z);
  CHECK(section_distance(w, s) <= 1e-12);
  CHECK(defect(g, w) <= 1e-12);
}

TEST_CASE("concentration postcondition for a trivial-class rotation cocycle") {
  LatticeCocycle g = LatticeCocycle::sample(Cocycle::quaternion_power(2, 0.3), lat());
  FiberSection s = FiberSection::constant(FiberSpace::rotation3(), Matrix::identity(3), lat().size());
  LatticeTower t = build_lattice_tower(lat(), lattice_arc_from(lat(), RegionK::arc(0.0, 0.01)), 100);
  int trims = 0;
  LatticeArc arc = trim_to_regular(lat(), t.arc, trims);
  CHECK(arc_is_regular(lat(), arc));
  Concentration c = concentrate_noninvariance(g, pull_back_isotopy(g), s, arc);
  CHECK(section_distance(c.at(0.0), s) <= 1e-9);
  for (double tt : {0.0, 0.25, 0.5, 0.75, 1.0}) CHECK(c.postcondition_error(tt) <= 1e-9);
}

TEST_CASE("almost invariant section fast path") {
  LatticeCocycle g = LatticeCocycle::sample(Cocycle::constant(axis_angle({0, 0, 1}, 0.4)), lat());
  FiberSection s = FiberSection::constant(FiberSpace::sphere2(), Vec3{0, 0, 1}, lat().size());
  AlmostInvariantResult r = almost_invariant_section(g, s, IsotopyFamily::identity(lat().size()), 0.05);
  CHECK(r.fast_path);
  CHECK(r.n == 1);
  CHECK(r.defect <= 1e-12);
}

TEST_CASE("almost invariant section for a trivial-class rotation cocycle") {
  for (auto space : {FiberSpace::sphere2(), FiberSpace::rotation3()}) {
    LatticeCocycle g = LatticeCocycle::sample(Cocycle::quaternion_power(2, 0.3), lat());
    FiberSection s = space.kind == FiberKind::sphere2
                         ? FiberSection::constant(space, Vec3{0, 0, 1}, lat().size())
                         : FiberSection::constant(space, Matrix::identity(3), lat().size());
    AlmostInvariantResult r = almost_invariant_section(g, s, pull_back_isotopy(g), 0.05);
    CHECK_FALSE(r.fast_path);
    CHECK(r.n > r.b_bound / 0.05);
    CHECK(r.defect < 0.05);
    CHECK(r.defect * r.n <= r.measured_lipschitz + 1.0);
    CHECK(r.certificate.ok);
    CHECK(r.certificate.max_adjacent < 0.5);
  }
}

TEST_CASE("nontrivial class surfaces the obstruction") {
  LatticeCocycle g = LatticeCocycle::sample(Cocycle::quaternion_power(1, 0.3), lat());
  CHECK_THROWS_AS(pull_back_isotopy(g), class_mismatch_error);
}

TEST_CASE("defect halves when the tower doubles") {
  LatticeCocycle g = LatticeCocycle::sample(Cocycle::quaternion_power(2, 0.3), lat());
  FiberSection s = FiberSection::constant(FiberSpace::sphere2(), Vec3{0, 0, 1}, lat().size());
  IsotopyFamily iso = pull_back_isotopy(g);
  AlmostInvariantOptions o;
  o.region_height = 200;
  o.certificate = false;
  o.n = 100;
  double d100 = almost_invariant_section(g, s, iso, 0.05, o).defect;
  o.n = 200;
  double d200 = almost_invariant_section(g, s, iso, 0.05, o).defect;
  CHECK(d200 / d100 >= 0.4);
  CHECK(d200 / d100 <= 0.6);
}

TEST_CASE("aligning rotations") {
  KPlane e1 = KPlane::coordinate(3, {0}), e2 = KPlane::coordinate(3, {1});
  CHECK(frobenius_norm(aligning_rotation(e1, e1) - Matrix::identity(3)) <= 1e-12);
  Matrix r = aligning_rotation(e1, e2);
  CHECK(frobenius_norm(r - Matrix{{0, -1, 0}, {1, 0, 0}, {0, 0, 1}}) <= 1e-12);
  std::mt19937_64 rng(604);
  for (int rep = 0; rep < 200; ++rep) {
    int k = 1 + static_cast<int>(rng() % 2);
    Matrix f(3, k);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < k; ++j) f(i, j) = 2 * unit_draw(rng) - 1;
    KPlane p = KPlane::span_of(f);
    KPlane q = grass_action(axis_angle(random_unit(rng), 0.01), p);
    Matrix R = aligning_rotation(p, q);
    CHECK(is_orthogonal(R, 1e-10));
    CHECK(determinant(R) == doctest::Approx(1.0));
    CHECK(spectral_norm(R - Matrix::identity(3)) <= 0.02);
    for (double a : principal_angles(grass_action(R, p), q)) CHECK(a <= 1e-7);
  }
}

TEST_CASE("stretch along a plane") {
  KPlane e1 = KPlane::coordinate(3, {0});
  CHECK(frobenius_norm(stretch_along(e1, 1.0) - Matrix::identity(3)) <= 1e-15);
  double e = std::exp(1.0);
  CHECK(frobenius_norm(stretch_along(e1, e) - Matrix{{e, 0, 0}, {0, 1 / e, 0}, {0, 0, 1 / e}}) <= 1e-15);
  CHECK_THROWS_AS(stretch_along(e1, 0.0), precondition_error);
  std::mt19937_64 rng(605);
  for (int rep = 0; rep < 200; ++rep) {
    int k = 1 + static_cast<int>(rng() % 2);
    Matrix f(3, k);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < k; ++j) f(i, j) = 2 * unit_draw(rng) - 1;
    KPlane p = KPlane::span_of(f);
    double lam = 0.2 + 3 * unit_draw(rng);
    Matrix S = stretch_along(p, lam);
    CHECK(frobenius_norm(S * p.frame - lam * p.frame) <= 1e-10);
    CHECK(determinant(S) == doctest::Approx(std::pow(lam, k) * std::pow(1 / lam, 3 - k)).epsilon(1e-10));
  }
}

TEST_CASE("dominating perturbation of an invariant plane field") {
  Matrix R = axis_angle({0, 0, 1}, 0.8);
  LatticeCocycle g = LatticeCocycle::sample(Cocycle::constant(R), lat());
  FiberSection w = FiberSection::constant(FiberSpace::grassmann(1, 3), KPlane::coordinate(3, {2}), lat().size());
  DominatingPerturbation d = dominating_perturbation(g, w, 0.0);
  CHECK(d.max_deviation <= 1e-12);
  for (const auto& b : d.values) REQUIRE(frobenius_norm(b - R) <= 1e-12);
  DominatingPerturbation s = dominating_perturbation(g, w, 0.1);
  CHECK(s.max_deviation == doctest::Approx(std::expm1(0.1)).epsilon(1e-9));
  CHECK(s.invariance_error <= 1e-8);
}

TEST_CASE("dominating perturbation leaves any plane field invariant") {
  std::mt19937_64 rng(606);
  CircleLattice small(2000, golden_alpha);
  for (int rep = 0; rep < 5; ++rep) {
    LatticeCocycle g = LatticeCocycle::sample(random_rotation_cocycle(rng), small);
    FiberSection s = smooth_sphere_section(rng, small.size());
    FiberSection w{FiberSpace::grassmann(1, 3), {}};
    for (const auto& v : s.values) w.values.emplace_back(KPlane::line(std::get<Vec3>(v)));
    DominatingPerturbation d = dominating_perturbation(g, w, 0.1);
    CHECK(d.invariance_error < 1e-8);
  }
}

TEST_CASE("coboundary classification") {
  CHECK(is_homotopic_to_coboundary(Cocycle::constant(axis_angle({1, 2, 3}, 2.0)), golden) == HomotopyClass::trivial);
  Cocycle z = Cocycle::rotation3({0, 0, 1}, AngleField{0.0, 1});
  CHECK(is_homotopic_to_coboundary(z, golden) == HomotopyClass::nontrivial);
  CHECK(is_homotopic_to_coboundary(Cocycle::coboundary(z, golden), golden) == HomotopyClass::trivial);
  CHECK_THROWS_AS(is_homotopic_to_coboundary(Cocycle::identity(2), golden), precondition_error);
}

TEST_CASE("multiplying by a coboundary keeps the class") {
  std::mt19937_64 rng(607);
  for (int rep = 0; rep < 30; ++rep) {
    Cocycle A = random_rotation_cocycle(rng), B = random_rotation_cocycle(rng);
    HomotopyClass c = is_homotopic_to_coboundary(A, golden);
    CHECK(is_homotopic_to_coboundary(Cocycle::product({A, Cocycle::coboundary(B, golden)}), golden) == c);
  }
}

TEST_CASE("coboundary approximation") {
  CoboundaryApproximation id = coboundary_approximation(Cocycle::identity(3), golden, 50);
  CHECK(id.defect <= 1e-12);
  for (const auto& b : id.transfer.values) REQUIRE(frobenius_norm(std::get<Matrix>(b) - Matrix::identity(3)) <= 1e-12);

  Cocycle B = Cocycle::rotation3({0, 0, 1}, AngleField{0.3, 1});
  CoboundaryApproximation ex = coboundary_approximation(Cocycle::coboundary(B, golden), golden, 100);
  CHECK(ex.defect <= 2 * pi * ex.resolution_error + 1e-9);

  CHECK_THROWS_AS(coboundary_approximation(Cocycle::quaternion_power(1), golden, 100), class_mismatch_error);

  Cocycle A = Cocycle::product({Cocycle::quaternion_power(2, 0.4),
                                Cocycle::rotation3({0, 1, 0}, AngleField{0.3, 0, 0, 0.5})});
  CoboundaryOptions o;
  o.region_height = 200;
  double d100 = coboundary_approximation(A, golden, 100, o).defect;
  double d200 = coboundary_approximation(A, golden, 200, o).defect;
  CHECK(d200 / d100 >= 0.4);
  CHECK(d200 / d100 <= 0.6);
  CHECK(d100 * 100 <= pi + 0.1);
}
