#include <cmath>
#include <random>

#include <doctest.h>

#include "dsplit/errors.hpp"
#include "dsplit/stratification.hpp"

using namespace dsplit;

namespace {

double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

const TorusTranslation disk_f = TorusTranslation::torus(0.6571, 0.2317);
const RegionK disk_k = RegionK::disk(0.0, 0.0, 0.457);

const Stratification& disk_strata() {
  static const Stratification s = stratify(disk_f, disk_k, GridSpec{2, 1024});
  return s;
}

// the arc [0, 2 alpha mod 1): 0 hits both ends, at times 0 and 2
RegionK double_hit_arc() {
  double a = 2 * golden_alpha;
  return RegionK::arc(0.0, a - std::floor(a));
}

HyperplaneFamily family(std::initializer_list<std::array<double, 2>> rows, int d) {
  HyperplaneFamily F;
  F.d = d;
  int t = 0;
  for (auto r : rows) {
    F.functionals.push_back(r);
    F.times.push_back(t++);
  }
  return F;
}

}  // namespace

TEST_CASE("reference disk strata") {
  const Stratification& s = disk_strata();
  CHECK(s.m == 3);
  CHECK(s.count_x(1) == 7590);
  CHECK(s.count_x(2) == 22);
  CHECK(s.count_x(3) == 0);
  RegularityReport r = regularity_report(s);
  CHECK(r.pass());
  CHECK(r.max_ell_plus <= s.m - 1);
  CHECK(r.max_ell_minus <= s.m);
}

TEST_CASE("strata depths agree with pointwise return data") {
  const Stratification& s = disk_strata();
  std::mt19937_64 rng(501);
  for (int rep = 0; rep < 2000; ++rep) {
    std::size_t p = rng() % s.grid.size();
    ReturnData r = return_data(disk_f, disk_k, s.grid.point(p), s.m, s.tolerance);
    CHECK(static_cast<int>(r.L_set.size()) == s.x_depth[p]);
    CHECK(static_cast<int>(r.M_set.size()) == s.w_depth[p]);
    CHECK(r.ell_plus == s.ell_plus[p]);
    CHECK(r.L_set == s.L(p));
  }
}

TEST_CASE("X_i is contained in W_i and W empties past 2m") {
  const Stratification& s = disk_strata();
  for (std::size_t p = 0; p < s.grid.size(); ++p) REQUIRE(s.x_depth[p] <= s.w_depth[p]);
  for (int i = 1; i <= 2 * s.m + 1; ++i) CHECK(s.count_x(i) <= s.count_w(i));
  CHECK(s.count_w(2 * s.m + 1) == 0);
}

TEST_CASE("transverse reference disk stays within depth d") {
  auto t = transverse_hits_check(disk_f, disk_k, -3, 2, GridSpec{2, 512}, 0.5 / 512);
  CHECK(t.pass);
  Stratification s = stratify(disk_f, disk_k, GridSpec{2, 512});
  CHECK(s.max_x_depth() <= 2);
}

TEST_CASE("independence of functional families") {
  CHECK(independence_check(family({{1, 0}, {0, 1}}, 2)));
  CHECK_FALSE(independence_check(family({{0.6, 0.8}, {0.6, 0.8}}, 2)));
  CHECK_FALSE(independence_check(family({{1, 0}, {0, 1}, {0.6, 0.8}}, 2)));
  CHECK(independence_check(family({{1, 0}}, 1)));
  CHECK_FALSE(independence_check(family({{1, 0}, {1, 0}}, 1)));
  CHECK(independence_check(family({}, 2)));
}

TEST_CASE("hyperplanes at a point with no hits") {
  auto F = hyperplanes_at(disk_f, disk_k, TorusPoint::torus(0.01, 0.02), 0, 0, 1e-9);
  CHECK(F.functionals.empty());
}

TEST_CASE("two circle hits give the radial functionals") {
  // x on dK with f(x) on dK: a crossing of dK and f^-1(dK)
  const double r = disk_k.radius(), ax = disk_f.alpha[0] - 1.0, ay = disk_f.alpha[1];
  double d = std::hypot(ax, ay);
  REQUIRE(d < 2 * r);
  double h = std::sqrt(r * r - d * d / 4);
  // centers 0 and -a; crossing at -a/2 + h * perp
  double px = -ax / 2 - h * ay / d, py = -ay / 2 + h * ax / d;
  TorusPoint x = TorusPoint::torus(px, py);
  auto F = hyperplanes_at(disk_f, disk_k, x, 0, 1, 1e-9);
  REQUIRE(F.functionals.size() == 2);
  CHECK(F.times == std::vector<int>{0, 1});
  // finite differences of |y - c| - r at y = x and y = f(x)
  auto grad = [&](double yx, double yy) {
    const double e = 1e-7;
    auto g = [&](double u, double v) { return std::hypot(u, v) - r; };
    double gx = (g(yx + e, yy) - g(yx - e, yy)) / (2 * e), gy = (g(yx, yy + e) - g(yx, yy - e)) / (2 * e);
    double n = std::hypot(gx, gy);
    return std::array<double, 2>{gx / n, gy / n};
  };
  auto g0 = grad(px, py), g1 = grad(px + ax, py + ay);
  CHECK(F.functionals[0][0] == doctest::Approx(g0[0]).epsilon(1e-6));
  CHECK(F.functionals[0][1] == doctest::Approx(g0[1]).epsilon(1e-6));
  CHECK(F.functionals[1][0] == doctest::Approx(g1[0]).epsilon(1e-6));
  CHECK(F.functionals[1][1] == doctest::Approx(g1[1]).epsilon(1e-6));
  CHECK(independence_check(F));
}

TEST_CASE("tangent circles give dependent functionals") {
  const double ax = 0.2, ay = 0.1;
  auto f = TorusTranslation::torus(ax, ay);
  double r = std::hypot(ax, ay) / 2;
  RegionK K = RegionK::disk(0.5, 0.5, r);
  // dK and f^-1(dK) touch at the midpoint of their centers
  TorusPoint x = TorusPoint::torus(0.5 - ax / 2, 0.5 - ay / 2);
  auto F = hyperplanes_at(f, K, x, 0, 1, 1e-9);
  REQUIRE(F.functionals.size() == 2);
  CHECK_FALSE(independence_check(F));
}

TEST_CASE("a single hit on the circle gives one functional") {
  auto f = TorusTranslation::circle(golden_alpha);
  RegionK K = RegionK::arc(0.1, 0.2);
  auto F = hyperplanes_at(f, K, TorusPoint::circle(0.3), 0, 0, 1e-9);
  REQUIRE(F.functionals.size() == 1);
  CHECK(F.functionals[0][0] != 0.0);
  CHECK(independence_check(F));
}

TEST_CASE("the constructed double hit is flagged, then nudged") {
  auto f = TorusTranslation::circle(golden_alpha);
  GridSpec g{1, 10000};
  RegionK K = double_hit_arc();
  int m = covering_number(f, K, g);
  auto t = transverse_hits_check(f, K, -m, m - 1, g, g.half_cell());
  CHECK_FALSE(t.pass);
  REQUIRE(!t.witnesses.empty());
  CHECK(t.witnesses.size() <= t.failures);
  auto at0 = hyperplanes_at(f, K, TorusPoint::circle(0.0), 0, 2, 1e-9);
  CHECK(at0.times == std::vector<int>{0, 2});
  CHECK_FALSE(independence_check(at0));
  CHECK_FALSE(regularity_report(f, K, g).pass());

  std::mt19937_64 rng(10);
  NudgeResult n = nudge_until_transverse(f, K, -m, m - 1, g, g.half_cell(), rng, 50);
  CHECK(n.attempts >= 1);
  CHECK(n.attempts <= 50);
  int m2 = covering_number(f, n.region, g);
  CHECK(transverse_hits_check(f, n.region, -m2, m2 - 1, g, g.half_cell()).pass);
  CHECK(std::abs(centered_unit(n.region.start())) <= 1e-3 + 1e-12);
}

TEST_CASE("nudge is idempotent on passing inputs") {
  auto f = TorusTranslation::torus(0.6571, 0.2317);
  GridSpec g{2, 256};
  std::mt19937_64 rng(502);
  NudgeResult n = nudge_until_transverse(f, disk_k, -3, 2, g, g.half_cell(), rng, 10);
  CHECK(n.attempts == 0);
  CHECK(n.region.radius() == disk_k.radius());
  CHECK(n.region.center()[0] == disk_k.center()[0]);
  CHECK(n.region.center()[1] == disk_k.center()[1]);
}

TEST_CASE("a degenerate region exhausts the budget") {
  auto f = TorusTranslation::circle(golden_alpha);
  GridSpec g{1, 1000};
  std::mt19937_64 rng(503);
  CHECK_THROWS_AS(nudge_until_transverse(f, RegionK::arc(0.3, 1e-6), -3, 3, g, g.half_cell(), rng, 20), budget_error);
}

TEST_CASE("generic arcs have empty X_2 after nudging") {
  auto f = TorusTranslation::circle(golden_alpha);
  GridSpec g{1, 4000};
  std::mt19937_64 rng(504);
  for (int rep = 0; rep < 8; ++rep) {
    RegionK K = RegionK::arc(unit_draw(rng), 0.05 + 0.3 * unit_draw(rng));
    int m = covering_number(f, K, g);
    K = nudge_until_transverse(f, K, -m, m - 1, g, g.half_cell(), rng, 50).region;
    Stratification s = stratify(f, K, g);
    CHECK(s.count_x(2) == 0);
    CHECK(regularity_report(s).pass());
  }
}

TEST_CASE("full circle is vacuously regular") {
  auto f = TorusTranslation::circle(golden_alpha);
  Stratification s = stratify(f, RegionK::arc(0.0, 1.0), GridSpec{1, 500});
  CHECK(s.m == 1);
  CHECK(regularity_report(s).pass());
  for (std::size_t p = 0; p < s.grid.size(); ++p) CHECK(s.ell_plus[p] == 0);
}

TEST_CASE("raster round trip") {
  Stratification s = stratify(disk_f, disk_k, GridSpec{2, 64});
  auto bytes = stratification_raster(s);
  CHECK(bytes.size() == 16 + 16 * s.grid.size());
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "STRA");
  Raster r = read_raster(bytes);
  CHECK(r.d == 2);
  CHECK(r.nx == 64);
  CHECK(r.ny == 64);
  for (std::size_t p = 0; p < s.grid.size(); ++p) {
    CHECK(r.cells[4 * p] == s.ell_plus[p]);
    CHECK(r.cells[4 * p + 1] == s.ell_minus[p]);
    CHECK(r.cells[4 * p + 2] == s.x_depth[p]);
    CHECK(r.cells[4 * p + 3] == s.w_depth[p]);
  }
  bytes.resize(bytes.size() - 1);
  CHECK_THROWS(read_raster(bytes));
}
