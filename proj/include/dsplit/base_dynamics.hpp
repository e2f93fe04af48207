#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace dsplit {

// reduce to [0,1) with floor; guards the 1.0 that rounding can produce
double wrap_unit(double x);
// signed representative of x mod 1 in [-1/2, 1/2)
double centered_unit(double x);
double circle_distance(double a, double b);

struct TorusPoint {
  int dim = 1;
  std::array<double, 2> coords{};

  static TorusPoint circle(double x);
  static TorusPoint torus(double x, double y);
  double operator[](int i) const { return coords[i]; }
};

double torus_distance(const TorusPoint& a, const TorusPoint& b);
// minimum-image displacement b - a, componentwise in [-1/2, 1/2)
std::array<double, 2> torus_displacement(const TorusPoint& a, const TorusPoint& b);

struct TorusTranslation {
  int dim = 1;
  std::array<double, 2> alpha{};
  // set when alpha comes from a known irrational (golden mean, etc); the
  // numerical witness is minimality_witness
  bool irrationality_witness = false;

  static TorusTranslation circle(double a, bool irrational = true);
  static TorusTranslation torus(double a, double b, bool irrational = true);
};

inline const double golden_alpha = 0.6180339887498949;  // (sqrt 5 - 1)/2

TorusPoint iterate(const TorusTranslation& f, const TorusPoint& x, long j);

// uniform periodic grid: res points per axis, point i at i/res
struct GridSpec {
  int dim = 1;
  std::size_t res = 0;

  std::size_t size() const { return dim == 1 ? res : res * res; }
  TorusPoint point(std::size_t idx) const;
  double cell() const { return 1.0 / static_cast<double>(res); }
  double half_cell() const { return 0.5 / static_cast<double>(res); }
  // 4-neighbours with larger index (each adjacent pair reported once)
  std::vector<std::size_t> forward_neighbors(std::size_t idx) const;
};

enum class Membership { interior, boundary, exterior };

// arc [start, start+length) on the circle or round disk on the 2-torus
class RegionK {
 public:
  static RegionK arc(double start, double length);
  static RegionK disk(double cx, double cy, double radius);

  int dim() const { return dim_; }
  bool is_arc() const { return dim_ == 1; }
  double start() const { return start_; }
  double length() const { return size_; }
  double radius() const { return size_; }
  double size() const { return size_; }
  TorusPoint center() const;
  bool is_full() const { return dim_ == 1 && size_ >= 1.0; }

  // negative inside, zero on the boundary, distance outside
  double signed_distance(const TorusPoint& x) const;
  Membership classify(const TorusPoint& x, double tol) const;
  // same center, size scaled
  RegionK scaled(double factor) const;
  RegionK moved(double dcx, double dcy, double dsize) const;

  std::string describe() const;

 private:
  int dim_ = 1;
  double start_ = 0.0;  // arc start
  double cx_ = 0.0, cy_ = 0.0;  // disk center
  double size_ = 0.0;
};

struct ReturnData {
  int ell_plus = 0;
  int ell_minus = 1;
  std::vector<int> L_set;
  std::vector<int> M_set;
};

// scans: l+ over 0..m-1 (budget error past it), l- over 1..2m+1,
// M over the window [-m, m-1]
ReturnData return_data(const TorusTranslation& f, const RegionK& K, const TorusPoint& x, int m,
                       double tol = 1e-9);

inline constexpr long default_covering_cap = 1000000;

int covering_number(const TorusTranslation& f, const RegionK& K, const GridSpec& grid, double tol,
                    long cap = default_covering_cap);
inline int covering_number(const TorusTranslation& f, const RegionK& K, const GridSpec& grid) {
  return covering_number(f, K, grid, grid.half_cell());
}

struct TowerPlan {
  RegionK region;
  int height = 0;
  double certificate = std::numeric_limits<double>::infinity();
  int halvings = 0;
};

// distance between the sets f^i(K) and f^j(K) minimised over pairs
double tower_gap(const TorusTranslation& f, const RegionK& K, int n);
TowerPlan build_tower(const TorusTranslation& f, const RegionK& K, int n, double min_size = 1e-8);

double minimality_witness(const TorusTranslation& f, const TorusPoint& x, long n);

// finite model of a circle rotation: N points i/N, f(i) = i + shift mod N.
// shift is the integer nearest alpha*N that is coprime with N, so the map is
// a single N-cycle
class CircleLattice {
 public:
  CircleLattice() = default;
  CircleLattice(std::size_t n, double alpha);

  std::size_t size() const { return n_; }
  std::size_t shift() const { return shift_; }
  double alpha() const { return alpha_; }
  double resolution_error() const;
  double x(std::size_t i) const { return static_cast<double>(i) / static_cast<double>(n_); }
  std::size_t next(std::size_t i) const { return (i + shift_) % n_; }
  std::size_t prev(std::size_t i) const { return (i + n_ - shift_) % n_; }
  std::size_t step(std::size_t i, long j) const;
  std::size_t nearest(double x) const;

 private:
  std::size_t n_ = 0;
  std::size_t shift_ = 0;
  double alpha_ = 0.0;
};

// lattice arc {a, a+1, ..., a+len} (indices mod N); ends are the boundary
struct LatticeArc {
  std::size_t a = 0;
  std::size_t len = 0;

  std::size_t b(std::size_t n) const { return (a + len) % n; }
  // position in [0, len] or -1 when outside
  long offset(std::size_t i, std::size_t n) const;
  bool interior(std::size_t i, std::size_t n) const {
    long o = offset(i, n);
    return o > 0 && o < static_cast<long>(len);
  }
  bool contains(std::size_t i, std::size_t n) const { return offset(i, n) >= 0; }
};

struct LatticeTower {
  LatticeArc arc;
  int height = 0;
  // smallest index gap between the arc and one of its iterates, minus len
  long certificate = 0;
  long trimmed = 0;  // indices cut from the requested arc
};

LatticeArc lattice_arc_from(const CircleLattice& lat, const RegionK& K);
// shrinks the arc about its center until it is disjoint from its first n
// iterates on the lattice
LatticeTower build_lattice_tower(const CircleLattice& lat, const LatticeArc& arc, int n);

}  // namespace dsplit
