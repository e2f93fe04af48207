#include "dsplit/base_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "dsplit/errors.hpp"

namespace dsplit {

double wrap_unit(double x) {
  double r = x - std::floor(x);
  return r >= 1.0 ? 0.0 : r;
}

double centered_unit(double x) {
  double r = wrap_unit(x + 0.5) - 0.5;
  return r;
}

double circle_distance(double a, double b) { return std::abs(centered_unit(b - a)); }

TorusPoint TorusPoint::circle(double x) { return TorusPoint{1, {wrap_unit(x), 0.0}}; }

TorusPoint TorusPoint::torus(double x, double y) { return TorusPoint{2, {wrap_unit(x), wrap_unit(y)}}; }

std::array<double, 2> torus_displacement(const TorusPoint& a, const TorusPoint& b) {
  std::array<double, 2> d{};
  for (int i = 0; i < a.dim; ++i) d[i] = centered_unit(b.coords[i] - a.coords[i]);
  return d;
}

double torus_distance(const TorusPoint& a, const TorusPoint& b) {
  auto d = torus_displacement(a, b);
  return std::hypot(d[0], d[1]);
}

TorusTranslation TorusTranslation::circle(double a, bool irrational) {
  return TorusTranslation{1, {a, 0.0}, irrational};
}

TorusTranslation TorusTranslation::torus(double a, double b, bool irrational) {
  return TorusTranslation{2, {a, b}, irrational};
}

TorusPoint iterate(const TorusTranslation& f, const TorusPoint& x, long j) {
  TorusPoint y = x;
  for (int i = 0; i < f.dim; ++i) {
    // long double keeps j*alpha accurate for large j
    long double t = static_cast<long double>(j) * static_cast<long double>(f.alpha[i]);
    t -= std::floor(t);
    y.coords[i] = wrap_unit(x.coords[i] + static_cast<double>(t));
  }
  return y;
}

TorusPoint GridSpec::point(std::size_t idx) const {
  double h = cell();
  if (dim == 1) return TorusPoint::circle(static_cast<double>(idx) * h);
  return TorusPoint::torus(static_cast<double>(idx % res) * h, static_cast<double>(idx / res) * h);
}

std::vector<std::size_t> GridSpec::forward_neighbors(std::size_t idx) const {
  std::vector<std::size_t> out;
  if (dim == 1) {
    out.push_back((idx + 1) % res);
    return out;
  }
  std::size_t ix = idx % res, iy = idx / res;
  out.push_back(iy * res + (ix + 1) % res);
  out.push_back(((iy + 1) % res) * res + ix);
  return out;
}

RegionK RegionK::arc(double start, double length) {
  if (!(length > 0.0)) throw precondition_error("arc length must be positive");
  RegionK k;
  k.dim_ = 1;
  k.start_ = wrap_unit(start);
  k.size_ = std::min(length, 1.0);
  return k;
}

RegionK RegionK::disk(double cx, double cy, double radius) {
  if (!(radius > 0.0)) throw precondition_error("disk radius must be positive");
  if (radius >= 0.5) throw precondition_error("disk radius must stay below 1/2 on the unit torus");
  RegionK k;
  k.dim_ = 2;
  k.cx_ = wrap_unit(cx);
  k.cy_ = wrap_unit(cy);
  k.size_ = radius;
  return k;
}

TorusPoint RegionK::center() const {
  if (dim_ == 1) return TorusPoint::circle(start_ + 0.5 * size_);
  return TorusPoint::torus(cx_, cy_);
}

double RegionK::signed_distance(const TorusPoint& x) const {
  if (dim_ == 2) return torus_distance(x, center()) - size_;
  if (is_full()) return -0.5;
  double u = wrap_unit(x.coords[0] - start_);
  if (u < size_) return -std::min(u, size_ - u);
  return std::min(u - size_, 1.0 - u);
}

Membership RegionK::classify(const TorusPoint& x, double tol) const {
  double s = signed_distance(x);
  if (std::abs(s) <= tol) return Membership::boundary;
  return s < 0.0 ? Membership::interior : Membership::exterior;
}

RegionK RegionK::scaled(double factor) const {
  if (dim_ == 1) {
    double c = start_ + 0.5 * size_;
    double l = size_ * factor;
    return arc(c - 0.5 * l, l);
  }
  return disk(cx_, cy_, size_ * factor);
}

RegionK RegionK::moved(double dcx, double dcy, double dsize) const {
  if (dim_ == 1) {
    double c = start_ + 0.5 * size_ + dcx;
    double l = size_ + dsize;
    return arc(c - 0.5 * l, l);
  }
  return disk(cx_ + dcx, cy_ + dcy, size_ + dsize);
}

std::string RegionK::describe() const {
  char buf[128];
  if (dim_ == 1)
    std::snprintf(buf, sizeof buf, "arc[%.17g, +%.17g)", start_, size_);
  else
    std::snprintf(buf, sizeof buf, "disk(%.17g, %.17g; r=%.17g)", cx_, cy_, size_);
  return buf;
}

ReturnData return_data(const TorusTranslation& f, const RegionK& K, const TorusPoint& x, int m,
                       double tol) {
  if (m < 1) throw precondition_error("covering number must be positive");
  ReturnData r;
  r.ell_plus = -1;
  for (int j = 0; j <= m; ++j)
    if (K.classify(iterate(f, x, j), tol) == Membership::interior) {
      r.ell_plus = j;
      break;
    }
  if (r.ell_plus < 0) throw budget_error("forward return scan exceeded m(K); covering number is broken");
  r.ell_minus = -1;
  for (int j = 1; j <= 2 * m + 1; ++j)
    if (K.classify(iterate(f, x, -j), tol) == Membership::interior) {
      r.ell_minus = j;
      break;
    }
  if (r.ell_minus < 0) throw budget_error("backward return scan exceeded 2m(K)+1");
  for (int j = -m; j <= m - 1; ++j)
    if (K.classify(iterate(f, x, j), tol) == Membership::boundary) {
      r.M_set.push_back(j);
      if (j > -r.ell_minus && j < r.ell_plus) r.L_set.push_back(j);
    }
  return r;
}

int covering_number(const TorusTranslation& f, const RegionK& K, const GridSpec& grid, double tol,
                    long cap) {
  if (K.is_full()) return 1;
  long m = 1;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    TorusPoint x = grid.point(p);
    long j = 0;
    while (K.classify(iterate(f, x, j), tol) != Membership::interior) {
      if (++j >= cap) throw budget_error("covering number exceeds the configured cap");
    }
    m = std::max(m, j + 1);
  }
  return static_cast<int>(m);
}

double tower_gap(const TorusTranslation& f, const RegionK& K, int n) {
  double gap = std::numeric_limits<double>::infinity();
  TorusPoint o = f.dim == 1 ? TorusPoint::circle(0.0) : TorusPoint::torus(0.0, 0.0);
  for (int k = 1; k <= n; ++k) {
    // f^i(K) vs f^j(K) only depends on j - i
    double shift = torus_distance(o, iterate(f, o, k));
    double g = K.is_arc() ? shift - K.length() : shift - 2.0 * K.radius();
    gap = std::min(gap, g);
  }
  return gap;
}

TowerPlan build_tower(const TorusTranslation& f, const RegionK& K, int n, double min_size) {
  if (n < 0) throw precondition_error("tower height must be nonnegative");
  TowerPlan plan{K, n, std::numeric_limits<double>::infinity(), 0};
  if (n == 0) return plan;
  RegionK k = K;
  for (;;) {
    double g = tower_gap(f, k, n);
    if (g > 0.0) {
      plan.region = k;
      plan.certificate = g;
      return plan;
    }
    k = k.scaled(0.5);
    ++plan.halvings;
    if (k.size() < min_size) throw tower_error("region shrank below the minimum size without a disjoint tower");
  }
}

namespace {

double witness_circle(const TorusTranslation& f, const TorusPoint& x, long n) {
  std::vector<double> pts(n);
  for (long j = 0; j < n; ++j) pts[j] = iterate(f, x, j).coords[0];
  std::sort(pts.begin(), pts.end());
  double gap = 1.0 - pts.back() + pts.front();
  for (long j = 1; j < n; ++j) gap = std::max(gap, pts[j] - pts[j - 1]);
  return 0.5 * gap;
}

double witness_torus(const TorusTranslation& f, const TorusPoint& x, long n) {
  // bucket the orbit, then scan a probe grid finer than the bucket grid
  long b = std::max(1L, static_cast<long>(std::sqrt(static_cast<double>(n))));
  std::vector<std::vector<TorusPoint>> buckets(b * b);
  for (long j = 0; j < n; ++j) {
    TorusPoint p = iterate(f, x, j);
    long ix = std::min(b - 1, static_cast<long>(p.coords[0] * b));
    long iy = std::min(b - 1, static_cast<long>(p.coords[1] * b));
    buckets[iy * b + ix].push_back(p);
  }
  long probes = 4 * b;
  double worst = 0.0;
  for (long py = 0; py < probes; ++py)
    for (long px = 0; px < probes; ++px) {
      TorusPoint q = TorusPoint::torus((px + 0.5) / probes, (py + 0.5) / probes);
      long qx = std::min(b - 1, static_cast<long>(q.coords[0] * b));
      long qy = std::min(b - 1, static_cast<long>(q.coords[1] * b));
      double best = std::numeric_limits<double>::infinity();
      for (long r = 0; r <= b; ++r) {
        // every point outside ring r is at least (r - 1)/b away
        if (static_cast<double>(r - 1) / b > best) break;
        for (long dy = -r; dy <= r; ++dy)
          for (long dx = -r; dx <= r; ++dx) {
            if (std::max(std::abs(dx), std::abs(dy)) != r) continue;
            const auto& cell = buckets[((qy + dy) % b + b) % b * b + ((qx + dx) % b + b) % b];
            for (const auto& p : cell) best = std::min(best, torus_distance(p, q));
          }
        if (2 * r + 1 >= b) break;
      }
      worst = std::max(worst, best);
    }
  return worst;
}

}  // namespace

double minimality_witness(const TorusTranslation& f, const TorusPoint& x, long n) {
  if (n < 1) throw precondition_error("minimality witness needs n >= 1");
  return f.dim == 1 ? witness_circle(f, x, n) : witness_torus(f, x, n);
}

CircleLattice::CircleLattice(std::size_t n, double alpha) : n_(n), alpha_(wrap_unit(alpha)) {
  if (n < 2) throw precondition_error("lattice needs at least two points");
  double target = alpha_ * static_cast<double>(n);
  long base = static_cast<long>(std::floor(target));
  long best = -1;
  double best_d = 0.0;
  for (long off = -64; off <= 64; ++off) {
    long s = base + off;
    if (s <= 0 || s >= static_cast<long>(n)) continue;
    if (std::gcd(static_cast<std::size_t>(s), n) != 1) continue;
    double d = std::abs(static_cast<double>(s) - target);
    if (best < 0 || d < best_d) {
      best = s;
      best_d = d;
    }
  }
  if (best < 0) throw precondition_error("no coprime lattice shift near alpha*N");
  shift_ = static_cast<std::size_t>(best);
}

double CircleLattice::resolution_error() const {
  return circle_distance(alpha_, static_cast<double>(shift_) / static_cast<double>(n_));
}

std::size_t CircleLattice::step(std::size_t i, long j) const {
  long long n = static_cast<long long>(n_);
  long long jm = ((j % n) + n) % n;
  return static_cast<std::size_t>((static_cast<long long>(i) + (jm * static_cast<long long>(shift_)) % n) % n);
}

std::size_t CircleLattice::nearest(double x) const {
  return static_cast<std::size_t>(std::llround(wrap_unit(x) * static_cast<double>(n_))) % n_;
}

long LatticeArc::offset(std::size_t i, std::size_t n) const {
  std::size_t o = (i + n - a % n) % n;
  return o <= len ? static_cast<long>(o) : -1;
}

LatticeArc lattice_arc_from(const CircleLattice& lat, const RegionK& K) {
  if (!K.is_arc()) throw precondition_error("lattice arcs need a circle region");
  double n = static_cast<double>(lat.size());
  long first = static_cast<long>(std::ceil(K.start() * n - 1e-9));
  long last = static_cast<long>(std::floor((K.start() + K.length()) * n + 1e-9));
  if (last - first < 2) throw precondition_error("arc holds no interior lattice point");
  LatticeArc arc;
  arc.a = static_cast<std::size_t>(first) % lat.size();
  arc.len = static_cast<std::size_t>(last - first);
  return arc;
}

LatticeTower build_lattice_tower(const CircleLattice& lat, const LatticeArc& arc, int n) {
  long nn = static_cast<long>(lat.size());
  long min_gap = nn;
  long g = 0;
  for (int j = 1; j <= n; ++j) {
    g = (g + static_cast<long>(lat.shift())) % nn;
    min_gap = std::min(min_gap, std::min(g, nn - g));
  }
  // largest centred sub-arc whose first n iterates miss it
  long len = std::min(static_cast<long>(arc.len), min_gap - 1);
  if (len < 2) throw tower_error("lattice arc too short for a disjoint tower of this height");
  LatticeTower t{arc, n, 0, 0};
  t.trimmed = static_cast<long>(arc.len) - len;
  t.arc.a = (arc.a + static_cast<std::size_t>(t.trimmed / 2)) % lat.size();
  t.arc.len = static_cast<std::size_t>(len);
  t.certificate = min_gap - len;
  return t;
}

}  // namespace dsplit
