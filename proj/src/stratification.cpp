#include "dsplit/stratification.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "dsplit/errors.hpp"
#include "dsplit/linalg.hpp"

namespace dsplit {

std::vector<int> Stratification::L(std::size_t p) const {
  std::vector<int> out;
  for (int j : hits(p))
    if (j > -ell_minus[p] && j < ell_plus[p]) out.push_back(j);
  return out;
}

std::size_t Stratification::count_x(int i) const {
  return static_cast<std::size_t>(std::count_if(x_depth.begin(), x_depth.end(), [i](int v) { return v >= i; }));
}

std::size_t Stratification::count_w(int i) const {
  return static_cast<std::size_t>(std::count_if(w_depth.begin(), w_depth.end(), [i](int v) { return v >= i; }));
}

int Stratification::max_x_depth() const {
  return x_depth.empty() ? 0 : *std::max_element(x_depth.begin(), x_depth.end());
}

int Stratification::max_w_depth() const {
  return w_depth.empty() ? 0 : *std::max_element(w_depth.begin(), w_depth.end());
}

Stratification stratify(const TorusTranslation& f, const RegionK& K, const GridSpec& grid, double tol, int m) {
  if (tol <= 0.0) tol = grid.half_cell();
  if (m <= 0) m = covering_number(f, K, grid, tol);
  Stratification s;
  s.grid = grid;
  s.region = K;
  s.m = m;
  s.tolerance = tol;
  std::size_t n = grid.size();
  s.ell_plus.resize(n);
  s.ell_minus.resize(n);
  s.x_depth.resize(n);
  s.w_depth.resize(n);
  s.in_k.resize(n);
  s.hit_offset.assign(n + 1, 0);
  for (std::size_t p = 0; p < n; ++p) {
    TorusPoint x = grid.point(p);
    ReturnData r = return_data(f, K, x, m, tol);
    // L = M cap (-l-, l+) holds by construction; re-check it anyway
    for (int j : r.L_set)
      if (!(j > -r.ell_minus && j < r.ell_plus)) throw precondition_error("L set outside its window");
    s.ell_plus[p] = r.ell_plus;
    s.ell_minus[p] = r.ell_minus;
    s.x_depth[p] = static_cast<int>(r.L_set.size());
    s.w_depth[p] = static_cast<int>(r.M_set.size());
    s.in_k[p] = K.signed_distance(x) <= tol ? 1 : 0;
    s.hit_time.insert(s.hit_time.end(), r.M_set.begin(), r.M_set.end());
    s.hit_offset[p + 1] = static_cast<std::uint32_t>(s.hit_time.size());
  }
  return s;
}

HyperplaneFamily hyperplanes_at(const TorusTranslation& f, const RegionK& K, const TorusPoint& x, int lo, int hi,
                                double tol) {
  HyperplaneFamily F;
  F.d = K.dim();
  for (int j = lo; j <= hi; ++j) {
    TorusPoint y = iterate(f, x, j);
    if (K.classify(y, tol) != Membership::boundary) continue;
    std::array<double, 2> g{1.0, 0.0};
    if (K.dim() == 2) {
      // Df = I, so the pulled back tangent line has the radial functional
      auto d = torus_displacement(K.center(), y);
      double n = std::hypot(d[0], d[1]);
      if (n > 0.0) g = {d[0] / n, d[1] / n};
    }
    F.functionals.push_back(g);
    F.times.push_back(j);
  }
  return F;
}

namespace {

int family_rank(const HyperplaneFamily& F) {
  int k = static_cast<int>(F.functionals.size());
  if (k == 0) return 0;
  if (k > max_dim) return F.d;
  Matrix m(k, F.d);
  for (int i = 0; i < k; ++i) {
    double n = std::hypot(F.functionals[i][0], F.d == 2 ? F.functionals[i][1] : 0.0);
    for (int c = 0; c < F.d; ++c) m(i, c) = F.functionals[i][c] / n;
  }
  int rank = 0;
  for (double s : singular_values(m))
    if (s > 1e-8) ++rank;
  return rank;
}

}  // namespace

bool independence_check(const HyperplaneFamily& F) {
  int k = static_cast<int>(F.functionals.size());
  if (k == 0) return true;
  if (k > F.d) return false;
  return family_rank(F) == k;
}

TransversalityReport transverse_hits_check(const TorusTranslation& f, const RegionK& K, int lo, int hi,
                                           const GridSpec& grid, double tol) {
  TransversalityReport rep;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    HyperplaneFamily F = hyperplanes_at(f, K, grid.point(p), lo, hi, tol);
    if (F.functionals.empty()) continue;
    ++rep.points_with_hits;
    if (independence_check(F)) continue;
    ++rep.failures;
    if (rep.witnesses.size() < 16) rep.witnesses.push_back({p, F.times, family_rank(F)});
  }
  rep.pass = rep.failures == 0;
  return rep;
}

NudgeResult nudge_until_transverse(const TorusTranslation& f, const RegionK& K, int lo, int hi,
                                   const GridSpec& grid, double tol, std::mt19937_64& rng, int budget) {
  if (budget < 1) throw precondition_error("nudge budget must be >= 1");
  // interior must hold a grid cell, otherwise no jitter can be admissible
  auto admissible = [&](const RegionK& k) { return k.size() > 2.0 * tol + grid.cell(); };
  if (admissible(K) && transverse_hits_check(f, K, lo, hi, grid, tol).pass) return {K, 0};
  std::uniform_real_distribution<double> u(-1e-3, 1e-3);
  for (int a = 1; a <= budget; ++a) {
    double dx = u(rng), dy = K.dim() == 2 ? u(rng) : 0.0, ds = u(rng);
    if (K.size() + ds <= 0.0) continue;
    RegionK k = K.moved(dx, dy, ds);
    if (!admissible(k)) continue;
    if (transverse_hits_check(f, k, lo, hi, grid, tol).pass) return {k, a};
  }
  throw budget_error("nudge_until_transverse exhausted its budget of " + std::to_string(budget) + " attempts");
}

namespace {

bool subset(std::span<const int> a, std::span<const int> b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace

RegularityReport regularity_report(const Stratification& s) {
  RegularityReport r;
  r.d = s.grid.dim;
  r.m = s.m;
  std::size_t n = s.grid.size();
  int max_x = s.max_x_depth();
  for (std::size_t p = 0; p < n; ++p) {
    if (s.x_depth[p] > r.d) {
      if (r.deep_points == 0) r.deep_witness = p;
      ++r.deep_points;
    }
    r.max_ell_plus = std::max(r.max_ell_plus, s.ell_plus[p]);
    r.max_ell_minus = std::max(r.max_ell_minus, s.ell_minus[p]);
    if (s.ell_plus[p] > s.m - 1 || s.ell_minus[p] > s.m) ++r.bound_violations;
  }
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q : s.grid.forward_neighbors(p)) {
      // (b)
      if (s.x_depth[p] == s.x_depth[q]) {
        if (s.L(p) == s.L(q)) {
          ++r.constancy_pairs;
          if (s.ell_plus[p] != s.ell_plus[q]) {
            if (r.constancy_violations == 0) r.constancy_witness = p;
            ++r.constancy_violations;
          }
        } else {
          ++r.junction_pairs;
        }
      }
      // (c), both orientations of the pair
      for (int o = 0; o < 2; ++o) {
        std::size_t a = o ? q : p, b = o ? p : q;  // a outside K_j, b in K_j
        bool semicontinuous = subset(s.hits(a), s.hits(b));
        for (int j = 0; j <= max_x; ++j) {
          bool b_in = s.in_k[b] && s.x_depth[b] >= j;
          bool a_in = s.in_k[a] && s.x_depth[a] >= j;
          if (!b_in || a_in) continue;
          for (int i = 0; i <= s.w_depth[a]; ++i) {
            if (!semicontinuous) {
              ++r.frontier_skipped;
              continue;
            }
            ++r.frontier_pairs;
            if (s.w_depth[b] < i + 1) ++r.frontier_violations;
          }
        }
      }
    }
  }
  return r;
}

RegularityReport regularity_report(const TorusTranslation& f, const RegionK& K, const GridSpec& grid) {
  return regularity_report(stratify(f, K, grid));
}

std::string RegularityReport::header() const {
  return "regularity proxies (a) X_{d+1} empty, (b) l+ constant on adjacent equal-L pairs, "
         "(c) discrete frontier containment on semicontinuous pairs, (d) l+ <= m-1 and l- <= m; "
         "the homotopy extension property itself is not checked and these proxies may disagree "
         "with it on pathological K";
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[at + i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<std::uint8_t> stratification_raster(const Stratification& s) {
  std::vector<std::uint8_t> out;
  std::size_t n = s.grid.size();
  out.reserve(16 + 16 * n);
  for (char c : {'S', 'T', 'R', 'A'}) out.push_back(static_cast<std::uint8_t>(c));
  put_u32(out, static_cast<std::uint32_t>(s.grid.dim));
  put_u32(out, static_cast<std::uint32_t>(s.grid.res));
  put_u32(out, static_cast<std::uint32_t>(s.grid.dim == 2 ? s.grid.res : 1));
  for (std::size_t p = 0; p < n; ++p)
    for (int v : {s.ell_plus[p], s.ell_minus[p], s.x_depth[p], s.w_depth[p]})
      put_u32(out, static_cast<std::uint32_t>(static_cast<std::int32_t>(v)));
  return out;
}

Raster read_raster(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), "STRA", 4) != 0) throw precondition_error("not a STRA raster");
  Raster r;
  r.d = get_u32(bytes, 4);
  r.nx = get_u32(bytes, 8);
  r.ny = get_u32(bytes, 12);
  std::size_t count = static_cast<std::size_t>(r.nx) * r.ny * 4;
  if (bytes.size() != 16 + 4 * count) throw precondition_error("raster size does not match its header");
  r.cells.resize(count);
  for (std::size_t i = 0; i < count; ++i) r.cells[i] = static_cast<std::int32_t>(get_u32(bytes, 16 + 4 * i));
  return r;
}

}  // namespace dsplit
