#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dsplit/base_dynamics.hpp"

namespace dsplit {

// per-grid-point return data and strata depths
struct Stratification {
  GridSpec grid;
  RegionK region = RegionK::arc(0.0, 1.0);
  int m = 1;  // m(K) on this grid
  double tolerance = 0.0;
  std::vector<int> ell_plus, ell_minus;
  std::vector<int> x_depth;  // #L
  std::vector<int> w_depth;  // #M
  std::vector<std::uint8_t> in_k;  // closed K (signed distance <= tol)
  std::vector<std::uint32_t> hit_offset;  // CSR over M sets
  std::vector<int> hit_time;

  std::span<const int> hits(std::size_t p) const {
    return {hit_time.data() + hit_offset[p], hit_time.data() + hit_offset[p + 1]};
  }
  std::vector<int> L(std::size_t p) const;
  std::size_t count_x(int i) const;
  std::size_t count_w(int i) const;
  int max_x_depth() const;
  int max_w_depth() const;
};

// tol <= 0 selects half a grid cell; m <= 0 computes m(K) on the grid
Stratification stratify(const TorusTranslation& f, const RegionK& K, const GridSpec& grid, double tol = 0.0,
                        int m = 0);

struct HyperplaneFamily {
  int d = 1;
  std::vector<std::array<double, 2>> functionals;  // unit norm
  std::vector<int> times;
};

// hits of x at the boundary for j in [lo, hi]
HyperplaneFamily hyperplanes_at(const TorusTranslation& f, const RegionK& K, const TorusPoint& x, int lo, int hi,
                                double tol);
bool independence_check(const HyperplaneFamily& F);

struct TransversalityWitness {
  std::size_t point = 0;
  std::vector<int> times;
  int rank = 0;
};

struct TransversalityReport {
  bool pass = true;
  std::size_t points_with_hits = 0;
  std::size_t failures = 0;
  std::vector<TransversalityWitness> witnesses;  // first few failures
};

TransversalityReport transverse_hits_check(const TorusTranslation& f, const RegionK& K, int lo, int hi,
                                           const GridSpec& grid, double tol);

struct NudgeResult {
  RegionK region;
  int attempts = 0;
};

// jitters center and size by at most 1e-3 per coordinate until the check
// passes; budget_error when the attempts run out
NudgeResult nudge_until_transverse(const TorusTranslation& f, const RegionK& K, int lo, int hi,
                                   const GridSpec& grid, double tol, std::mt19937_64& rng, int budget);

struct RegularityReport {
  int d = 1;
  int m = 1;
  // (a) X_{d+1} empty
  std::size_t deep_points = 0;
  std::size_t deep_witness = 0;
  // (b) l+ constant across adjacent points with the same L set
  std::size_t constancy_pairs = 0;
  std::size_t constancy_violations = 0;
  std::size_t junction_pairs = 0;  // same depth, different L: not compared
  std::size_t constancy_witness = 0;
  // (c) frontier: p in W_i \ K_j next to q in K_j with M(p) in M(q) forces q in W_{i+1}
  std::size_t frontier_pairs = 0;
  std::size_t frontier_violations = 0;
  std::size_t frontier_skipped = 0;
  // (d) return time bounds
  std::size_t bound_violations = 0;
  int max_ell_plus = 0;
  int max_ell_minus = 0;

  bool pass_a() const { return deep_points == 0; }
  bool pass_b() const { return constancy_violations == 0; }
  bool pass_c() const { return frontier_violations == 0; }
  bool pass_d() const { return bound_violations == 0; }
  bool pass() const { return pass_a() && pass_b() && pass_c() && pass_d(); }
  std::string header() const;
};

RegularityReport regularity_report(const Stratification& s);
RegularityReport regularity_report(const TorusTranslation& f, const RegionK& K, const GridSpec& grid);

// dense raster, little endian: "STRA", u32 d, u32 nx, u32 ny, then row-major
// per point i32 l+, l-, #L, #M
std::vector<std::uint8_t> stratification_raster(const Stratification& s);

struct Raster {
  std::uint32_t d = 0, nx = 0, ny = 0;
  std::vector<std::int32_t> cells;  // 4 per point
};
Raster read_raster(std::span<const std::uint8_t> bytes);

}  // namespace dsplit
