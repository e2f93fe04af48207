#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "dsplit/base_dynamics.hpp"
#include "dsplit/cocycle.hpp"
#include "dsplit/fiber.hpp"

namespace dsplit {

// sections of the product bundle over the lattice circle
struct FiberSection {
  FiberSpace space;
  std::vector<FiberPoint> values;

  static FiberSection constant(const FiberSpace& space, const FiberPoint& p, std::size_t n);
  std::size_t size() const { return values.size(); }
};

// isometry cocycle over f^steps on the lattice; values[i] maps the fiber over
// i to the fiber over image(i)
struct LatticeCocycle {
  CircleLattice lattice;
  std::vector<Matrix> values;
  long steps = 1;

  static LatticeCocycle sample(const Cocycle& A, const CircleLattice& lattice);
  std::size_t image(std::size_t i) const { return lattice.step(i, steps); }
  std::size_t preimage(std::size_t i) const { return lattice.step(i, -steps); }
  std::vector<std::size_t> next_indices() const;
};

// (g o h)(i) = g(h.image(i)) h(i), a cocycle over f^(g.steps + h.steps)
LatticeCocycle compose(const LatticeCocycle& g, const LatticeCocycle& h);

FiberSection push_section(const LatticeCocycle& g, const FiberSection& s);
double section_distance(const FiberSection& a, const FiberSection& b);
double defect(const LatticeCocycle& g, const FiberSection& s);
// largest fiber distance between lattice neighbours (continuity proxy)
double max_adjacent_jump(const FiberSection& s);

// isotopy of the fiber over each lattice point, H_0 = I
class IsotopyFamily {
 public:
  static IsotopyFamily identity(std::size_t n);
  // contracts a loop of rotations through the unit quaternions; the loop must
  // have trivial class (class_mismatch_error otherwise)
  static IsotopyFamily nullhomotopy(const std::vector<Matrix>& h1);

  Matrix at(std::size_t i, double t) const;
  // unit quaternion q with rotation(q) = at(i, t), continuous in t
  Quat lift(std::size_t i, double t) const;
  std::size_t size() const { return target_.size(); }
  // sup over points of the track length in the SO(3) metric
  double speed() const;

 private:
  std::vector<Quat> target_;
  Quat pivot_;
  bool two_legs_ = false;
};

// g_t = H_{1-t}(f x) g(x), so g_1 = g and sigma is g_0-invariant
struct SectionFamily {
  FiberSpace space;
  std::vector<double> t;
  std::vector<std::vector<FiberPoint>> slices;  // slices[j][i]
};

// Works on the simply connected cover of the fiber (S2 over S2 and Gr(1,3),
// S3 over SO(3)) so every value carries its sheet; fibers are projections.
class Concentration {
 public:
  Concentration(LatticeCocycle g, IsotopyFamily isotopy, FiberSection sigma, LatticeArc arc);

  FiberSection at(double t) const;
  std::vector<CoverPoint> cover_at(double t) const;
  SectionFamily sample(const std::vector<double>& ts) const;
  // max over i outside int K of d(g_t(i) phi_t(i), phi_t(f i))
  double postcondition_error(double t) const;
  const LatticeCocycle& cocycle() const { return g_; }
  const LatticeArc& arc() const { return arc_; }
  const FiberSpace& space() const { return sigma_.space; }
  Matrix g_t(std::size_t i, double t) const;
  // lifted g_t(i)^-1 acting on the cover
  CoverPoint pull_back(std::size_t i, double t, const CoverPoint& c) const;
  int lift_sign() const { return sign_; }

 private:
  CoverPoint sigma_cover(double offset) const;
  CoverPoint side_value(std::size_t end, double t) const;

  LatticeCocycle g_;
  IsotopyFamily iso_;
  FiberSection sigma_;
  LatticeArc arc_;
  std::vector<CoverPoint> sigma_lift_;  // over arc offsets 0..len
  std::vector<Quat> g_lift_;  // SO(3) fiber only
  int sign_ = 1;  // deck sign of the lifted cocycle
  std::vector<long> marked_;  // sorted offsets in [0, len]
  std::size_t ya_ = 0, yb_ = 0;  // first interior visits after a and b
  long la_ = 0, lb_ = 0;
};

// neither end of the arc returns through the other end before entering the
// interior (X_2 misses the boundary)
bool arc_is_regular(const CircleLattice& lat, const LatticeArc& arc);
// drops indices from the far end until the arc is regular
LatticeArc trim_to_regular(const CircleLattice& lat, LatticeArc arc, int& trims);

Concentration concentrate_noninvariance(const LatticeCocycle& g, const IsotopyFamily& isotopy,
                                        const FiberSection& sigma, const LatticeArc& K);

// the rel-boundary homotopy between phi1|K and (g^-1)_* phi1 |K, built from
// the cover values so the two tracks sit on matching sheets
Homotopy boundary_homotopy(const Concentration& conc, int t_count);

FiberSection tower_dissipate(const LatticeCocycle& g, const FiberSection& phi1, const LatticeTower& tower,
                             const Homotopy& zeta);

struct CertificateSummary {
  std::size_t slices = 0;
  double max_adjacent = 0.0;
  bool ok = false;
};

struct AlmostInvariantOptions {
  RegionK region = RegionK::arc(0.0, 0.01);
  // build the tower for this height instead of n (0 = use n)
  int region_height = 0;
  // force n instead of choosing n > b/eps (0 = choose)
  int n = 0;
  bool certificate = true;
};

struct AlmostInvariantResult {
  FiberSection omega;
  int n = 1;
  double b_bound = 0.0;
  double c = 1.0;  // trivialisation Lipschitz constant of the product bundle
  double measured_lipschitz = 0.0;
  double defect = 0.0;
  double input_defect = 0.0;
  LatticeTower tower;
  bool fast_path = false;
  int arc_trims = 0;  // indices dropped from the arc to make it regular
  CertificateSummary certificate;
};

// cover-diameter Lipschitz bound per fiber in its own metric
double b_bound_for(const FiberSpace& space);

AlmostInvariantResult almost_invariant_section(const LatticeCocycle& g, const FiberSection& sigma,
                                               const IsotopyFamily& isotopy, double eps,
                                               const AlmostInvariantOptions& opt = {});

Matrix aligning_rotation(const KPlane& p, const KPlane& q);
Matrix stretch_along(const KPlane& p, double lambda);

struct DominatingPerturbation {
  std::vector<Matrix> values;
  std::vector<std::size_t> next;
  double max_deviation = 0.0;  // sup spectral norm of B - A
  double invariance_error = 0.0;  // sup principal angle of (B omega, omega o f)
  Cocycle cocycle() const { return Cocycle::sampled(values); }
};

DominatingPerturbation dominating_perturbation(const LatticeCocycle& A, const FiberSection& omega, double t);

HomotopyClass is_homotopic_to_coboundary(const Cocycle& A, const TorusTranslation& f, std::size_t samples = 4096);

struct CoboundaryOptions {
  std::size_t lattice = 10000;
  RegionK region = RegionK::arc(0.0, 0.01);
  int region_height = 0;
};

struct CoboundaryApproximation {
  FiberSection transfer;  // SO(3)-valued B
  double defect = 0.0;  // sup d(A(x), B(fx) B(x)^-1)
  int n = 0;
  double measured_lipschitz = 0.0;
  bool fast_path = false;
  double resolution_error = 0.0;
};

CoboundaryApproximation coboundary_approximation(const Cocycle& A, const TorusTranslation& f, int n,
                                                 const CoboundaryOptions& opt = {});

}  // namespace dsplit
