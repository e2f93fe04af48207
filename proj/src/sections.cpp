#include "dsplit/sections.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "dsplit/errors.hpp"

namespace dsplit {

namespace {

constexpr double pi = std::numbers::pi;

void require_same(const FiberSection& a, const FiberSection& b) {
  if (!(a.space == b.space) || a.size() != b.size()) throw precondition_error("sections live on different bundles");
}

void require_fits(const LatticeCocycle& g, const FiberSection& s) {
  if (g.values.size() != s.size() || g.lattice.size() != s.size())
    throw precondition_error("cocycle and section sampled on different lattices");
}

}  // namespace

FiberSection FiberSection::constant(const FiberSpace& space, const FiberPoint& p, std::size_t n) {
  validate_point(space, p);
  return {space, std::vector<FiberPoint>(n, p)};
}

LatticeCocycle LatticeCocycle::sample(const Cocycle& A, const CircleLattice& lattice) {
  LatticeCocycle g;
  g.lattice = lattice;
  g.values.reserve(lattice.size());
  for (std::size_t i = 0; i < lattice.size(); ++i) g.values.push_back(A(TorusPoint::circle(lattice.x(i))));
  return g;
}

std::vector<std::size_t> LatticeCocycle::next_indices() const {
  std::vector<std::size_t> out(values.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = image(i);
  return out;
}

LatticeCocycle compose(const LatticeCocycle& g, const LatticeCocycle& h) {
  if (g.values.size() != h.values.size()) throw precondition_error("compose: lattice mismatch");
  LatticeCocycle out;
  out.lattice = h.lattice;
  out.steps = g.steps + h.steps;
  out.values.reserve(h.values.size());
  for (std::size_t i = 0; i < h.values.size(); ++i) out.values.push_back(g.values[h.image(i)] * h.values[i]);
  return out;
}

FiberSection push_section(const LatticeCocycle& g, const FiberSection& s) {
  require_fits(g, s);
  FiberSection out{s.space, std::vector<FiberPoint>(s.size())};
  for (std::size_t i = 0; i < s.size(); ++i) out.values[g.image(i)] = apply_isometry(s.space, g.values[i], s.values[i]);
  return out;
}

double section_distance(const FiberSection& a, const FiberSection& b) {
  require_same(a, b);
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, fiber_distance(a.space, a.values[i], b.values[i]));
  return d;
}

double defect(const LatticeCocycle& g, const FiberSection& s) {
  require_fits(g, s);
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    d = std::max(d, fiber_distance(s.space, apply_isometry(s.space, g.values[i], s.values[i]), s.values[g.image(i)]));
  return d;
}

double max_adjacent_jump(const FiberSection& s) {
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    d = std::max(d, fiber_distance(s.space, s.values[i], s.values[(i + 1) % s.size()]));
  return d;
}

// isotopies

IsotopyFamily IsotopyFamily::identity(std::size_t n) {
  IsotopyFamily h;
  h.target_.assign(n, Quat{});
  return h;
}

IsotopyFamily IsotopyFamily::nullhomotopy(const std::vector<Matrix>& h1) {
  if (h1.empty()) throw precondition_error("empty isotopy target");
  FiberPath loop;
  loop.samples.reserve(h1.size() + 1);
  for (const auto& m : h1) {
    if (!is_orthogonal(m) || determinant(m) < 0.0) throw precondition_error("isotopy target must be SO(3)-valued");
    loop.samples.emplace_back(m);
  }
  loop.samples.emplace_back(h1.front());
  auto lift = lift_rotation_path(loop).samples;
  Quat first = std::get<Quat>(lift.front()), last = std::get<Quat>(lift.back());
  if (qdot(first, last) < 0.0)
    throw class_mismatch_error("target loop is not null-homotopic in SO(3) (its unit-quaternion lift does not close)");

  IsotopyFamily h;
  h.target_.reserve(h1.size());
  // the lift starts on either sheet; both are fine, but prefer the one near 1
  double sign = first.w < 0.0 ? -1.0 : 1.0;
  for (std::size_t i = 0; i < h1.size(); ++i) {
    Quat q = std::get<Quat>(lift[i]);
    h.target_.push_back(sign < 0.0 ? -q : q);
  }
  auto worst = [&](const Quat& z) {
    double w = z.w;  // dot with 1
    for (const Quat& q : h.target_) w = std::min(w, qdot(z, q));
    return w;
  };
  double direct = 1.0;
  for (const Quat& q : h.target_) direct = std::min(direct, q.w);
  if (direct > -0.9) return h;

  // slerp from 1 would pass near the antipode; go through a pivot whose
  // antipode stays away from the whole lift
  std::vector<Quat> candidates;
  for (int e = 0; e < 4; ++e)
    for (double s : {1.0, -1.0}) {
      double v[4] = {0, 0, 0, 0};
      v[e] = s;
      candidates.push_back(Quat{v[0], v[1], v[2], v[3]});
    }
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 256; ++k) candidates.push_back(normalized(Quat{nd(rng), nd(rng), nd(rng), nd(rng)}));
  Quat best;
  double score = -2.0;
  for (const Quat& z : candidates) {
    double s = worst(z);
    if (s > score) score = s, best = z;
  }
  if (score <= -0.9) throw cut_locus_error("no pivot keeps the nullhomotopy away from the cut locus");
  h.pivot_ = best;
  h.two_legs_ = true;
  return h;
}

Quat IsotopyFamily::lift(std::size_t i, double t) const {
  const Quat& q = target_.at(i);
  if (t <= 0.0) return Quat{};
  if (!two_legs_) return slerp(Quat{}, q, std::min(t, 1.0));
  if (t < 0.5) return slerp(Quat{}, pivot_, 2.0 * t);
  return slerp(pivot_, q, std::min(2.0 * t - 1.0, 1.0));
}

Matrix IsotopyFamily::at(std::size_t i, double t) const {
  if (t <= 0.0) return Matrix::identity(3);
  return quaternion_to_rotation(lift(i, t));
}

double IsotopyFamily::speed() const {
  double best = 0.0;
  for (const Quat& q : target_) {
    double len = two_legs_ ? sphere_angle(Quat{}, pivot_) + sphere_angle(pivot_, q) : sphere_angle(Quat{}, q);
    best = std::max(best, 2.0 * len);
  }
  return best;
}

// concentration of non-invariance on an arc

namespace {

bool section_builder_fiber(const FiberSpace& s) {
  return s.kind == FiberKind::sphere2 || s.kind == FiberKind::rotation3 ||
         (s.kind == FiberKind::grassmann && s.k == 1 && s.m == 3);
}

Quat as_quat(const CoverPoint& c) { return Quat{c.v[0], c.v[1], c.v[2], c.v[3]}; }
CoverPoint as_cover(const Quat& q) { return CoverPoint{4, {q.w, q.x, q.y, q.z}}; }

CoverPoint mat_vec(const Matrix& m, const CoverPoint& c, bool transpose) {
  CoverPoint r{3, {}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.v[i] += (transpose ? m(j, i) : m(i, j)) * c.v[j];
  return r;
}

CoverPoint scaled(CoverPoint c, int sign) {
  if (sign < 0)
    for (double& x : c.v) x = -x;
  return c;
}

// geodesic on the cover with the same 1e-6 cut-locus nudge as the homotopies
CoverPoint cover_path(const CoverPoint& a, const CoverPoint& b, double s) {
  if (cover_angle(a, b) <= pi - 1e-6) return cover_slerp(a, b, s);
  CoverPoint c = b;
  int e = std::abs(c.v[0]) < 0.5 ? 0 : 1;
  double p = c.v[e];
  CoverPoint dir{c.n, {}};
  for (int i = 0; i < c.n; ++i) dir.v[i] = (i == e ? 1.0 : 0.0) - p * c.v[i];
  double dn = 0.0;
  for (int i = 0; i < c.n; ++i) dn += dir.v[i] * dir.v[i];
  dn = std::sqrt(dn);
  for (int i = 0; i < c.n; ++i) c.v[i] = std::cos(1e-6) * c.v[i] + std::sin(1e-6) * dir.v[i] / dn;
  return cover_slerp(a, c, s);
}

}  // namespace

Concentration::Concentration(LatticeCocycle g, IsotopyFamily isotopy, FiberSection sigma, LatticeArc arc)
    : g_(std::move(g)), iso_(std::move(isotopy)), sigma_(std::move(sigma)), arc_(arc) {
  const std::size_t n = g_.lattice.size();
  const FiberSpace& sp = sigma_.space;
  if (!section_builder_fiber(sp)) throw precondition_error("section builder supports S2, SO3 and Gr(1,3) fibers");
  if (g_.steps != 1) throw precondition_error("concentration needs a cocycle over f itself");
  require_fits(g_, sigma_);
  if (iso_.size() != n) throw precondition_error("isotopy sampled on a different lattice");
  if (arc_.len < 2 || arc_.len + 1 >= n) throw precondition_error("arc must have interior and not cover the circle");
  for (const Matrix& m : g_.values)
    if (m.rows() != 3 || m.cols() != 3 || !is_orthogonal(m) || determinant(m) < 0.0)
      throw precondition_error("cocycle must take values in SO(3)");

  // (g_0)_* sigma = sigma
  double d0 = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    d0 = std::max(d0, fiber_distance(sp, apply_isometry(sp, g_t(i, 0.0), sigma_.values[i]), sigma_.values[g_.image(i)]));
  if (d0 > 1e-6) throw precondition_error("sigma is not invariant under g_0 (defect " + std::to_string(d0) + ")");
  if (max_adjacent_jump(sigma_) >= 0.5) throw aliasing_error("input section jumps by 0.5 or more between neighbours");

  auto first_visit = [&](std::size_t from, long& steps, bool& through_end) {
    std::size_t i = g_.image(from);
    steps = 1;
    through_end = false;
    while (!arc_.interior(i, n)) {
      if (arc_.contains(i, n)) through_end = true;
      i = g_.image(i);
      ++steps;
    }
    return i;
  };
  bool xa = false, xb = false;
  ya_ = first_visit(arc_.a, la_, xa);
  yb_ = first_visit(arc_.b(n), lb_, xb);
  // an excursion through both ends puts a point of the boundary in X_2
  if (xa || xb) throw regularity_error("both ends of the arc lie on one excursion; the boundary meets X_2");
  marked_ = {0, arc_.offset(ya_, n), arc_.offset(yb_, n), static_cast<long>(arc_.len)};
  std::sort(marked_.begin(), marked_.end());

  FiberPath path;
  for (std::size_t o = 0; o <= arc_.len; ++o) path.samples.push_back(sigma_.values[(arc_.a + o) % n]);
  sigma_lift_ = lift_cover_path(sp, path);

  if (sp.kind == FiberKind::rotation3) {
    FiberPath loop;
    loop.samples.reserve(n);
    for (const Matrix& m : g_.values) loop.samples.emplace_back(m);
    for (const auto& q : lift_rotation_path(loop).samples) g_lift_.push_back(std::get<Quat>(q));
  }
  // pick the deck sign that carries sigma over each end back onto its own
  // sheet at t = 0; none exists when the lifted data disagree
  auto end_sign = [&](std::size_t end) {
    CoverPoint c = side_value(end, 0.0);
    CoverPoint want = sigma_lift_[end == arc_.a ? 0 : arc_.len];
    double ang = cover_angle(c, want);
    if (ang < 1e-6) return 1;
    if (ang > pi - 1e-6) return -1;
    throw precondition_error("lifted sigma is not carried onto itself at t = 0");
  };
  int ca = end_sign(arc_.a), cb = end_sign(arc_.b(n));
  bool single = sp.kind == FiberKind::sphere2;
  for (int s : {1, -1}) {
    if (single && s < 0) break;
    int pa = (s < 0 && (la_ % 2)) ? -ca : ca;
    int pb = (s < 0 && (lb_ % 2)) ? -cb : cb;
    if (pa == 1 && pb == 1) {
      sign_ = s;
      return;
    }
  }
  throw class_mismatch_error("no lift of the cocycle keeps sigma on one sheet at both ends of the arc");
}

Matrix Concentration::g_t(std::size_t i, double t) const { return iso_.at(g_.image(i), 1.0 - t) * g_.values[i]; }

CoverPoint Concentration::pull_back(std::size_t i, double t, const CoverPoint& c) const {
  if (!g_lift_.empty()) {
    // R -> H g R lifts to c -> c lg lh
    Quat q = as_quat(c) * conj(iso_.lift(g_.image(i), 1.0 - t)) * conj(g_lift_[i]);
    return scaled(as_cover(q), sign_);
  }
  CoverPoint v = mat_vec(iso_.at(g_.image(i), 1.0 - t), c, true);
  return scaled(mat_vec(g_.values[i], v, true), sign_);
}

CoverPoint Concentration::sigma_cover(double offset) const {
  double fl = std::floor(offset);
  std::size_t o = static_cast<std::size_t>(std::clamp(fl, 0.0, static_cast<double>(arc_.len)));
  double frac = offset - fl;
  if (frac <= 0.0 || o >= arc_.len) return sigma_lift_[o];
  return cover_slerp(sigma_lift_[o], sigma_lift_[o + 1], frac);
}

CoverPoint Concentration::side_value(std::size_t end, double t) const {
  std::size_t y = end == arc_.a ? ya_ : yb_;
  long steps = end == arc_.a ? la_ : lb_;
  CoverPoint v = sigma_lift_[arc_.offset(y, g_.lattice.size())];
  std::size_t j = y;
  for (long k = 0; k < steps; ++k) {
    j = g_.preimage(j);
    v = pull_back(j, t, v);
  }
  return v;
}

std::vector<CoverPoint> Concentration::cover_at(double t) const {
  if (t < 0.0 || t > 1.0) throw precondition_error("concentration parameter outside [0,1]");
  const std::size_t n = g_.lattice.size();
  const long len = static_cast<long>(arc_.len);
  std::vector<CoverPoint> out(n);
  CoverPoint side_a = side_value(arc_.a, t), side_b = side_value(arc_.b(n), t);

  // closed K: the moving ends are joined to sigma by a cover geodesic over
  // the first t/2 of their sub-arc, sigma is compressed onto the rest
  const double c = 0.5 * t;
  for (std::size_t k = 0; k + 1 < marked_.size(); ++k) {
    long p = marked_[k], q = marked_[k + 1];
    for (long o = p; o <= q; ++o) {
      std::size_t i = (arc_.a + static_cast<std::size_t>(o)) % n;
      CoverPoint v;
      if (o == 0) v = side_a;
      else if (o == len) v = side_b;
      else if (p != 0 && q != len) v = sigma_lift_[o];
      else {
        bool from_p = p == 0;
        double u = from_p ? double(o - p) / (q - p) : double(q - o) / (q - p);
        const CoverPoint& side = from_p ? side_a : side_b;
        double end = from_p ? p : q, span = from_p ? (q - p) : -(q - p);
        if (u < c) v = cover_path(side, sigma_lift_[from_p ? p : q], u / c);
        else v = sigma_cover(end + span * (u - c) / (1.0 - c));
      }
      out[i] = v;
    }
  }
  // everything else is pulled back from its next visit to closed K
  for (long o = 0; o <= len; ++o) {
    std::size_t y = (arc_.a + static_cast<std::size_t>(o)) % n;
    std::size_t i = g_.preimage(y);
    std::size_t from = y;
    while (!arc_.contains(i, n)) {
      out[i] = pull_back(i, t, out[from]);
      from = i;
      i = g_.preimage(i);
    }
  }
  return out;
}

FiberSection Concentration::at(double t) const {
  if (t == 0.0) return sigma_;
  auto c = cover_at(t);
  FiberSection out{sigma_.space, {}};
  out.values.reserve(c.size());
  for (const auto& v : c) out.values.push_back(cover_project(sigma_.space, v));
  return out;
}

SectionFamily Concentration::sample(const std::vector<double>& ts) const {
  SectionFamily fam;
  fam.space = sigma_.space;
  fam.t = ts;
  for (double t : ts) fam.slices.push_back(at(t).values);
  return fam;
}

double Concentration::postcondition_error(double t) const {
  FiberSection phi = at(t);
  const std::size_t n = g_.lattice.size();
  double err = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (t > 0.0 && arc_.interior(i, n)) continue;
    FiberPoint pushed = apply_isometry(phi.space, g_t(i, t), phi.values[i]);
    err = std::max(err, fiber_distance(phi.space, pushed, phi.values[g_.image(i)]));
  }
  return err;
}

bool arc_is_regular(const CircleLattice& lat, const LatticeArc& arc) {
  const std::size_t n = lat.size();
  for (std::size_t end : {arc.a, arc.b(n)}) {
    std::size_t i = lat.next(end);
    while (!arc.interior(i, n)) {
      if (arc.contains(i, n)) return false;
      i = lat.next(i);
    }
  }
  return true;
}

LatticeArc trim_to_regular(const CircleLattice& lat, LatticeArc arc, int& trims) {
  trims = 0;
  while (!arc_is_regular(lat, arc)) {
    if (arc.len <= 2) throw regularity_error("no regular sub-arc found");
    --arc.len;
    ++trims;
  }
  return arc;
}

Concentration concentrate_noninvariance(const LatticeCocycle& g, const IsotopyFamily& isotopy,
                                        const FiberSection& sigma, const LatticeArc& K) {
  return Concentration(g, isotopy, sigma, K);
}

Homotopy boundary_homotopy(const Concentration& conc, int t_count) {
  const LatticeCocycle& g = conc.cocycle();
  const LatticeArc& K = conc.arc();
  const std::size_t n = g.lattice.size();
  auto phi = conc.cover_at(1.0);
  std::vector<CoverPoint> l0, l1;
  for (std::size_t o = 0; o <= K.len; ++o) {
    std::size_t y = (K.a + o) % n;
    l0.push_back(phi[y]);
    l1.push_back(conc.pull_back(y, 1.0, phi[g.image(y)]));
  }
  // ends agree up to rounding; make them exact
  l1.front() = l0.front();
  l1.back() = l0.back();
  return homotopy_from_lifts(conc.space(), std::move(l0), std::move(l1), true, t_count);
}

FiberSection tower_dissipate(const LatticeCocycle& g, const FiberSection& phi1, const LatticeTower& tower,
                             const Homotopy& zeta) {
  require_fits(g, phi1);
  const std::size_t n = g.lattice.size();
  const LatticeArc& K = tower.arc;
  if (tower.height < 1 || tower.certificate <= 0) throw tower_error("tower plan is not valid");
  if (zeta.x_count() != K.len + 1 || !(zeta.space == phi1.space))
    throw precondition_error("homotopy does not match the tower base");
  if (!zeta.rel_endpoints) throw precondition_error("tower homotopy must be relative to the arc ends");
  const int h = tower.height;
  FiberSection omega = phi1;
  for (std::size_t o = 1; o < K.len; ++o) {
    std::size_t y = (K.a + o) % n;
    Matrix G = Matrix::identity(g.values[y].rows());
    std::size_t x = y;
    for (int j = 0; j < h; ++j) {
      omega.values[x] = apply_isometry(phi1.space, G, zeta.at(o, static_cast<double>(j) / h));
      G = g.values[x] * G;
      x = g.image(x);
    }
  }
  return omega;
}

double b_bound_for(const FiberSpace& space) {
  // homotopies run along cover geodesics of length <= pi; SO(3) doubles the metric
  return space.kind == FiberKind::rotation3 ? 2.0 * pi + 0.1 : pi + 0.1;
}

namespace {

// depth-first bisection keeping adjacent slices below the threshold; only
// the current endpoints are held in memory
struct Chain {
  const std::function<FiberSection(double)>& slice;
  CertificateSummary& out;
  double threshold;
  int max_depth;

  void run(double t0, const FiberSection& a, double t1, const FiberSection& b, int depth) {
    double d = section_distance(a, b);
    if (d < threshold || depth >= max_depth) {
      out.max_adjacent = std::max(out.max_adjacent, d);
      ++out.slices;
      return;
    }
    double tm = 0.5 * (t0 + t1);
    FiberSection m = slice(tm);
    run(t0, a, tm, m, depth + 1);
    run(tm, m, t1, b, depth + 1);
  }
};

}  // namespace

AlmostInvariantResult almost_invariant_section(const LatticeCocycle& g, const FiberSection& sigma,
                                               const IsotopyFamily& isotopy, double eps,
                                               const AlmostInvariantOptions& opt) {
  require_fits(g, sigma);
  const std::size_t N = g.lattice.size();
  if (!(eps > 0.0)) throw precondition_error("eps must be positive");
  if (eps < 1.0 / static_cast<double>(N)) throw precondition_error("eps below the lattice resolution");
  AlmostInvariantResult r;
  r.b_bound = b_bound_for(sigma.space);
  r.input_defect = defect(g, sigma);
  if (opt.n == 0 && r.input_defect < eps) {
    r.omega = sigma;
    r.n = 1;
    r.defect = r.input_defect;
    r.fast_path = true;
    r.certificate = {1, 0.0, true};
    return r;
  }
  r.n = opt.n > 0 ? opt.n : static_cast<int>(std::floor(r.b_bound / eps)) + 1;
  int height = opt.region_height > 0 ? opt.region_height : r.n;
  if (height < r.n) throw precondition_error("region height below n");
  LatticeTower plan = build_lattice_tower(g.lattice, lattice_arc_from(g.lattice, opt.region), height);
  plan.height = r.n;
  plan.arc = trim_to_regular(g.lattice, plan.arc, r.arc_trims);
  plan.certificate += r.arc_trims;
  Concentration conc(g, isotopy, sigma, plan.arc);
  r.tower = plan;
  FiberSection phi1 = conc.at(1.0);
  Homotopy zeta = boundary_homotopy(conc, r.n + 1);
  r.measured_lipschitz = measured_lipschitz(zeta);
  r.omega = tower_dissipate(g, phi1, plan, zeta);
  r.defect = defect(g, r.omega);

  if (opt.certificate) {
    // sigma ~ phi_1 through the concentration family, then phi_1 ~ omega by
    // sliding each tower level from t = 1 down to j/n
    std::function<FiberSection(double)> phase1 = [&](double t) { return conc.at(t); };
    CertificateSummary cert;
    Chain c1{phase1, cert, 0.45, 24};
    c1.run(0.0, sigma, 1.0, phi1, 0);
    const LatticeArc& K = plan.arc;
    std::function<FiberSection(double)> phase2 = [&](double s) {
      FiberSection w = phi1;
      for (std::size_t o = 1; o < K.len; ++o) {
        std::size_t y = (K.a + o) % N;
        Matrix G = Matrix::identity(g.values[y].rows());
        std::size_t x = y;
        for (int j = 0; j < r.n; ++j) {
          double tau = j == 0 ? 0.0 : 1.0 - s * (1.0 - static_cast<double>(j) / r.n);
          w.values[x] = apply_isometry(sigma.space, G, zeta.at(o, tau));
          G = g.values[x] * G;
          x = g.image(x);
        }
      }
      return w;
    };
    FiberSection w0 = phase2(0.0);
    cert.max_adjacent = std::max(cert.max_adjacent, section_distance(phi1, w0));
    Chain c2{phase2, cert, 0.45, 24};
    c2.run(0.0, w0, 1.0, r.omega, 0);
    cert.ok = cert.max_adjacent < 0.5;
    r.certificate = cert;
  }
  return r;
}

// plane geometry

Matrix aligning_rotation(const KPlane& p, const KPlane& q) {
  if (p.k() != q.k() || p.m() != q.m()) throw precondition_error("aligning_rotation: shape mismatch");
  const int m = p.m(), k = p.k();
  Svd s = svd(p.frame.transpose() * q.frame);
  Matrix y = p.frame * s.u, z = q.frame * s.v;
  Matrix R = Matrix::identity(m);
  for (int i = 0; i < k; ++i) {
    double c = std::min(1.0, s.s[i]);
    std::vector<double> w(m);
    for (int r = 0; r < m; ++r) w[r] = z(r, i) - y(r, i) * c;
    double sn = norm(w);
    if (sn < 1e-15) continue;
    for (double& v : w) v /= sn;
    double th = std::atan2(sn, c);
    double ct = std::cos(th) - 1.0, st = std::sin(th);
    for (int r = 0; r < m; ++r)
      for (int cc = 0; cc < m; ++cc)
        R(r, cc) += ct * (y(r, i) * y(cc, i) + w[r] * w[cc]) + st * (w[r] * y(cc, i) - y(r, i) * w[cc]);
  }
  return R;
}

Matrix stretch_along(const KPlane& p, double lambda) {
  if (!(lambda > 0.0)) throw precondition_error("stretch factor must be positive");
  const int m = p.m();
  Matrix P = p.frame * p.frame.transpose();
  Matrix S(m, m);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c)
      S(r, c) = (lambda - 1.0 / lambda) * P(r, c) + (r == c ? 1.0 / lambda : 0.0);
  return S;
}

DominatingPerturbation dominating_perturbation(const LatticeCocycle& A, const FiberSection& omega, double t) {
  require_fits(A, omega);
  if (omega.space.kind != FiberKind::grassmann) throw precondition_error("dominating_perturbation needs a plane field");
  if (t < 0.0) throw precondition_error("stretch exponent must be nonnegative");
  DominatingPerturbation out;
  const std::size_t n = omega.size();
  out.values.reserve(n);
  out.next = A.next_indices();
  for (std::size_t i = 0; i < n; ++i) {
    const KPlane& w = std::get<KPlane>(omega.values[i]);
    const KPlane& wf = std::get<KPlane>(omega.values[out.next[i]]);
    KPlane image = grass_action(A.values[i], w);
    Matrix B = stretch_along(wf, std::exp(t)) * aligning_rotation(image, wf) * A.values[i];
    out.max_deviation = std::max(out.max_deviation, spectral_norm(B - A.values[i]));
    out.invariance_error = std::max(out.invariance_error, grass_distance(grass_action(B, w), wf));
    out.values.push_back(B);
  }
  return out;
}

// coboundaries

HomotopyClass is_homotopic_to_coboundary(const Cocycle& A, const TorusTranslation& f, std::size_t samples) {
  if (f.dim != 1) throw precondition_error("coboundary classification needs a circle base");
  if (A.dim() != 3) throw precondition_error("coboundary classification needs an SO(3)-valued cocycle");
  for (std::size_t n = std::max<std::size_t>(samples, 16);; n *= 2) {
    FiberPath loop;
    loop.samples.reserve(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      Matrix m = A(TorusPoint::circle(i == n ? 0.0 : static_cast<double>(i) / n));
      if (i == 0 && (!is_orthogonal(m) || determinant(m) < 0.0))
        throw precondition_error("cocycle is not SO(3)-valued");
      loop.samples.emplace_back(m);
    }
    try {
      check_path(FiberSpace::rotation3(), loop, 0.5);
      return loop_class(FiberSpace::rotation3(), loop);
    } catch (const aliasing_error&) {
      if (n >= (std::size_t{1} << 20)) throw;
    }
  }
}

CoboundaryApproximation coboundary_approximation(const Cocycle& A, const TorusTranslation& f, int n,
                                                 const CoboundaryOptions& opt) {
  if (n < 1) throw precondition_error("n must be positive");
  if (is_homotopic_to_coboundary(A, f) != HomotopyClass::trivial)
    throw class_mismatch_error("cocycle is in the nontrivial class of pi_1(SO(3)); no coboundary is homotopic to it");
  CircleLattice lat(opt.lattice, f.alpha[0]);
  LatticeCocycle g = LatticeCocycle::sample(A, lat);
  const FiberSpace so3 = FiberSpace::rotation3();
  FiberSection sigma{so3, {}};
  sigma.values.reserve(lat.size());
  const Cocycle* tr = A.transfer();
  for (std::size_t i = 0; i < lat.size(); ++i)
    sigma.values.emplace_back(tr ? (*tr)(TorusPoint::circle(lat.x(i))) : Matrix::identity(3));

  CoboundaryApproximation out;
  out.n = n;
  out.resolution_error = lat.resolution_error();
  double d0 = defect(g, sigma);
  if (tr || d0 <= 1e-12) {
    out.transfer = sigma;
    out.defect = d0;
    out.fast_path = true;
    return out;
  }
  // H_1(y) sigma(y)^-1 = (A sigma)(f^-1 y)^-1 makes sigma g_0-invariant
  std::vector<Matrix> h1(lat.size());
  for (std::size_t y = 0; y < lat.size(); ++y) {
    std::size_t x = g.preimage(y);
    h1[y] = std::get<Matrix>(sigma.values[y]) * (g.values[x] * std::get<Matrix>(sigma.values[x])).transpose();
  }
  IsotopyFamily iso = IsotopyFamily::nullhomotopy(h1);
  AlmostInvariantOptions o;
  o.region = opt.region;
  o.region_height = opt.region_height;
  o.n = n;
  o.certificate = false;
  AlmostInvariantResult r = almost_invariant_section(g, sigma, iso, b_bound_for(so3) / n, o);
  out.transfer = r.omega;
  out.defect = r.defect;
  out.measured_lipschitz = r.measured_lipschitz;
  return out;
}

}  // namespace dsplit
