#include "dsplit/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "dsplit/errors.hpp"
#include "dsplit/sections.hpp"

namespace dsplit {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr double pi = std::numbers::pi;

// ---- manifest

void Manifest::value(const std::string& key, double v, const std::string& op) { values_[key] = {v, op}; }

bool Manifest::check(const std::string& name, double measured, const std::string& relation, double required,
                     const std::string& op) {
  bool ok = false;
  if (relation == "<=") ok = measured <= required;
  else if (relation == "<") ok = measured < required;
  else if (relation == ">=") ok = measured >= required;
  else if (relation == ">") ok = measured > required;
  else if (relation == "==") ok = measured == required;
  else throw precondition_error("unknown check relation " + relation);
  checks_.push_back({name, ok, measured, relation, required, 0.0, op});
  return ok;
}

bool Manifest::check_range(const std::string& name, double measured, double lo, double hi, const std::string& op) {
  bool ok = measured >= lo && measured <= hi;
  checks_.push_back({name, ok, measured, "in", lo, hi, op});
  return ok;
}

bool Manifest::check_flag(const std::string& name, bool ok, const std::string& op) {
  checks_.push_back({name, ok, ok ? 1.0 : 0.0, "==", 1.0, 0.0, op});
  return ok;
}

void Manifest::step(const std::string& name, const std::string& status, const std::string& detail) {
  steps_.push_back({name, status, detail});
}

void Manifest::artifact(const std::string& file, const std::string& hash) { artifacts_.emplace_back(file, hash); }

bool Manifest::pass() const {
  for (const auto& c : checks_)
    if (!c.pass) return false;
  for (const auto& s : steps_)
    if (s.status == "error") return false;
  return true;
}

double Manifest::get(const std::string& key) const {
  auto it = values_.find(key);
  return it == values_.end() ? std::numeric_limits<double>::quiet_NaN() : it->second.first;
}

const CheckRecord* Manifest::find_check(const std::string& name) const {
  for (const auto& c : checks_)
    if (c.name == name) return &c;
  return nullptr;
}

json Manifest::to_json(const ExperimentConfig& c) const {
  json j;
  j["schema_version"] = c.schema_version;
  j["experiment"] = to_string(c.kind);
  j["id"] = c.id;
  j["seed"] = c.seed;
  j["config_hash"] = c.hash;
  json vals = json::object();
  for (const auto& [k, v] : values_) vals[k] = {{"value", v.first}, {"op", v.second}};
  j["values"] = vals;
  json checks = json::array();
  for (const auto& ck : checks_) {
    json r = {{"name", ck.name}, {"pass", ck.pass}, {"measured", ck.measured}, {"relation", ck.relation}, {"op", ck.op}};
    if (ck.relation == "in") r["required"] = {ck.required, ck.required_hi};
    else r["required"] = ck.required;
    checks.push_back(r);
  }
  j["checks"] = checks;
  json steps = json::array();
  for (const auto& s : steps_) steps.push_back({{"name", s.name}, {"status", s.status}, {"detail", s.detail}});
  j["steps"] = steps;
  json arts = json::array();
  for (const auto& [f, h] : artifacts_) arts.push_back({{"file", f}, {"fnv1a", h}});
  j["artifacts"] = arts;
  j["pass"] = pass();
  return j;
}

// ---- io

std::string output_root(const std::string& fallback) {
  const char* env = std::getenv("DSPLIT_OUTPUT_ROOT");
  return env && *env ? std::string(env) : fallback;
}

std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : cols_(header.size()) { row_text(header); }

void CsvWriter::row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  for (double v : values) cells.push_back(csv_number(v));
  row_text(cells);
}

void CsvWriter::row_text(const std::vector<std::string>& cells) {
  if (cells.size() != cols_) throw precondition_error("csv row width differs from header");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ += ',';
    out_ += cells[i];
  }
  out_ += '\n';
}

void write_file(const std::string& path, const std::string& bytes) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw error("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw error("short write on " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

using clock_type = std::chrono::steady_clock;

double since(clock_type::time_point t0) { return std::chrono::duration<double>(clock_type::now() - t0).count(); }

// portable draws: the standard distributions are implementation defined
double draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
double draw(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * draw(rng); }
int draw_int(std::mt19937_64& rng, int lo, int hi) { return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1)); }
double gaussian(std::mt19937_64& rng) {
  double u = 1.0 - draw(rng), v = draw(rng);
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * pi * v);
}
Vec3 random_axis(std::mt19937_64& rng) {
  double z = draw(rng, -1.0, 1.0), ph = draw(rng, 0.0, 2.0 * pi), r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(ph), r * std::sin(ph), z};
}

std::string tag_of(const FiberSpace& s) {
  std::string out;
  for (char ch : s.name())
    if (std::isalnum(static_cast<unsigned char>(ch))) out += ch;
    else if (ch == ',') out += '_';
  return out;
}

struct Ctx {
  const ExperimentConfig& c;
  Manifest& m;
  std::string dir;
  std::vector<std::pair<std::string, double>>& timing;

  void save(const std::string& name, const std::string& bytes) {
    write_file((fs::path(dir) / name).string(), bytes);
    m.artifact(name, fnv1a_hex(bytes));
  }

  // runs one step; library errors end the step, not the run
  bool attempt(const std::string& name, const std::function<void()>& fn) {
    auto t0 = clock_type::now();
    bool ok = true;
    try {
      fn();
      m.step(name, "ok");
    } catch (const class_mismatch_error& e) {
      m.step(name, "obstructed", e.what());
      ok = false;
    } catch (const std::exception& e) {
      m.step(name, "error", e.what());
      ok = false;
    }
    timing.emplace_back(name, since(t0));
    return ok;
  }
};

CircleLattice lattice_of(const ExperimentConfig& c) {
  if (c.base.dim != 1) throw precondition_error("this experiment needs a circle base (base.d = 1)");
  return CircleLattice(c.grid, c.base.alpha[0]);
}

IsotopyFamily reference_isotopy(const LatticeCocycle& g) {
  // H_1(y) = A(f^-1 y)^-1, so g_0 = I fixes any constant section
  std::vector<Matrix> h1(g.lattice.size());
  for (std::size_t y = 0; y < h1.size(); ++y) h1[y] = g.values[g.preimage(y)].transpose();
  return IsotopyFamily::nullhomotopy(h1);
}

FiberSection reference_section(const FiberSpace& s, std::size_t n) {
  switch (s.kind) {
    case FiberKind::sphere2: return FiberSection::constant(s, Vec3{0, 0, 1}, n);
    case FiberKind::rotation3: return FiberSection::constant(s, Matrix::identity(3), n);
    case FiberKind::grassmann:
      if (s.k == 1 && s.m == 3) return FiberSection::constant(s, KPlane::coordinate(3, {2}), n);
      break;
    default: break;
  }
  throw precondition_error("no reference section for fiber " + s.name());
}

// ratio checks for every pair (n, 2n) among the heights
void halving_checks(Manifest& m, const std::map<int, double>& defects, const std::string& op) {
  for (const auto& [n, d] : defects) {
    auto it = defects.find(2 * n);
    if (it == defects.end()) continue;
    std::string k = "halving_ratio_n" + std::to_string(2 * n);
    m.value(k, it->second / d, op);
    m.check_range(k, it->second / d, 0.4, 0.6, op);
  }
}

// ---- kinds

void run_defect_scaling(Ctx& cx) {
  const ExperimentConfig& c = cx.c;
  CircleLattice lat = lattice_of(c);
  Cocycle A = c.has_cocycle ? c.cocycle : Cocycle::quaternion_power(2, 0.3);
  std::vector<int> heights = c.tower_heights.empty() ? std::vector<int>{25, 50, 100, 200} : c.tower_heights;
  RegionK region = c.has_region ? c.region : RegionK::arc(0.0, 0.01);
  int top = *std::max_element(heights.begin(), heights.end());
  cx.m.value("lattice_resolution_error", lat.resolution_error(), "CircleLattice");

  LatticeCocycle g;
  IsotopyFamily iso;
  FiberSection sigma;
  if (!cx.attempt("setup", [&] {
        g = LatticeCocycle::sample(A, lat);
        iso = reference_isotopy(g);
        sigma = reference_section(c.fiber, lat.size());
        cx.m.value("isotopy_speed", iso.speed(), "IsotopyFamily::speed");
        cx.m.value("input_defect", defect(g, sigma), "defect");
      }))
    return;

  CsvWriter csv({"n", "defect", "lipschitz", "defect_times_n", "arc_len", "tower_certificate", "arc_trims"});
  std::map<int, double> defects;
  for (int n : heights) {
    std::string k = "n" + std::to_string(n);
    cx.attempt("tower_dissipate_" + k, [&] {
      AlmostInvariantOptions o;
      o.region = region;
      o.region_height = top;  // one K for every n
      o.n = n;
      o.certificate = false;
      auto r = almost_invariant_section(g, sigma, iso, c.thresholds.epsilon, o);
      defects[n] = r.defect;
      cx.m.value("defect_" + k, r.defect, "almost_invariant_section");
      cx.m.value("lipschitz_" + k, r.measured_lipschitz, "measured_lipschitz");
      cx.m.value("arc_len_" + k, static_cast<double>(r.tower.arc.len), "build_lattice_tower");
      cx.m.check("defect_bound_" + k, r.defect * n, "<=", r.measured_lipschitz + 1.0, "almost_invariant_section");
      csv.row({double(n), r.defect, r.measured_lipschitz, r.defect * n, double(r.tower.arc.len),
               double(r.tower.certificate), double(r.arc_trims)});
    });
  }
  cx.save("defect_scaling.csv", csv.str());
  halving_checks(cx.m, defects, "almost_invariant_section");

  cx.attempt("epsilon_run", [&] {
    AlmostInvariantOptions o;
    o.region = region;
    auto r = almost_invariant_section(g, sigma, iso, c.thresholds.epsilon, o);
    cx.m.value("epsilon_n", r.n, "almost_invariant_section");
    cx.m.value("epsilon_defect", r.defect, "almost_invariant_section");
    cx.m.value("certificate_slices", static_cast<double>(r.certificate.slices), "certificate");
    cx.m.value("certificate_max_adjacent", r.certificate.max_adjacent, "certificate");
    cx.m.check("epsilon_defect", r.defect, "<", c.thresholds.epsilon, "almost_invariant_section");
    cx.m.check_flag("homotopy_certificate", r.certificate.ok, "certificate");
  });
}

void run_dominated_splitting(Ctx& cx) {
  const ExperimentConfig& c = cx.c;
  const Thresholds& th = c.thresholds;
  Cocycle A = c.has_cocycle ? c.cocycle
                            : Cocycle::product({Cocycle::quaternion_power(2, 0.3),
                                                Cocycle::rotation3({1, 1, 0}, AngleField{0.7})});
  CircleLattice lat = lattice_of(c);
  if (!A.isometry()) throw precondition_error("dominated_splitting starts from an isometry-valued cocycle");
  if (c.fiber.kind != FiberKind::grassmann) throw precondition_error("dominated_splitting needs a Grassmannian fiber");

  cx.attempt("non_domination_scan", [&] {
    GridSpec grid{1, static_cast<std::size_t>(th.check_grid)};
    std::vector<Matrix> prod(grid.size(), Matrix::identity(A.dim()));
    CsvWriter csv({"ell", "max_ratio_deviation"});
    double worst = 0.0;
    for (int ell = 1; ell <= th.ell_max; ++ell) {
      double dev = 0.0;
      for (std::size_t p = 0; p < grid.size(); ++p) {
        prod[p] = A(iterate(c.base, grid.point(p), ell - 1)) * prod[p];
        auto s = singular_values(prod[p]);
        for (std::size_t i = 0; i + 1 < s.size(); ++i) dev = std::max(dev, std::abs(s[i] / s[i + 1] - 1.0));
      }
      worst = std::max(worst, dev);
      csv.row({double(ell), dev});
    }
    cx.save("non_domination.csv", csv.str());
    cx.m.check("isometry_ratio_deviation", worst, "<=", 1e-10, "singular_values");
  });

  LatticeCocycle g;
  AlmostInvariantResult r;
  if (!cx.attempt("almost_invariant_section", [&] {
        g = LatticeCocycle::sample(A, lat);
        IsotopyFamily iso = reference_isotopy(g);
        FiberSection sigma = reference_section(c.fiber, lat.size());
        AlmostInvariantOptions o;
        if (c.has_region) o.region = c.region;
        r = almost_invariant_section(g, sigma, iso, th.epsilon, o);
        cx.m.value("n", r.n, "almost_invariant_section");
        cx.m.value("defect", r.defect, "almost_invariant_section");
        cx.m.value("measured_lipschitz", r.measured_lipschitz, "measured_lipschitz");
        cx.m.value("certificate_slices", static_cast<double>(r.certificate.slices), "certificate");
        cx.m.check("defect", r.defect, "<", th.epsilon, "almost_invariant_section");
        cx.m.check_flag("homotopy_certificate", r.certificate.ok, "certificate");
      }))
    return;

  DominatingPerturbation P;
  if (!cx.attempt("dominating_perturbation", [&] {
        P = dominating_perturbation(g, r.omega, th.stretch);
        double bound = std::expm1(th.stretch) + 2.0 * r.defect + 0.01;
        cx.m.value("deviation", P.max_deviation, "dominating_perturbation");
        cx.m.value("deviation_bound", bound, "dominating_perturbation");
        cx.m.value("invariance_error", P.invariance_error, "dominating_perturbation");
        cx.m.check("deviation", P.max_deviation, "<=", bound, "dominating_perturbation");
        cx.m.check("invariance_error", P.invariance_error, "<=", 1e-8, "dominating_perturbation");
      }))
    return;

  cx.attempt("domination_test", [&] {
    auto cert = find_domination_sampled(P.values, P.next, 1, th.ell_search, th.c);
    cx.m.value("dominated", cert ? 1.0 : 0.0, "find_domination_sampled");
    if (cert) {
      cx.m.value("ell", cert->ell, "find_domination_sampled");
      cx.m.value("evidence", cert->evidence, "find_domination_sampled");
    }
    cx.m.check_flag("perturbed_dominated", cert.has_value(), "find_domination_sampled");
  });
}

// exponents of a constant matrix are the log moduli of its eigenvalues
std::vector<double> eigen_log_moduli(const Matrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (int i = 0; i < m.rows(); ++i)
    for (int k = 0; k < m.cols(); ++k) e(i, k) = m(i, k);
  Eigen::EigenSolver<Eigen::MatrixXd> es(e, false);
  std::vector<double> out;
  for (int i = 0; i < m.rows(); ++i) out.push_back(std::log(std::abs(es.eigenvalues()[i])));
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

void run_lyapunov(Ctx& cx) {
  const ExperimentConfig& c = cx.c;
  if (!c.has_cocycle) throw config_error("cocycle", "lyapunov needs a cocycle");
  const Cocycle& A = c.cocycle;
  std::mt19937_64 rng(c.seed);
  TorusPoint x0 = c.base.dim == 1 ? TorusPoint::circle(draw(rng)) : TorusPoint::torus(draw(rng), draw(rng));
  cx.attempt("lyapunov_spectrum", [&] {
    auto lam = lyapunov_spectrum(A, c.base, x0, c.thresholds.iterations);
    double bk = birkhoff_log_det(A, c.base, x0, c.thresholds.iterations);
    double sum = 0.0, worst = 0.0;
    CsvWriter csv({"i", "lambda"});
    for (std::size_t i = 0; i < lam.size(); ++i) {
      cx.m.value("lambda_" + std::to_string(i + 1), lam[i], "lyapunov_spectrum");
      csv.row({double(i + 1), lam[i]});
      sum += lam[i];
      worst = std::max(worst, std::abs(lam[i]));
    }
    cx.save("spectrum.csv", csv.str());
    cx.m.value("birkhoff_log_det", bk, "birkhoff_log_det");
    cx.m.check("sum_vs_birkhoff", std::abs(sum - bk), "<=", 1e-6, "lyapunov_spectrum");
    if (A.isometry()) cx.m.check("isometry_exponents", worst, "<", 1e-3, "lyapunov_spectrum");
    if (A.kind() == CocycleKind::constant) {
      auto ex = eigen_log_moduli(A(x0));
      double err = 0.0;
      for (std::size_t i = 0; i < lam.size(); ++i) err = std::max(err, std::abs(lam[i] - ex[i]));
      cx.m.value("eigenvalue_error", err, "lyapunov_spectrum");
      cx.m.check("constant_exponents", err, "<=", 1e-9, "lyapunov_spectrum");
    }
  });
}

void run_domination(Ctx& cx) {
  const ExperimentConfig& c = cx.c;
  if (!c.has_cocycle) throw config_error("cocycle", "domination needs a cocycle");
  cx.attempt("find_domination", [&] {
    GridSpec grid{c.base.dim, c.grid};
    auto cert = find_domination(c.cocycle, c.base, 1, c.thresholds.ell_max, c.thresholds.c, grid);
    cx.m.value("dominated", cert ? 1.0 : 0.0, "find_domination");
    if (cert) {
      cx.m.value("ell", cert->ell, "find_domination");
      cx.m.value("evidence", cert->evidence, "find_domination");
    }
  });
}

// brute force: sigma_1 / sigma_2 of a 2x2 matrix from a sweep of unit
// directions with golden-section refinement of the extremes
double sweep_ratio(const Matrix& m) {
  auto len = [&](double t) {
    double u = std::cos(t), v = std::sin(t);
    return std::hypot(m(0, 0) * u + m(0, 1) * v, m(1, 0) * u + m(1, 1) * v);
  };
  const int steps = 64;
  const double h = pi / steps;
  int imax = 0, imin = 0;
  for (int i = 1; i < steps; ++i) {
    if (len(i * h) > len(imax * h)) imax = i;
    if (len(i * h) < len(imin * h)) imin = i;
  }
  auto refine = [&](double t, bool maximise) {
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = t - h, b = t + h;
    auto val = [&](double s) { return maximise ? -len(s) : len(s); };
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = val(x1), f2 = val(x2);
    for (int it = 0; it < 60; ++it) {
      if (f1 < f2) b = x2, x2 = x1, f2 = f1, x1 = b - gr * (b - a), f1 = val(x1);
      else a = x1, x1 = x2, f1 = f2, x2 = a + gr * (b - a), f2 = val(x2);
    }
    return len(0.5 * (a + b));
  };
  double hi = std::max(refine(imax * h, true), len(imax * h));
  double lo = std::min(refine(imin * h, false), len(imin * h));
  return lo == 0.0 ? std::numeric_limits<double>::infinity() : hi / lo;
}

struct OracleCase {
  int type = 0;
  double p1 = 0.0, p2 = 0.0, p3 = 0.0;
  Cocycle A = Cocycle::identity(2);
};

Matrix rot2(double t) { return Matrix{{std::cos(t), -std::sin(t)}, {std::sin(t), std::cos(t)}}; }

// weak hyperbolicity so the first passing window spreads over 1..64
OracleCase oracle_case(std::mt19937_64& rng, int i) {
  OracleCase oc;
  oc.type = i % 4;
  switch (oc.type) {
    case 0:  // rotations: never dominated
      oc.p1 = draw(rng, 0.0, 2.0 * pi);
      oc.p2 = draw(rng, 0.0, 1.0);
      oc.A = Cocycle::rotation2(AngleField{oc.p1, draw_int(rng, -1, 1), 0, oc.p2, 0.0});
      break;
    case 1: {  // constant, hyperbolic or elliptic
      oc.p1 = std::exp(draw(rng, 0.0, 0.01));
      oc.p2 = draw(rng, 0.0, 0.02);
      double d[2] = {oc.p1, 1.0 / oc.p1};
      oc.A = Cocycle::constant(rot2(oc.p2) * Matrix::diagonal(d));
      break;
    }
    case 2:  // wobbling rotation times a diagonal
      oc.p1 = std::exp(draw(rng, 0.0, 0.01));
      oc.p2 = draw(rng, 0.0, 0.02);
      oc.p3 = draw(rng, 0.0, 0.02);
      oc.A = Cocycle::product({Cocycle::rotation2(AngleField{oc.p3, 0, 0, oc.p2, 0.0}),
                               Cocycle::diagonal({std::log(oc.p1), -std::log(oc.p1)})});
      break;
    default:  // winding rotation times a diagonal
      oc.p1 = std::exp(draw(rng, 0.0, 0.5));
      oc.p3 = draw(rng, 0.0, 2.0 * pi);
      oc.A = Cocycle::product({Cocycle::rotation2(AngleField{oc.p3, 1, 0, 0.0, 0.0}),
                               Cocycle::diagonal({std::log(oc.p1), -std::log(oc.p1)})});
  }
  return oc;
}

void run_domination_oracle(Ctx& cx) {
  const ExperimentConfig& c = cx.c;
  const Thresholds& th = c.thresholds;
  if (c.base.dim != 1) throw precondition_error("domination_oracle runs on a circle base");
  GridSpec grid{1, c.grid};
  std::mt19937_64 rng(c.seed);
  int count = th.samples, dominated = 0, disagreements = 0, ties = 0;
  CsvWriter csv({"case", "type", "p1", "p2", "p3", "test_ell", "oracle_ell", "verdict"});
  cx.attempt("oracle_comparison", [&] {
    for (int i = 0; i < count; ++i) {
      OracleCase oc = oracle_case(rng, i);
      auto cert = find_domination(oc.A, c.base, 1, th.ell_max, th.c, grid);
      int test_ell = cert ? cert->ell : 0;
      // oracle: naive products, no renormalisation
      std::vector<Matrix> prod(grid.size(), Matrix::identity(2));
      int oracle_ell = 0;
      bool tie = false;
      int stop = std::max(test_ell, 1);
      for (int ell = 1; ell <= th.ell_max; ++ell) {
        double lo = std::numeric_limits<double>::infinity();
        for (std::size_t p = 0; p < grid.size(); ++p) {
          prod[p] = oc.A(iterate(c.base, grid.point(p), ell - 1)) * prod[p];
          lo = std::min(lo, sweep_ratio(prod[p]));
        }
        if (std::abs(lo - th.c) <= 1e-6 * th.c) tie = true;
        if (lo >= th.c) {
          oracle_ell = ell;
          break;
        }
        if (test_ell && ell >= stop) break;  // already disagrees, no need to go on
      }
      std::string verdict = "agree";
      if (test_ell != oracle_ell) {
        verdict = tie ? "tie" : "disagree";
        (tie ? ties : disagreements)++;
      }
      if (test_ell) ++dominated;
      csv.row_text({std::to_string(i), std::to_string(oc.type), csv_number(oc.p1), csv_number(oc.p2),
                    csv_number(oc.p3), std::to_string(test_ell), std::to_string(oracle_ell), verdict});
    }
  });
  cx.save("oracle.csv", csv.str());
  cx.m.value("cases", count, "domination_oracle");
  cx.m.value("dominated_cases", dominated, "find_domination");
  cx.m.value("ties", ties, "domination_oracle");
  cx.m.check("disagreements", disagreements, "==", 0.0, "domination_oracle");
}

void run_coboundary(Ctx& cx) {
  const ExperimentConfig& c = cx.c;
  if (!c.has_cocycle) throw config_error("cocycle", "coboundary needs a cocycle");
  if (c.base.dim != 1) throw precondition_error("coboundary runs on a circle base");
  HomotopyClass cls = HomotopyClass::trivial;
  if (!cx.attempt("is_homotopic_to_coboundary", [&] {
        cls = is_homotopic_to_coboundary(c.cocycle, c.base);
        cx.m.value("class", cls == HomotopyClass::trivial ? 0.0 : 1.0, "is_homotopic_to_coboundary");
      }))
    return;
  if (cls != HomotopyClass::trivial) {
    cx.m.step("coboundary_approximation", "obstructed", "loop class is nontrivial; not an almost coboundary");
    return;
  }
  std::vector<int> heights = c.tower_heights.empty() ? std::vector<int>{100, 200} : c.tower_heights;
  int top = *std::max_element(heights.begin(), heights.end());
  std::map<int, double> defects;
  CsvWriter csv({"n", "defect", "lipschitz", "defect_times_n"});
  for (int n : heights) {
    std::string k = "n" + std::to_string(n);
    cx.attempt("coboundary_approximation_" + k, [&] {
      CoboundaryOptions o;
      o.lattice = c.grid;
      if (c.has_region) o.region = c.region;
      o.region_height = top;
      auto r = coboundary_approximation(c.cocycle, c.base, n, o);
      defects[n] = r.defect;
      cx.m.value("defect_" + k, r.defect, "coboundary_approximation");
      cx.m.value("lipschitz_" + k, r.measured_lipschitz, "coboundary_approximation");
      cx.m.value("resolution_error", r.resolution_error, "coboundary_approximation");
      cx.m.check("defect_bound_" + k, r.defect * n, "<=", r.measured_lipschitz + 1.0, "coboundary_approximation");
      csv.row({double(n), r.defect, r.measured_lipschitz, r.defect * n});
    });
  }
  cx.save("coboundary.csv", csv.str());
  halving_checks(cx.m, defects, "coboundary_approximation");
}

struct LoopFactor {
  Vec3 axis;
  AngleField angle;
};

Cocycle loop_cocycle(const std::vector<LoopFactor>& fs) {
  std::vector<Cocycle> parts;
  for (const auto& f : fs) parts.push_back(Cocycle::rotation3(f.axis, f.angle));
  return parts.size() == 1 ? parts[0] : Cocycle::product(parts);
}

// closed-form S3 lift of x -> A_1(x)...A_k(x), evaluated without wrapping x
Quat analytic_lift(const std::vector<LoopFactor>& fs, double x, double half) {
  Quat q;
  for (const auto& f : fs) {
    const AngleField& a = f.angle;
    double th = a.offset + 2.0 * pi * a.winding * x + a.amplitude * std::sin(2.0 * pi * x + a.phase);
    q = qexp(unit(f.axis), half * th) * q;  // rho reverses products
  }
  return q;
}

std::vector<LoopFactor> random_loop(std::mt19937_64& rng) {
  std::vector<LoopFactor> fs(static_cast<std::size_t>(draw_int(rng, 1, 3)));
  for (auto& f : fs) {
    f.axis = random_axis(rng);
    f.angle = AngleField{draw(rng, 0.0, 2.0 * pi), draw_int(rng, -2, 2), 0, draw(rng, 0.0, 1.0), draw(rng, 0.0, 2.0 * pi)};
  }
  return fs;
}

void run_pi1_classification(Ctx& cx) {
  const ExperimentConfig& c = cx.c;
  if (c.base.dim != 1) throw precondition_error("pi1_classification runs on a circle base");
  std::mt19937_64 rng(c.seed);
  cx.attempt("z_axis_loops", [&] {
    auto once = is_homotopic_to_coboundary(Cocycle::rotation3({0, 0, 1}, AngleField{0.0, 1}), c.base);
    auto twice = is_homotopic_to_coboundary(Cocycle::rotation3({0, 0, 1}, AngleField{0.0, 2}), c.base);
    cx.m.value("z_loop_class", once == HomotopyClass::trivial ? 0 : 1, "is_homotopic_to_coboundary");
    cx.m.value("z_loop_squared_class", twice == HomotopyClass::trivial ? 0 : 1, "is_homotopic_to_coboundary");
    cx.m.check_flag("z_loop_nontrivial", once == HomotopyClass::nontrivial, "is_homotopic_to_coboundary");
    cx.m.check_flag("z_loop_squared_trivial", twice == HomotopyClass::trivial, "is_homotopic_to_coboundary");
  });

  cx.attempt("random_loops", [&] {
    // which half angle reproduces rotation3 under rho
    double half = 0.5;
    Vec3 u{0.0, 0.6, 0.8};
    if (frobenius_norm(quaternion_to_rotation(qexp(u, 0.5 * 0.9)) - axis_angle(u, 0.9)) > 1e-9) half = -0.5;
    CsvWriter csv({"loop", "factors", "winding_sum", "classifier", "oracle"});
    int disagreements = 0;
    double lift_err = 0.0;
    for (int i = 0; i < c.thresholds.samples; ++i) {
      auto fs = random_loop(rng);
      Cocycle A = loop_cocycle(fs);
      Quat q0 = analytic_lift(fs, 0.0, half), q1 = analytic_lift(fs, 1.0, half);
      lift_err = std::max(lift_err, frobenius_norm(quaternion_to_rotation(q0) - A(TorusPoint::circle(0.0))));
      int oracle = qdot(q0, q1) > 0.0 ? 0 : 1;
      int cls = is_homotopic_to_coboundary(A, c.base) == HomotopyClass::trivial ? 0 : 1;
      int wsum = 0;
      for (const auto& f : fs) wsum += f.angle.winding;
      if (cls != oracle) ++disagreements;
      csv.row_text({std::to_string(i), std::to_string(fs.size()), std::to_string(wsum), std::to_string(cls),
                    std::to_string(oracle)});
    }
    cx.save("loops.csv", csv.str());
    cx.m.value("oracle_lift_error", lift_err, "analytic_lift");
    cx.m.check("oracle_lift_error", lift_err, "<=", 1e-9, "analytic_lift");
    cx.m.check("loop_disagreements", disagreements, "==", 0.0, "is_homotopic_to_coboundary");
  });

  cx.attempt("exact_coboundaries", [&] {
    int nontrivial = 0;
    for (int i = 0; i < c.thresholds.samples; ++i) {
      Cocycle B = Cocycle::coboundary(loop_cocycle(random_loop(rng)), c.base);
      if (is_homotopic_to_coboundary(B, c.base) != HomotopyClass::trivial) ++nontrivial;
    }
    cx.m.check("coboundary_nontrivial", nontrivial, "==", 0.0, "is_homotopic_to_coboundary");
  });
}

void run_stratification(Ctx& cx) {
  const ExperimentConfig& c = cx.c;
  if (!c.has_region) throw config_error("region", "stratification needs a region");
  GridSpec grid{c.base.dim, c.grid};
  double tol = c.thresholds.boundary_tolerance > 0.0 ? c.thresholds.boundary_tolerance : grid.half_cell();
  RegionK K = c.region;
  int m = 0;
  if (!cx.attempt("covering_number", [&] {
        m = covering_number(c.base, K, grid, tol);
        cx.m.value("initial_m", m, "covering_number");
      }))
    return;
  if (!cx.attempt("transverse_hits_check", [&] {
        auto t = transverse_hits_check(c.base, K, -m, m - 1, grid, tol);
        cx.m.value("initial_transverse_failures", static_cast<double>(t.failures), "transverse_hits_check");
        if (!t.pass) {
          std::mt19937_64 rng(c.seed);
          auto nr = nudge_until_transverse(c.base, K, -m, m - 1, grid, tol, rng, c.thresholds.nudge_budget);
          K = nr.region;
          cx.m.value("nudge_attempts", nr.attempts, "nudge_until_transverse");
        } else {
          cx.m.value("nudge_attempts", 0, "nudge_until_transverse");
        }
      }))
    return;

  cx.attempt("stratify", [&] {
    Stratification s = stratify(c.base, K, grid, tol);
    auto rep = regularity_report(s);
    auto t = transverse_hits_check(c.base, K, -s.m, s.m - 1, grid, tol);
    cx.m.value("m", s.m, "covering_number");
    CsvWriter csv({"i", "X_i", "W_i"});
    for (int i = 1; i <= s.m + 1; ++i) {
      cx.m.value("X" + std::to_string(i), static_cast<double>(s.count_x(i)), "stratify");
      cx.m.value("W" + std::to_string(i), static_cast<double>(s.count_w(i)), "stratify");
      csv.row({double(i), double(s.count_x(i)), double(s.count_w(i))});
    }
    cx.save("strata_counts.csv", csv.str());
    cx.m.value("max_ell_plus", rep.max_ell_plus, "regularity_report");
    cx.m.value("max_ell_minus", rep.max_ell_minus, "regularity_report");
    cx.m.value("junction_pairs", static_cast<double>(rep.junction_pairs), "regularity_report");
    cx.m.value("frontier_skipped", static_cast<double>(rep.frontier_skipped), "regularity_report");
    cx.m.value("transverse_points_with_hits", static_cast<double>(t.points_with_hits), "transverse_hits_check");
    cx.m.check("deep_points", static_cast<double>(rep.deep_points), "==", 0.0, "regularity_report");
    cx.m.check("constancy_violations", static_cast<double>(rep.constancy_violations), "==", 0.0, "regularity_report");
    cx.m.check("frontier_violations", static_cast<double>(rep.frontier_violations), "==", 0.0, "regularity_report");
    cx.m.check("bound_violations", static_cast<double>(rep.bound_violations), "==", 0.0, "regularity_report");
    cx.m.check_flag("transverse", t.pass, "transverse_hits_check");
    auto raster = stratification_raster(s);
    cx.save("strata.raster", std::string(raster.begin(), raster.end()));
    if (grid.dim == 2) {
      SvgSummary sum;
      cx.save("strata.svg", strata_svg(s, K, c.base, &sum));
      cx.m.value("svg_layers", sum.layers, "render_strata_svg");
      cx.m.value("svg_x1_polylines", static_cast<double>(sum.x1_polylines), "render_strata_svg");
      cx.m.value("svg_x2_dots", static_cast<double>(sum.x2_dots), "render_strata_svg");
    }
  });
}

bool identical(const FiberPoint& a, const FiberPoint& b) {
  if (a.index() != b.index()) return false;
  auto same_matrix = [](const Matrix& x, const Matrix& y) {
    if (!x.same_shape(y)) return false;
    for (int i = 0; i < x.rows(); ++i)
      for (int k = 0; k < x.cols(); ++k)
        if (x(i, k) != y(i, k)) return false;
    return true;
  };
  if (auto* v = std::get_if<Vec3>(&a)) return *v == std::get<Vec3>(b);
  if (auto* q = std::get_if<Quat>(&a)) {
    const Quat& r = std::get<Quat>(b);
    return q->w == r.w && q->x == r.x && q->y == r.y && q->z == r.z;
  }
  if (auto* m = std::get_if<Matrix>(&a)) return same_matrix(*m, std::get<Matrix>(b));
  return same_matrix(std::get<KPlane>(a).frame, std::get<KPlane>(b).frame);
}

CoverPoint random_cover_point(std::mt19937_64& rng, int n) {
  CoverPoint c;
  c.n = n;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += (c.v[i] = gaussian(rng)) * c.v[i];
  for (int i = 0; i < n; ++i) c.v[i] /= std::sqrt(s);
  return c;
}

FiberPath cover_path(const FiberSpace& space, const std::vector<CoverPoint>& way, int per_segment) {
  FiberPath p;
  for (std::size_t s = 0; s + 1 < way.size(); ++s)
    for (int k = 0; k < per_segment; ++k)
      p.samples.push_back(cover_project(space, cover_slerp(way[s], way[s + 1], double(k) / per_segment)));
  p.samples.push_back(cover_project(space, way.back()));
  return p;
}

void run_homotopy_bound(Ctx& cx) {
  const ExperimentConfig& c = cx.c;
  std::vector<FiberSpace> fibers = c.fibers;
  if (fibers.empty())
    fibers = {FiberSpace::sphere2(), FiberSpace::rotation3(), FiberSpace::unit_quaternions(),
              FiberSpace::grassmann(1, 3)};
  const double bound = pi + 0.1;
  const int per_segment = 32, t_count = 33;
  std::mt19937_64 rng(c.seed);
  CsvWriter csv({"fiber", "pair", "rel", "lipschitz", "nudged"});
  for (const auto& space : fibers) {
    std::string tag = tag_of(space);
    cx.attempt("lipschitz_homotopy_" + tag, [&] {
      int n = (space.kind == FiberKind::rotation3 || space.kind == FiberKind::unit_quaternions) ? 4 : 3;
      std::vector<std::pair<FiberPath, FiberPath>> pairs;
      std::vector<bool> rel;
      if (space.kind == FiberKind::rotation3) {
        // constant loop vs the 4 pi loop about z: any rel homotopy has a
        // track through the antipode of the lift
        FiberPath a, b;
        for (int k = 0; k <= 4 * per_segment; ++k) {
          a.samples.push_back(Matrix::identity(3));
          b.samples.push_back(axis_angle({0, 0, 1}, 4.0 * pi * k / (4.0 * per_segment)));
        }
        pairs.emplace_back(a, b);
        rel.push_back(true);
      }
      for (int i = 0; i < c.thresholds.samples; ++i) {
        bool r = i % 2 == 0;
        int mid = draw_int(rng, 1, 2);
        std::vector<CoverPoint> w0, w1;
        w0.push_back(random_cover_point(rng, n));
        for (int k = 0; k < mid; ++k) w0.push_back(random_cover_point(rng, n));
        w0.push_back(random_cover_point(rng, n));
        w1.push_back(r ? w0.front() : random_cover_point(rng, n));
        for (int k = 0; k < mid; ++k) w1.push_back(random_cover_point(rng, n));
        w1.push_back(r ? w0.back() : random_cover_point(rng, n));
        pairs.emplace_back(cover_path(space, w0, per_segment), cover_path(space, w1, per_segment));
        rel.push_back(r);
      }
      double worst = 0.0;
      bool exact = true;
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        Homotopy h = lipschitz_homotopy(space, pairs[i].first, pairs[i].second, rel[i], t_count);
        double L = measured_lipschitz(h);
        worst = std::max(worst, L);
        if (rel[i])
          for (std::size_t x : {std::size_t{0}, h.x_count() - 1})
            for (const auto& pt : h.rows[x])
              if (!identical(pt, h.rows[x][0])) exact = false;
        csv.row_text({tag, std::to_string(i), rel[i] ? "1" : "0", csv_number(L), std::to_string(h.nudged)});
      }
      cx.m.value("pairs_" + tag, static_cast<double>(pairs.size()), "lipschitz_homotopy");
      cx.m.value("max_lipschitz_" + tag, worst, "measured_lipschitz");
      cx.m.check("lipschitz_" + tag, worst, "<=", bound, "measured_lipschitz");
      cx.m.check_flag("rel_rows_exact_" + tag, exact, "lipschitz_homotopy");
    });
  }
  cx.save("homotopies.csv", csv.str());
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& config, const std::string& root) {
  RunResult res;
  res.config = config;
  res.dir = (fs::path(root) / config.output_dir).string();
  fs::create_directories(res.dir);
  auto t0 = clock_type::now();
  Ctx cx{config, res.manifest, res.dir, res.timing};
  try {
    switch (config.kind) {
      case ExperimentKind::defect_scaling: run_defect_scaling(cx); break;
      case ExperimentKind::dominated_splitting: run_dominated_splitting(cx); break;
      case ExperimentKind::lyapunov: run_lyapunov(cx); break;
      case ExperimentKind::domination: run_domination(cx); break;
      case ExperimentKind::domination_oracle: run_domination_oracle(cx); break;
      case ExperimentKind::coboundary: run_coboundary(cx); break;
      case ExperimentKind::pi1_classification: run_pi1_classification(cx); break;
      case ExperimentKind::stratification: run_stratification(cx); break;
      case ExperimentKind::homotopy_bound: run_homotopy_bound(cx); break;
    }
  } catch (const config_error&) {
    throw;
  } catch (const std::exception& e) {
    res.manifest.step("run", "error", e.what());
  }
  res.seconds = since(t0);
  write_file((fs::path(res.dir) / "manifest.json").string(), res.manifest.to_json(config).dump(2) + "\n");
  // wall clock lives apart from the manifest so manifests stay byte-stable
  json tj;
  tj["total_seconds"] = res.seconds;
  json steps = json::array();
  for (const auto& [name, s] : res.timing) steps.push_back({{"step", name}, {"seconds", s}});
  tj["steps"] = steps;
  write_file((fs::path(res.dir) / "timing.json").string(), tj.dump(2) + "\n");
  return res;
}

}  // namespace dsplit
