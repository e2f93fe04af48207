#include "dsplit/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "dsplit/errors.hpp"

namespace dsplit {

using nlohmann::json;

namespace {

struct KindName {
  ExperimentKind kind;
  const char* name;
};

constexpr KindName kind_names[] = {
    {ExperimentKind::defect_scaling, "defect_scaling"},
    {ExperimentKind::dominated_splitting, "dominated_splitting"},
    {ExperimentKind::lyapunov, "lyapunov"},
    {ExperimentKind::domination, "domination"},
    {ExperimentKind::domination_oracle, "domination_oracle"},
    {ExperimentKind::coboundary, "coboundary"},
    {ExperimentKind::pi1_classification, "pi1_classification"},
    {ExperimentKind::stratification, "stratification"},
    {ExperimentKind::homotopy_bound, "homotopy_bound"},
};

std::string sub(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string idx(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

void only_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw config_error(path, "expected an object");
  std::set<std::string> ok(keys.begin(), keys.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) throw config_error(sub(path, it.key()), "unknown field");
}

const json& need(const json& j, const std::string& key, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end()) throw config_error(sub(path, key), "missing required field");
  return *it;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw config_error(path, "expected a number");
  double v = j.get<double>();
  if (!std::isfinite(v)) throw config_error(path, "must be finite");
  return v;
}

long integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw config_error(path, "expected an integer");
  return j.get<long>();
}

double opt_number(const json& j, const std::string& key, const std::string& path, double fallback) {
  auto it = j.find(key);
  return it == j.end() ? fallback : number(*it, sub(path, key));
}

long opt_integer(const json& j, const std::string& key, const std::string& path, long fallback) {
  auto it = j.find(key);
  return it == j.end() ? fallback : integer(*it, sub(path, key));
}

std::vector<double> numbers(const json& j, const std::string& path) {
  if (!j.is_array()) throw config_error(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], idx(path, i)));
  return out;
}

Vec3 vec3(const json& j, const std::string& path) {
  auto v = numbers(j, path);
  if (v.size() != 3) throw config_error(path, "expected 3 components");
  if (std::hypot(v[0], v[1], v[2]) == 0.0) throw config_error(path, "axis must be nonzero");
  return {v[0], v[1], v[2]};
}

Matrix matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw config_error(path, "expected a nonempty array of rows");
  int r = static_cast<int>(j.size());
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < j.size(); ++i) rows.push_back(numbers(j[i], idx(path, i)));
  int c = static_cast<int>(rows[0].size());
  if (r > max_dim || c != r) throw config_error(path, "expected a square matrix of size at most 4");
  Matrix m(r, c);
  for (int i = 0; i < r; ++i) {
    if (static_cast<int>(rows[i].size()) != c) throw config_error(idx(path, i), "ragged matrix row");
    for (int k = 0; k < c; ++k) m(i, k) = rows[i][k];
  }
  return m;
}

AngleField angle(const json& j, const std::string& path) {
  if (j.is_number()) return AngleField{number(j, path)};
  only_keys(j, path, {"offset", "winding", "winding_y", "amplitude", "phase"});
  AngleField a;
  a.offset = opt_number(j, "offset", path, 0.0);
  a.winding = static_cast<int>(opt_integer(j, "winding", path, 0));
  a.winding_y = static_cast<int>(opt_integer(j, "winding_y", path, 0));
  a.amplitude = opt_number(j, "amplitude", path, 0.0);
  a.phase = opt_number(j, "phase", path, 0.0);
  return a;
}

std::string kind_of(const json& j, const std::string& path) {
  if (!j.is_object()) throw config_error(path, "expected a cocycle object");
  const json& k = need(j, "kind", path);
  if (!k.is_string()) throw config_error(sub(path, "kind"), "expected a string");
  return k.get<std::string>();
}

}  // namespace

std::string to_string(ExperimentKind k) {
  for (const auto& kn : kind_names)
    if (kn.kind == k) return kn.name;
  return "unknown";
}

Cocycle parse_cocycle(const json& j, const TorusTranslation& f, const std::string& path) {
  std::string kind = kind_of(j, path);
  try {
    if (kind == "constant") {
      only_keys(j, path, {"kind", "matrix"});
      return Cocycle::constant(matrix(need(j, "matrix", path), sub(path, "matrix")));
    }
    if (kind == "identity") {
      only_keys(j, path, {"kind", "dim"});
      long d = integer(need(j, "dim", path), sub(path, "dim"));
      if (d < 1 || d > max_dim) throw config_error(sub(path, "dim"), "dimension must be in 1..4");
      return Cocycle::identity(static_cast<int>(d));
    }
    if (kind == "rotation2") {
      only_keys(j, path, {"kind", "angle"});
      return Cocycle::rotation2(angle(need(j, "angle", path), sub(path, "angle")));
    }
    if (kind == "rotation3") {
      only_keys(j, path, {"kind", "axis", "angle"});
      return Cocycle::rotation3(vec3(need(j, "axis", path), sub(path, "axis")),
                                angle(need(j, "angle", path), sub(path, "angle")));
    }
    if (kind == "diagonal") {
      only_keys(j, path, {"kind", "log_diag", "log_amplitude"});
      auto d = numbers(need(j, "log_diag", path), sub(path, "log_diag"));
      std::vector<double> a;
      if (j.contains("log_amplitude")) a = numbers(j["log_amplitude"], sub(path, "log_amplitude"));
      if (d.empty() || d.size() > static_cast<std::size_t>(max_dim))
        throw config_error(sub(path, "log_diag"), "expected 1..4 entries");
      if (!a.empty() && a.size() != d.size()) throw config_error(sub(path, "log_amplitude"), "length differs from log_diag");
      return Cocycle::diagonal(d, a);
    }
    if (kind == "quaternion_power") {
      only_keys(j, path, {"kind", "power", "twist", "axis", "twist_axis"});
      int p = static_cast<int>(integer(need(j, "power", path), sub(path, "power")));
      double tw = opt_number(j, "twist", path, 0.0);
      Vec3 ax = j.contains("axis") ? vec3(j["axis"], sub(path, "axis")) : Vec3{0, 0, 1};
      Vec3 ta = j.contains("twist_axis") ? vec3(j["twist_axis"], sub(path, "twist_axis")) : Vec3{1, 0, 0};
      return Cocycle::quaternion_power(p, tw, ax, ta);
    }
    if (kind == "product") {
      only_keys(j, path, {"kind", "factors"});
      const json& fs = need(j, "factors", path);
      if (!fs.is_array() || fs.empty()) throw config_error(sub(path, "factors"), "expected a nonempty array");
      std::vector<Cocycle> factors;
      for (std::size_t i = 0; i < fs.size(); ++i) factors.push_back(parse_cocycle(fs[i], f, idx(sub(path, "factors"), i)));
      return Cocycle::product(std::move(factors));
    }
    if (kind == "perturbation") {
      only_keys(j, path, {"kind", "base", "direction", "amplitude", "center", "width"});
      Cocycle base = parse_cocycle(need(j, "base", path), f, sub(path, "base"));
      Matrix d = matrix(need(j, "direction", path), sub(path, "direction"));
      double w = number(need(j, "width", path), sub(path, "width"));
      if (!(w > 0.0)) throw config_error(sub(path, "width"), "must be positive");
      return Cocycle::perturbation(base, d, number(need(j, "amplitude", path), sub(path, "amplitude")),
                                   opt_number(j, "center", path, 0.5), w);
    }
    if (kind == "coboundary") {
      only_keys(j, path, {"kind", "transfer"});
      return Cocycle::coboundary(parse_cocycle(need(j, "transfer", path), f, sub(path, "transfer")), f);
    }
  } catch (const config_error&) {
    throw;
  } catch (const error& e) {
    throw config_error(path, e.what());
  }
  throw config_error(sub(path, "kind"), "unknown cocycle kind '" + kind + "'");
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig parse_config(const json& j) {
  only_keys(j, "", {"schema_version", "seed", "experiment", "id", "base", "cocycle", "fiber", "fibers", "region",
                    "tower_heights", "thresholds", "output_dir"});
  ExperimentConfig c;
  c.source = j;
  c.hash = fnv1a_hex(j.dump());
  c.schema_version = static_cast<int>(integer(need(j, "schema_version", ""), "schema_version"));
  if (c.schema_version != config_schema_version)
    throw config_error("schema_version", "unsupported version " + std::to_string(c.schema_version));
  const json& seed = need(j, "seed", "");
  if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0))
    throw config_error("seed", "expected a nonnegative integer");
  c.seed = seed.get<std::uint64_t>();

  const json& ex = need(j, "experiment", "");
  if (!ex.is_string()) throw config_error("experiment", "expected a string");
  bool known = false;
  for (const auto& kn : kind_names)
    if (ex.get<std::string>() == kn.name) c.kind = kn.kind, known = true;
  if (!known) throw config_error("experiment", "unknown experiment '" + ex.get<std::string>() + "'");
  c.id = to_string(c.kind);
  if (j.contains("id")) {
    if (!j["id"].is_string()) throw config_error("id", "expected a string");
    c.id = j["id"].get<std::string>();
  }
  if (c.id.empty() || c.id.find_first_of("/\\") != std::string::npos || c.id == "." || c.id == "..")
    throw config_error("id", "must be a plain nonempty name");

  // base
  const json& b = need(j, "base", "");
  only_keys(b, "base", {"d", "alpha", "grid"});
  long d = integer(need(b, "d", "base"), "base.d");
  if (d != 1 && d != 2) throw config_error("base.d", "dimension must be 1 or 2");
  const json& a = need(b, "alpha", "base");
  std::vector<double> alpha;
  if (a.is_string()) {
    if (a.get<std::string>() != "golden") throw config_error("base.alpha", "only \"golden\" is a named rotation");
    // golden mean on the circle; on the 2-torus paired with sqrt 2 - 1 so the
    // components stay rationally independent
    alpha = {golden_alpha};
    if (d == 2) alpha.push_back(std::sqrt(2.0) - 1.0);
  } else if (a.is_number()) {
    alpha = {number(a, "base.alpha")};
  } else {
    alpha = numbers(a, "base.alpha");
  }
  if (static_cast<long>(alpha.size()) != d) throw config_error("base.alpha", "needs one component per base dimension");
  for (double v : alpha)
    if (!(v > 0.0 && v < 1.0)) throw config_error("base.alpha", "components must lie in (0,1)");
  c.base = d == 1 ? TorusTranslation::circle(alpha[0], a.is_string()) : TorusTranslation::torus(alpha[0], alpha[1], a.is_string());
  long g = integer(need(b, "grid", "base"), "base.grid");
  if (g < 2 || g > 1000000) throw config_error("base.grid", "resolution must be in 2..1e6");
  c.grid = static_cast<std::size_t>(g);

  if (j.contains("cocycle")) {
    c.cocycle = parse_cocycle(j["cocycle"], c.base);
    c.has_cocycle = true;
  }
  if (j.contains("fiber")) {
    if (!j["fiber"].is_string()) throw config_error("fiber", "expected a fiber tag");
    try {
      c.fiber = FiberSpace::parse(j["fiber"].get<std::string>());
    } catch (const error& e) {
      throw config_error("fiber", e.what());
    }
  }
  if (j.contains("fibers")) {
    const json& fs = j["fibers"];
    if (!fs.is_array() || fs.empty()) throw config_error("fibers", "expected a nonempty array of fiber tags");
    for (std::size_t i = 0; i < fs.size(); ++i) {
      if (!fs[i].is_string()) throw config_error(idx("fibers", i), "expected a fiber tag");
      try {
        c.fibers.push_back(FiberSpace::parse(fs[i].get<std::string>()));
      } catch (const error& e) {
        throw config_error(idx("fibers", i), e.what());
      }
    }
  }
  if (j.contains("region")) {
    const json& r = j["region"];
    only_keys(r, "region", {"arc", "disk"});
    if (r.size() != 1) throw config_error("region", "give exactly one of arc or disk");
    try {
      if (r.contains("arc")) {
        only_keys(r["arc"], "region.arc", {"start", "length"});
        if (d != 1) throw config_error("region.arc", "arcs need a circle base");
        c.region = RegionK::arc(number(need(r["arc"], "start", "region.arc"), "region.arc.start"),
                                number(need(r["arc"], "length", "region.arc"), "region.arc.length"));
      } else {
        only_keys(r["disk"], "region.disk", {"center", "radius"});
        if (d != 2) throw config_error("region.disk", "disks need a 2-torus base");
        auto ctr = numbers(need(r["disk"], "center", "region.disk"), "region.disk.center");
        if (ctr.size() != 2) throw config_error("region.disk.center", "expected 2 components");
        c.region = RegionK::disk(ctr[0], ctr[1], number(need(r["disk"], "radius", "region.disk"), "region.disk.radius"));
      }
    } catch (const config_error&) {
      throw;
    } catch (const error& e) {
      throw config_error("region", e.what());
    }
    c.has_region = true;
  }
  if (j.contains("tower_heights")) {
    const json& t = j["tower_heights"];
    if (!t.is_array()) throw config_error("tower_heights", "expected an array of integers");
    for (std::size_t i = 0; i < t.size(); ++i) {
      long n = integer(t[i], idx("tower_heights", i));
      if (n < 1 || n > 100000) throw config_error(idx("tower_heights", i), "height must be in 1..1e5");
      c.tower_heights.push_back(static_cast<int>(n));
    }
  }
  if (j.contains("thresholds")) {
    const json& t = j["thresholds"];
    only_keys(t, "thresholds", {"ell_max", "ell_search", "c", "epsilon", "boundary_tolerance", "stretch", "iterations",
                                "nudge_budget", "samples", "check_grid"});
    Thresholds& th = c.thresholds;
    th.ell_max = static_cast<int>(opt_integer(t, "ell_max", "thresholds", th.ell_max));
    th.ell_search = static_cast<int>(opt_integer(t, "ell_search", "thresholds", th.ell_search));
    th.c = opt_number(t, "c", "thresholds", th.c);
    th.epsilon = opt_number(t, "epsilon", "thresholds", th.epsilon);
    th.boundary_tolerance = opt_number(t, "boundary_tolerance", "thresholds", th.boundary_tolerance);
    th.stretch = opt_number(t, "stretch", "thresholds", th.stretch);
    th.iterations = opt_integer(t, "iterations", "thresholds", th.iterations);
    th.nudge_budget = static_cast<int>(opt_integer(t, "nudge_budget", "thresholds", th.nudge_budget));
    th.samples = static_cast<int>(opt_integer(t, "samples", "thresholds", th.samples));
    th.check_grid = static_cast<int>(opt_integer(t, "check_grid", "thresholds", th.check_grid));
    if (t.contains("boundary_tolerance") && !(th.boundary_tolerance > 0.0))
      throw config_error("thresholds.boundary_tolerance", "tolerances must be positive");
    if (!(th.epsilon > 0.0)) throw config_error("thresholds.epsilon", "tolerances must be positive");
    if (!(th.c > 1.0)) throw config_error("thresholds.c", "domination constant must exceed 1");
    if (th.ell_max < 1) throw config_error("thresholds.ell_max", "must be at least 1");
    if (th.ell_search < 1) throw config_error("thresholds.ell_search", "must be at least 1");
    if (!(th.stretch >= 0.0)) throw config_error("thresholds.stretch", "must be nonnegative");
    if (th.iterations < 1) throw config_error("thresholds.iterations", "must be at least 1");
    if (th.nudge_budget < 1) throw config_error("thresholds.nudge_budget", "must be at least 1");
    if (th.samples < 1) throw config_error("thresholds.samples", "must be at least 1");
    if (th.check_grid < 2) throw config_error("thresholds.check_grid", "must be at least 2");
  }
  c.output_dir = c.id;
  if (j.contains("output_dir")) {
    if (!j["output_dir"].is_string() || j["output_dir"].get<std::string>().empty())
      throw config_error("output_dir", "expected a nonempty path");
    c.output_dir = j["output_dir"].get<std::string>();
  }
  return c;
}

ExperimentConfig config_from_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    // byte offset to line and column
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') ++line, col = 1;
      else ++col;
    }
    throw config_error("", "JSON syntax error at line " + std::to_string(line) + ", column " + std::to_string(col) +
                               ": " + e.what());
  }
  return parse_config(j);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("", "cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_text(ss.str());
}

}  // namespace dsplit
