#include "dsplit/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numbers>

#include "dsplit/errors.hpp"

#ifndef DSPLIT_CONFIG_DIR
#define DSPLIT_CONFIG_DIR "configs"
#endif

namespace dsplit {

namespace fs = std::filesystem;

bool SuiteReport::pass() const {
  return !criteria.empty() && std::all_of(criteria.begin(), criteria.end(), [](const auto& c) { return c.pass; });
}

std::string format_line(const CriterionResult& r) {
  return std::string(r.pass ? "[PASS] " : "[FAIL] ") + std::to_string(r.id) + " " + r.name + ": measured " + r.measured +
         "; required " + r.required;
}

std::string default_config_dir() { return DSPLIT_CONFIG_DIR; }

namespace {

std::string g4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// first failing check or error step, for the report
std::string first_problem(const RunResult& r) {
  for (const auto& s : r.manifest.steps())
    if (s.status == "error") return " [" + r.config.id + " step " + s.name + ": " + s.detail + "]";
  for (const auto& c : r.manifest.checks())
    if (!c.pass) return " [" + r.config.id + " check " + c.name + " = " + g4(c.measured) + "]";
  return "";
}

using Runs = std::map<std::string, RunResult>;

struct Plan {
  std::vector<std::string> files;
};

Plan plan_for(const std::string& suite) {
  Plan p;
  p.files = {"defect_scaling",    "dominating_perturbation", "lyapunov_isometry", "lyapunov_diagonal",
             "lyapunov_varying",  "domination_oracle", "pi1_classification", "coboundary",
             "disk_strata",       "double_hit_arc",    "homotopy_bound"};
  if (suite == "full") {
    p.files.push_back("defect_scaling_full");
    p.files.push_back("coboundary_full");
  } else if (suite != "fast") {
    throw precondition_error("unknown suite '" + suite + "' (expected fast or full)");
  }
  return p;
}

Runs run_all(const Plan& p, const std::string& config_dir, const std::string& root) {
  Runs runs;
  for (const auto& name : p.files) {
    ExperimentConfig c = load_config((fs::path(config_dir) / (name + ".json")).string());
    runs.emplace(name, run_experiment(c, root));
  }
  return runs;
}

// wall clock of the fast-suite experiments among the runs
double total_seconds(const Runs& runs) {
  double s = 0.0;
  for (const auto& name : plan_for("fast").files)
    if (auto it = runs.find(name); it != runs.end()) s += it->second.seconds;
  return s;
}

// files under a that are missing or different under b, timing excluded
std::vector<std::string> compare_trees(const fs::path& a, const fs::path& b) {
  std::vector<std::string> diffs;
  std::vector<std::string> seen;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file() || e.path().filename() == "timing.json") continue;
    std::string rel = fs::relative(e.path(), a).generic_string();
    seen.push_back(rel);
    fs::path other = b / rel;
    if (!fs::exists(other) || read_file(e.path().string()) != read_file(other.string())) diffs.push_back(rel);
  }
  for (const auto& e : fs::recursive_directory_iterator(b)) {
    if (!e.is_regular_file() || e.path().filename() == "timing.json") continue;
    std::string rel = fs::relative(e.path(), b).generic_string();
    if (std::find(seen.begin(), seen.end(), rel) == seen.end()) diffs.push_back(rel);
  }
  std::sort(diffs.begin(), diffs.end());
  return diffs;
}

CriterionResult c1(const Runs& runs, bool full) {
  CriterionResult r{1, "defect scaling", true, "", ""};
  std::vector<std::string> ids = {"defect_scaling"};
  if (full) ids.push_back("defect_scaling_full");
  std::string extra;
  for (const auto& id : ids) {
    const RunResult& run = runs.at(id);
    const Manifest& m = run.manifest;
    double worst_slack = -1e300;
    std::string ratios;
    for (const auto& ck : m.checks()) {
      if (ck.name.rfind("defect_bound_", 0) == 0) worst_slack = std::max(worst_slack, ck.measured - ck.required);
      if (ck.name.rfind("halving_ratio_", 0) == 0) ratios += (ratios.empty() ? "" : ",") + g4(ck.measured);
    }
    bool has_ratio = !ratios.empty();
    bool ok = run.ok() && has_ratio && run.seconds < 30.0;
    r.pass = r.pass && ok;
    r.measured += (r.measured.empty() ? "" : " | ") + id + ": max(defect*n - L - 1) = " + g4(worst_slack) +
                  ", halving ratios " + (has_ratio ? ratios : "none") + ", " + g4(run.seconds) + " s";
    if (!ok) extra += first_problem(run);
  }
  r.measured += extra;
  r.required = "defect*n <= L + 1 for every n, each doubling ratio in [0.4, 0.6], < 30 s per sweep";
  return r;
}

CriterionResult c2(const Runs& runs) {
  const RunResult& run = runs.at("dominating_perturbation");
  const Manifest& m = run.manifest;
  CriterionResult r{2, "dominating perturbation", run.ok() && run.seconds < 60.0, "", ""};
  const CheckRecord* iso = m.find_check("isometry_ratio_deviation");
  r.measured = "ratio deviation " + (iso ? g4(iso->measured) : std::string("n/a")) + ", ||B-A|| " +
               g4(m.get("deviation")) + " (bound " + g4(m.get("deviation_bound")) + "), dominated at ell " +
               g4(m.get("ell")) + " with gap " + g4(m.get("evidence")) + ", " + g4(run.seconds) + " s" +
               first_problem(run);
  r.required = "ratio 1 +- 1e-10 for ell <= 64, gap >= 1.05 for some ell <= 500, ||B-A|| <= e^0.1 - 1 + 2 defect + 0.01, < 60 s";
  return r;
}

CriterionResult c3(const Runs& runs) {
  CriterionResult r{3, "lyapunov sanity", true, "", ""};
  const auto& iso = runs.at("lyapunov_isometry").manifest;
  const auto& dg = runs.at("lyapunov_diagonal").manifest;
  std::string probs;
  for (const char* id : {"lyapunov_isometry", "lyapunov_diagonal", "lyapunov_varying"}) {
    r.pass = r.pass && runs.at(id).ok();
    probs += first_problem(runs.at(id));
  }
  double sum_err = 0.0;
  for (const char* id : {"lyapunov_isometry", "lyapunov_diagonal", "lyapunov_varying"})
    if (const CheckRecord* c = runs.at(id).manifest.find_check("sum_vs_birkhoff")) sum_err = std::max(sum_err, c->measured);
  const CheckRecord* ie = iso.find_check("isometry_exponents");
  const CheckRecord* ce = dg.find_check("constant_exponents");
  r.pass = r.pass && ie && ce;
  r.measured = "isometry max |lambda| " + (ie ? g4(ie->measured) : std::string("n/a")) + ", diag(2,1/2) exponents " +
               g4(dg.get("lambda_1")) + "/" + g4(dg.get("lambda_2")) + " (error " + (ce ? g4(ce->measured) : "n/a") +
               "), sum vs Birkhoff " + g4(sum_err) + probs;
  r.required = "|lambda| < 1e-3, +-ln 2 within 1e-9, sum within 1e-6";
  return r;
}

CriterionResult c4(const Runs& runs) {
  const RunResult& run = runs.at("domination_oracle");
  const CheckRecord* d = run.manifest.find_check("disagreements");
  CriterionResult r{4, "domination oracle", run.ok() && d, "", ""};
  r.measured = (d ? g4(d->measured) : std::string("n/a")) + " disagreements, " + g4(run.manifest.get("ties")) +
               " ties over " + g4(run.manifest.get("cases")) + " cocycles (" + g4(run.manifest.get("dominated_cases")) +
               " dominated)" + first_problem(run);
  r.required = "0 disagreements";
  return r;
}

CriterionResult c5(const Runs& runs, bool full) {
  const RunResult& pi1 = runs.at("pi1_classification");
  std::vector<std::string> ids = {"coboundary"};
  if (full) ids.push_back("coboundary_full");
  CriterionResult r{5, "pi1 classification", pi1.ok(), "", ""};
  const Manifest& m = pi1.manifest;
  const CheckRecord* dis = m.find_check("loop_disagreements");
  const CheckRecord* cob = m.find_check("coboundary_nontrivial");
  r.pass = r.pass && dis && cob;
  r.measured = "z loop class " + g4(m.get("z_loop_class")) + ", squared " + g4(m.get("z_loop_squared_class")) +
               ", oracle disagreements " + (dis ? g4(dis->measured) : std::string("n/a")) +
               ", nontrivial coboundaries " + (cob ? g4(cob->measured) : std::string("n/a"));
  std::string probs = first_problem(pi1);
  for (const auto& id : ids) {
    const RunResult& run = runs.at(id);
    std::string ratios;
    for (const auto& ck : run.manifest.checks())
      if (ck.name.rfind("halving_ratio_", 0) == 0) ratios += (ratios.empty() ? "" : ",") + g4(ck.measured);
    bool ok = run.ok() && !ratios.empty() && run.manifest.get("class") == 0.0;
    r.pass = r.pass && ok;
    r.measured += ", " + id + " halving ratios " + (ratios.empty() ? "none" : ratios);
    probs += first_problem(run);
  }
  r.measured += probs;
  r.required = "z loop nontrivial, square trivial, 0 disagreements, coboundaries trivial, ratio in [0.4, 0.6]";
  return r;
}

CriterionResult c6(const Runs& runs) {
  const RunResult& disk = runs.at("disk_strata");
  const RunResult& arc = runs.at("double_hit_arc");
  const Manifest& m = disk.manifest;
  const Manifest& a = arc.manifest;
  bool counts = m.get("m") == 3.0 && m.get("X1") > 0 && m.get("X2") > 0 && m.get("X3") == 0.0;
  bool flagged = a.get("initial_transverse_failures") > 0.0;
  double attempts = a.get("nudge_attempts");
  CriterionResult r{6, "stratification regularity", disk.ok() && arc.ok() && counts && flagged && attempts >= 1 && attempts <= 50,
                    "", ""};
  auto ck = [&](const char* n) {
    const CheckRecord* c = m.find_check(n);
    return c ? g4(c->measured) : std::string("n/a");
  };
  r.measured = "m " + g4(m.get("m")) + ", X1/X2/X3 " + g4(m.get("X1")) + "/" + g4(m.get("X2")) + "/" + g4(m.get("X3")) +
               ", transverse " + ck("transverse") + ", constancy violations " + ck("constancy_violations") +
               ", bound violations " + ck("bound_violations") + ", max l+/l- " + g4(m.get("max_ell_plus")) + "/" +
               g4(m.get("max_ell_minus")) + "; double-hit arc failures " + g4(a.get("initial_transverse_failures")) +
               ", nudge attempts " + g4(attempts) + first_problem(disk) + first_problem(arc);
  r.required = "m = 3, X1 and X2 nonempty, X3 empty, transverse, 0 violations, l+ <= m-1, l- <= m, arc flagged and "
               "repaired within 50 attempts";
  return r;
}

CriterionResult c7(const Runs& runs) {
  const RunResult& run = runs.at("homotopy_bound");
  CriterionResult r{7, "lipschitz homotopy bound", run.ok(), "", ""};
  std::string parts;
  for (const auto& ck : run.manifest.checks()) {
    if (ck.name.rfind("lipschitz_", 0) == 0)
      parts += (parts.empty() ? "" : ", ") + ck.name.substr(10) + " " + g4(ck.measured) + (ck.pass ? "" : " (over)");
    if (ck.name.rfind("rel_rows_exact_", 0) == 0 && !ck.pass) parts += ", rel rows not constant for " + ck.name.substr(15);
  }
  r.measured = "max Lipschitz per fiber: " + parts;
  for (const auto& s : run.manifest.steps())
    if (s.status != "ok") r.measured += " [" + s.name + ": " + s.detail + "]";
  r.required = "<= pi + 0.1 = " + g4(std::numbers::pi + 0.1) + " on every fiber, rel rows exactly constant";
  return r;
}

}  // namespace

SuiteReport run_suite(const std::string& suite, const std::string& config_dir, const std::string& root) {
  auto t0 = std::chrono::steady_clock::now();
  Plan plan = plan_for(suite);
  bool full = suite == "full";
  fs::path base = fs::path(root) / suite;
  fs::remove_all(base);
  Runs a = run_all(plan, config_dir, (base / "pass_a").string());
  double secs_a = total_seconds(a);
  SuiteReport rep;
  rep.suite = suite;
  rep.criteria = {c1(a, full), c2(a), c3(a), c4(a), c5(a, full), c6(a), c7(a)};

  Runs b = run_all(plan, config_dir, (base / "pass_b").string());
  auto diffs = compare_trees(base / "pass_a", base / "pass_b");
  CriterionResult r8{8, "determinism", diffs.empty() && secs_a < 120.0, "", ""};
  r8.measured = std::to_string(diffs.size()) + " differing files between two runs" +
                (diffs.empty() ? std::string() : " (first: " + diffs.front() + ")") + ", one pass " + g4(secs_a) +
                " s (second " + g4(total_seconds(b)) + " s)";
  r8.required = "byte-identical manifests and artifacts, one pass < 120 s";
  rep.criteria.push_back(r8);
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace dsplit
