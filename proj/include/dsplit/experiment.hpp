#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dsplit/config.hpp"
#include "dsplit/stratification.hpp"

namespace dsplit {

struct CheckRecord {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  std::string relation;  // "<=", "<", ">=", "==", "in"
  double required = 0.0;
  double required_hi = 0.0;  // upper end for "in"
  std::string op;
};

struct StepRecord {
  std::string name;
  std::string status;  // ok, error, obstructed
  std::string detail;
};

// every number carries the name of the operation that produced it
class Manifest {
 public:
  void value(const std::string& key, double v, const std::string& op);
  bool check(const std::string& name, double measured, const std::string& relation, double required,
             const std::string& op);
  bool check_range(const std::string& name, double measured, double lo, double hi, const std::string& op);
  bool check_flag(const std::string& name, bool ok, const std::string& op);
  void step(const std::string& name, const std::string& status, const std::string& detail = "");
  void artifact(const std::string& file, const std::string& hash);

  bool pass() const;
  bool has(const std::string& key) const { return values_.count(key) > 0; }
  // value by key; nan when absent
  double get(const std::string& key) const;
  const std::vector<CheckRecord>& checks() const { return checks_; }
  const std::vector<StepRecord>& steps() const { return steps_; }
  const CheckRecord* find_check(const std::string& name) const;
  nlohmann::json to_json(const ExperimentConfig& c) const;

 private:
  std::map<std::string, std::pair<double, std::string>> values_;
  std::vector<CheckRecord> checks_;
  std::vector<StepRecord> steps_;
  std::vector<std::pair<std::string, std::string>> artifacts_;
};

struct RunResult {
  ExperimentConfig config;
  Manifest manifest;
  std::string dir;
  double seconds = 0.0;
  std::vector<std::pair<std::string, double>> timing;
  bool ok() const { return manifest.pass(); }
};

// DSPLIT_OUTPUT_ROOT when set, the fallback otherwise
std::string output_root(const std::string& fallback = "dsplit_out");

// writes manifest.json, timing.json and the kind's artifacts under
// root/config.output_dir; operation errors become failed steps
RunResult run_experiment(const ExperimentConfig& config, const std::string& root);

// decimal, 17 significant digits
std::string csv_number(double v);

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void row(const std::vector<double>& values);
  void row_text(const std::vector<std::string>& cells);
  std::string str() const { return out_; }

 private:
  std::size_t cols_;
  std::string out_;
};

struct SvgSummary {
  int layers = 0;
  std::size_t x1_polylines = 0;
  std::size_t x2_dots = 0;
};

// layers f^i(dK) for i in [-(m-2), m-1] (the circles carrying X_1), X_1 as
// thick arcs, X_2 as dots; d = 2 only
std::string strata_svg(const Stratification& s, const RegionK& K, const TorusTranslation& f,
                       SvgSummary* summary = nullptr);
SvgSummary render_strata_svg(const Stratification& s, const RegionK& K, const TorusTranslation& f,
                             const std::string& path);

void write_file(const std::string& path, const std::string& bytes);
std::string read_file(const std::string& path);

}  // namespace dsplit
