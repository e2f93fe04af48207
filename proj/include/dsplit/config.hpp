#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsplit/base_dynamics.hpp"
#include "dsplit/cocycle.hpp"
#include "dsplit/fiber.hpp"

namespace dsplit {

inline constexpr int config_schema_version = 1;

// experiment kinds understood by run()
enum class ExperimentKind {
  defect_scaling,
  dominated_splitting,
  lyapunov,
  domination,
  domination_oracle,
  coboundary,
  pi1_classification,
  stratification,
  homotopy_bound,
};

std::string to_string(ExperimentKind k);

struct Thresholds {
  int ell_max = 64;
  int ell_search = 500;  // window search for perturbed cocycles
  double c = 1.01;
  double epsilon = 0.05;
  double boundary_tolerance = 0.0;  // 0: half a grid cell
  double stretch = 0.1;
  long iterations = 100000;
  int nudge_budget = 50;
  int samples = 100;  // size of seeded test sets
  int check_grid = 1024;  // grid for continuous-base checks
};

struct ExperimentConfig {
  int schema_version = config_schema_version;
  std::uint64_t seed = 0;
  ExperimentKind kind = ExperimentKind::lyapunov;
  std::string id;
  TorusTranslation base;
  std::size_t grid = 0;
  bool has_cocycle = false;
  Cocycle cocycle = Cocycle::identity(2);
  FiberSpace fiber = FiberSpace::sphere2();
  std::vector<FiberSpace> fibers;  // homotopy_bound test set
  bool has_region = false;
  RegionK region = RegionK::arc(0.0, 0.01);
  std::vector<int> tower_heights;
  Thresholds thresholds;
  std::string output_dir;
  std::string hash;  // FNV-1a of the canonical JSON
  nlohmann::json source;
};

// schema errors throw config_error naming the offending field
ExperimentConfig parse_config(const nlohmann::json& j);
// parse errors carry line and column
ExperimentConfig load_config(const std::string& path);
ExperimentConfig config_from_text(const std::string& text);

Cocycle parse_cocycle(const nlohmann::json& j, const TorusTranslation& f, const std::string& field = "cocycle");

std::string fnv1a_hex(const std::string& bytes);

}  // namespace dsplit
