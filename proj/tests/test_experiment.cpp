#include <filesystem>
#include <string>

#include <doctest.h>

#include "dsplit/acceptance.hpp"
#include "dsplit/config.hpp"
#include "dsplit/errors.hpp"
#include "dsplit/experiment.hpp"

using namespace dsplit;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / "dsplit_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto at = hay.find(needle); at != std::string::npos; at = hay.find(needle, at + 1)) ++n;
  return n;
}

std::string config_path(const std::string& name) { return (fs::path(default_config_dir()) / (name + ".json")).string(); }

}  // namespace

TEST_CASE("csv numbers and line endings") {
  CHECK(csv_number(0.1) == "0.10000000000000001");
  CHECK(csv_number(2.0) == "2");
  CsvWriter w({"n", "defect"});
  w.row({25, 0.5});
  w.row_text({"a", "b"});
  CHECK(w.str() == "n,defect\n25,0.5\na,b\n");
  CHECK(w.str().find('\r') == std::string::npos);
}

TEST_CASE("minimal config is deterministic") {
  ExperimentConfig c = load_config(config_path("minimal"));
  fs::path a = scratch("det_a"), b = scratch("det_b");
  RunResult ra = run_experiment(c, a.string()), rb = run_experiment(c, b.string());
  CHECK(ra.ok());
  for (const auto& s : ra.manifest.steps()) CHECK(s.status == "ok");
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(a / c.output_dir)) {
    std::string name = e.path().filename().string();
    if (name == "timing.json") continue;
    ++files;
    CHECK(read_file(e.path().string()) == read_file((b / c.output_dir / name).string()));
  }
  CHECK(files >= 1);
  auto m = nlohmann::json::parse(read_file((a / c.output_dir / "manifest.json").string()));
  CHECK(m["seed"] == 0);
  CHECK(m["config_hash"] == c.hash);
  CHECK(m["pass"] == true);
  // every value names its producer
  for (auto& [k, v] : m["values"].items()) CHECK(v.contains("op"));
}

TEST_CASE("reference defect scaling writes one row per height") {
  ExperimentConfig c = load_config(config_path("defect_scaling"));
  fs::path root = scratch("defect");
  RunResult r = run_experiment(c, root.string());
  CHECK(r.ok());
  std::string csv = read_file((root / c.output_dir / "defect_scaling.csv").string());
  CHECK(csv.rfind("n,defect,", 0) == 0);
  for (const char* n : {"\n25,", "\n50,", "\n100,", "\n200,"}) CHECK(csv.find(n) != std::string::npos);
  CHECK(count(csv, "\n") == 5);
  const CheckRecord* h = r.manifest.find_check("halving_ratio_n200");
  REQUIRE(h != nullptr);
  CHECK(h->pass);
}

TEST_CASE("nontrivial class is reported as obstructed") {
  nlohmann::json j = nlohmann::json::parse(R"({
    "schema_version": 1, "experiment": "coboundary", "seed": 3,
    "base": {"d": 1, "alpha": "golden", "grid": 2000},
    "cocycle": {"kind": "quaternion_power", "power": 1},
    "tower_heights": [50]
  })");
  RunResult r = run_experiment(parse_config(j), scratch("obstructed").string());
  bool seen = false;
  for (const auto& s : r.manifest.steps()) seen = seen || s.status == "obstructed";
  CHECK(seen);
}

TEST_CASE("missing seed fails before running") {
  CHECK_THROWS_AS(config_from_text(R"({"schema_version":1,"experiment":"domination",
    "base":{"d":1,"alpha":"golden","grid":16},"cocycle":{"kind":"identity","dim":2}})"),
                  config_error);
}

TEST_CASE("reference disk svg") {
  auto f = TorusTranslation::torus(0.6571, 0.2317);
  RegionK K = RegionK::disk(0.0, 0.0, 0.457);
  Stratification s = stratify(f, K, GridSpec{2, 256});
  REQUIRE(s.m == 3);
  SvgSummary sum;
  std::string svg = strata_svg(s, K, f, &sum);
  CHECK(sum.layers == 4);
  CHECK(count(svg, "class=\"layer\"") == 4);
  for (int i = -1; i <= 2; ++i) CHECK(svg.find("id=\"layer_" + std::to_string(i) + "\"") != std::string::npos);
  CHECK(sum.x1_polylines > 0);
  CHECK(count(svg, "class=\"x2_dot\"") == sum.x2_dots);
  CHECK(sum.x2_dots > 0);
  CHECK(svg.find("class=\"x2\"") != std::string::npos);
  CHECK(count(svg, "<text") == 6);
}

TEST_CASE("smaller disks draw more layers") {
  auto f = TorusTranslation::torus(0.6571, 0.2317);
  RegionK K = RegionK::disk(0.0, 0.0, 0.33);
  Stratification s = stratify(f, K, GridSpec{2, 128});
  REQUIRE(s.m != 3);
  SvgSummary sum;
  std::string svg = strata_svg(s, K, f, &sum);
  CHECK(sum.layers == 2 * s.m - 2);
  CHECK(count(svg, "<text") == static_cast<std::size_t>(sum.layers) + 1 + (sum.x2_dots ? 1 : 0));
  // the dot group exists exactly when there are dots
  CHECK((svg.find("class=\"x2\"") != std::string::npos) == (sum.x2_dots > 0));
}

TEST_CASE("svg needs the 2-torus") {
  auto f = TorusTranslation::circle(golden_alpha);
  RegionK K = RegionK::arc(0.0, 0.3);
  Stratification s = stratify(f, K, GridSpec{1, 100});
  CHECK_THROWS_AS(strata_svg(s, K, f), precondition_error);
}

TEST_CASE("criterion lines") {
  CriterionResult c{3, "lyapunov", true, "err 1e-12", "<= 1e-9"};
  std::string line = format_line(c);
  CHECK(line.rfind("[PASS] 3 lyapunov", 0) == 0);
  c.pass = false;
  CHECK(format_line(c).rfind("[FAIL] 3", 0) == 0);
}
