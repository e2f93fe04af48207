#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "dsplit/acceptance.hpp"
#include "dsplit/errors.hpp"
#include "dsplit/experiment.hpp"

using namespace dsplit;

namespace {

constexpr int exit_ok = 0, exit_failed = 1, exit_config = 2;

int cmd_run(const std::string& path, const std::string& root) {
  ExperimentConfig c = load_config(path);
  RunResult r = run_experiment(c, root);
  std::printf("%s (%s) -> %s\n", c.id.c_str(), to_string(c.kind).c_str(), r.dir.c_str());
  for (const auto& s : r.manifest.steps())
    std::printf("  step %-36s %s%s%s\n", s.name.c_str(), s.status.c_str(), s.detail.empty() ? "" : ": ",
                s.detail.c_str());
  for (const auto& ck : r.manifest.checks()) {
    if (ck.relation == "in")
      std::printf("  %s %-36s %.6g in [%.6g, %.6g]\n", ck.pass ? "ok  " : "FAIL", ck.name.c_str(), ck.measured,
                  ck.required, ck.required_hi);
    else
      std::printf("  %s %-36s %.6g %s %.6g\n", ck.pass ? "ok  " : "FAIL", ck.name.c_str(), ck.measured,
                  ck.relation.c_str(), ck.required);
  }
  std::printf("%s in %.2f s\n", r.ok() ? "pass" : "FAIL", r.seconds);
  return r.ok() ? exit_ok : exit_failed;
}

int cmd_verify(const std::string& suite, const std::string& configs, const std::string& root) {
  SuiteReport rep = run_suite(suite, configs, root);
  for (const auto& c : rep.criteria) std::printf("%s\n", format_line(c).c_str());
  std::printf("verify %s: %s (%.1f s)\n", suite.c_str(), rep.pass() ? "all criteria pass" : "criteria failed",
              rep.seconds);
  return rep.pass() ? exit_ok : exit_failed;
}

int cmd_render(const std::string& path, std::string out) {
  ExperimentConfig c = load_config(path);
  if (!c.has_region) throw config_error("region", "render-strata needs a region");
  if (c.base.dim != 2) throw config_error("base.d", "render-strata needs d = 2");
  double tol = c.thresholds.boundary_tolerance;
  Stratification s = stratify(c.base, c.region, GridSpec{2, c.grid}, tol);
  if (out.empty()) out = (std::filesystem::path(output_root()) / c.output_dir / "strata.svg").string();
  SvgSummary sum = render_strata_svg(s, c.region, c.base, out);
  std::printf("%s: m = %d, %d layers, %zu X1 arcs, %zu X2 dots\n", out.c_str(), s.m, sum.layers, sum.x1_polylines,
              sum.x2_dots);
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dominated splittings and almost-invariant sections: experiment runner"};
  app.require_subcommand(1);
  std::string root = output_root();
  app.add_option("--out", root, "output root (default: $DSPLIT_OUTPUT_ROOT or ./dsplit_out)");

  std::string config;
  auto* run = app.add_subcommand("run", "run one experiment config");
  run->add_option("config", config, "config JSON")->required();

  std::string suite;
  std::string configs = default_config_dir();
  auto* verify = app.add_subcommand("verify", "run the acceptance criteria");
  verify->add_option("suite", suite, "fast or full")->required()->check(CLI::IsMember({"fast", "full"}));
  verify->add_option("--configs", configs, "directory with the reference configs");

  std::string svg_out;
  auto* render = app.add_subcommand("render-strata", "draw the stratification of a d = 2 config");
  render->add_option("config", config, "config JSON")->required();
  render->add_option("-o,--output", svg_out, "SVG path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? exit_ok : exit_config;
  }

  try {
    if (*run) return cmd_run(config, root);
    if (*verify) return cmd_verify(suite, configs, root);
    if (*render) return cmd_render(config, svg_out);
  } catch (const config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return exit_config;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_failed;
  }
  return exit_ok;
}
