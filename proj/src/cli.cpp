#include "permuton/cli.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "permuton/boundary_solver.hpp"
#include "permuton/density.hpp"
#include "permuton/errors.hpp"
#include "permuton/io.hpp"
#include "permuton/ipf.hpp"
#include "permuton/region.hpp"
#include "permuton/render.hpp"
#include "permuton/sampler.hpp"
#include "permuton/verify.hpp"

namespace permuton {

std::string pick_method(const std::string& method, double r, const RegionSpec& spec) {
  if (method != "auto") return method;
  if (r == 0.0) return "ipf";
  if (is_simple(spec.I)) return "simple";
  if (nonsimple_3x3_pattern(spec.I) != 0) return "quad3x3";
  return "continuation";
}

int cmd_solve(const SolveArgs& a) {
  RegionSpec spec;
  DensityField field;
  std::string method;
  try {
    spec = load_spec(a.config);
    if (a.r) spec.r = *a.r;
    check_nondegenerate(spec);
    method = pick_method(a.method, spec.r, spec);
    std::cerr << "method: " << method << "\n";
    if (method == "ipf") {
      if (spec.r != 0.0) throw Error(ErrorKind::InvalidInput, "method ipf needs r = 0");
      const ScalingSolution s = solve_r0(spec, a.tol);
      write_json_file(to_json(s), a.out + "_scaling.json");
      field = field_from_scaling(spec, s);
    } else {
      BoundaryValues bv;
      FieldSource src;
      if (method == "simple") {
        bv = solve_simple(spec);
        src = FieldSource::Simple;
      } else if (method == "quad3x3") {
        bv = solve_3x3_nonsimple(spec);
        src = FieldSource::Quadratic3x3;
      } else if (method == "continuation") {
        bv = solve_continuation(spec, spec.r, 1e-3, a.tol);
        src = FieldSource::Continuation;
      } else {
        throw Error(ErrorKind::InvalidInput, "unknown method " + method);
      }
      write_json_file(to_json(bv), a.out + "_boundary.json");
      field = build_field(spec, bv, src);
    }
  } catch (const StepBlowupError& e) {
    std::cerr << e.what() << " (last converged r = " << e.last_good_r() << ")\n";
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitSolver;
  }
  write_json_file(to_json(field), a.out + "_field.json");
  write_grid_csv(grid(field, a.grid), a.out + "_grid.csv");
  const BatteryReport rep = run_battery(field);
  write_json_file(to_json(rep), a.out + "_report.json");
  if (!rep.pass) {
    std::cerr << "verification failed:\n" << to_json(rep).dump(2) << "\n";
    return kExitVerify;
  }
  return kExitOk;
}

int cmd_sample(const SampleArgs& a) {
  try {
    const RegionSpec spec = load_spec(a.config);
    const PermutationSample s = sample(spec, a.n, a.steps, a.seed);
    write_json_file(to_json(s), a.out + "_sample.json");
    write_six_vertex_csv(to_six_vertex(s), a.out + "_six_vertex.csv");
    write_height_csv(empirical_height(s, a.n), a.out + "_height.csv");
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitSolver;
  }
  return kExitOk;
}

int cmd_verify(const std::string& field_path, double tol_scale) {
  DensityField f;
  try {
    f = load_field(field_path);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitSolver;
  }
  BatteryOptions o;
  o.tol_four_point *= tol_scale;
  o.tol_marginals *= tol_scale;
  o.tol_jumps *= tol_scale;
  const BatteryReport rep = run_battery(f, o);
  std::cout << to_json(rep).dump(2) << "\n";
  return rep.pass ? kExitOk : kExitVerify;
}

int cmd_render(const std::string& grid_csv, const std::string& png_path, const std::string& color_scale) {
  try {
    render_heatmap(read_grid_csv(grid_csv).g_values, png_path, color_scale);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitSolver;
  }
  return kExitOk;
}

int run_cli(int argc, char** argv) {
  if (const char* t = std::getenv("PERMUTON_THREADS")) {
    const int n = std::atoi(t);
    if (n > 0) omp_set_num_threads(n);
  }
  CLI::App app{"Limit shapes of restricted Mallows permutations"};
  app.require_subcommand(1);

  SolveArgs sa;
  double r_override = 0.0;
  auto* solve = app.add_subcommand("solve", "solve for the limit density and export it");
  solve->add_option("--config", sa.config, "region spec JSON")->required();
  auto* r_opt = solve->add_option("--r", r_override, "override the spec's r");
  solve->add_option("--method", sa.method, "auto|ipf|simple|continuation|quad3x3")
      ->check(CLI::IsMember({"auto", "ipf", "simple", "continuation", "quad3x3"}));
  solve->add_option("--out", sa.out, "output path prefix");
  solve->add_option("--grid", sa.grid, "grid size of the CSV export");
  solve->add_option("--tol", sa.tol, "solver tolerance");

  SampleArgs pa;
  auto* samp = app.add_subcommand("sample", "run the Mallows chain");
  samp->add_option("--config", pa.config, "region spec JSON")->required();
  samp->add_option("--n", pa.n, "permutation size");
  samp->add_option("--steps", pa.steps, "proposals (default n^3)");
  samp->add_option("--seed", pa.seed, "random seed");
  samp->add_option("--out", pa.out, "output path prefix");

  std::string field_path;
  double tol_scale = 1.0;
  auto* ver = app.add_subcommand("verify", "re-run the verification battery on a field JSON");
  ver->add_option("field", field_path, "field JSON")->required();
  ver->add_option("--tol", tol_scale, "multiplier on the default tolerances");

  std::string csv, png = "heatmap.png", scale = "viridis";
  auto* ren = app.add_subcommand("render", "heat map of a grid CSV");
  ren->add_option("grid", csv, "grid CSV")->required();
  ren->add_option("--out", png, "PNG path");
  ren->add_option("--scale", scale, "viridis|gray|hot");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitSolver;
  }
  if (*solve) {
    if (*r_opt) sa.r = r_override;
    return cmd_solve(sa);
  }
  if (*samp) return cmd_sample(pa);
  if (*ver) return cmd_verify(field_path, tol_scale);
  return cmd_render(csv, png, scale);
}

}  // namespace permuton
