#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "permuton/region.hpp"

namespace permuton {

enum ExitCode { kExitOk = 0, kExitSolver = 2, kExitVerify = 3 };

struct SolveArgs {
  std::string config;
  std::optional<double> r;  // overrides the spec's r
  std::string method = "auto";
  std::string out = "permuton";
  std::size_t grid = 100;
  double tol = 1e-12;
};

// Writes <out>_boundary.json (or <out>_scaling.json at r = 0), <out>_field.json,
// <out>_grid.csv and <out>_report.json.
int cmd_solve(const SolveArgs& a);

// "auto" resolved against a spec: ipf, simple, quad3x3 or continuation.
std::string pick_method(const std::string& method, double r, const RegionSpec& spec);

struct SampleArgs {
  std::string config;
  std::size_t n = 100;
  std::uint64_t steps = 0;  // 0 means n^3
  std::uint64_t seed = 1;
  std::string out = "sample";
};

// Writes <out>_sample.json, <out>_six_vertex.csv and <out>_height.csv.
int cmd_sample(const SampleArgs& a);

int cmd_verify(const std::string& field_path, double tol_scale = 1.0);
int cmd_render(const std::string& grid_csv, const std::string& png_path, const std::string& color_scale);

// Full command-line entry point.
int run_cli(int argc, char** argv);

}  // namespace permuton
