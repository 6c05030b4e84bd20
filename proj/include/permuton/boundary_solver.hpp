#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <stop_token>
#include <string>
#include <vector>

#include "permuton/ipf.hpp"
#include "permuton/projective.hpp"
#include "permuton/region.hpp"

namespace permuton {

// One of the three values pinned to remove the Moebius freedom.
struct GaugePin {
  bool is_phi = true;
  std::size_t index = 0;  // breakpoint index into x (is_phi) or y
  ProjectiveValue value;
};

struct Gauge {
  std::string name;
  std::vector<GaugePin> pins;
};

struct BoundaryValues {
  std::vector<ProjectiveValue> phi;  // at x[0..k]
  std::vector<ProjectiveValue> psi;  // at y[0..ell]
  double r = 0.0;
  Gauge gauge;
};

// Signed residuals r * length - sum_I log(cross ratio): the k column
// equations first, then the ell row equations.
std::vector<double> residual(const RegionSpec& spec, const BoundaryValues& bv);

// Rectangle masses (1/r) log(cross ratio) for I = 1 cells, 0 elsewhere.
std::vector<std::vector<double>> cell_masses(const RegionSpec& spec, const BoundaryValues& bv);

BoundaryValues apply_moebius(const BoundaryValues& bv, const Moebius& M);

// Moebius-aligns bv so that the three pins take the given values.
BoundaryValues align(const BoundaryValues& bv, const std::vector<GaugePin>& pins);

// Largest chordal distance between corresponding values.
double max_distance(const BoundaryValues& a, const BoundaryValues& b);

BoundaryValues solve_simple(const RegionSpec& spec);

struct ContinuationOptions {
  double dr = 1e-3;
  double tol = 1e-12;
  int max_halvings = 10;
  int max_newton = 50;
  std::stop_token stop;
};

struct ContinuationResult {
  BoundaryValues values;
  // Final chi/psi (phi = [1 : r chi]) while the run stays near r = 0; past
  // |r| = 0.05 it continues in angle coordinates and these are left empty.
  std::vector<double> chi;
  std::vector<double> psi;
  double r_reached = 0.0;
  long steps = 0;
};

// chi/psi lifted from an r = 0 scaling solution in the gauge chi(x_0) = 0,
// psi(y_0) = 0, chi(x_k) = 1.
void lift_scaling(const ScalingSolution& s, std::vector<double>& chi, std::vector<double>& psi);

// Newton continuation in r from the r = 0 scaling solution, started in the
// chi/psi gauge and re-pinned whenever a value runs towards a coordinate
// pole. Throws StepBlowupError carrying the last r with a converged solution.
ContinuationResult continue_from_ipf(const RegionSpec& spec, double r_target, const ContinuationOptions& opts = {});

BoundaryValues solve_continuation(const RegionSpec& spec, double r_target, double dr = 1e-3, double tol = 1e-12);

// 1 for the display pattern 011/111/110, 2 for 110/111/011, 0 otherwise.
int nonsimple_3x3_pattern(const IndicatorArray& I);

struct Quad3x3Branch {
  double X = 0.0;
  double Y = 0.0;
  BoundaryValues values;
  std::vector<double> masses;  // the seven I = 1 cells, column-major
  bool positive = false;
};

struct Quad3x3Result {
  std::vector<Quad3x3Branch> branches;  // "+" root first; one entry if linear
  std::optional<std::size_t> selected;
};

// Both roots with diagnostics, no selection errors. The second pattern is
// reduced to the first by x -> 1 - x, r -> -r and the returned values are
// mapped back.
Quad3x3Result solve_3x3_branches(const RegionSpec& spec);

BoundaryValues solve_3x3_nonsimple(const RegionSpec& spec);

}  // namespace permuton
