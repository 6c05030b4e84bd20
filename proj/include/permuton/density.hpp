#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "permuton/boundary_solver.hpp"
#include "permuton/ipf.hpp"
#include "permuton/region.hpp"

namespace permuton {

enum class RectKind { Moebius, Constant };

// Density on one supported cell. For RectKind::Moebius
//   g = -(AD - BC) r T S / (A + B S + C T + D T S)^2,
//   T = exp(r (x - x0)), S = exp(r (y - y0)),
// with (A, B, C, D) = `local`, scaled so the largest magnitude is 1. The
// coefficients of exp(rx), exp(ry) over the whole square are `global()`.
// RectKind::Constant carries the r = 0 density in `value`.
struct RectCoeffs {
  std::size_t u = 0, v = 0;
  RectKind kind = RectKind::Moebius;
  std::array<double, 4> local{};
  double value = 0.0;
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
  double r = 0.0;

  static RectCoeffs from_local(std::size_t u, std::size_t v, double r, double x0, double x1, double y0, double y1,
                               std::array<double, 4> abcd);
  static RectCoeffs from_global(std::size_t u, std::size_t v, double r, double x0, double x1, double y0, double y1,
                                std::array<double, 4> abcd);
  static RectCoeffs constant(std::size_t u, std::size_t v, double x0, double x1, double y0, double y1, double g);

  std::array<double, 4> global() const;  // (a, b, c, d) in exp(rx), exp(ry)
  double det() const { return local[0] * local[3] - local[1] * local[2]; }

  double Q(double T, double S) const { return local[0] + local[1] * S + local[2] * T + local[3] * T * S; }
  double g(double x, double y) const;  // continuous extension, any (x, y)
  // Exact mass of [xa, xb] x [ya, yb], assumed inside the closed cell.
  double mass(double xa, double xb, double ya, double yb) const;
  // Integral of g over [ya, yb] at fixed x, and over [xa, xb] at fixed y.
  double column_integral(double x, double ya, double yb) const;
  double row_integral(double y, double xa, double xb) const;
};

enum class FieldSource { Ipf, Simple, Continuation, Quadratic3x3, Oracle };

const char* to_string(FieldSource s);
FieldSource field_source_from_string(const std::string& s);

struct DensityField {
  RegionSpec spec;
  std::vector<RectCoeffs> rects;  // one per I = 1 cell
  FieldSource source = FieldSource::Oracle;
  std::vector<long> index;  // k*ell lookup into rects, -1 for holes

  const RectCoeffs* rect(std::size_t u, std::size_t v) const;
};

// Assembles a field from per-cell coefficients, screening each rectangle for
// poles (exact corner signs of the bilinear denominator plus a 32x32 probe).
// Throws PoleOnRectangle.
DensityField make_field(const RegionSpec& spec, std::vector<RectCoeffs> rects, FieldSource source);

// phi on each column and psi on each row are Moebius maps of exp(rx) and
// exp(ry), fixed by the breakpoint values.
DensityField build_field(const RegionSpec& spec, const BoundaryValues& bv, FieldSource source = FieldSource::Simple);

DensityField field_from_scaling(const RegionSpec& spec, const ScalingSolution& s);

// Cell containing (x, y); points on a breakpoint go to the cell above/right
// except at 1.
std::pair<std::size_t, std::size_t> locate(const RegionSpec& spec, double x, double y);

double rect_mass(const DensityField& f, std::size_t u, std::size_t v, double x1, double x2, double y1, double y2);
double eval_g(const DensityField& f, double x, double y);
double eval_height(const DensityField& f, double x, double y);

struct DensityGrid {
  std::size_t n = 0;
  double r = 0.0;
  std::vector<std::vector<double>> g_values;   // [i][j] at ((i+1/2)/n, (j+1/2)/n)
  std::vector<std::vector<double>> h_values;   // [i][j] at (i/n, j/n)
  std::vector<std::vector<double>> h_centers;  // [i][j] at cell centers, for CSV export
};

DensityGrid grid(const DensityField& f, std::size_t n);         // OpenMP
DensityGrid grid_serial(const DensityField& f, std::size_t n);  // reference

struct RectBounds {
  std::size_t u, v;
  double min_g, max_g;
};

// Extremes of g over the 32x32 probe grid (corners included) of each cell.
std::vector<RectBounds> probe_bounds(const DensityField& f);

}  // namespace permuton
