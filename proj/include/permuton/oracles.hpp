#pragma once

#include <cstddef>

#include "permuton/density.hpp"
#include "permuton/region.hpp"

namespace permuton {

// Points on an interior breakpoint take the branch of the cell above/right,
// as eval_g does.

// 2x2 staircase x = (0, a, 1), y = (0, b, 1) with the top-right cell removed.
double oracle_staircase_2x2(double a, double b, double r, double x, double y);
double oracle_staircase_2x2_cell(double a, double b, double r, std::size_t u, std::size_t v, double x, double y);
RegionSpec staircase_spec(double a, double b, double r);

// Non-convex 3x2 array with the hole at (1/3, 2/3) x (2/3, 1).
double oracle_nonconvex_3x2(double r, double x, double y);
// The branch formula of cell (u, v) evaluated anywhere (continuous extension).
double oracle_nonconvex_3x2_cell(double r, std::size_t u, std::size_t v, double x, double y);
RegionSpec nonconvex_3x2_spec(double r);
// Coefficients (a, b, c, d) of each branch and its printed numerator factor;
// g = r e^{r(x+y)} numerator / (a + b e^{ry} + c e^{rx} + d e^{r(x+y)})^2.
struct NonconvexBranch {
  std::size_t u, v;
  double a, b, c, d, numerator;
};
std::vector<NonconvexBranch> nonconvex_3x2_branches(double r);
DensityField nonconvex_3x2_field(double r);

// r = 0 maximiser on {a x + b y > 1}, a, b > 1, a != b.
double oracle_triangle(double a, double b, double x, double y);
// Cell of the (0, 1/a, 1) x (0, 1/b, 1) partition: the closed-form branch of
// that cell, extended continuously; the cut applies only to cell (0, 0).
double oracle_triangle_cell(double a, double b, std::size_t u, std::size_t v, double x, double y);

// n x n uniform staircase approximation: a cell is kept when its centre
// satisfies a x + b y > 1.
RegionSpec triangle_staircase_spec(double a, double b, std::size_t n);

}  // namespace permuton
