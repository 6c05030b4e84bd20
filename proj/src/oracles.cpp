#include "permuton/oracles.hpp"

#include <cmath>

#include "permuton/errors.hpp"

namespace permuton {

double oracle_staircase_2x2_cell(double a, double b, double r, std::size_t u, std::size_t v, double x, double y) {
  if (u == 1 && v == 1) return 0.0;
  const double e = std::exp(-r * (a + b - 1.0));
  // phi and w = 1 / psi with their derivatives; g = phi' w' / (r (phi w - 1)^2).
  double phi, dphi, w, dw;
  if (u == 0) {
    const double K = (1.0 - e) / (1.0 - std::exp(-r * a));
    phi = K * (1.0 - std::exp(-r * x));
    dphi = K * r * std::exp(-r * x);
  } else {
    phi = 1.0 - std::exp(-r * (x + b - 1.0));
    dphi = r * std::exp(-r * (x + b - 1.0));
  }
  if (v == 0) {
    const double den = 1.0 - std::exp(-r * b);
    w = (1.0 - std::exp(-r * y)) / den;
    dw = r * std::exp(-r * y) / den;
  } else {
    const double den = 1.0 - e;
    w = (1.0 - std::exp(-r * (a + y - 1.0))) / den;
    dw = r * std::exp(-r * (a + y - 1.0)) / den;
  }
  const double q = phi * w - 1.0;
  return dphi * dw / (r * q * q);
}

double oracle_staircase_2x2(double a, double b, double r, double x, double y) {
  return oracle_staircase_2x2_cell(a, b, r, x < a ? 0 : 1, y < b ? 0 : 1, x, y);
}

RegionSpec staircase_spec(double a, double b, double r) {
  RegionSpec s;
  s.x = {0.0, a, 1.0};
  s.y = {0.0, b, 1.0};
  s.I = IndicatorArray::from_rows_top_down({{1, 0}, {1, 1}});
  s.r = r;
  return s;
}

std::vector<NonconvexBranch> nonconvex_3x2_branches(double r) {
  auto e = [r](double num, double den) { return std::exp(-r * num / den); };
  return {
      {0, 0, 1.0, -1.0, -1.0, -e(1, 2) + e(2, 3) + e(7, 6), (1.0 + e(1, 2)) * (1.0 - e(2, 3))},
      {0, 1, 1.0, -e(1, 6) + e(1, 2) - e(2, 3), -1.0, e(1, 1), (1.0 - e(1, 3)) * (e(1, 6) + e(2, 3))},
      {1, 0, 1.0, -1.0, e(1, 6) - 1.0 - e(1, 3), e(2, 3) - e(5, 6) + e(1, 1),
       (1.0 - e(1, 6) + e(1, 3)) * (1.0 - e(2, 3))},
      {2, 0, e(1, 6), -e(1, 6), -e(1, 2) + e(2, 3) - 1.0, e(7, 6), (1.0 - e(2, 3)) * (e(1, 6) + e(2, 3))},
      {2, 1, 1.0 - e(1, 6) + e(1, 2), -e(2, 3), -e(2, 3), e(5, 3), e(4, 3) * (1.0 - e(1, 3)) * (1.0 + e(1, 2))},
  };
}

double oracle_nonconvex_3x2_cell(double r, std::size_t u, std::size_t v, double x, double y) {
  if (u == 1 && v == 1) return 0.0;
  for (const auto& br : nonconvex_3x2_branches(r))
    if (br.u == u && br.v == v) {
      const double q = br.a + br.b * std::exp(r * y) + br.c * std::exp(r * x) + br.d * std::exp(r * (x + y));
      return r * std::exp(r * (x + y)) * br.numerator / (q * q);
    }
  throw Error(ErrorKind::InvalidInput, "no such cell in the 3x2 example");
}

double oracle_nonconvex_3x2(double r, double x, double y) {
  const std::size_t u = x < 1.0 / 3.0 ? 0 : (x < 2.0 / 3.0 ? 1 : 2);
  const std::size_t v = y < 2.0 / 3.0 ? 0 : 1;
  return oracle_nonconvex_3x2_cell(r, u, v, x, y);
}

RegionSpec nonconvex_3x2_spec(double r) {
  RegionSpec s;
  s.x = {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0};
  s.y = {0.0, 2.0 / 3.0, 1.0};
  s.I = IndicatorArray::from_rows_top_down({{1, 0, 1}, {1, 1, 1}});
  s.r = r;
  return s;
}

DensityField nonconvex_3x2_field(double r) {
  const RegionSpec s = nonconvex_3x2_spec(r);
  std::vector<RectCoeffs> rects;
  for (const auto& br : nonconvex_3x2_branches(r))
    rects.push_back(RectCoeffs::from_global(br.u, br.v, r, s.x[br.u], s.x[br.u + 1], s.y[br.v], s.y[br.v + 1],
                                            {br.a, br.b, br.c, br.d}));
  return make_field(s, std::move(rects), FieldSource::Oracle);
}

double oracle_triangle_cell(double a, double b, std::size_t u, std::size_t v, double x, double y) {
  const double X = (a - b) * x + b - 1.0;
  const double Y = (b - a) * y + a - 1.0;
  if (u == 0 && v == 1) return b * std::pow(b - 1.0, b / (a - b)) * std::pow(X, a / (b - a));
  if (u == 1 && v == 0) return a * std::pow(a - 1.0, a / (b - a)) * std::pow(Y, b / (a - b));
  if (u == 0 && v == 0) {
    if (a * x + b * y < 1.0) return 0.0;
    return std::pow(b, a / (a - b)) * std::pow(a, b / (b - a)) * std::pow(X, a / (b - a)) * std::pow(Y, b / (a - b));
  }
  return std::pow(b / (b - 1.0), b / (b - a)) * std::pow(a / (a - 1.0), a / (a - b));
}

double oracle_triangle(double a, double b, double x, double y) {
  if (a * x + b * y < 1.0) return 0.0;
  return oracle_triangle_cell(a, b, x < 1.0 / a ? 0 : 1, y < 1.0 / b ? 0 : 1, x, y);
}

RegionSpec triangle_staircase_spec(double a, double b, std::size_t n) {
  RegionSpec s;
  s.x.resize(n + 1);
  s.y.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) s.x[i] = s.y[i] = static_cast<double>(i) / static_cast<double>(n);
  s.I = IndicatorArray(n, n);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v) {
      const double xc = (static_cast<double>(u) + 0.5) / static_cast<double>(n);
      const double yc = (static_cast<double>(v) + 0.5) / static_cast<double>(n);
      s.I.set(u, v, a * xc + b * yc > 1.0);
    }
  s.r = 0.0;
  return s;
}

}  // namespace permuton
