#include "permuton/quadrature.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace permuton {

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 21>;

// Bisect until the Kronrod error estimate meets an absolute budget shared in
// proportion to length. Boost's own adaptivity is relative and never stops on
// integrands that vanish identically.
double adapt(const std::function<double(double)>& f, double a, double b, double tol, int depth) {
  double err = 0.0, l1 = 0.0;
  const double val = GK::integrate(f, a, b, 0, 0.0, &err, &l1);
  // At depth 0 Boost reports the error on the reference interval [-1, 1].
  err *= 0.5 * (b - a);
  if (err <= std::max(tol, 1e-14 * l1) || depth == 0 || !std::isfinite(val)) return val;
  const double m = 0.5 * (a + b);
  return adapt(f, a, m, 0.5 * tol, depth - 1) + adapt(f, m, b, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, const std::vector<double>& breaks,
                 double abs_tol) {
  if (!(b > a)) return 0.0;
  std::vector<double> pts{a};
  for (double t : breaks)
    if (t > a && t < b) pts.push_back(t);
  pts.push_back(b);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    total += adapt(f, pts[i], pts[i + 1], abs_tol * 1e-2 * (pts[i + 1] - pts[i]) / (b - a), 30);
  return total;
}

}  // namespace permuton
