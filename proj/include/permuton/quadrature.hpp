#pragma once

#include <functional>
#include <vector>

namespace permuton {

// Adaptive Gauss-Kronrod on [a, b], split at every break strictly inside.
double integrate(const std::function<double(double)>& f, double a, double b, const std::vector<double>& breaks = {},
                 double abs_tol = 1e-10);

}  // namespace permuton
