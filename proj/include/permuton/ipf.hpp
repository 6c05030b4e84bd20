#pragma once

#include <cstddef>
#include <vector>

#include "permuton/region.hpp"

namespace permuton {

struct ScalingSolution {
  std::vector<double> lambda;              // k entries
  std::vector<double> mu;                  // ell entries
  std::vector<std::vector<double>> masses; // masses[u][v] = I(u,v) lambda[u] mu[v]
  long iterations = 0;
  double residual = 0.0;  // max marginal violation

  // Constant density on rectangle (u, v).
  double density(const RegionSpec& spec, std::size_t u, std::size_t v) const;
};

struct IpfRun {
  ScalingSolution solution;
  bool converged = false;
  bool log_domain = false;
  std::vector<double> history;  // max residual after each full round
};

// Alternating lambda/mu updates starting from mu = 1. Never throws on
// non-convergence; the caller inspects `converged`.
IpfRun run_ipf(const RegionSpec& spec, double tol, long max_iter, bool keep_history = false);

// Throws NotConverged or NonPositiveDenominator.
ScalingSolution solve_r0(const RegionSpec& spec, double tol = 1e-12, long max_iter = 100000);

// Rescales lambda by c and mu by 1/c and recomputes the masses.
ScalingSolution regauge(const ScalingSolution& s, const IndicatorArray& I, double c);

// Max violation of row and column sums.
double marginal_residual(const RegionSpec& spec, const std::vector<std::vector<double>>& B);

}  // namespace permuton
