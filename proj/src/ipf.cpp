#include "permuton/ipf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "permuton/errors.hpp"

namespace permuton {

namespace {

constexpr double kTiny = 1e-300;

std::vector<std::vector<double>> masses_of(const IndicatorArray& I, const std::vector<double>& lambda,
                                           const std::vector<double>& mu) {
  std::vector<std::vector<double>> B(I.k(), std::vector<double>(I.ell(), 0.0));
  for (std::size_t u = 0; u < I.k(); ++u)
    for (std::size_t v = 0; v < I.ell(); ++v)
      if (I(u, v)) B[u][v] = lambda[u] * mu[v];
  return B;
}

double row_residual(const RegionSpec& spec, const std::vector<double>& lambda,
                    const std::vector<double>& mu) {
  double worst = 0.0;
  for (std::size_t u = 0; u < spec.k(); ++u) {
    double s = 0.0;
    for (std::size_t v = 0; v < spec.ell(); ++v)
      if (spec.I(u, v)) s += lambda[u] * mu[v];
    worst = std::max(worst, std::abs(s - spec.dx(u)));
  }
  return worst;
}

double logsumexp(const std::vector<double>& xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

void normalize(const IndicatorArray& I, const RegionSpec& spec, std::vector<double>& lambda,
               std::vector<double>& mu) {
  const double target = spec.dx(0) / static_cast<double>(I.column_count(0));
  const double c = target / lambda[0];
  for (double& l : lambda) l *= c;
  for (double& m : mu) m /= c;
}

// Log-space variant used when the direct ratios under- or overflow.
IpfRun run_ipf_log(const RegionSpec& spec, double tol, long max_iter, bool keep_history) {
  const auto k = spec.k(), ell = spec.ell();
  std::vector<double> ll(k, 0.0), lm(ell, 0.0);
  IpfRun run;
  run.log_domain = true;
  std::vector<double> terms;
  for (long it = 1; it <= max_iter; ++it) {
    for (std::size_t u = 0; u < k; ++u) {
      terms.clear();
      for (std::size_t v = 0; v < ell; ++v)
        if (spec.I(u, v)) terms.push_back(lm[v]);
      ll[u] = std::log(spec.dx(u)) - logsumexp(terms);
    }
    for (std::size_t v = 0; v < ell; ++v) {
      terms.clear();
      for (std::size_t u = 0; u < k; ++u)
        if (spec.I(u, v)) terms.push_back(ll[u]);
      lm[v] = std::log(spec.dy(v)) - logsumexp(terms);
    }
    double worst = 0.0;
    for (std::size_t u = 0; u < k; ++u) {
      terms.clear();
      for (std::size_t v = 0; v < ell; ++v)
        if (spec.I(u, v)) terms.push_back(ll[u] + lm[v]);
      worst = std::max(worst, std::abs(std::exp(logsumexp(terms)) - spec.dx(u)));
    }
    if (keep_history) run.history.push_back(worst);
    run.solution.iterations = it;
    run.solution.residual = worst;
    if (worst < tol) {
      run.converged = true;
      break;
    }
  }
  const double shift = std::log(spec.dx(0) / static_cast<double>(spec.I.column_count(0))) - ll[0];
  run.solution.lambda.resize(k);
  run.solution.mu.resize(ell);
  for (std::size_t u = 0; u < k; ++u) run.solution.lambda[u] = std::exp(ll[u] + shift);
  for (std::size_t v = 0; v < ell; ++v) run.solution.mu[v] = std::exp(lm[v] - shift);
  run.solution.masses.assign(k, std::vector<double>(ell, 0.0));
  for (std::size_t u = 0; u < k; ++u)
    for (std::size_t v = 0; v < ell; ++v)
      if (spec.I(u, v)) run.solution.masses[u][v] = std::exp(ll[u] + lm[v]);
  return run;
}

}  // namespace

double ScalingSolution::density(const RegionSpec& spec, std::size_t u, std::size_t v) const {
  return masses[u][v] / (spec.dx(u) * spec.dy(v));
}

double marginal_residual(const RegionSpec& spec, const std::vector<std::vector<double>>& B) {
  double worst = 0.0;
  for (std::size_t u = 0; u < spec.k(); ++u) {
    double s = 0.0;
    for (std::size_t v = 0; v < spec.ell(); ++v) s += B[u][v];
    worst = std::max(worst, std::abs(s - spec.dx(u)));
  }
  for (std::size_t v = 0; v < spec.ell(); ++v) {
    double s = 0.0;
    for (std::size_t u = 0; u < spec.k(); ++u) s += B[u][v];
    worst = std::max(worst, std::abs(s - spec.dy(v)));
  }
  return worst;
}

IpfRun run_ipf(const RegionSpec& spec, double tol, long max_iter, bool keep_history) {
  const auto k = spec.k(), ell = spec.ell();
  for (std::size_t u = 0; u < k; ++u)
    if (spec.I.column_count(u) == 0)
      throw Error(ErrorKind::NonPositiveDenominator, "column " + std::to_string(u) + " has no cells");
  for (std::size_t v = 0; v < ell; ++v)
    if (spec.I.row_count(v) == 0)
      throw Error(ErrorKind::NonPositiveDenominator, "row " + std::to_string(v) + " has no cells");

  std::vector<double> lambda(k, 0.0), mu(ell, 1.0);
  IpfRun run;
  for (long it = 1; it <= max_iter; ++it) {
    for (std::size_t u = 0; u < k; ++u) {
      double s = 0.0;
      for (std::size_t v = 0; v < ell; ++v)
        if (spec.I(u, v)) s += mu[v];
      lambda[u] = spec.dx(u) / s;
    }
    for (std::size_t v = 0; v < ell; ++v) {
      double s = 0.0;
      for (std::size_t u = 0; u < k; ++u)
        if (spec.I(u, v)) s += lambda[u];
      mu[v] = spec.dy(v) / s;
    }
    bool extreme = false;
    for (double l : lambda) extreme |= !(l > kTiny && l < 1.0 / kTiny);
    for (double m : mu) extreme |= !(m > kTiny && m < 1.0 / kTiny);
    if (extreme) return run_ipf_log(spec, tol, max_iter, keep_history);

    const double worst = row_residual(spec, lambda, mu);
    if (keep_history) run.history.push_back(worst);
    run.solution.iterations = it;
    run.solution.residual = worst;
    if (worst < tol) {
      run.converged = true;
      break;
    }
  }
  normalize(spec.I, spec, lambda, mu);
  run.solution.lambda = lambda;
  run.solution.mu = mu;
  run.solution.masses = masses_of(spec.I, lambda, mu);
  return run;
}

ScalingSolution solve_r0(const RegionSpec& spec, double tol, long max_iter) {
  IpfRun run = run_ipf(spec, tol, max_iter);
  if (!run.converged)
    throw Error(ErrorKind::NotConverged, "no convergence after " + std::to_string(max_iter) +
                                             " rounds, residual " + std::to_string(run.solution.residual));
  return run.solution;
}

ScalingSolution regauge(const ScalingSolution& s, const IndicatorArray& I, double c) {
  ScalingSolution out = s;
  for (double& l : out.lambda) l *= c;
  for (double& m : out.mu) m /= c;
  out.masses = masses_of(I, out.lambda, out.mu);
  return out;
}

}  // namespace permuton
