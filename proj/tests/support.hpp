#pragma once

#include <Eigen/Dense>
#include <optional>
#include <random>
#include <vector>

#include "permuton/region.hpp"

namespace permuton::testing {

inline std::vector<double> random_breaks(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> U(0.25, 1.0);
  std::vector<double> w(n);
  double t = 0;
  for (auto& e : w) t += (e = U(rng));
  std::vector<double> b{0.0};
  double acc = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) b.push_back(acc += w[i] / t);
  b.push_back(1.0);
  return b;
}

inline bool has_empty_line(const IndicatorArray& I) {
  for (std::size_t u = 0; u < I.k(); ++u)
    if (I.column_count(u) == 0) return true;
  for (std::size_t v = 0; v < I.ell(); ++v)
    if (I.row_count(v) == 0) return true;
  return false;
}

// Random non-degenerate spec with k, ell <= kmax; convex only if asked.
inline RegionSpec random_spec(std::mt19937_64& rng, std::size_t kmax, bool convex = false, double density = 0.7) {
  std::bernoulli_distribution on(density);
  for (;;) {
    RegionSpec s;
    const std::size_t k = 1 + rng() % kmax, ell = 1 + rng() % kmax;
    s.x = random_breaks(rng, k);
    s.y = random_breaks(rng, ell);
    s.I = IndicatorArray(k, ell);
    if (convex) {
      // Staircase-like convex arrays: one run per column with monotone ends.
      std::size_t lo = 0, hi = rng() % ell;
      for (std::size_t u = 0; u < k; ++u) {
        for (std::size_t v = lo; v <= hi; ++v) s.I.set(u, v, true);
        const std::size_t nlo = lo + rng() % 2, nhi = std::min(ell - 1, hi + rng() % 2);
        lo = std::min(nlo, nhi);
        hi = nhi;
      }
      if (rng() % 2) {
        IndicatorArray J(k, ell);
        for (std::size_t u = 0; u < k; ++u)
          for (std::size_t v = 0; v < ell; ++v) J.set(u, v, s.I(u, ell - 1 - v));
        s.I = J;
      }
    } else {
      for (std::size_t u = 0; u < k; ++u)
        for (std::size_t v = 0; v < ell; ++v) s.I.set(u, v, on(rng));
    }
    if (has_empty_line(s.I)) continue;
    if (!support_admits_positive_flow(s)) continue;
    return s;
  }
}

// Masses forced by the marginal equations alone, when the support pattern
// pins them down (full column rank); nullopt otherwise.
inline std::optional<std::vector<std::vector<double>>> unique_linear_masses(const RegionSpec& s) {
  const std::size_t k = s.k(), ell = s.ell();
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  for (std::size_t u = 0; u < k; ++u)
    for (std::size_t v = 0; v < ell; ++v)
      if (s.I(u, v)) cells.emplace_back(u, v);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<long>(k + ell), static_cast<long>(cells.size()));
  Eigen::VectorXd rhs(static_cast<long>(k + ell));
  for (std::size_t c = 0; c < cells.size(); ++c) {
    A(static_cast<long>(cells[c].first), static_cast<long>(c)) = 1.0;
    A(static_cast<long>(k + cells[c].second), static_cast<long>(c)) = 1.0;
  }
  for (std::size_t u = 0; u < k; ++u) rhs(static_cast<long>(u)) = s.dx(u);
  for (std::size_t v = 0; v < ell; ++v) rhs(static_cast<long>(k + v)) = s.dy(v);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() < static_cast<long>(cells.size())) return std::nullopt;
  const Eigen::VectorXd m = qr.solve(rhs);
  std::vector<std::vector<double>> B(k, std::vector<double>(ell, 0.0));
  for (std::size_t c = 0; c < cells.size(); ++c) B[cells[c].first][cells[c].second] = m(static_cast<long>(c));
  return B;
}

}  // namespace permuton::testing
