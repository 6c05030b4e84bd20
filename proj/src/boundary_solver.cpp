#include "permuton/boundary_solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "permuton/errors.hpp"

namespace permuton {

namespace {

double safe_log_cr(double cr) {
  if (!(cr > 0.0) || !std::isfinite(cr)) return std::numeric_limits<double>::infinity();
  return std::log(cr);
}

double cell_log_cr(const BoundaryValues& bv, std::size_t u, std::size_t v) {
  return safe_log_cr(cross_ratio(bv.phi[u], bv.phi[u + 1], bv.psi[v], bv.psi[v + 1]));
}

const ProjectiveValue& pinned(const BoundaryValues& bv, const GaugePin& p) {
  return p.is_phi ? bv.phi[p.index] : bv.psi[p.index];
}

}  // namespace

std::vector<double> residual(const RegionSpec& spec, const BoundaryValues& bv) {
  std::vector<double> res;
  res.reserve(spec.k() + spec.ell());
  for (std::size_t u = 0; u < spec.k(); ++u) {
    double s = spec.r * spec.dx(u);
    for (std::size_t v = 0; v < spec.ell(); ++v)
      if (spec.I(u, v)) s -= cell_log_cr(bv, u, v);
    res.push_back(s);
  }
  for (std::size_t v = 0; v < spec.ell(); ++v) {
    double s = spec.r * spec.dy(v);
    for (std::size_t u = 0; u < spec.k(); ++u)
      if (spec.I(u, v)) s -= cell_log_cr(bv, u, v);
    res.push_back(s);
  }
  return res;
}

std::vector<std::vector<double>> cell_masses(const RegionSpec& spec, const BoundaryValues& bv) {
  std::vector<std::vector<double>> m(spec.k(), std::vector<double>(spec.ell(), 0.0));
  for (std::size_t u = 0; u < spec.k(); ++u)
    for (std::size_t v = 0; v < spec.ell(); ++v)
      if (spec.I(u, v)) {
        const double cr = cross_ratio(bv.phi[u], bv.phi[u + 1], bv.psi[v], bv.psi[v + 1]);
        m[u][v] = cr > 0.0 ? std::log(cr) / bv.r : std::numeric_limits<double>::quiet_NaN();
      }
  return m;
}

BoundaryValues apply_moebius(const BoundaryValues& bv, const Moebius& M) {
  BoundaryValues out = bv;
  for (auto& p : out.phi) p = M(p);
  for (auto& p : out.psi) p = M(p);
  return out;
}

BoundaryValues align(const BoundaryValues& bv, const std::vector<GaugePin>& pins) {
  if (pins.size() != 3) throw Error(ErrorKind::InvalidInput, "alignment needs three pins");
  const std::array<ProjectiveValue, 3> src{pinned(bv, pins[0]), pinned(bv, pins[1]), pinned(bv, pins[2])};
  const std::array<ProjectiveValue, 3> dst{pins[0].value, pins[1].value, pins[2].value};
  BoundaryValues out = apply_moebius(bv, Moebius::from_triples(src, dst));
  for (const auto& p : pins) (p.is_phi ? out.phi[p.index] : out.psi[p.index]) = p.value.normalized();
  out.gauge = Gauge{"aligned", pins};
  return out;
}

double max_distance(const BoundaryValues& a, const BoundaryValues& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.phi.size(); ++i) worst = std::max(worst, chordal_distance(a.phi[i], b.phi[i]));
  for (std::size_t i = 0; i < a.psi.size(); ++i) worst = std::max(worst, chordal_distance(a.psi[i], b.psi[i]));
  return worst;
}

// ---------------------------------------------------------------------------
// Exact solver for simple arrays.

namespace {

enum class Unknown { A, B, P, Q };

// One recorded single-unknown equation cross_ratio(A, B, P, Q) = exp(r len).
struct Equation {
  Unknown unknown;
  std::size_t A, B, P, Q;  // original breakpoint indices
  double length;
};

}  // namespace

BoundaryValues solve_simple(const RegionSpec& spec) {
  validate_basic(spec);
  if (spec.r == 0.0) throw Error(ErrorKind::RZero, "exact solver needs r != 0; use the scaling solver");
  auto seq = is_simple(spec.I);
  if (!seq) throw Error(ErrorKind::NotSimple, "I cannot be reduced to a single cell");
  if (support_components(spec.I) != 1)
    throw Error(ErrorKind::NotSimple, "disconnected support; solve each block separately");

  std::vector<std::size_t> xi(spec.k() + 1), yi(spec.ell() + 1);
  for (std::size_t i = 0; i < xi.size(); ++i) xi[i] = i;
  for (std::size_t i = 0; i < yi.size(); ++i) yi[i] = i;
  std::vector<double> dx(spec.k()), dy(spec.ell());
  for (std::size_t u = 0; u < spec.k(); ++u) dx[u] = spec.dx(u);
  for (std::size_t v = 0; v < spec.ell(); ++v) dy[v] = spec.dy(v);

  auto require_positive = [](double len) {
    if (!(len > 1e-14)) throw Error(ErrorKind::Degenerate, "a reduced length is not positive");
  };

  std::vector<Equation> eqs;
  IndicatorArray cur = spec.I;
  for (const auto& step : *seq) {
    const std::size_t K = dx.size(), L = dy.size();
    if (step.rule == ReductionRule::SingleCell && step.axis == Axis::X) {
      const std::size_t u = step.index, v = step.partner;
      require_positive(dx[u]);
      eqs.push_back({u == 0 ? Unknown::A : Unknown::B, xi[u], xi[u + 1], yi[v], yi[v + 1], dx[u]});
      dy[v] -= dx[u];
      require_positive(dy[v]);
      dx.erase(dx.begin() + static_cast<long>(u));
      xi.erase(xi.begin() + static_cast<long>(u == 0 ? 0 : K));
    } else if (step.rule == ReductionRule::SingleCell) {
      const std::size_t v = step.index, u = step.partner;
      require_positive(dy[v]);
      eqs.push_back({v == 0 ? Unknown::P : Unknown::Q, xi[u], xi[u + 1], yi[v], yi[v + 1], dy[v]});
      dx[u] -= dy[v];
      require_positive(dx[u]);
      dy.erase(dy.begin() + static_cast<long>(v));
      yi.erase(yi.begin() + static_cast<long>(v == 0 ? 0 : L));
    } else if (step.rule == ReductionRule::MergeFull && step.axis == Axis::X) {
      const std::size_t u = step.index;
      require_positive(dx[u]);
      eqs.push_back({Unknown::B, xi[u], xi[u + 1], yi[0], yi[L], dx[u]});
      dx[u] += dx[u + 1];
      dx.erase(dx.begin() + static_cast<long>(u + 1));
      xi.erase(xi.begin() + static_cast<long>(u + 1));
    } else if (step.rule == ReductionRule::MergeFull) {
      const std::size_t v = step.index;
      require_positive(dy[v]);
      eqs.push_back({Unknown::Q, xi[0], xi[K], yi[v], yi[v + 1], dy[v]});
      dy[v] += dy[v + 1];
      dy.erase(dy.begin() + static_cast<long>(v + 1));
      yi.erase(yi.begin() + static_cast<long>(v + 1));
    } else {
      throw Error(ErrorKind::NotSimple, "disconnected support");
    }
    cur = apply_reduction(cur, step);
  }
  if (std::abs(dx[0] - dy[0]) > 1e-9)
    throw Error(ErrorKind::Degenerate, "reduced lengths disagree; marginals are inconsistent");
  require_positive(dx[0]);

  BoundaryValues bv;
  bv.r = spec.r;
  std::vector<std::optional<ProjectiveValue>> phi(spec.k() + 1), psi(spec.ell() + 1);
  phi[xi[0]] = ProjectiveValue::finite(0.0);
  psi[yi[0]] = ProjectiveValue::infinity();
  psi[yi[1]] = ProjectiveValue::finite(1.0);
  phi[xi[1]] = solve_for_B(std::exp(spec.r * dx[0]), *phi[xi[0]], *psi[yi[0]], *psi[yi[1]]);
  bv.gauge = Gauge{"simple", {{true, xi[0], *phi[xi[0]]}, {false, yi[0], *psi[yi[0]]}, {false, yi[1], *psi[yi[1]]}}};

  for (auto it = eqs.rbegin(); it != eqs.rend(); ++it) {
    const double E = std::exp(spec.r * it->length);
    try {
      switch (it->unknown) {
        case Unknown::A: phi[it->A] = solve_for_A(E, *phi[it->B], *psi[it->P], *psi[it->Q]); break;
        case Unknown::B: phi[it->B] = solve_for_B(E, *phi[it->A], *psi[it->P], *psi[it->Q]); break;
        case Unknown::P: psi[it->P] = solve_for_P(E, *phi[it->A], *phi[it->B], *psi[it->Q]); break;
        case Unknown::Q: psi[it->Q] = solve_for_Q(E, *phi[it->A], *phi[it->B], *psi[it->P]); break;
      }
    } catch (const Error&) {
      throw Error(ErrorKind::Degenerate, "cross-ratio equation has no admissible solution");
    }
  }
  for (auto& p : phi) bv.phi.push_back(p.value());
  for (auto& p : psi) bv.psi.push_back(p.value());
  return bv;
}

// ---------------------------------------------------------------------------
// Continuation in r.

void lift_scaling(const ScalingSolution& s, std::vector<double>& chi, std::vector<double>& psi) {
  double total = 0.0;
  for (double l : s.lambda) total += l;
  chi.assign(s.lambda.size() + 1, 0.0);
  psi.assign(s.mu.size() + 1, 0.0);
  for (std::size_t u = 0; u < s.lambda.size(); ++u) chi[u + 1] = chi[u] + s.lambda[u] / total;
  chi.back() = 1.0;
  for (std::size_t v = 0; v < s.mu.size(); ++v) psi[v + 1] = psi[v] + s.mu[v] * total;
}

namespace {

// Mass of a cell in chi/psi coordinates: sum of L(chi psi) over corners with
// signs, L(t) = log|1 - r t| / r. Corner factors may change sign in pairs
// (phi wrapping through infinity on a column); only the cross ratio of each
// supported cell has to stay positive.
struct ChiSystem {
  const RegionSpec& spec;
  double r;
  // Pinned values chi(x_0), chi(x_k), psi(y_0); (0, 1, 0) until a regauge.
  double chi0 = 0.0, chik = 1.0, psi0 = 0.0;

  double L(double t) const {
    if (r == 0.0) return -t;
    return (r * t < 1.0 ? std::log1p(-r * t) : std::log(r * t - 1.0)) / r;
  }
  double dL(double t) const { return -1.0 / (1.0 - r * t); }

  std::size_t unknowns() const { return spec.k() - 1 + spec.ell(); }

  void unpack(const Eigen::VectorXd& z, std::vector<double>& chi, std::vector<double>& psi) const {
    const std::size_t k = spec.k(), ell = spec.ell();
    chi.assign(k + 1, chi0);
    psi.assign(ell + 1, psi0);
    for (std::size_t u = 1; u < k; ++u) chi[u] = z[static_cast<long>(u - 1)];
    chi[k] = chik;
    for (std::size_t v = 1; v <= ell; ++v) psi[v] = z[static_cast<long>(k - 1 + v - 1)];
  }

  Eigen::VectorXd pack(const std::vector<double>& chi, const std::vector<double>& psi) const {
    const std::size_t k = spec.k(), ell = spec.ell();
    Eigen::VectorXd z(static_cast<long>(unknowns()));
    for (std::size_t u = 1; u < k; ++u) z[static_cast<long>(u - 1)] = chi[u];
    for (std::size_t v = 1; v <= ell; ++v) z[static_cast<long>(k - 1 + v - 1)] = psi[v];
    return z;
  }

  bool admissible(const std::vector<double>& chi, const std::vector<double>& psi) const {
    for (std::size_t u = 0; u < spec.k(); ++u)
      for (std::size_t v = 0; v < spec.ell(); ++v) {
        if (!spec.I(u, v)) continue;
        double sign = 1.0;
        for (std::size_t a : {u, u + 1})
          for (std::size_t b : {v, v + 1}) {
            const double f = 1.0 - r * chi[a] * psi[b];
            if (f == 0.0 || !std::isfinite(f)) return false;
            sign *= f;
          }
        if (!(sign > 0.0)) return false;
      }
    return true;
  }

  bool masses_positive(const std::vector<double>& chi, const std::vector<double>& psi) const {
    for (std::size_t u = 0; u < spec.k(); ++u)
      for (std::size_t v = 0; v < spec.ell(); ++v)
        if (spec.I(u, v)) {
          const double m = L(chi[u] * psi[v + 1]) + L(chi[u + 1] * psi[v]) - L(chi[u] * psi[v]) -
                           L(chi[u + 1] * psi[v + 1]);
          if (!(m > 0.0)) return false;
        }
    return true;
  }

  bool admissible(const Eigen::VectorXd& z) const {
    std::vector<double> chi, psi;
    unpack(z, chi, psi);
    return admissible(chi, psi);
  }
  bool accept(const Eigen::VectorXd& z) const {
    std::vector<double> chi, psi;
    unpack(z, chi, psi);
    return masses_positive(chi, psi);
  }

  // Residual G (masses minus lengths, last column equation dropped) and its
  // Jacobian with respect to z.
  void evaluate(const Eigen::VectorXd& z, Eigen::VectorXd& G, Eigen::MatrixXd* J) const {
    const std::size_t k = spec.k(), ell = spec.ell();
    std::vector<double> chi, psi;
    unpack(z, chi, psi);
    const long n = static_cast<long>(unknowns());
    G.setZero(n);
    if (J) J->setZero(n, n);
    auto chi_col = [&](std::size_t u) -> long { return (u == 0 || u == k) ? -1 : static_cast<long>(u - 1); };
    auto psi_col = [&](std::size_t v) -> long { return v == 0 ? -1 : static_cast<long>(k - 1 + v - 1); };
    for (std::size_t u = 0; u < k; ++u) {
      if (u + 1 < k) G[static_cast<long>(u)] -= spec.dx(u);
    }
    for (std::size_t v = 0; v < ell; ++v) G[static_cast<long>(k - 1 + v)] -= spec.dy(v);
    for (std::size_t u = 0; u < k; ++u)
      for (std::size_t v = 0; v < ell; ++v) {
        if (!spec.I(u, v)) continue;
        // corners with signs: (u, v+1) +, (u+1, v) +, (u, v) -, (u+1, v+1) -
        const std::array<std::size_t, 4> cu{u, u + 1, u, u + 1};
        const std::array<std::size_t, 4> cv{v + 1, v, v, v + 1};
        const std::array<double, 4> sg{1.0, 1.0, -1.0, -1.0};
        double m = 0.0;
        for (int c = 0; c < 4; ++c) m += sg[c] * L(chi[cu[c]] * psi[cv[c]]);
        const long row_u = u + 1 < k ? static_cast<long>(u) : -1;
        const long row_v = static_cast<long>(k - 1 + v);
        if (row_u >= 0) G[row_u] += m;
        G[row_v] += m;
        if (!J) continue;
        for (int c = 0; c < 4; ++c) {
          const double d = sg[c] * dL(chi[cu[c]] * psi[cv[c]]);
          const long jc = chi_col(cu[c]), jp = psi_col(cv[c]);
          if (jc >= 0) {
            if (row_u >= 0) (*J)(row_u, jc) += d * psi[cv[c]];
            (*J)(row_v, jc) += d * psi[cv[c]];
          }
          if (jp >= 0) {
            if (row_u >= 0) (*J)(row_u, jp) += d * chi[cu[c]];
            (*J)(row_v, jp) += d * chi[cu[c]];
          }
        }
      }
  }
};


// Away from r = 0 every breakpoint value is kept as an angle t, standing for
// the projective point [sin t : cos t]. Then phi - psi is sin(a - b) up to
// factors cancelling in each cross ratio, and there is no coordinate pole to
// cross. Three corners of one supported cell are pinned; they never meet.
struct AngleSystem {
  const RegionSpec& spec;
  double r;
  std::size_t pu = 0, pv = 0;         // pinned: phi at x_pu, x_pu+1 and psi at y_pv
  std::array<double, 3> pinned{};     // their angles

  std::size_t unknowns() const { return spec.k() + spec.ell() - 1; }

  // Slot i < k+1 is phi at x_i, the rest psi; -1 marks a pinned slot.
  long column(std::size_t slot) const {
    const std::size_t k = spec.k();
    const std::size_t a = pu, b = pu + 1, c = k + 1 + pv;
    if (slot == a || slot == b || slot == c) return -1;
    long i = static_cast<long>(slot);
    if (slot > a) --i;
    if (slot > b) --i;
    if (slot > c) --i;
    return i;
  }

  void unpack(const Eigen::VectorXd& z, std::vector<double>& a, std::vector<double>& b) const {
    const std::size_t k = spec.k(), ell = spec.ell();
    a.assign(k + 1, 0.0);
    b.assign(ell + 1, 0.0);
    for (std::size_t i = 0; i < k + 2 + ell; ++i) {
      const long c = column(i);
      double& t = i <= k ? a[i] : b[i - k - 1];
      if (c >= 0) t = z[c];
    }
    a[pu] = pinned[0];
    a[pu + 1] = pinned[1];
    b[pv] = pinned[2];
  }

  Eigen::VectorXd pack(const std::vector<double>& a, const std::vector<double>& b) const {
    const std::size_t k = spec.k(), ell = spec.ell();
    Eigen::VectorXd z(static_cast<long>(unknowns()));
    for (std::size_t i = 0; i < k + 2 + ell; ++i) {
      const long c = column(i);
      if (c >= 0) z[c] = i <= k ? a[i] : b[i - k - 1];
    }
    return z;
  }

  template <class F>
  void for_cells(const std::vector<double>& a, const std::vector<double>& b, F&& f) const {
    for (std::size_t u = 0; u < spec.k(); ++u)
      for (std::size_t v = 0; v < spec.ell(); ++v)
        if (spec.I(u, v)) {
          const double s1 = std::sin(a[u] - b[v + 1]), s2 = std::sin(a[u + 1] - b[v]);
          const double s3 = std::sin(a[u] - b[v]), s4 = std::sin(a[u + 1] - b[v + 1]);
          f(u, v, s1, s2, s3, s4);
        }
  }

  bool admissible(const Eigen::VectorXd& z) const {
    std::vector<double> a, b;
    unpack(z, a, b);
    bool ok = true;
    for_cells(a, b, [&](std::size_t, std::size_t, double s1, double s2, double s3, double s4) {
      const double prod = s1 * s2 * s3 * s4;
      if (!(std::isfinite(prod) && prod > 0.0)) ok = false;
    });
    return ok;
  }

  bool accept(const Eigen::VectorXd& z) const {
    std::vector<double> a, b;
    unpack(z, a, b);
    bool ok = true;
    for_cells(a, b, [&](std::size_t, std::size_t, double s1, double s2, double s3, double s4) {
      const double m = std::log(std::abs(s1 * s2 / (s3 * s4))) / r;
      if (!(m > 0.0)) ok = false;
    });
    return ok;
  }

  void evaluate(const Eigen::VectorXd& z, Eigen::VectorXd& G, Eigen::MatrixXd* J) const {
    const std::size_t k = spec.k(), ell = spec.ell();
    std::vector<double> a, b;
    unpack(z, a, b);
    const long n = static_cast<long>(unknowns());
    G.setZero(n);
    if (J) J->setZero(n, n);
    for (std::size_t u = 0; u + 1 < k; ++u) G[static_cast<long>(u)] -= spec.dx(u);
    for (std::size_t v = 0; v < ell; ++v) G[static_cast<long>(k - 1 + v)] -= spec.dy(v);
    for_cells(a, b, [&](std::size_t u, std::size_t v, double s1, double s2, double s3, double s4) {
      const double m = (std::log(std::abs(s1)) + std::log(std::abs(s2)) - std::log(std::abs(s3)) -
                        std::log(std::abs(s4))) / r;
      const long row_u = u + 1 < k ? static_cast<long>(u) : -1;
      const long row_v = static_cast<long>(k - 1 + v);
      if (row_u >= 0) G[row_u] += m;
      G[row_v] += m;
      if (!J) return;
      // d/da log|sin(a - b)| = cot(a - b), d/db = -cot(a - b)
      const std::array<std::size_t, 4> cu{u, u + 1, u, u + 1};
      const std::array<std::size_t, 4> cv{v + 1, v, v, v + 1};
      const std::array<double, 4> sn{s1, s2, s3, s4};
      const std::array<double, 4> sg{1.0, 1.0, -1.0, -1.0};
      for (int c = 0; c < 4; ++c) {
        const double d = sg[c] * std::cos(a[cu[c]] - b[cv[c]]) / (sn[c] * r);
        const long ja = column(cu[c]), jb = column(k + 1 + cv[c]);
        for (long row : {row_u, row_v}) {
          if (row < 0) continue;
          if (ja >= 0) (*J)(row, ja) += d;
          if (jb >= 0) (*J)(row, jb) -= d;
        }
      }
    });
  }
};

// Newton solve at fixed r from the starting point z; true on convergence.
template <class System>
bool newton(const System& sys, Eigen::VectorXd& z, double tol, int max_iter) {
  const long n = z.size();
  Eigen::VectorXd G(n);
  Eigen::MatrixXd J(n, n);
  if (!sys.admissible(z)) return false;
  sys.evaluate(z, G, &J);
  double prev = G.lpNorm<Eigen::Infinity>();
  for (int it = 0; it < max_iter; ++it) {
    if (!std::isfinite(prev)) return false;
    if (prev < tol) return true;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(J);
    const Eigen::VectorXd step = cod.solve(-G);
    if (!step.allFinite()) return false;
    // Damp only to keep the iterate admissible and the residual decreasing.
    double t = 1.0;
    bool accepted = false;
    for (int back = 0; back < 30; ++back, t *= 0.5) {
      Eigen::VectorXd trial = z + t * step;
      if (!sys.admissible(trial)) continue;
      Eigen::VectorXd Gt(n);
      sys.evaluate(trial, Gt, nullptr);
      const double norm = Gt.lpNorm<Eigen::Infinity>();
      if (std::isfinite(norm) && (norm < prev || norm < tol)) {
        z = trial;
        accepted = true;
        break;
      }
    }
    if (!accepted) return false;
    sys.evaluate(z, G, &J);
    prev = G.lpNorm<Eigen::Infinity>();
  }
  return prev < tol;
}

double angle(const ProjectiveValue& p) {
  double t = std::atan2(p.num, p.den);
  if (t < 0.0) t += M_PI;
  return t >= M_PI ? 0.0 : t;
}

// Middle of the widest gap between the given angles on the circle [0, pi).
double widest_gap_middle(std::vector<double> a) {
  std::sort(a.begin(), a.end());
  double best = a.front() + M_PI - a.back(), mid = a.back() + 0.5 * best;
  for (std::size_t i = 0; i + 1 < a.size(); ++i)
    if (a[i + 1] - a[i] > best) {
      best = a[i + 1] - a[i];
      mid = 0.5 * (a[i] + a[i + 1]);
    }
  return std::fmod(mid, M_PI);
}

double spread(const std::vector<double>& chi, const std::vector<double>& psi) {
  double c = 0.0, p = 0.0;
  for (double e : chi) c = std::max(c, std::abs(e));
  for (double e : psi) p = std::max(p, std::abs(e));
  return c * p;
}

// Shifting chi by c keeps every factor 1 - r chi psi up to a per-line
// constant when psi becomes psi / (1 + c r psi); likewise with the roles
// swapped. These survive r -> 0, unlike a general Moebius map.
bool shift_chi(double r, double c, std::vector<double>& chi, std::vector<double>& psi) {
  for (double& e : chi) e += c;
  for (double& e : psi) {
    const double d = 1.0 + c * r * e;
    if (std::abs(d) < 1e-8) return false;
    e /= d;
  }
  return true;
}

bool shift_psi(double r, double c, std::vector<double>& chi, std::vector<double>& psi) {
  return shift_chi(r, c, psi, chi);
}

void balance(std::vector<double>& chi, std::vector<double>& psi) {
  double cmax = 0.0, pmax = 0.0;
  for (double e : chi) cmax = std::max(cmax, std::abs(e));
  for (double e : psi) pmax = std::max(pmax, std::abs(e));
  if (!(cmax > 0.0 && pmax > 0.0)) return;
  const double sc = std::sqrt(cmax / pmax);
  for (double& e : chi) e /= sc;
  for (double& e : psi) e *= sc;
}

// A Moebius change of gauge moving the point sent to psi = infinity into the
// widest gap between psi values, and the point sent to chi = infinity
// (phi = 0) into the widest gap between phi values.
bool moebius_gauge(double r, std::vector<double>& chi, std::vector<double>& psi) {
  std::vector<ProjectiveValue> phi_pts, psi_pts;
  std::vector<double> a_phi, a_psi;
  for (double c : chi) phi_pts.push_back(ProjectiveValue{1.0, r * c}.normalized());
  for (double q : psi) psi_pts.push_back(ProjectiveValue::finite(q));
  for (const auto& p : phi_pts) a_phi.push_back(angle(p));
  for (const auto& p : psi_pts) a_psi.push_back(angle(p));
  const double t_inf = widest_gap_middle(a_psi);
  double t_zero = widest_gap_middle(a_phi);
  const double sep = std::abs(t_zero - t_inf);
  if (std::min(sep, M_PI - sep) < 0.1) {
    a_phi.push_back(t_inf);
    t_zero = widest_gap_middle(a_phi);
  }
  const ProjectiveValue q0{std::sin(t_zero), std::cos(t_zero)}, qi{std::sin(t_inf), std::cos(t_inf)};
  for (std::size_t i = 0; i < chi.size(); ++i) {
    const double num = det(phi_pts[i], q0), den = det(phi_pts[i], qi);
    chi[i] = den / (r * num);
  }
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const double num = det(psi_pts[i], q0), den = det(psi_pts[i], qi);
    psi[i] = num / den;
  }
  for (double e : chi)
    if (!std::isfinite(e)) return false;
  for (double e : psi)
    if (!std::isfinite(e)) return false;
  return true;
}

// Picks the best-conditioned of a few gauges; false when none halves the
// spread.
bool regauge(double r, std::vector<double>& chi, std::vector<double>& psi) {
  const double old = spread(chi, psi);
  double best = 0.5 * old;
  std::vector<double> best_chi, best_psi;
  auto consider = [&](std::vector<double> c, std::vector<double> p) {
    balance(c, p);
    const double sp = spread(c, p);
    if (std::isfinite(sp) && sp < best) {
      best = sp;
      best_chi = std::move(c);
      best_psi = std::move(p);
    }
  };
  auto centres = [](const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return std::array<double, 4>{0.0, -*lo, -*hi, -0.5 * (*lo + *hi)};
  };
  for (double c : centres(chi)) {
    std::vector<double> c1 = chi, p1 = psi;
    if (!shift_chi(r, c, c1, p1)) continue;
    for (double d : centres(p1)) {
      std::vector<double> c2 = c1, p2 = p1;
      if (shift_psi(r, d, c2, p2)) consider(std::move(c2), std::move(p2));
    }
  }
  {
    std::vector<double> c1 = chi, p1 = psi;
    if (moebius_gauge(r, c1, p1)) consider(std::move(c1), std::move(p1));
  }
  if (best_chi.empty()) return false;
  chi = std::move(best_chi);
  psi = std::move(best_psi);
  return true;
}

BoundaryValues chi_to_projective(const std::vector<double>& chi, const std::vector<double>& psi, double r) {
  BoundaryValues bv;
  bv.r = r;
  for (double c : chi) bv.phi.push_back(ProjectiveValue{1.0, r * c}.normalized());
  for (double p : psi) bv.psi.push_back(ProjectiveValue::finite(p));
  bv.gauge = Gauge{"chi-affine",
                   {{true, 0, bv.phi.front()}, {false, 0, bv.psi.front()}, {true, chi.size() - 1, bv.phi.back()}}};
  return bv;
}

}  // namespace

ContinuationResult continue_from_ipf(const RegionSpec& spec, double r_target, const ContinuationOptions& opts) {
  validate_basic(spec);
  if (!is_convex(spec.I)) throw Error(ErrorKind::InvalidInput, "continuation needs a convex array");
  const ScalingSolution s0 = solve_r0(spec);
  std::vector<double> chi, psi;
  lift_scaling(s0, chi, psi);

  ContinuationResult res;
  if (r_target == 0.0) {
    res.chi = chi;
    res.psi = psi;
    res.values = chi_to_projective(chi, psi, 0.0);
    return res;
  }

  ChiSystem sys0{spec, 0.0};
  Eigen::VectorXd z = sys0.pack(chi, psi);
  std::array<double, 3> pins{0.0, 1.0, 0.0};
  double base_spread = spread(chi, psi);
  // Angle mode: set once the chi chart has done its job near r = 0.
  bool angular = false;
  AngleSystem proto{spec, 0.0};
  Eigen::VectorXd z_prev = z;
  double r = 0.0, r_prev = 0.0;
  const double dir = r_target > 0.0 ? 1.0 : -1.0;
  double dr = std::abs(opts.dr);
  long steps = 0;
  const double dr0 = std::abs(opts.dr);
  // Generous budget: a clean run takes |r_target| / dr0 steps.
  const long max_steps = 20 * static_cast<long>(std::ceil(std::abs(r_target) / dr0)) + 1000;

  auto current_points = [&](std::vector<ProjectiveValue>& phi, std::vector<ProjectiveValue>& ps) {
    phi.clear();
    ps.clear();
    if (angular) {
      std::vector<double> a, b;
      AngleSystem cur = proto;
      cur.r = r;
      cur.unpack(z, a, b);
      for (double t : a) phi.push_back(ProjectiveValue{std::sin(t), std::cos(t)});
      for (double t : b) ps.push_back(ProjectiveValue{std::sin(t), std::cos(t)});
    } else {
      ChiSystem cur{spec, r, pins[0], pins[1], pins[2]};
      cur.unpack(z, chi, psi);
      for (double c : chi) phi.push_back(ProjectiveValue{1.0, r * c}.normalized());
      for (double q : psi) ps.push_back(ProjectiveValue::finite(q));
    }
  };
  // Re-pins on the supported cell whose corners are furthest apart, spread to
  // angles 0, pi/3, 2pi/3.
  auto enter_angle_mode = [&]() {
    std::vector<ProjectiveValue> phi, ps;
    current_points(phi, ps);
    double best = -1.0;
    for (std::size_t u = 0; u < spec.k(); ++u)
      for (std::size_t v = 0; v < spec.ell(); ++v) {
        if (!spec.I(u, v)) continue;
        const std::array<ProjectiveValue, 4> c{phi[u], phi[u + 1], ps[v], ps[v + 1]};
        double m = 1.0;
        for (int i = 0; i < 4; ++i)
          for (int j = i + 1; j < 4; ++j) m = std::min(m, chordal_distance(c[i], c[j]));
        if (m > best) {
          best = m;
          proto.pu = u;
          proto.pv = v;
        }
      }
    auto at = [](double t) { return ProjectiveValue{std::sin(t), std::cos(t)}; };
    const auto M = Moebius::from_triples({phi[proto.pu], phi[proto.pu + 1], ps[proto.pv]},
                                         {at(0.0), at(M_PI / 3), at(2 * M_PI / 3)});
    std::vector<double> a, b;
    for (const auto& p : phi) {
      const auto q = M(p);
      a.push_back(std::atan2(q.num, q.den));
    }
    for (const auto& p : ps) {
      const auto q = M(p);
      b.push_back(std::atan2(q.num, q.den));
    }
    proto.pinned = {a[proto.pu], a[proto.pu + 1], b[proto.pv]};
    angular = true;
    z = proto.pack(a, b);
    z_prev = z;
    r_prev = r;
  };

  auto attempt = [&](double r_next, Eigen::VectorXd& guess) {
    if (r != r_prev) guess = z + (z - z_prev) * ((r_next - r) / (r - r_prev));
    else guess = z;
    if (angular) {
      AngleSystem sys = proto;
      sys.r = r_next;
      return newton(sys, guess, opts.tol, opts.max_newton) && sys.accept(guess);
    }
    ChiSystem sys{spec, r_next, pins[0], pins[1], pins[2]};
    return newton(sys, guess, opts.tol, opts.max_newton) && sys.accept(guess);
  };
  bool repinned = false;
  while (r != r_target) {
    if (opts.stop.stop_requested()) throw StepBlowupError(r, "continuation cancelled");
    if (steps >= max_steps)
      throw StepBlowupError(r, "continuation exceeded its step budget at r = " + std::to_string(r));
    bool ok = false;
    double r_next = r;
    Eigen::VectorXd guess;
    for (int halving = 0; halving <= opts.max_halvings && !ok; ++halving) {
      r_next = r + dir * dr;
      if ((r_next - r_target) * dir > 0.0) r_next = r_target;
      ok = attempt(r_next, guess);
      if (!ok) dr *= 0.5;
    }
    // Shrinking steps signal a point where four corner values of a cell
    // meet; the solution passes through it, so try stepping across.
    if (!ok || dr < dr0 / 64) {
      for (double jump : {dr0, 4 * dr0, 16 * dr0}) {
        double r_far = r + dir * jump;
        if ((r_far - r_target) * dir > 0.0) r_far = r_target;
        Eigen::VectorXd far;
        if (attempt(r_far, far)) {
          ok = true;
          r_next = r_far;
          guess = far;
          dr = dr0;
          break;
        }
      }
    }
    if (!ok && !repinned && std::abs(r) >= 1e-3) {
      // A fresh angle chart, once per stall.
      enter_angle_mode();
      repinned = true;
      dr = dr0;
      continue;
    }
    if (!ok)
      throw StepBlowupError(r, "continuation stalled at r = " + std::to_string(r) + " towards " +
                                   std::to_string(r_target));
    repinned = false;
    z_prev = z;
    r_prev = r;
    z = guess;
    r = r_next;
    ++steps;
    dr = std::min(dr0, dr * 2.0);
    if (angular) continue;
    if (std::abs(r) >= 0.05) {
      enter_angle_mode();
      continue;
    }
    // A value drifting towards a coordinate pole (a psi value approaching the
    // point where chi = 0, say) is a gauge artefact; move the poles away.
    ChiSystem cur{spec, r, pins[0], pins[1], pins[2]};
    cur.unpack(z, chi, psi);
    if (spread(chi, psi) > 4.0 * base_spread && regauge(r, chi, psi)) {
      pins = {chi.front(), chi.back(), psi.front()};
      base_spread = spread(chi, psi);
      ChiSystem next{spec, r, pins[0], pins[1], pins[2]};
      z = next.pack(chi, psi);
      z_prev = z;
      r_prev = r;
    }
  }
  res.r_reached = r;
  res.steps = steps;
  if (!angular) {
    ChiSystem sys{spec, r, pins[0], pins[1], pins[2]};
    sys.unpack(z, chi, psi);
    res.chi = chi;
    res.psi = psi;
    res.values = chi_to_projective(chi, psi, r);
    return res;
  }
  std::vector<double> a, b;
  proto.unpack(z, a, b);
  BoundaryValues& bv = res.values;
  bv.r = r;
  for (double t : a) bv.phi.push_back(ProjectiveValue{std::sin(t), std::cos(t)}.normalized());
  for (double t : b) bv.psi.push_back(ProjectiveValue{std::sin(t), std::cos(t)}.normalized());
  bv.gauge = Gauge{"angle",
                   {{true, proto.pu, bv.phi[proto.pu]}, {true, proto.pu + 1, bv.phi[proto.pu + 1]},
                    {false, proto.pv, bv.psi[proto.pv]}}};
  return res;
}

BoundaryValues solve_continuation(const RegionSpec& spec, double r_target, double dr, double tol) {
  ContinuationOptions opts;
  opts.dr = dr;
  opts.tol = tol;
  return continue_from_ipf(spec, r_target, opts).values;
}

// ---------------------------------------------------------------------------
// The two convex 3x3 arrays that are not simple.

int nonsimple_3x3_pattern(const IndicatorArray& I) {
  if (I.k() != 3 || I.ell() != 3) return 0;
  auto matches = [&](std::size_t hu1, std::size_t hv1, std::size_t hu2, std::size_t hv2) {
    for (std::size_t u = 0; u < 3; ++u)
      for (std::size_t v = 0; v < 3; ++v) {
        const bool hole = (u == hu1 && v == hv1) || (u == hu2 && v == hv2);
        if (I(u, v) == hole) return false;
      }
    return true;
  };
  if (matches(0, 2, 2, 0)) return 1;
  if (matches(0, 0, 2, 2)) return 2;
  return 0;
}

namespace {

Quad3x3Result solve_pattern1(const RegionSpec& spec) {
  const double r = spec.r;
  const double a1 = spec.x[1], a2 = spec.x[2], b1 = spec.y[1], b2 = spec.y[2];
  // m(t) = exp(-r t) - 1. Both roots approach X = 1 as r -> 0, so everything
  // is written in W = X - 1 and V = Y - 1 with the constant terms cancelled
  // by hand.
  auto m = [r](double t) { return std::expm1(-r * t); };

  const double qa = -m(b2 - a1);
  const double qb = m(1 - a1) + m(b2) + m(a2 - a1 + b2 - b1) - m(1 - b1) - m(a2);
  const double qc = m(1 - b1) + m(a2) + m(1 + a2 - b1) - m(1 - a1 + a2 - b1) - m(b2 + a2 - b1) - m(1.0);
  // qa W^2 + B W + C = 0.
  const double B = 2.0 * qa + qb;
  const double C = qa + qb + qc;

  std::vector<double> roots;  // values of W, larger X first
  if (std::abs(qa) < 1e-14 * (std::abs(B) + std::abs(C))) {
    roots.push_back(-C / B);
  } else {
    const double disc = B * B - 4.0 * qa * C;
    if (disc < 0.0) throw Error(ErrorKind::AmbiguousBranch, "quadratic has no real roots");
    const double t = -0.5 * (B + std::copysign(std::sqrt(disc), B));
    double w1 = t / qa, w2 = t != 0.0 ? C / t : w1;
    if (w1 < w2) std::swap(w1, w2);
    roots = {w1, w2};
  }

  Quad3x3Result out;
  for (double W : roots) {
    Quad3x3Branch br;
    const double den = -m(a2 - b1);
    double V;
    if (std::abs(den) > 1e-8)
      V = (m(1 - a1) + m(b2) - m(1 - b1) - m(a2) - m(b2 - a1) + m(a2 - b1) - W * m(b2 - a1)) / den;
    else  // a2 = b1: the linear relation degenerates, use the first equation
      V = (m(1 - a1) + m(b2) - m(1.0) - (1.0 + W) * m(b2 - a1) - W) / (-W) - 1.0;
    const double X = 1.0 + W, Y = 1.0 + V;
    br.X = X;
    br.Y = Y;
    BoundaryValues bv;
    bv.r = r;
    const double common = V + W + V * W - m(1.0);  // XY - exp(-r)
    bv.phi = {ProjectiveValue::finite(0.0), ProjectiveValue{(W - m(a1)) * Y, common}.normalized(),
              ProjectiveValue{(W - m(a2)) * Y, common}.normalized(), ProjectiveValue::finite(1.0)};
    bv.psi = {ProjectiveValue::infinity(), ProjectiveValue{Y, V - m(b1)}.normalized(),
              ProjectiveValue{Y, V - m(b2)}.normalized(), ProjectiveValue{X * Y, common}.normalized()};
    bv.gauge = Gauge{"quadratic3x3", {{true, 0, bv.phi[0]}, {true, 3, bv.phi[3]}, {false, 0, bv.psi[0]}}};
    const auto masses = cell_masses(spec, bv);
    br.positive = true;
    for (std::size_t u = 0; u < 3; ++u)
      for (std::size_t v = 0; v < 3; ++v)
        if (spec.I(u, v)) {
          br.masses.push_back(masses[u][v]);
          if (!(masses[u][v] > 1e-12)) br.positive = false;
        }
    br.values = bv;
    out.branches.push_back(br);
  }
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < out.branches.size(); ++i)
    if (out.branches[i].positive) {
      ++n_pos;
      out.selected = i;
    }
  if (n_pos != 1) out.selected.reset();
  return out;
}

RegionSpec reflect_x(const RegionSpec& spec) {
  RegionSpec out = spec;
  const std::size_t k = spec.k();
  for (std::size_t i = 0; i <= k; ++i) out.x[i] = 1.0 - spec.x[k - i];
  out.x.front() = 0.0;
  out.x.back() = 1.0;
  for (std::size_t u = 0; u < k; ++u)
    for (std::size_t v = 0; v < spec.ell(); ++v) out.I.set(u, v, spec.I(k - 1 - u, v));
  out.r = -spec.r;
  return out;
}

}  // namespace

Quad3x3Result solve_3x3_branches(const RegionSpec& spec) {
  validate_basic(spec);
  if (spec.r == 0.0) throw Error(ErrorKind::RZero, "quadratic solver needs r != 0");
  const int pattern = nonsimple_3x3_pattern(spec.I);
  if (pattern == 0) throw Error(ErrorKind::InvalidInput, "not one of the two non-simple 3x3 arrays");
  if (pattern == 1) return solve_pattern1(spec);

  Quad3x3Result res = solve_pattern1(reflect_x(spec));
  for (auto& br : res.branches) {
    BoundaryValues& bv = br.values;
    std::reverse(bv.phi.begin(), bv.phi.end());
    bv.r = spec.r;
    for (auto& pin : bv.gauge.pins)
      if (pin.is_phi) pin.index = 3 - pin.index;
    // Reorder the masses to the original column-major cell order.
    const auto m = cell_masses(spec, bv);
    br.masses.clear();
    for (std::size_t u = 0; u < 3; ++u)
      for (std::size_t v = 0; v < 3; ++v)
        if (spec.I(u, v)) br.masses.push_back(m[u][v]);
  }
  return res;
}

BoundaryValues solve_3x3_nonsimple(const RegionSpec& spec) {
  const Quad3x3Result res = solve_3x3_branches(spec);
  if (!res.selected) {
    std::size_t n_pos = 0;
    for (const auto& br : res.branches) n_pos += br.positive;
    throw Error(ErrorKind::AmbiguousBranch,
                std::to_string(n_pos) + " of " + std::to_string(res.branches.size()) + " roots give positive masses");
  }
  return res.branches[*res.selected].values;
}

}  // namespace permuton
