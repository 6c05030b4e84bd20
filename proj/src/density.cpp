#include "permuton/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "permuton/errors.hpp"

namespace permuton {

namespace {

std::array<double, 4> scaled(std::array<double, 4> c) {
  double m = 0.0;
  for (double e : c) m = std::max(m, std::abs(e));
  if (!(m > 0.0) || !std::isfinite(m)) throw Error(ErrorKind::PoleOnRectangle, "degenerate rectangle coefficients");
  for (double& e : c) e /= m;
  return c;
}

constexpr int kProbe = 32;

}  // namespace

RectCoeffs RectCoeffs::from_local(std::size_t u, std::size_t v, double r, double x0, double x1, double y0, double y1,
                                  std::array<double, 4> abcd) {
  RectCoeffs c;
  c.u = u;
  c.v = v;
  c.kind = RectKind::Moebius;
  c.r = r;
  c.x0 = x0;
  c.x1 = x1;
  c.y0 = y0;
  c.y1 = y1;
  c.local = scaled(abcd);
  return c;
}

RectCoeffs RectCoeffs::from_global(std::size_t u, std::size_t v, double r, double x0, double x1, double y0, double y1,
                                   std::array<double, 4> abcd) {
  return from_local(u, v, r, x0, x1, y0, y1,
                    {abcd[0], abcd[1] * std::exp(r * y0), abcd[2] * std::exp(r * x0), abcd[3] * std::exp(r * (x0 + y0))});
}

RectCoeffs RectCoeffs::constant(std::size_t u, std::size_t v, double x0, double x1, double y0, double y1, double g) {
  RectCoeffs c;
  c.u = u;
  c.v = v;
  c.kind = RectKind::Constant;
  c.value = g;
  c.x0 = x0;
  c.x1 = x1;
  c.y0 = y0;
  c.y1 = y1;
  return c;
}

std::array<double, 4> RectCoeffs::global() const {
  if (kind == RectKind::Constant) return {0.0, 0.0, 0.0, 0.0};
  return scaled({local[0], local[1] * std::exp(-r * y0), local[2] * std::exp(-r * x0),
                 local[3] * std::exp(-r * (x0 + y0))});
}

double RectCoeffs::g(double x, double y) const {
  if (kind == RectKind::Constant) return value;
  const double T = std::exp(r * (x - x0)), S = std::exp(r * (y - y0));
  const double q = Q(T, S);
  return -det() * r * T * S / (q * q);
}

double RectCoeffs::mass(double xa, double xb, double ya, double yb) const {
  if (kind == RectKind::Constant) return value * (xb - xa) * (yb - ya);
  if (xb == xa || yb == ya) return 0.0;
  const double T1 = std::exp(r * (xa - x0)), T2 = std::exp(r * (xb - x0));
  const double S1 = std::exp(r * (ya - y0)), S2 = std::exp(r * (yb - y0));
  const double dT = T1 * std::expm1(r * (xb - xa));
  const double dS = S1 * std::expm1(r * (yb - ya));
  return -std::log1p(det() * dT * dS / (Q(T1, S2) * Q(T2, S1))) / r;
}

double RectCoeffs::column_integral(double x, double ya, double yb) const {
  if (kind == RectKind::Constant) return value * (yb - ya);
  const double T = std::exp(r * (x - x0));
  const double S1 = std::exp(r * (ya - y0));
  const double dS = S1 * std::expm1(r * (yb - ya));
  const double S2 = S1 + dS;
  return -det() * T * dS / (Q(T, S1) * Q(T, S2));
}

double RectCoeffs::row_integral(double y, double xa, double xb) const {
  if (kind == RectKind::Constant) return value * (xb - xa);
  const double S = std::exp(r * (y - y0));
  const double T1 = std::exp(r * (xa - x0));
  const double dT = T1 * std::expm1(r * (xb - xa));
  const double T2 = T1 + dT;
  return -det() * S * dT / (Q(T1, S) * Q(T2, S));
}

const char* to_string(FieldSource s) {
  switch (s) {
    case FieldSource::Ipf: return "ipf";
    case FieldSource::Simple: return "simple";
    case FieldSource::Continuation: return "continuation";
    case FieldSource::Quadratic3x3: return "quad3x3";
    case FieldSource::Oracle: return "oracle";
  }
  return "oracle";
}

FieldSource field_source_from_string(const std::string& s) {
  for (auto f : {FieldSource::Ipf, FieldSource::Simple, FieldSource::Continuation, FieldSource::Quadratic3x3,
                 FieldSource::Oracle})
    if (s == to_string(f)) return f;
  throw Error(ErrorKind::InvalidInput, "unknown field source '" + s + "'");
}

const RectCoeffs* DensityField::rect(std::size_t u, std::size_t v) const {
  const long i = index[u * spec.ell() + v];
  return i < 0 ? nullptr : &rects[static_cast<std::size_t>(i)];
}

namespace {

void screen(const RectCoeffs& c) {
  if (c.kind == RectKind::Constant) {
    if (!std::isfinite(c.value)) throw Error(ErrorKind::PoleOnRectangle, "non-finite constant density");
    return;
  }
  const double Ta = 1.0, Tb = std::exp(c.r * (c.x1 - c.x0));
  const double Sa = 1.0, Sb = std::exp(c.r * (c.y1 - c.y0));
  // Q is bilinear in (T, S), so its sign pattern on the rectangle is decided
  // by the four corners.
  const double q[4] = {c.Q(Ta, Sa), c.Q(Ta, Sb), c.Q(Tb, Sa), c.Q(Tb, Sb)};
  const double tiny = 1e-14;
  const bool pos = q[0] > tiny && q[1] > tiny && q[2] > tiny && q[3] > tiny;
  const bool neg = q[0] < -tiny && q[1] < -tiny && q[2] < -tiny && q[3] < -tiny;
  const std::string where = "cell (" + std::to_string(c.u + 1) + "," + std::to_string(c.v + 1) + ")";
  if (!pos && !neg) throw Error(ErrorKind::PoleOnRectangle, "denominator changes sign on " + where);
  for (int i = 0; i <= kProbe; ++i)
    for (int j = 0; j <= kProbe; ++j) {
      const double x = c.x0 + (c.x1 - c.x0) * i / kProbe;
      const double y = c.y0 + (c.y1 - c.y0) * j / kProbe;
      if (!std::isfinite(c.g(x, y))) throw Error(ErrorKind::PoleOnRectangle, "density blows up on " + where);
    }
}

// Moebius map sending 0, infinity, 1 to the given values; t -> p.
Moebius standard(const ProjectiveValue& p0, const ProjectiveValue& pinf, const ProjectiveValue& p1) {
  return Moebius::from_standard(p0, pinf, p1);
}

}  // namespace

DensityField make_field(const RegionSpec& spec, std::vector<RectCoeffs> rects, FieldSource source) {
  DensityField f;
  f.spec = spec;
  f.source = source;
  f.index.assign(spec.k() * spec.ell(), -1);
  for (auto& c : rects) {
    if (c.u >= spec.k() || c.v >= spec.ell() || !spec.I(c.u, c.v))
      throw Error(ErrorKind::InvalidInput, "coefficients given for a cell outside the support");
    c.x0 = spec.x[c.u];
    c.x1 = spec.x[c.u + 1];
    c.y0 = spec.y[c.v];
    c.y1 = spec.y[c.v + 1];
    screen(c);
  }
  for (std::size_t i = 0; i < rects.size(); ++i) {
    long& slot = f.index[rects[i].u * spec.ell() + rects[i].v];
    if (slot >= 0) throw Error(ErrorKind::InvalidInput, "duplicate coefficients for a cell");
    slot = static_cast<long>(i);
  }
  for (std::size_t u = 0; u < spec.k(); ++u)
    for (std::size_t v = 0; v < spec.ell(); ++v)
      if (spec.I(u, v) && f.index[u * spec.ell() + v] < 0)
        throw Error(ErrorKind::InvalidInput, "missing coefficients for a supported cell");
  f.rects = std::move(rects);
  return f;
}

DensityField build_field(const RegionSpec& spec, const BoundaryValues& bv, FieldSource source) {
  if (spec.r == 0.0) throw Error(ErrorKind::RZero, "use field_from_scaling at r = 0");
  if (!is_convex(spec.I)) throw Error(ErrorKind::InvalidInput, "boundary values describe convex arrays only");
  const std::size_t k = spec.k(), ell = spec.ell();
  std::vector<Moebius> col(k), row(ell);
  for (std::size_t u = 0; u < k; ++u) {
    std::size_t lo = ell, hi = 0;
    for (std::size_t v = 0; v < ell; ++v)
      if (spec.I(u, v)) lo = std::min(lo, v), hi = std::max(hi, v);
    col[u] = standard(bv.psi[lo], bv.psi[hi + 1], bv.phi[u]);
  }
  for (std::size_t v = 0; v < ell; ++v) {
    std::size_t lo = k, hi = 0;
    for (std::size_t u = 0; u < k; ++u)
      if (spec.I(u, v)) lo = std::min(lo, u), hi = std::max(hi, u);
    row[v] = standard(bv.phi[lo], bv.phi[hi + 1], bv.psi[v]);
  }
  std::vector<RectCoeffs> rects;
  for (std::size_t u = 0; u < k; ++u)
    for (std::size_t v = 0; v < ell; ++v) {
      if (!spec.I(u, v)) continue;
      const auto& M = col[u].m;
      const auto& N = row[v].m;
      const double al = M[0], be = M[1], ga = M[2], de = M[3];
      const double al2 = N[0], be2 = N[1], ga2 = N[2], de2 = N[3];
      // phi - psi over the product of denominators, as a bilinear form in T, S.
      const std::array<double, 4> abcd{be * de2 - be2 * de, be * ga2 - al2 * de, al * de2 - be2 * ga,
                                       al * ga2 - al2 * ga};
      rects.push_back(
          RectCoeffs::from_local(u, v, spec.r, spec.x[u], spec.x[u + 1], spec.y[v], spec.y[v + 1], abcd));
    }
  return make_field(spec, std::move(rects), source);
}

DensityField field_from_scaling(const RegionSpec& spec, const ScalingSolution& s) {
  std::vector<RectCoeffs> rects;
  for (std::size_t u = 0; u < spec.k(); ++u)
    for (std::size_t v = 0; v < spec.ell(); ++v)
      if (spec.I(u, v))
        rects.push_back(RectCoeffs::constant(u, v, spec.x[u], spec.x[u + 1], spec.y[v], spec.y[v + 1],
                                             s.density(spec, u, v)));
  RegionSpec sp = spec;
  sp.r = 0.0;
  return make_field(sp, std::move(rects), FieldSource::Ipf);
}

std::pair<std::size_t, std::size_t> locate(const RegionSpec& spec, double x, double y) {
  auto find = [](const std::vector<double>& b, double t) {
    const auto it = std::upper_bound(b.begin() + 1, b.end() - 1, t);
    return static_cast<std::size_t>(it - b.begin()) - 1;
  };
  return {find(spec.x, x), find(spec.y, y)};
}

double rect_mass(const DensityField& f, std::size_t u, std::size_t v, double x1, double x2, double y1, double y2) {
  const auto& s = f.spec;
  const double eps = 1e-14;
  if (u >= s.k() || v >= s.ell() || x1 > x2 || y1 > y2 || x1 < s.x[u] - eps || x2 > s.x[u + 1] + eps ||
      y1 < s.y[v] - eps || y2 > s.y[v + 1] + eps)
    throw Error(ErrorKind::OutOfRectangle, "sub-rectangle is not inside cell (" + std::to_string(u + 1) + "," +
                                               std::to_string(v + 1) + ")");
  const RectCoeffs* c = f.rect(u, v);
  return c ? c->mass(x1, x2, y1, y2) : 0.0;
}

double eval_g(const DensityField& f, double x, double y) {
  const auto [u, v] = locate(f.spec, x, y);
  const RectCoeffs* c = f.rect(u, v);
  return c ? c->g(x, y) : 0.0;
}

double eval_height(const DensityField& f, double x, double y) {
  double h = 0.0;
  for (const auto& c : f.rects) {
    const double xa = std::max(x, c.x0), xb = c.x1;
    const double ya = c.y0, yb = std::min(y, c.y1);
    if (xa < xb && ya < yb) h += c.mass(xa, xb, ya, yb);
  }
  return h;
}

namespace {

DensityGrid empty_grid(const DensityField& f, std::size_t n) {
  if (n < 2) throw Error(ErrorKind::InvalidInput, "grid needs n >= 2");
  DensityGrid G;
  G.n = n;
  G.r = f.spec.r;
  G.g_values.assign(n, std::vector<double>(n, 0.0));
  G.h_centers.assign(n, std::vector<double>(n, 0.0));
  G.h_values.assign(n + 1, std::vector<double>(n + 1, 0.0));
  return G;
}

void fill_center(const DensityField& f, DensityGrid& G, std::size_t i, std::size_t j) {
  const double n = static_cast<double>(G.n);
  const double x = (static_cast<double>(i) + 0.5) / n, y = (static_cast<double>(j) + 0.5) / n;
  G.g_values[i][j] = eval_g(f, x, y);
  G.h_centers[i][j] = eval_height(f, x, y);
}

void fill_corner(const DensityField& f, DensityGrid& G, std::size_t i, std::size_t j) {
  const double n = static_cast<double>(G.n);
  G.h_values[i][j] = eval_height(f, static_cast<double>(i) / n, static_cast<double>(j) / n);
}

}  // namespace

DensityGrid grid(const DensityField& f, std::size_t n) {
  DensityGrid G = empty_grid(f, n);
  const long N = static_cast<long>(n);
#pragma omp parallel for schedule(static)
  for (long idx = 0; idx < N * N; ++idx)
    fill_center(f, G, static_cast<std::size_t>(idx / N), static_cast<std::size_t>(idx % N));
#pragma omp parallel for schedule(static)
  for (long idx = 0; idx < (N + 1) * (N + 1); ++idx)
    fill_corner(f, G, static_cast<std::size_t>(idx / (N + 1)), static_cast<std::size_t>(idx % (N + 1)));
  return G;
}

DensityGrid grid_serial(const DensityField& f, std::size_t n) {
  DensityGrid G = empty_grid(f, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) fill_center(f, G, i, j);
  for (std::size_t i = 0; i <= n; ++i)
    for (std::size_t j = 0; j <= n; ++j) fill_corner(f, G, i, j);
  return G;
}

std::vector<RectBounds> probe_bounds(const DensityField& f) {
  std::vector<RectBounds> out;
  for (const auto& c : f.rects) {
    RectBounds b{c.u, c.v, std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (int i = 0; i <= kProbe; ++i)
      for (int j = 0; j <= kProbe; ++j) {
        const double g = c.g(c.x0 + (c.x1 - c.x0) * i / kProbe, c.y0 + (c.y1 - c.y0) * j / kProbe);
        b.min_g = std::min(b.min_g, g);
        b.max_g = std::max(b.max_g, g);
      }
    out.push_back(b);
  }
  return out;
}

}  // namespace permuton
