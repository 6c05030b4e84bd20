#include "permuton/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "permuton/errors.hpp"
#include "permuton/oracles.hpp"
#include "permuton/quadrature.hpp"

namespace permuton {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Cell on the given side of t: '-' takes the cell ending at t, '+' the one
// starting at t; the outer edges clamp.
std::size_t side_index(const std::vector<double>& b, double t, bool plus) {
  const std::size_t n = b.size() - 1;
  if (plus) {
    const auto it = std::upper_bound(b.begin(), b.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - b.begin());
    return i == 0 ? 0 : std::min(i - 1, n - 1);
  }
  const auto it = std::lower_bound(b.begin(), b.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - b.begin());
  return i == 0 ? 0 : std::min(i - 1, n - 1);
}

void note(CheckReport& rep, double residual, std::vector<double> where, const char* kind) {
  ++rep.evaluated;
  if (!(residual <= rep.max_residual)) {
    if (std::isnan(residual)) residual = kInf;
    if (residual > rep.max_residual || rep.witness.empty()) {
      rep.max_residual = residual;
      rep.witness = std::move(where);
      rep.witness_kind = kind;
    }
  }
}

void finish(CheckReport& rep) { rep.pass = rep.max_residual <= rep.tol; }

bool convex_or_false(const IndicatorArray& I) {
  try {
    return is_convex(I);
  } catch (const Error&) {
    return false;
  }
}

}  // namespace

double DensityModel::limit(std::size_t u, std::size_t v, double x, double y) const {
  if (!region().I(u, v) || !in_support(u, v, x, y)) return 0.0;
  return cell_g(u, v, x, y);
}

double FieldModel::cell_g(std::size_t u, std::size_t v, double x, double y) const {
  const RectCoeffs* c = f_.rect(u, v);
  return c ? c->g(x, y) : 0.0;
}

std::optional<double> FieldModel::cell_mass(std::size_t u, std::size_t v, double xa, double xb, double ya,
                                            double yb) const {
  const RectCoeffs* c = f_.rect(u, v);
  return c ? c->mass(xa, xb, ya, yb) : 0.0;
}

std::optional<double> FieldModel::column_integral(std::size_t u, std::size_t v, double x, double ya, double yb) const {
  const RectCoeffs* c = f_.rect(u, v);
  return c ? c->column_integral(x, ya, yb) : 0.0;
}

std::optional<double> FieldModel::row_integral(std::size_t u, std::size_t v, double y, double xa, double xb) const {
  const RectCoeffs* c = f_.rect(u, v);
  return c ? c->row_integral(y, xa, xb) : 0.0;
}

FunctionModel& FunctionModel::with_support(SupportFn s, BreakFn yb, BreakFn xb) {
  support_ = std::move(s);
  ybreaks_ = std::move(yb);
  xbreaks_ = std::move(xb);
  return *this;
}

std::unique_ptr<DensityModel> staircase_model(double a, double b, double r) {
  return std::make_unique<FunctionModel>(staircase_spec(a, b, r), [a, b, r](std::size_t u, std::size_t v, double x,
                                                                             double y) {
    return oracle_staircase_2x2_cell(a, b, r, u, v, x, y);
  });
}

std::unique_ptr<DensityModel> nonconvex_model(double r) {
  return std::make_unique<FunctionModel>(nonconvex_3x2_spec(r), [r](std::size_t u, std::size_t v, double x, double y) {
    return oracle_nonconvex_3x2_cell(r, u, v, x, y);
  });
}

std::unique_ptr<DensityModel> triangle_model(double a, double b) {
  RegionSpec s;
  s.x = {0.0, 1.0 / a, 1.0};
  s.y = {0.0, 1.0 / b, 1.0};
  s.I = IndicatorArray(2, 2, true);
  s.r = 0.0;
  auto m = std::make_unique<FunctionModel>(s, [a, b](std::size_t u, std::size_t v, double x, double y) {
    if (u == 0 && v == 0) {
      // Extend the branch below the cut so that limits on it are well defined.
      const double X = (a - b) * x + b - 1.0, Y = (b - a) * y + a - 1.0;
      return std::pow(b, a / (a - b)) * std::pow(a, b / (b - a)) * std::pow(X, a / (b - a)) *
             std::pow(Y, b / (a - b));
    }
    return oracle_triangle_cell(a, b, u, v, x, y);
  });
  m->with_support(
      [a, b](std::size_t u, std::size_t v, double x, double y) { return u != 0 || v != 0 || a * x + b * y >= 1.0; },
      [a, b](std::size_t u, std::size_t v, double x) {
        return u == 0 && v == 0 ? std::vector<double>{(1.0 - a * x) / b} : std::vector<double>{};
      },
      [a, b](std::size_t u, std::size_t v, double y) {
        return u == 0 && v == 0 ? std::vector<double>{(1.0 - b * y) / a} : std::vector<double>{};
      });
  return m;
}

namespace {

double cell_quad_mass(const DensityModel& m, std::size_t u, std::size_t v, double xa, double xb, double ya,
                      double yb) {
  auto inner = [&](double x) {
    return integrate(
        [&](double y) { return m.in_support(u, v, x, y) ? m.cell_g(u, v, x, y) : 0.0; }, ya, yb,
        m.y_breaks(u, v, x));
  };
  std::vector<double> xb_breaks = m.x_breaks(u, v, ya);
  for (double t : m.x_breaks(u, v, yb)) xb_breaks.push_back(t);
  return integrate(inner, xa, xb, xb_breaks);
}

}  // namespace

double model_mass(const DensityModel& m, double x1, double x2, double y1, double y2) {
  const RegionSpec& s = m.region();
  double total = 0.0;
  for (std::size_t u = 0; u < s.k(); ++u) {
    const double xa = std::max(x1, s.x[u]), xb = std::min(x2, s.x[u + 1]);
    if (!(xa < xb)) continue;
    for (std::size_t v = 0; v < s.ell(); ++v) {
      const double ya = std::max(y1, s.y[v]), yb = std::min(y2, s.y[v + 1]);
      if (!(ya < yb) || !s.I(u, v)) continue;
      const auto closed = m.cell_mass(u, v, xa, xb, ya, yb);
      total += closed ? *closed : cell_quad_mass(m, u, v, xa, xb, ya, yb);
    }
  }
  return total;
}

double column_marginal(const DensityModel& m, double x) {
  const RegionSpec& s = m.region();
  const std::size_t u = side_index(s.x, x, true);
  double total = 0.0;
  for (std::size_t v = 0; v < s.ell(); ++v) {
    if (!s.I(u, v)) continue;
    const auto closed = m.column_integral(u, v, x, s.y[v], s.y[v + 1]);
    total += closed ? *closed
                    : integrate([&](double y) { return m.in_support(u, v, x, y) ? m.cell_g(u, v, x, y) : 0.0; },
                                s.y[v], s.y[v + 1], m.y_breaks(u, v, x));
  }
  return total;
}

double row_marginal(const DensityModel& m, double y) {
  const RegionSpec& s = m.region();
  const std::size_t v = side_index(s.y, y, true);
  double total = 0.0;
  for (std::size_t u = 0; u < s.k(); ++u) {
    if (!s.I(u, v)) continue;
    const auto closed = m.row_integral(u, v, y, s.x[u], s.x[u + 1]);
    total += closed ? *closed
                    : integrate([&](double x) { return m.in_support(u, v, x, y) ? m.cell_g(u, v, x, y) : 0.0; },
                                s.x[u], s.x[u + 1], m.x_breaks(u, v, y));
  }
  return total;
}

CheckReport check_four_point(const DensityModel& m, std::size_t n_rects, double tol, std::uint64_t seed,
                             FourPointScope scope) {
  const RegionSpec& s = m.region();
  if (scope == FourPointScope::Auto)
    scope = convex_or_false(s.I) ? FourPointScope::Global : FourPointScope::WithinCells;
  CheckReport rep;
  rep.name = "four_point";
  rep.tol = tol;
  rep.detail = {{"seed", seed},
                {"scope", scope == FourPointScope::Global ? "global" : "within_cells"},
                {"requested", n_rects}};

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  for (std::size_t u = 0; u < s.k(); ++u)
    for (std::size_t v = 0; v < s.ell(); ++v)
      if (s.I(u, v)) cells.emplace_back(u, v);
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(unit(rng) * static_cast<double>(n)) % n; };
  auto breakpoint = [&](const std::vector<double>& b) { return b[pick(b.size())]; };

  static const char* kinds[] = {"generic", "degenerate_x", "degenerate_y", "snapped", "spanning"};
  std::size_t accepted = 0, attempts = 0;
  while (accepted < n_rects && attempts < 200 * n_rects + 1000) {
    const std::size_t kind = attempts++ % 5;
    double x1, x2, y1, y2;
    double g11, g22, g12, g21;
    if (scope == FourPointScope::Global) {
      x1 = unit(rng), x2 = unit(rng), y1 = unit(rng), y2 = unit(rng);
      if (kind == 3) {
        x1 = breakpoint(s.x);
        y2 = breakpoint(s.y);
      } else if (kind == 4 && s.k() > 1) {
        const std::size_t ua = pick(s.k()), ub = pick(s.k());
        x1 = s.x[std::min(ua, ub)] + unit(rng) * (s.x[std::min(ua, ub) + 1] - s.x[std::min(ua, ub)]);
        x2 = s.x[std::max(ua, ub)] + unit(rng) * (s.x[std::max(ua, ub) + 1] - s.x[std::max(ua, ub)]);
      }
      if (x1 > x2) std::swap(x1, x2);
      if (y1 > y2) std::swap(y1, y2);
      // Degenerate rectangles sit on an interior breakpoint, where the two
      // one-sided limits differ.
      if (kind == 1) x1 = x2 = s.k() > 1 ? s.x[1 + pick(s.k() - 1)] : x1;
      if (kind == 2) y1 = y2 = s.ell() > 1 ? s.y[1 + pick(s.ell() - 1)] : y1;
      const std::size_t u1 = side_index(s.x, x1, false), u2 = side_index(s.x, x2, true);
      const std::size_t v1 = side_index(s.y, y1, false), v2 = side_index(s.y, y2, true);
      g11 = m.limit(u1, v1, x1, y1);
      g22 = m.limit(u2, v2, x2, y2);
      g12 = m.limit(u1, v2, x1, y2);
      g21 = m.limit(u2, v1, x2, y1);
    } else {
      const auto [u, v] = cells[pick(cells.size())];
      auto in = [&](const std::vector<double>& b, std::size_t i) { return b[i] + unit(rng) * (b[i + 1] - b[i]); };
      x1 = in(s.x, u), x2 = in(s.x, u), y1 = in(s.y, v), y2 = in(s.y, v);
      if (kind == 3) {
        x1 = s.x[u];
        y2 = s.y[v + 1];
      }
      if (x1 > x2) std::swap(x1, x2);
      if (y1 > y2) std::swap(y1, y2);
      if (kind == 1) x2 = x1;
      if (kind == 2) y2 = y1;
      g11 = m.limit(u, v, x1, y1);
      g22 = m.limit(u, v, x2, y2);
      g12 = m.limit(u, v, x1, y2);
      g21 = m.limit(u, v, x2, y1);
    }
    // Corners must carry density; exact zeros are holes or cuts.
    if (g11 == 0.0 || g22 == 0.0 || g12 == 0.0 || g21 == 0.0) continue;
    ++accepted;
    double res;
    if (!(g11 > 0.0 && g22 > 0.0 && g12 > 0.0 && g21 > 0.0)) {
      res = kInf;
    } else {
      const double mass = (x1 == x2 || y1 == y2) ? 0.0 : model_mass(m, x1, x2, y1, y2);
      res = std::abs(std::log(g11) + std::log(g22) - std::log(g12) - std::log(g21) - 2.0 * s.r * mass);
    }
    note(rep, res, {x1, x2, y1, y2}, kinds[kind]);
  }
  rep.detail["accepted"] = accepted;
  finish(rep);
  if (accepted < n_rects) rep.pass = false;
  return rep;
}

CheckReport check_marginals(const DensityModel& m, std::size_t n_abscissae, double tol) {
  CheckReport rep;
  rep.name = "marginals";
  rep.tol = tol;
  for (std::size_t i = 0; i < n_abscissae; ++i) {
    const double t = (static_cast<double>(i) + 0.5) / static_cast<double>(n_abscissae);
    note(rep, std::abs(column_marginal(m, t) - 1.0), {t, 0.0}, "column");
    note(rep, std::abs(row_marginal(m, t) - 1.0), {t, 1.0}, "row");
  }
  finish(rep);
  return rep;
}

CheckReport check_jumps(const DensityModel& m, double tol) {
  const RegionSpec& s = m.region();
  CheckReport rep;
  rep.name = "jumps";
  rep.tol = tol;
  rep.detail = nlohmann::json::array();
  constexpr int kPoints = 16;

  // Ratio of the far branch to the near branch across one gap, along a segment.
  auto segment = [&](bool vertical, std::size_t line, std::size_t c1, std::size_t c2) {
    const std::vector<double>& along = vertical ? s.x : s.y;
    double lo = kInf, hi = -kInf, first = 0.0;
    bool bad = false, any = false;
    std::vector<double> worst;
    for (int j = 0; j < kPoints; ++j) {
      const double t = along[line] + (along[line + 1] - along[line]) * j / (kPoints - 1);
      double g1, g2;
      if (vertical) {
        if (!m.in_support(line, c1, t, s.y[c1 + 1]) || !m.in_support(line, c2, t, s.y[c2])) continue;
        g1 = m.cell_g(line, c1, t, s.y[c1 + 1]);
        g2 = m.cell_g(line, c2, t, s.y[c2]);
      } else {
        if (!m.in_support(c1, line, s.x[c1 + 1], t) || !m.in_support(c2, line, s.x[c2], t)) continue;
        g1 = m.cell_g(c1, line, s.x[c1 + 1], t);
        g2 = m.cell_g(c2, line, s.x[c2], t);
      }
      if (!(g1 > 0.0 && g2 > 0.0)) {
        bad = true;
        worst = {t};
        continue;
      }
      const double l = std::log(g2 / g1);
      if (!any) first = l;
      any = true;
      if (l < lo || l > hi) worst = {t};
      lo = std::min(lo, l);
      hi = std::max(hi, l);
    }
    if (!any && !bad) return;
    const double spread = bad ? kInf : hi - lo;
    std::vector<double> where{vertical ? 0.0 : 1.0, static_cast<double>(line), static_cast<double>(c1),
                              static_cast<double>(c2)};
    where.insert(where.end(), worst.begin(), worst.end());
    note(rep, spread, where, vertical ? "vertical" : "horizontal");
    rep.detail.push_back({{"axis", vertical ? "vertical" : "horizontal"},
                          {"line", line + 1},
                          {"from", c1 + 1},
                          {"to", c2 + 1},
                          {"constant", any ? std::exp(first) : 0.0},
                          {"spread", spread}});
  };

  for (std::size_t u = 0; u < s.k(); ++u) {
    std::optional<std::size_t> prev;
    for (std::size_t v = 0; v < s.ell(); ++v) {
      if (!s.I(u, v)) continue;
      if (prev) segment(true, u, *prev, v);
      prev = v;
    }
  }
  for (std::size_t v = 0; v < s.ell(); ++v) {
    std::optional<std::size_t> prev;
    for (std::size_t u = 0; u < s.k(); ++u) {
      if (!s.I(u, v)) continue;
      if (prev) segment(false, v, *prev, u);
      prev = u;
    }
  }
  finish(rep);
  return rep;
}

CheckReport check_corners(const DensityModel& m, double tol) {
  const RegionSpec& s = m.region();
  const std::size_t k = s.k(), ell = s.ell();
  CheckReport rep;
  rep.name = "corners";
  rep.tol = tol;
  // P(u, v) = number of supported cells with index < u, < v.
  std::vector<long> P((k + 1) * (ell + 1), 0);
  auto at = [&](std::size_t u, std::size_t v) -> long& { return P[u * (ell + 1) + v]; };
  for (std::size_t u = 0; u < k; ++u)
    for (std::size_t v = 0; v < ell; ++v)
      at(u + 1, v + 1) = at(u, v + 1) + at(u + 1, v) - at(u, v) + (s.I(u, v) ? 1 : 0);
  auto interior = [&](std::size_t u1, std::size_t u2, std::size_t v1, std::size_t v2) {
    if (u2 <= u1 + 1 || v2 <= v1 + 1) return 0L;
    return at(u2, v2) - at(u1 + 1, v2) - at(u2, v1 + 1) + at(u1 + 1, v1 + 1);
  };
  for (std::size_t u1 = 0; u1 < k; ++u1)
    for (std::size_t u2 = u1 + 1; u2 < k; ++u2)
      for (std::size_t v1 = 0; v1 < ell; ++v1) {
        if (!s.I(u1, v1) || !s.I(u2, v1)) continue;
        for (std::size_t v2 = v1 + 1; v2 < ell; ++v2) {
          if (!s.I(u1, v2) || !s.I(u2, v2)) continue;
          if (interior(u1, u2, v1, v2) != 0) break;  // grows monotonically in v2
          const double xa = s.x[u1 + 1], xb = s.x[u2], ya = s.y[v1 + 1], yb = s.y[v2];
          if (!m.in_support(u1, v1, xa, ya) || !m.in_support(u2, v2, xb, yb) || !m.in_support(u1, v2, xa, yb) ||
              !m.in_support(u2, v1, xb, ya))
            continue;
          const double g11 = m.cell_g(u1, v1, xa, ya), g22 = m.cell_g(u2, v2, xb, yb);
          const double g12 = m.cell_g(u1, v2, xa, yb), g21 = m.cell_g(u2, v1, xb, ya);
          const double res = (g11 > 0.0 && g22 > 0.0 && g12 > 0.0 && g21 > 0.0)
                                 ? std::abs(std::log(g11) + std::log(g22) - std::log(g12) - std::log(g21))
                                 : kInf;
          note(rep, res,
               {static_cast<double>(u1 + 1), static_cast<double>(u2 + 1), static_cast<double>(v1 + 1),
                static_cast<double>(v2 + 1)},
               "vertex");
        }
      }
  finish(rep);
  return rep;
}

CheckReport check_positivity(const DensityModel& m) {
  const RegionSpec& s = m.region();
  CheckReport rep;
  rep.name = "positivity";
  rep.tol = 0.0;
  rep.detail = nlohmann::json::array();
  constexpr int kProbe = 33;
  for (std::size_t u = 0; u < s.k(); ++u)
    for (std::size_t v = 0; v < s.ell(); ++v) {
      if (!s.I(u, v)) continue;
      double lo = kInf, hi = -kInf;
      std::vector<double> at_lo;
      for (int i = 0; i < kProbe; ++i)
        for (int j = 0; j < kProbe; ++j) {
          const double x = s.x[u] + (s.x[u + 1] - s.x[u]) * i / (kProbe - 1);
          const double y = s.y[v] + (s.y[v + 1] - s.y[v]) * j / (kProbe - 1);
          if (!m.in_support(u, v, x, y)) continue;
          double g = m.cell_g(u, v, x, y);
          if (std::isnan(g)) g = -kInf;
          if (g < lo) at_lo = {x, y};
          lo = std::min(lo, g);
          hi = std::max(hi, g);
        }
      if (at_lo.empty()) continue;
      note(rep, std::max(0.0, -lo), at_lo, "probe");
      rep.detail.push_back({{"u", u + 1}, {"v", v + 1}, {"min_g", lo}, {"max_g", hi}});
    }
  finish(rep);
  return rep;
}

const CheckReport* BatteryReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

BatteryReport run_battery(const DensityModel& m, const BatteryOptions& o) {
  BatteryReport b;
  b.checks.push_back(check_four_point(m, o.n_rects, o.tol_four_point, o.seed, o.scope));
  b.checks.push_back(check_marginals(m, o.n_abscissae, o.tol_marginals));
  b.checks.push_back(check_jumps(m, o.tol_jumps));
  b.checks.push_back(check_corners(m, o.tol_jumps));
  b.checks.push_back(check_positivity(m));
  for (const auto& c : b.checks) b.pass = b.pass && c.pass;
  return b;
}

BatteryReport run_battery(const DensityField& f, const BatteryOptions& opts) {
  return run_battery(FieldModel(f), opts);
}

nlohmann::json to_json(const CheckReport& c) {
  nlohmann::json j = {{"name", c.name},
                      {"pass", c.pass},
                      {"max_residual", std::isfinite(c.max_residual) ? nlohmann::json(c.max_residual)
                                                                      : nlohmann::json("inf")},
                      {"tol", c.tol},
                      {"evaluated", c.evaluated}};
  if (!c.witness.empty()) j["witness"] = {{"kind", c.witness_kind}, {"at", c.witness}};
  if (!c.detail.is_null()) j["detail"] = c.detail;
  return j;
}

nlohmann::json to_json(const BatteryReport& b) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : b.checks) checks.push_back(to_json(c));
  return {{"pass", b.pass}, {"checks", checks}};
}

}  // namespace permuton
