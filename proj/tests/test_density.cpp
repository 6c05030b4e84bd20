#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "permuton/boundary_solver.hpp"
#include "permuton/density.hpp"
#include "permuton/errors.hpp"
#include "permuton/ipf.hpp"
#include "permuton/oracles.hpp"
#include "permuton/verify.hpp"

using namespace permuton;

namespace {

RegionSpec make_spec(std::vector<double> x, std::vector<double> y, const std::vector<std::vector<int>>& rows,
                     double r) {
  RegionSpec s;
  s.x = std::move(x);
  s.y = std::move(y);
  s.I = IndicatorArray::from_rows_top_down(rows);
  s.r = r;
  return s;
}

RegionSpec stepped_4x4(double r) {
  return make_spec({0, 0.2, 0.6, 0.8, 1}, {0, 0.2, 0.6, 0.8, 1},
                   {{1, 1, 0, 0}, {1, 1, 1, 0}, {1, 1, 1, 1}, {0, 1, 1, 1}}, r);
}

DensityField staircase_field(double r) {
  const auto s = staircase_spec(0.5, 0.75, r);
  return build_field(s, solve_simple(s));
}

DensityField uniform_field() {
  const auto s = make_spec({0, 1}, {0, 1}, {{1}}, 0.0);
  return field_from_scaling(s, solve_r0(s));
}

}  // namespace

TEST_CASE("tiny r reproduces the piecewise constants") {
  const auto f = staircase_field(1e-8);
  CHECK(eval_g(f, 0.25, 0.3) == Catch::Approx(2.0 / 3.0).margin(1e-4));
  CHECK(eval_g(f, 0.75, 0.3) == Catch::Approx(4.0 / 3.0).margin(1e-4));
  CHECK(eval_g(f, 0.25, 0.9) == Catch::Approx(2.0).margin(1e-4));
  CHECK(eval_g(f, 0.75, 0.9) == 0.0);
}

TEST_CASE("cell masses") {
  for (double r : {-2.0, 0.7, 3.0}) {
    const auto f = staircase_field(r);
    double total = 0;
    for (std::size_t u = 0; u < 2; ++u)
      for (std::size_t v = 0; v < 2; ++v)
        if (f.spec.I(u, v))
          total += rect_mass(f, u, v, f.spec.x[u], f.spec.x[u + 1], f.spec.y[v], f.spec.y[v + 1]);
    CHECK(total == Catch::Approx(1.0).margin(1e-10));
    // The top-left cell carries a + b - 1 whatever r is.
    CHECK(rect_mass(f, 0, 1, 0.0, 0.5, 0.75, 1.0) == Catch::Approx(0.25).margin(1e-12));
    CHECK(rect_mass(f, 0, 0, 0.2, 0.2, 0.1, 0.6) == 0.0);
    CHECK_THROWS_AS(rect_mass(f, 0, 0, 0.2, 0.7, 0.1, 0.6), Error);
  }
}

TEST_CASE("masses add up across a split") {
  const auto f = build_field(stepped_4x4(3.0), solve_continuation(stepped_4x4(3.0), 3.0));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (const auto& c : f.rects) {
    const double xm = c.x0 + (c.x1 - c.x0) * U(rng), ym = c.y0 + (c.y1 - c.y0) * U(rng);
    const double whole = rect_mass(f, c.u, c.v, c.x0, c.x1, c.y0, c.y1);
    const double parts = rect_mass(f, c.u, c.v, c.x0, xm, c.y0, ym) + rect_mass(f, c.u, c.v, xm, c.x1, c.y0, ym) +
                         rect_mass(f, c.u, c.v, c.x0, xm, ym, c.y1) + rect_mass(f, c.u, c.v, xm, c.x1, ym, c.y1);
    CHECK(parts == Catch::Approx(whole).margin(1e-13));
    CHECK(whole > 0);
  }
}

TEST_CASE("height boundary values") {
  for (const auto& f : {staircase_field(1.0), staircase_field(-4.0), uniform_field()}) {
    CHECK(eval_height(f, 0.0, 1.0) == Catch::Approx(1.0).margin(1e-12));
    for (double t : {0.0, 0.1, 0.5, 0.77, 1.0}) {
      CHECK(eval_height(f, t, 0.0) == Catch::Approx(0.0).margin(1e-12));
      CHECK(eval_height(f, t, 1.0) == Catch::Approx(1.0 - t).margin(1e-10));
      CHECK(eval_height(f, 0.0, t) == Catch::Approx(t).margin(1e-10));
      CHECK(eval_height(f, 1.0, t) == Catch::Approx(0.0).margin(1e-12));
    }
  }
}

TEST_CASE("uniform permuton") {
  const auto f = uniform_field();
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const double x = U(rng), y = U(rng);
    CHECK(eval_g(f, x, y) == Catch::Approx(1.0).margin(1e-14));
    CHECK(eval_height(f, x, y) == Catch::Approx(y * (1 - x)).margin(1e-14));
  }
  const auto g = grid(f, 2);
  for (const auto& row : g.g_values)
    for (double v : row) CHECK(v == Catch::Approx(1.0).margin(1e-14));
}

TEST_CASE("unrestricted Mallows square") {
  for (double r : {-3.0, 0.5, 6.0}) {
    const auto s = make_spec({0, 1}, {0, 1}, {{1}}, r);
    const auto f = build_field(s, solve_simple(s));
    const auto rep = run_battery(f);
    CHECK(rep.pass);
    // Symmetric under transposition and under (x, y) -> (1 - y, 1 - x).
    CHECK(eval_g(f, 0.2, 0.7) == Catch::Approx(eval_g(f, 0.7, 0.2)).epsilon(1e-10));
    CHECK(eval_g(f, 0.2, 0.7) == Catch::Approx(eval_g(f, 0.3, 0.8)).epsilon(1e-10));
  }
}

TEST_CASE("corner heights on the grid") {
  const auto f = build_field(stepped_4x4(3.0), solve_continuation(stepped_4x4(3.0), 3.0));
  const std::size_t n = 40;
  const auto g = grid(f, n);
  for (std::size_t i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) / n;
    CHECK(std::abs(g.h_values[i][0]) < 1e-9);
    CHECK(std::abs(g.h_values[i][n] - (1 - t)) < 1e-9);
    CHECK(std::abs(g.h_values[0][i] - t) < 1e-9);
    CHECK(std::abs(g.h_values[n][i]) < 1e-9);
  }
}

TEST_CASE("parallel grid matches the serial reference") {
  const auto f = build_field(stepped_4x4(-3.0), solve_continuation(stepped_4x4(-3.0), -3.0));
  const auto a = grid(f, 57), b = grid_serial(f, 57);
  CHECK(a.g_values == b.g_values);
  CHECK(a.h_values == b.h_values);
  CHECK(a.h_centers == b.h_centers);
}

TEST_CASE("Riemann sums of the grid are close to the marginals") {
  const auto f = build_field(stepped_4x4(3.0), solve_continuation(stepped_4x4(3.0), 3.0));
  const std::size_t n = 100;
  const auto g = grid(f, n);
  for (std::size_t i = 0; i < n; ++i) {
    double col = 0, row = 0;
    for (std::size_t j = 0; j < n; ++j) {
      col += g.g_values[i][j] / n;
      row += g.g_values[j][i] / n;
    }
    CHECK(std::abs(col - 1) < 0.01);
    CHECK(std::abs(row - 1) < 0.01);
  }
}

TEST_CASE("density solves the Liouville equation inside cells") {
  const double h = 1e-4;
  for (double r : {3.0, -3.0}) {
    const auto f = build_field(stepped_4x4(r), solve_continuation(stepped_4x4(r), r));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0.05, 0.95);
    for (const auto& c : f.rects)
      for (int i = 0; i < 10; ++i) {
        const double x = c.x0 + (c.x1 - c.x0) * U(rng), y = c.y0 + (c.y1 - c.y0) * U(rng);
        auto lg = [&](double a, double b) { return std::log(c.g(a, b)); };
        const double mixed = (lg(x + h, y + h) - lg(x + h, y - h) - lg(x - h, y + h) + lg(x - h, y - h)) / (4 * h * h);
        CHECK(mixed == Catch::Approx(2 * r * c.g(x, y)).epsilon(1e-3));
      }
  }
}

TEST_CASE("probe bounds are positive and finite") {
  const auto f = build_field(stepped_4x4(3.0), solve_continuation(stepped_4x4(3.0), 3.0));
  for (const auto& b : probe_bounds(f)) {
    CHECK(b.min_g > 0);
    CHECK(std::isfinite(b.max_g));
  }
}

TEST_CASE("global and local coefficients describe the same density") {
  const auto f = staircase_field(2.0);
  for (const auto& c : f.rects) {
    const auto G = c.global();
    const auto back = RectCoeffs::from_global(c.u, c.v, c.r, c.x0, c.x1, c.y0, c.y1, G);
    for (double x : {c.x0, 0.5 * (c.x0 + c.x1), c.x1})
      for (double y : {c.y0, 0.5 * (c.y0 + c.y1), c.y1})
        CHECK(back.g(x, y) == Catch::Approx(c.g(x, y)).epsilon(1e-12));
  }
}

TEST_CASE("a denominator vanishing inside a cell is rejected") {
  const auto s = make_spec({0, 1}, {0, 1}, {{1}}, 1.0);
  // Q = -1.5 + T: zero at x = log 1.5.
  auto c = RectCoeffs::from_local(0, 0, 1.0, 0, 1, 0, 1, {-1.5, 0.0, 1.0, 0.0});
  try {
    make_field(s, {c}, FieldSource::Oracle);
    FAIL("expected PoleOnRectangle");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::PoleOnRectangle);
  }
}

TEST_CASE("locate sends breakpoints up and right") {
  const auto s = staircase_spec(0.5, 0.75, 1.0);
  CHECK(locate(s, 0.5, 0.2) == std::pair<std::size_t, std::size_t>{1, 0});
  CHECK(locate(s, 0.2, 0.75) == std::pair<std::size_t, std::size_t>{0, 1});
  CHECK(locate(s, 1.0, 1.0) == std::pair<std::size_t, std::size_t>{1, 1});
  CHECK(locate(s, 0.0, 0.0) == std::pair<std::size_t, std::size_t>{0, 0});
}

TEST_CASE("staircase approximation of the triangle has a close height function") {
  const double a = 1.5, b = 2.0;
  const auto s = triangle_staircase_spec(a, b, 40);
  const auto f = field_from_scaling(s, solve_r0(s));
  const auto m = triangle_model(a, b);
  double worst = 0;
  for (int i = 0; i <= 20; ++i)
    for (int j = 0; j <= 20; ++j) {
      const double x = i / 20.0, y = j / 20.0;
      worst = std::max(worst, std::abs(eval_height(f, x, y) - model_mass(*m, x, 1.0, 0.0, y)));
    }
  CHECK(worst < 0.02);
}
