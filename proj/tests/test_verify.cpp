#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "permuton/boundary_solver.hpp"
#include "permuton/density.hpp"
#include "permuton/ipf.hpp"
#include "permuton/oracles.hpp"
#include "permuton/verify.hpp"
#include "support.hpp"

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

DensityField staircase_field(double r) {
  const auto s = staircase_spec(0.5, 0.75, r);
  return build_field(s, solve_simple(s));
}

}  // namespace

TEST_CASE("exact 2x2 solutions satisfy the four-point relation closely") {
  for (double r : {-2.0, 1.0, 4.0}) {
    const auto rep = check_four_point(FieldModel(staircase_field(r)));
    CHECK(rep.evaluated == 100);
    CHECK(rep.max_residual < 1e-10);
    CHECK(rep.pass);
  }
}

TEST_CASE("a one percent perturbation of one rectangle is caught") {
  const auto f = staircase_field(2.0);
  auto rects = f.rects;
  rects[0].local[1] *= 1.01;
  const auto bad = make_field(f.spec, rects, f.source);
  const auto rep = run_battery(bad);
  CHECK_FALSE(rep.pass);
  const auto* fp = rep.find("four_point");
  REQUIRE(fp != nullptr);
  CHECK_FALSE(fp->pass);
  CHECK(fp->witness.size() == 4);
  CHECK_FALSE(fp->witness_kind.empty());
  const auto j = to_json(rep);
  CHECK(j.at("pass") == false);
  bool seen = false;
  for (const auto& c : j.at("checks"))
    if (c.at("name") == "four_point") {
      seen = true;
      CHECK(c.at("witness").at("at").size() == 4);
      CHECK(c.at("pass") == false);
      CHECK(c.at("max_residual").get<double>() > 1e-8);
    }
  CHECK(seen);
}

TEST_CASE("uniform field has exact marginals") {
  const auto s = make_spec({0, 1}, {0, 1}, {{1}}, 0.0);
  const auto f = field_from_scaling(s, solve_r0(s));
  const auto rep = check_marginals(FieldModel(f));
  CHECK(rep.evaluated == 100);
  CHECK(rep.max_residual < 1e-15);
}

TEST_CASE("quadratic 3x3 field passes the battery") {
  const auto s = make_spec({0, 1.0 / 3, 2.0 / 3, 1}, {0, 1.0 / 3, 2.0 / 3, 1}, {{0, 1, 1}, {1, 1, 1}, {1, 1, 0}}, 1.0);
  const auto f = build_field(s, solve_3x3_nonsimple(s), FieldSource::Quadratic3x3);
  const auto rep = run_battery(f);
  for (const auto& c : rep.checks) {
    INFO(c.name << " residual " << c.max_residual);
    CHECK(c.pass);
  }
  CHECK(rep.find("marginals")->max_residual < 1e-7);
}

TEST_CASE("triangle marginals within quadrature tolerance") {
  const auto rep = check_marginals(*triangle_model(1.5, 2.0), 50, 1e-8);
  CHECK(rep.pass);
}

TEST_CASE("r = 0 jump constants are ratios of the constants") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 20; ++t) {
    const auto s = permuton::testing::random_spec(rng, 5);
    const auto sol = solve_r0(s);
    const auto rep = check_jumps(FieldModel(field_from_scaling(s, sol)));
    CHECK(rep.pass);
    for (const auto& d : rep.detail) {
      const std::size_t line = d.at("line").get<std::size_t>() - 1;
      const std::size_t from = d.at("from").get<std::size_t>() - 1, to = d.at("to").get<std::size_t>() - 1;
      const bool vertical = d.at("axis") == "vertical";
      const double expected = vertical ? sol.density(s, line, to) / sol.density(s, line, from)
                                       : sol.density(s, to, line) / sol.density(s, from, line);
      CHECK(d.at("constant").get<double>() == Catch::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("a continuous density has unit jumps") {
  // The unrestricted square cut into four cells.
  for (double r : {-1.5, 2.0}) {
    const auto s = make_spec({0, 0.4, 1}, {0, 0.7, 1}, {{1, 1}, {1, 1}}, r);
    const auto rep = check_jumps(FieldModel(build_field(s, solve_simple(s))));
    CHECK(rep.detail.size() == 4);
    for (const auto& d : rep.detail) CHECK(d.at("constant").get<double>() == Catch::Approx(1.0).epsilon(1e-10));
  }
  const auto one = make_spec({0, 1}, {0, 1}, {{1}}, 2.0);
  const auto rep = check_jumps(FieldModel(build_field(one, solve_simple(one))));
  CHECK(rep.evaluated == 0);
  CHECK(rep.pass);
}

TEST_CASE("verdicts do not depend on the source tag") {
  auto f = staircase_field(-1.0);
  const auto a = to_json(run_battery(f));
  f.source = FieldSource::Oracle;
  const auto b = to_json(run_battery(f));
  CHECK(a == b);
}

TEST_CASE("seeded sampling replays") {
  const auto f = staircase_field(3.0);
  const FieldModel m(f);
  CHECK(to_json(check_four_point(m, 100, 1e-8, 7)) == to_json(check_four_point(m, 100, 1e-8, 7)));
  CHECK(to_json(check_four_point(m, 100, 1e-8, 7)) != to_json(check_four_point(m, 100, 1e-8, 8)));
}

TEST_CASE("continuation output passes the battery") {
  for (double r : {3.0, -3.0}) {
    const auto s = make_spec({0, 0.2, 0.6, 0.8, 1}, {0, 0.2, 0.6, 0.8, 1},
                             {{1, 1, 0, 0}, {1, 1, 1, 0}, {1, 1, 1, 1}, {0, 1, 1, 1}}, r);
    const auto rep = run_battery(build_field(s, solve_continuation(s, r), FieldSource::Continuation));
    for (const auto& c : rep.checks) {
      INFO("r=" << r << " " << c.name << " residual " << c.max_residual);
      CHECK(c.pass);
    }
  }
}

TEST_CASE("positivity report lists every supported cell") {
  const auto f = staircase_field(5.0);
  const auto rep = check_positivity(FieldModel(f));
  CHECK(rep.pass);
  CHECK(rep.detail.size() == 3);
}
