#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "permuton/boundary_solver.hpp"
#include "permuton/cli.hpp"
#include "permuton/errors.hpp"
#include "permuton/io.hpp"
#include "permuton/oracles.hpp"

using namespace permuton;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / "permuton_io_cli";
  fs::create_directories(d);
  return d / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string write_config(const std::string& name, const nlohmann::json& j) {
  const auto p = scratch(name).string();
  write_json_file(j, p);
  return p;
}

nlohmann::json staircase_config(double r) {
  return {{"x", {0, "1/2", 1}}, {"y", {0, "3/4", 1}}, {"I", {{1, 0}, {1, 1}}}, {"r", r}};
}

nlohmann::json stepped_config(double r) {
  return {{"x", {0, "1/5", "3/5", "4/5", 1}},
          {"y", {0, "1/5", "3/5", "4/5", 1}},
          {"I", {{1, 1, 0, 0}, {1, 1, 1, 0}, {1, 1, 1, 1}, {0, 1, 1, 1}}},
          {"r", r}};
}

}  // namespace

TEST_CASE("spec documents round trip") {
  const auto s = spec_from_json(stepped_config(3.0));
  CHECK(s.x[1] == 0.2);
  CHECK(s.I(0, 3));
  CHECK_FALSE(s.I(0, 0));
  const auto back = spec_from_json(to_json(s));
  CHECK(back.x == s.x);
  CHECK(back.y == s.y);
  CHECK(back.r == s.r);
  for (std::size_t u = 0; u < s.k(); ++u)
    for (std::size_t v = 0; v < s.ell(); ++v) CHECK(back.I(u, v) == s.I(u, v));
}

TEST_CASE("malformed specs are rejected") {
  auto j = staircase_config(1.0);
  j["x"] = {0, "1/0", 1};
  CHECK_THROWS_AS(spec_from_json(j), Error);
  j = staircase_config(1.0);
  j["I"] = {{1, 0, 1}, {1, 1}};
  CHECK_THROWS_AS(spec_from_json(j), Error);
  j = staircase_config(1.0);
  j.erase("y");
  CHECK_THROWS_AS(spec_from_json(j), Error);
}

TEST_CASE("field and boundary documents round trip") {
  const auto s = staircase_spec(0.5, 0.75, 2.0);
  const auto bv = solve_simple(s);
  const auto bv2 = boundary_values_from_json(to_json(bv));
  CHECK(max_distance(bv, bv2) == 0.0);
  const auto f = build_field(s, bv);
  const auto g = field_from_json(to_json(f));
  CHECK(g.source == f.source);
  for (double x : {0.1, 0.4, 0.6, 0.95})
    for (double y : {0.2, 0.8}) CHECK(eval_g(g, x, y) == Catch::Approx(eval_g(f, x, y)).epsilon(1e-15));
}

TEST_CASE("grid CSV keeps 17 digits") {
  const auto f = build_field(staircase_spec(0.5, 0.75, -1.0), solve_simple(staircase_spec(0.5, 0.75, -1.0)));
  const auto g = grid(f, 13);
  const auto p = scratch("grid.csv").string();
  write_grid_csv(g, p);
  const auto back = read_grid_csv(p);
  REQUIRE(back.n == 13);
  CHECK(back.g_values == g.g_values);
  CHECK(back.h_centers == g.h_centers);
  CHECK(slurp(p).rfind("x,y,g,h\n", 0) == 0);
}

TEST_CASE("auto method selection") {
  CHECK(pick_method("auto", 0.0, staircase_spec(0.5, 0.75, 0.0)) == "ipf");
  CHECK(pick_method("auto", 1.0, staircase_spec(0.5, 0.75, 1.0)) == "simple");
  CHECK(pick_method("auto", 3.0, spec_from_json(stepped_config(3.0))) == "continuation");
  const auto q = spec_from_json({{"x", {0, "1/3", "2/3", 1}},
                                 {"y", {0, "1/3", "2/3", 1}},
                                 {"I", {{0, 1, 1}, {1, 1, 1}, {1, 1, 0}}},
                                 {"r", 1}});
  CHECK(pick_method("auto", 1.0, q) == "quad3x3");
  CHECK(pick_method("continuation", 1.0, staircase_spec(0.5, 0.75, 1.0)) == "continuation");
}

TEST_CASE("solve exit codes") {
  SolveArgs a;
  a.grid = 20;
  a.config = write_config("stair.json", staircase_config(1.0));
  a.out = scratch("stair").string();
  CHECK(cmd_solve(a) == kExitOk);
  CHECK(fs::exists(a.out + "_boundary.json"));
  CHECK(fs::exists(a.out + "_grid.csv"));
  CHECK(read_json_file(a.out + "_report.json").at("pass") == true);
  CHECK(cmd_verify(a.out + "_field.json") == kExitOk);

  a.config = write_config("stepped.json", stepped_config(3.0));
  a.out = scratch("stepped").string();
  CHECK(cmd_solve(a) == kExitOk);
  CHECK(load_field(a.out + "_field.json").source == FieldSource::Continuation);

  a.config = write_config("stair0.json", staircase_config(0.0));
  a.out = scratch("stair0").string();
  CHECK(cmd_solve(a) == kExitOk);
  CHECK(fs::exists(a.out + "_scaling.json"));

  a.config = write_config("degenerate.json",
                          {{"x", {0, "1/2", 1}}, {"y", {0, "1/2", 1}}, {"I", {{1, 0}, {1, 1}}}, {"r", 1}});
  a.out = scratch("degenerate").string();
  CHECK(cmd_solve(a) == kExitSolver);

  a.config = scratch("missing.json").string();
  CHECK(cmd_solve(a) == kExitSolver);
}

TEST_CASE("a corrupted field fails verification") {
  SolveArgs a;
  a.grid = 10;
  a.config = write_config("stair2.json", staircase_config(2.0));
  a.out = scratch("stair2").string();
  REQUIRE(cmd_solve(a) == kExitOk);
  auto j = read_json_file(a.out + "_field.json");
  for (auto& e : j.at("rects"))
    if (e.at("kind") == "moebius") {
      e["local"][1] = e["local"][1].get<double>() * 1.01;
      break;
    }
  const auto bad = scratch("corrupt_field.json").string();
  write_json_file(j, bad);
  CHECK(cmd_verify(bad) == kExitVerify);
  CHECK(cmd_verify(scratch("nothing_here.json").string()) == kExitSolver);
}

TEST_CASE("sampling output is deterministic") {
  SampleArgs a;
  a.config = write_config("stair_s.json", staircase_config(1.0));
  a.n = 100;
  a.seed = 1;
  a.out = scratch("s1").string();
  REQUIRE(cmd_sample(a) == kExitOk);
  a.out = scratch("s2").string();
  REQUIRE(cmd_sample(a) == kExitOk);
  for (const char* suffix : {"_sample.json", "_six_vertex.csv", "_height.csv"})
    CHECK(slurp(scratch(std::string("s1") + suffix)) == slurp(scratch(std::string("s2") + suffix)));
  a.seed = 2;
  a.out = scratch("s3").string();
  REQUIRE(cmd_sample(a) == kExitOk);
  CHECK(slurp(scratch("s1_sample.json")) != slurp(scratch("s3_sample.json")));
}

TEST_CASE("an infeasible sample exits with 2") {
  SampleArgs a;
  a.config = write_config("infeasible.json", {{"x", {0, "1/4", 1}}, {"y", {0, "1/2", 1}}, {"I", {{1, 0}, {0, 1}}}, {"r", 0}});
  a.n = 8;
  a.out = scratch("inf").string();
  CHECK(cmd_sample(a) == kExitSolver);
}

TEST_CASE("uniform run has exact height boundary rows") {
  SampleArgs a;
  a.config = write_config("square.json", {{"x", {0, 1}}, {"y", {0, 1}}, {"I", {{1}}}, {"r", 0}});
  a.n = 30;
  a.out = scratch("sq").string();
  REQUIRE(cmd_sample(a) == kExitOk);
  std::ifstream in(a.out + "_height.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "x,y,h");
  int rows = 0;
  while (std::getline(in, line)) {
    double x, y, h;
    char c;
    std::istringstream ls(line);
    ls >> x >> c >> y >> c >> h;
    ++rows;
    if (y == 0.0 || x == 1.0) CHECK(h == 0.0);
    if (y == 1.0) CHECK(h == Catch::Approx(1.0 - x).margin(1e-15));
    if (x == 0.0) CHECK(h == Catch::Approx(y).margin(1e-15));
  }
  CHECK(rows > 0);
}

TEST_CASE("command line dispatch") {
  const auto cfg = write_config("cli_stair.json", staircase_config(1.0));
  const std::string out = scratch("cli").string();
  std::vector<std::string> args{"permuton", "solve", "--config", cfg, "--r", "-2", "--grid", "8", "--out", out};
  std::vector<char*> argv;
  for (auto& s : args) argv.push_back(s.data());
  CHECK(run_cli(static_cast<int>(argv.size()), argv.data()) == kExitOk);
  CHECK(load_field(out + "_field.json").spec.r == -2.0);

  std::vector<std::string> bad{"permuton", "solve", "--config", cfg, "--method", "nope"};
  std::vector<char*> bargv;
  for (auto& s : bad) bargv.push_back(s.data());
  CHECK(run_cli(static_cast<int>(bargv.size()), bargv.data()) == kExitSolver);

  const std::string png = scratch("cli.png").string();
  std::vector<std::string> ren{"permuton", "render", out + "_grid.csv", "--out", png};
  std::vector<char*> rargv;
  for (auto& s : ren) rargv.push_back(s.data());
  CHECK(run_cli(static_cast<int>(rargv.size()), rargv.data()) == kExitOk);
  CHECK(fs::file_size(png) > 0);
}
