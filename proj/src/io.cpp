#include "permuton/io.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "permuton/errors.hpp"

namespace permuton {

using nlohmann::json;

namespace {

double number(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    const auto slash = s.find('/');
    try {
      if (slash == std::string::npos) return std::stod(s);
      return std::stod(s.substr(0, slash)) / std::stod(s.substr(slash + 1));
    } catch (const std::exception&) {
    }
  }
  throw Error(ErrorKind::InvalidInput, "expected a number, got " + j.dump());
}

std::vector<double> numbers(const json& j, const char* what) {
  if (!j.is_array()) throw Error(ErrorKind::InvalidInput, std::string(what) + " must be an array");
  std::vector<double> out;
  for (const auto& e : j) out.push_back(number(e));
  return out;
}

json pair(const ProjectiveValue& p) { return json::array({p.num, p.den}); }

ProjectiveValue unpair(const json& j) {
  if (!j.is_array() || j.size() != 2) throw Error(ErrorKind::InvalidInput, "expected [num, den]");
  return {number(j[0]), number(j[1])};
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

RegionSpec spec_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::InvalidInput, "spec must be a JSON object");
  for (const char* key : {"x", "y", "I"})
    if (!j.contains(key)) throw Error(ErrorKind::InvalidInput, std::string("spec is missing \"") + key + "\"");
  RegionSpec s;
  s.x = numbers(j["x"], "x");
  s.y = numbers(j["y"], "y");
  std::vector<std::vector<int>> rows;
  if (!j["I"].is_array()) throw Error(ErrorKind::InvalidInput, "I must be an array of rows");
  for (const auto& row : j["I"]) {
    if (!row.is_array()) throw Error(ErrorKind::InvalidInput, "I must be an array of rows");
    std::vector<int> r;
    for (const auto& e : row) {
      if (!e.is_number_integer() || (e.get<int>() != 0 && e.get<int>() != 1))
        throw Error(ErrorKind::InvalidInput, "I entries must be 0 or 1");
      r.push_back(e.get<int>());
    }
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw Error(ErrorKind::InvalidInput, "I is empty");
  for (const auto& r : rows)
    if (r.size() != rows.front().size()) throw Error(ErrorKind::InvalidInput, "I rows differ in length");
  s.I = IndicatorArray::from_rows_top_down(rows);
  s.r = j.contains("r") ? number(j["r"]) : 0.0;
  validate_basic(s);
  return s;
}

json to_json(const RegionSpec& s) { return {{"x", s.x}, {"y", s.y}, {"I", s.I.to_rows_top_down()}, {"r", s.r}}; }

RegionSpec load_spec(const std::string& path) { return spec_from_json(read_json_file(path)); }

json to_json(const BoundaryValues& bv) {
  json phi = json::array(), psi = json::array(), pins = json::array();
  for (const auto& p : bv.phi) phi.push_back(pair(p));
  for (const auto& p : bv.psi) psi.push_back(pair(p));
  for (const auto& p : bv.gauge.pins)
    pins.push_back({{"axis", p.is_phi ? "x" : "y"}, {"index", p.index}, {"value", pair(p.value)}});
  return {{"r", bv.r}, {"phi", phi}, {"psi", psi}, {"gauge", {{"name", bv.gauge.name}, {"pins", pins}}}};
}

BoundaryValues boundary_values_from_json(const json& j) {
  BoundaryValues bv;
  try {
    bv.r = number(j.at("r"));
    for (const auto& p : j.at("phi")) bv.phi.push_back(unpair(p));
    for (const auto& p : j.at("psi")) bv.psi.push_back(unpair(p));
    if (j.contains("gauge")) {
      bv.gauge.name = j["gauge"].value("name", "");
      for (const auto& p : j["gauge"].value("pins", json::array()))
        bv.gauge.pins.push_back({p.at("axis") == "x", p.at("index").get<std::size_t>(), unpair(p.at("value"))});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidInput, e.what());
  }
  return bv;
}

json to_json(const ScalingSolution& s) {
  return {{"lambda", s.lambda}, {"mu", s.mu}, {"masses", s.masses}, {"iterations", s.iterations},
          {"residual", s.residual}};
}

json to_json(const DensityField& f) {
  json rects = json::array();
  for (const auto& c : f.rects) {
    json e = {{"u", c.u + 1}, {"v", c.v + 1}};
    if (c.kind == RectKind::Constant) {
      e["kind"] = "constant";
      e["value"] = c.value;
    } else {
      const auto g = c.global();
      e["kind"] = "moebius";
      e["a"] = g[0];
      e["b"] = g[1];
      e["c"] = g[2];
      e["d"] = g[3];
      e["local"] = c.local;
    }
    rects.push_back(e);
  }
  return {{"source", to_string(f.source)}, {"spec", to_json(f.spec)}, {"rects", rects}};
}

DensityField field_from_json(const json& j) {
  try {
    const RegionSpec s = spec_from_json(j.at("spec"));
    std::vector<RectCoeffs> rects;
    for (const auto& e : j.at("rects")) {
      const std::size_t u = e.at("u").get<std::size_t>() - 1, v = e.at("v").get<std::size_t>() - 1;
      if (u >= s.k() || v >= s.ell()) throw Error(ErrorKind::InvalidInput, "rect index out of range");
      const double x0 = s.x[u], x1 = s.x[u + 1], y0 = s.y[v], y1 = s.y[v + 1];
      if (e.at("kind") == "constant") {
        rects.push_back(RectCoeffs::constant(u, v, x0, x1, y0, y1, number(e.at("value"))));
      } else if (e.contains("local")) {
        const auto l = numbers(e["local"], "local");
        if (l.size() != 4) throw Error(ErrorKind::InvalidInput, "local needs four coefficients");
        rects.push_back(RectCoeffs::from_local(u, v, s.r, x0, x1, y0, y1, {l[0], l[1], l[2], l[3]}));
      } else {
        rects.push_back(RectCoeffs::from_global(u, v, s.r, x0, x1, y0, y1,
                                                {number(e.at("a")), number(e.at("b")), number(e.at("c")),
                                                 number(e.at("d"))}));
      }
    }
    return make_field(s, std::move(rects), field_source_from_string(j.value("source", "oracle")));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidInput, e.what());
  }
}

DensityField load_field(const std::string& path) { return field_from_json(read_json_file(path)); }

std::string grid_csv(const DensityGrid& g) {
  std::ostringstream out;
  out << "x,y,g,h\n";
  const double n = static_cast<double>(g.n);
  for (std::size_t j = 0; j < g.n; ++j)
    for (std::size_t i = 0; i < g.n; ++i)
      out << fmt17((static_cast<double>(i) + 0.5) / n) << ',' << fmt17((static_cast<double>(j) + 0.5) / n) << ','
          << fmt17(g.g_values[i][j]) << ',' << fmt17(g.h_centers[i][j]) << '\n';
  return out.str();
}

void write_grid_csv(const DensityGrid& g, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorKind::InvalidInput, "cannot write " + path);
  f << grid_csv(g);
}

DensityGrid read_grid_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::InvalidInput, "cannot read " + path);
  std::string line;
  std::getline(f, line);
  if (line.rfind("x,y,g", 0) != 0) throw Error(ErrorKind::InvalidInput, "not a grid CSV: " + path);
  std::vector<std::array<double, 4>> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::array<double, 4> r{0, 0, 0, 0};
    std::istringstream ls(line);
    std::string cell;
    for (int c = 0; c < 4 && std::getline(ls, cell, ','); ++c) {
      try {
        r[c] = std::stod(cell);
      } catch (const std::exception&) {
        throw Error(ErrorKind::InvalidInput, "bad number in " + path + ": " + cell);
      }
    }
    rows.push_back(r);
  }
  std::size_t n = 0;
  while (n * n < rows.size()) ++n;
  if (n == 0 || n * n != rows.size()) throw Error(ErrorKind::InvalidInput, "grid CSV is not square: " + path);
  DensityGrid g;
  g.n = n;
  g.g_values.assign(n, std::vector<double>(n));
  g.h_centers.assign(n, std::vector<double>(n));
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      g.g_values[i][j] = rows[j * n + i][2];
      g.h_centers[i][j] = rows[j * n + i][3];
    }
  return g;
}

json to_json(const PermutationSample& s) {
  return {{"n", s.n}, {"sigma", s.sigma}, {"inversions", s.inversions}, {"seed", s.seed}, {"sweeps", s.sweeps},
          {"q", s.q}};
}

void write_six_vertex_csv(const SixVertexGrid& g, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorKind::InvalidInput, "cannot write " + path);
  for (const auto& row : g.types) {
    for (std::size_t c = 0; c < row.size(); ++c) f << (c ? "," : "") << row[c];
    f << '\n';
  }
}

void write_height_csv(const std::vector<std::vector<double>>& h, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorKind::InvalidInput, "cannot write " + path);
  const std::size_t n = h.size() - 1;
  f << "x,y,h\n";
  for (std::size_t j = 0; j <= n; ++j)
    for (std::size_t i = 0; i <= n; ++i)
      f << fmt17(static_cast<double>(i) / static_cast<double>(n)) << ','
        << fmt17(static_cast<double>(j) / static_cast<double>(n)) << ',' << fmt17(h[i][j]) << '\n';
}

json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::InvalidInput, "cannot read " + path);
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidInput, path + ": " + e.what());
  }
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorKind::InvalidInput, "cannot write " + path);
  f << j.dump(2) << '\n';
}

}  // namespace permuton
