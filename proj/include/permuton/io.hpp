#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "permuton/boundary_solver.hpp"
#include "permuton/density.hpp"
#include "permuton/ipf.hpp"
#include "permuton/region.hpp"
#include "permuton/sampler.hpp"

namespace permuton {

// Region spec documents: {"x": [...], "y": [...], "I": [[...], ...], "r": r}
// with I rows listed top to bottom. Breakpoints may be numbers or "p/q"
// strings. Throws InvalidInput.
RegionSpec spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RegionSpec& s);
RegionSpec load_spec(const std::string& path);

nlohmann::json to_json(const BoundaryValues& bv);
BoundaryValues boundary_values_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ScalingSolution& s);

// Field documents carry the spec, the source tag and one entry per supported
// cell with 1-based (u, v), the global (a, b, c, d), the local coefficients
// used for evaluation and, for constant cells, the value.
nlohmann::json to_json(const DensityField& f);
DensityField field_from_json(const nlohmann::json& j);
DensityField load_field(const std::string& path);

// "x,y,g,h" rows at cell centres, y outer, 17 significant digits.
void write_grid_csv(const DensityGrid& g, const std::string& path);
std::string grid_csv(const DensityGrid& g);

// Reads back the centre grid written above; h_values stay empty.
DensityGrid read_grid_csv(const std::string& path);

nlohmann::json to_json(const PermutationSample& s);
void write_six_vertex_csv(const SixVertexGrid& g, const std::string& path);
// "x,y,h" rows at grid corners, y outer.
void write_height_csv(const std::vector<std::vector<double>>& h, const std::string& path);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const nlohmann::json& j, const std::string& path);

}  // namespace permuton
