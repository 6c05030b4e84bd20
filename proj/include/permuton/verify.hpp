#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "permuton/density.hpp"
#include "permuton/region.hpp"

namespace permuton {

// What the battery needs from a density: the cell partition and, on each
// supported cell, a branch formula that extends continuously to the closed
// cell. Closed forms are optional; quadrature fills in otherwise.
class DensityModel {
 public:
  virtual ~DensityModel() = default;
  virtual const RegionSpec& region() const = 0;
  virtual double cell_g(std::size_t u, std::size_t v, double x, double y) const = 0;
  // False where a supported cell is cut (the triangle); limits are then zero.
  virtual bool in_support(std::size_t, std::size_t, double, double) const { return true; }
  virtual std::optional<double> cell_mass(std::size_t, std::size_t, double, double, double, double) const {
    return std::nullopt;
  }
  virtual std::optional<double> column_integral(std::size_t, std::size_t, double, double, double) const {
    return std::nullopt;
  }
  virtual std::optional<double> row_integral(std::size_t, std::size_t, double, double, double) const {
    return std::nullopt;
  }
  // Kinks of y -> g inside cell (u, v) at fixed x, and of x -> g at fixed y.
  virtual std::vector<double> y_breaks(std::size_t, std::size_t, double) const { return {}; }
  virtual std::vector<double> x_breaks(std::size_t, std::size_t, double) const { return {}; }

  double limit(std::size_t u, std::size_t v, double x, double y) const;
};

class FieldModel final : public DensityModel {
 public:
  explicit FieldModel(const DensityField& f) : f_(f) {}
  const RegionSpec& region() const override { return f_.spec; }
  double cell_g(std::size_t u, std::size_t v, double x, double y) const override;
  std::optional<double> cell_mass(std::size_t u, std::size_t v, double, double, double, double) const override;
  std::optional<double> column_integral(std::size_t u, std::size_t v, double, double, double) const override;
  std::optional<double> row_integral(std::size_t u, std::size_t v, double, double, double) const override;

 private:
  const DensityField& f_;
};

// A density known only pointwise, branch by branch.
class FunctionModel final : public DensityModel {
 public:
  using CellFn = std::function<double(std::size_t, std::size_t, double, double)>;
  using SupportFn = std::function<bool(std::size_t, std::size_t, double, double)>;
  using BreakFn = std::function<std::vector<double>(std::size_t, std::size_t, double)>;

  FunctionModel(RegionSpec spec, CellFn g) : spec_(std::move(spec)), g_(std::move(g)) {}
  FunctionModel& with_support(SupportFn s, BreakFn yb, BreakFn xb);

  const RegionSpec& region() const override { return spec_; }
  double cell_g(std::size_t u, std::size_t v, double x, double y) const override { return g_(u, v, x, y); }
  bool in_support(std::size_t u, std::size_t v, double x, double y) const override {
    return support_ ? support_(u, v, x, y) : true;
  }
  std::vector<double> y_breaks(std::size_t u, std::size_t v, double x) const override {
    return ybreaks_ ? ybreaks_(u, v, x) : std::vector<double>{};
  }
  std::vector<double> x_breaks(std::size_t u, std::size_t v, double y) const override {
    return xbreaks_ ? xbreaks_(u, v, y) : std::vector<double>{};
  }

 private:
  RegionSpec spec_;
  CellFn g_;
  SupportFn support_;
  BreakFn ybreaks_, xbreaks_;
};

std::unique_ptr<DensityModel> staircase_model(double a, double b, double r);
std::unique_ptr<DensityModel> nonconvex_model(double r);
std::unique_ptr<DensityModel> triangle_model(double a, double b);

// Mass of [x1, x2] x [y1, y2] intersected with the support.
double model_mass(const DensityModel& m, double x1, double x2, double y1, double y2);
double column_marginal(const DensityModel& m, double x);
double row_marginal(const DensityModel& m, double y);

struct CheckReport {
  std::string name;
  bool pass = true;
  double max_residual = 0.0;
  double tol = 0.0;
  std::size_t evaluated = 0;
  std::vector<double> witness;  // coordinates of the worst case
  std::string witness_kind;
  nlohmann::json detail;
};

// Global samples rectangles anywhere (spanning holes when the array is
// convex); WithinCells keeps each rectangle inside one closed cell.
enum class FourPointScope { Auto, Global, WithinCells };

struct BatteryOptions {
  std::size_t n_rects = 100;
  std::size_t n_abscissae = 50;
  double tol_four_point = 1e-8;
  double tol_marginals = 1e-7;
  double tol_jumps = 1e-8;
  std::uint64_t seed = 20240601;
  FourPointScope scope = FourPointScope::Auto;
};

CheckReport check_four_point(const DensityModel& m, std::size_t n_rects = 100, double tol = 1e-8,
                             std::uint64_t seed = 20240601, FourPointScope scope = FourPointScope::Auto);
CheckReport check_marginals(const DensityModel& m, std::size_t n_abscissae = 50, double tol = 1e-7);
// Jump constancy along every segment between vertically or horizontally
// neighbouring supported cells, 16 points per segment.
CheckReport check_jumps(const DensityModel& m, double tol = 1e-8);
// Vertex products around every block of holes bounded by four supported cells.
CheckReport check_corners(const DensityModel& m, double tol = 1e-8);
// Sign report on a 33x33 probe of every supported cell; fails on g < 0.
CheckReport check_positivity(const DensityModel& m);

struct BatteryReport {
  std::vector<CheckReport> checks;
  bool pass = true;
  const CheckReport* find(const std::string& name) const;
};

BatteryReport run_battery(const DensityModel& m, const BatteryOptions& opts = {});
BatteryReport run_battery(const DensityField& f, const BatteryOptions& opts = {});

nlohmann::json to_json(const CheckReport& c);
nlohmann::json to_json(const BatteryReport& b);

}  // namespace permuton
