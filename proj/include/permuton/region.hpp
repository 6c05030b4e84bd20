#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace permuton {

// k x ell 0/1 array indexed [u][v]: u runs along x (left to right), v along y
// (bottom to top). Indices are zero-based; cell (u, v) is the rectangle
// (x[u], x[u+1]) x (y[v], y[v+1]).
class IndicatorArray {
 public:
  IndicatorArray() = default;
  IndicatorArray(std::size_t k, std::size_t ell, bool fill = false);

  // Rows listed top to bottom, as arrays are usually drawn on paper. Row 0 is
  // v = ell - 1; entry u of each row is column u.
  static IndicatorArray from_rows_top_down(const std::vector<std::vector<int>>& rows);
  std::vector<std::vector<int>> to_rows_top_down() const;

  std::size_t k() const { return k_; }
  std::size_t ell() const { return ell_; }

  bool operator()(std::size_t u, std::size_t v) const { return cells_[u * ell_ + v] != 0; }
  void set(std::size_t u, std::size_t v, bool value) { cells_[u * ell_ + v] = value ? 1 : 0; }

  std::size_t count() const;
  std::size_t column_count(std::size_t u) const;  // ones with fixed u
  std::size_t row_count(std::size_t v) const;     // ones with fixed v

  bool operator==(const IndicatorArray&) const = default;

 private:
  std::size_t k_ = 0;
  std::size_t ell_ = 0;
  std::vector<unsigned char> cells_;
};

struct RegionSpec {
  std::vector<double> x;  // x[0] = 0 < ... < x[k] = 1
  std::vector<double> y;  // y[0] = 0 < ... < y[ell] = 1
  IndicatorArray I;
  double r = 0.0;  // Mallows rate, q = exp(-r / N)

  std::size_t k() const { return x.size() - 1; }
  std::size_t ell() const { return y.size() - 1; }
  double dx(std::size_t u) const { return x[u + 1] - x[u]; }
  double dy(std::size_t v) const { return y[v + 1] - y[v]; }
};

// Checks breakpoint ordering, array shape, and that no row or column of I is
// empty. Throws Error(InvalidInput).
void validate_basic(const RegionSpec& spec);

// Rows/columns of I each form one contiguous run of ones. Throws
// Error(InvalidInput) if some row or column is all zero.
bool is_convex(const IndicatorArray& I);

enum class ReductionRule {
  SingleCell,  // an extreme row/column holding a single one is removed
  MergeFull,   // two adjacent completely filled rows/columns are merged
  DropEmpty,   // a row/column left empty by a SingleCell step (disconnected support)
};

enum class Axis { X, Y };

// One reduction applied to the current (already reduced) array. For Axis::X
// the step removes column `index` (SingleCell) or merges columns `index` and
// `index + 1` (MergeFull); for Axis::Y the same with rows. `partner` is the
// position of the lone one for SingleCell steps and unused otherwise. All
// positions refer to the array as it was just before this step.
struct ReductionStep {
  ReductionRule rule;
  Axis axis;
  std::size_t index;
  std::size_t partner = 0;

  bool operator==(const ReductionStep&) const = default;
};

using ReductionSequence = std::vector<ReductionStep>;

// Greedy reduction to the 1x1 array. Scan order: SingleCell before MergeFull;
// within a rule columns before rows and the lowest index first. A SingleCell
// step that isolates a cell is followed by a DropEmpty step for the emptied
// line. Returns nullopt if the array is not convex or gets stuck before
// reaching 1x1.
std::optional<ReductionSequence> is_simple(const IndicatorArray& I);

// Applies one step to an array (helper shared with the exact solver).
IndicatorArray apply_reduction(const IndicatorArray& I, const ReductionStep& step);

struct FeasibleMasses {
  std::vector<std::vector<double>> B;  // k x ell, B[u][v] > 0 iff I(u, v)
};

// Finds a strictly positive transportation witness on the support of I.
// Throws Error(Degenerate) if none exists.
FeasibleMasses check_nondegenerate(const RegionSpec& spec);

// Exact combinatorial test used to confirm an IPF failure: true iff some
// flow with the prescribed marginals is positive on every cell with I = 1.
bool support_admits_positive_flow(const RegionSpec& spec, double eps = 1e-12);

// Number of connected components of the bipartite support graph of I.
std::size_t support_components(const IndicatorArray& I);

}  // namespace permuton
