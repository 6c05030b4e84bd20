#include "permuton/region.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include "permuton/errors.hpp"
#include "permuton/ipf.hpp"

namespace permuton {

IndicatorArray::IndicatorArray(std::size_t k, std::size_t ell, bool fill)
    : k_(k), ell_(ell), cells_(k * ell, fill ? 1 : 0) {}

IndicatorArray IndicatorArray::from_rows_top_down(const std::vector<std::vector<int>>& rows) {
  if (rows.empty() || rows.front().empty()) throw Error(ErrorKind::InvalidInput, "empty indicator array");
  const std::size_t ell = rows.size(), k = rows.front().size();
  IndicatorArray I(k, ell);
  for (std::size_t j = 0; j < ell; ++j) {
    if (rows[j].size() != k) throw Error(ErrorKind::InvalidInput, "ragged indicator array");
    for (std::size_t u = 0; u < k; ++u) {
      const int e = rows[j][u];
      if (e != 0 && e != 1) throw Error(ErrorKind::InvalidInput, "indicator entries must be 0 or 1");
      I.set(u, ell - 1 - j, e == 1);
    }
  }
  return I;
}

std::vector<std::vector<int>> IndicatorArray::to_rows_top_down() const {
  std::vector<std::vector<int>> rows(ell_, std::vector<int>(k_, 0));
  for (std::size_t j = 0; j < ell_; ++j)
    for (std::size_t u = 0; u < k_; ++u) rows[j][u] = (*this)(u, ell_ - 1 - j) ? 1 : 0;
  return rows;
}

std::size_t IndicatorArray::count() const {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), 1));
}

std::size_t IndicatorArray::column_count(std::size_t u) const {
  std::size_t c = 0;
  for (std::size_t v = 0; v < ell_; ++v) c += (*this)(u, v);
  return c;
}

std::size_t IndicatorArray::row_count(std::size_t v) const {
  std::size_t c = 0;
  for (std::size_t u = 0; u < k_; ++u) c += (*this)(u, v);
  return c;
}

namespace {

void check_breaks(const std::vector<double>& b, const char* name) {
  if (b.size() < 2) throw Error(ErrorKind::InvalidInput, std::string(name) + " needs at least two breakpoints");
  if (std::abs(b.front()) > 1e-12 || std::abs(b.back() - 1.0) > 1e-12)
    throw Error(ErrorKind::InvalidInput, std::string(name) + " must run from 0 to 1");
  for (std::size_t i = 0; i + 1 < b.size(); ++i)
    if (!(b[i] < b[i + 1])) throw Error(ErrorKind::InvalidInput, std::string(name) + " must be strictly increasing");
}

void require_nonempty_lines(const IndicatorArray& I) {
  for (std::size_t u = 0; u < I.k(); ++u)
    if (I.column_count(u) == 0)
      throw Error(ErrorKind::InvalidInput, "column " + std::to_string(u + 1) + " of I is empty");
  for (std::size_t v = 0; v < I.ell(); ++v)
    if (I.row_count(v) == 0) throw Error(ErrorKind::InvalidInput, "row " + std::to_string(v + 1) + " of I is empty");
}

bool contiguous(const std::vector<bool>& line) {
  std::size_t runs = 0;
  for (std::size_t i = 0; i < line.size(); ++i)
    if (line[i] && (i == 0 || !line[i - 1])) ++runs;
  return runs <= 1;
}

}  // namespace

void validate_basic(const RegionSpec& spec) {
  check_breaks(spec.x, "x");
  check_breaks(spec.y, "y");
  if (spec.I.k() != spec.k() || spec.I.ell() != spec.ell())
    throw Error(ErrorKind::InvalidInput, "I must be k x ell");
  if (!std::isfinite(spec.r)) throw Error(ErrorKind::InvalidInput, "r must be finite");
  require_nonempty_lines(spec.I);
}

bool is_convex(const IndicatorArray& I) {
  require_nonempty_lines(I);
  for (std::size_t u = 0; u < I.k(); ++u) {
    std::vector<bool> line(I.ell());
    for (std::size_t v = 0; v < I.ell(); ++v) line[v] = I(u, v);
    if (!contiguous(line)) return false;
  }
  for (std::size_t v = 0; v < I.ell(); ++v) {
    std::vector<bool> line(I.k());
    for (std::size_t u = 0; u < I.k(); ++u) line[u] = I(u, v);
    if (!contiguous(line)) return false;
  }
  return true;
}

IndicatorArray apply_reduction(const IndicatorArray& I, const ReductionStep& step) {
  const bool remove_col = step.axis == Axis::X;
  std::size_t drop = step.index;
  if (step.rule == ReductionRule::MergeFull) drop = step.index + 1;
  const std::size_t k = remove_col ? I.k() - 1 : I.k();
  const std::size_t ell = remove_col ? I.ell() : I.ell() - 1;
  IndicatorArray out(k, ell);
  for (std::size_t u = 0, uu = 0; u < I.k(); ++u) {
    if (remove_col && u == drop) continue;
    for (std::size_t v = 0, vv = 0; v < I.ell(); ++v) {
      if (!remove_col && v == drop) continue;
      out.set(uu, vv, I(u, v));
      ++vv;
    }
    ++uu;
  }
  return out;
}

namespace {

std::optional<ReductionStep> next_step(const IndicatorArray& I) {
  const std::size_t K = I.k(), L = I.ell();
  auto lone_row_in_column = [&](std::size_t u) -> std::optional<std::size_t> {
    if (I.column_count(u) != 1) return std::nullopt;
    for (std::size_t v = 0; v < L; ++v)
      if (I(u, v)) return v;
    return std::nullopt;
  };
  auto lone_col_in_row = [&](std::size_t v) -> std::optional<std::size_t> {
    if (I.row_count(v) != 1) return std::nullopt;
    for (std::size_t u = 0; u < K; ++u)
      if (I(u, v)) return u;
    return std::nullopt;
  };
  if (K > 1) {
    for (std::size_t u : {std::size_t{0}, K - 1})
      if (auto v = lone_row_in_column(u)) return ReductionStep{ReductionRule::SingleCell, Axis::X, u, *v};
  }
  if (L > 1) {
    for (std::size_t v : {std::size_t{0}, L - 1})
      if (auto u = lone_col_in_row(v)) return ReductionStep{ReductionRule::SingleCell, Axis::Y, v, *u};
  }
  for (std::size_t u = 0; u + 1 < K; ++u)
    if (I.column_count(u) == L && I.column_count(u + 1) == L)
      return ReductionStep{ReductionRule::MergeFull, Axis::X, u, 0};
  for (std::size_t v = 0; v + 1 < L; ++v)
    if (I.row_count(v) == K && I.row_count(v + 1) == K)
      return ReductionStep{ReductionRule::MergeFull, Axis::Y, v, 0};
  return std::nullopt;
}

}  // namespace

std::optional<ReductionSequence> is_simple(const IndicatorArray& I) {
  if (!is_convex(I)) return std::nullopt;
  ReductionSequence seq;
  IndicatorArray cur = I;
  while (cur.k() > 1 || cur.ell() > 1) {
    auto step = next_step(cur);
    if (!step) return std::nullopt;
    cur = apply_reduction(cur, *step);
    seq.push_back(*step);
    // An isolated cell leaves an empty line behind; drop it right away.
    if (step->rule == ReductionRule::SingleCell) {
      if (step->axis == Axis::X && cur.row_count(step->partner) == 0) {
        ReductionStep drop{ReductionRule::DropEmpty, Axis::Y, step->partner, 0};
        cur = apply_reduction(cur, drop);
        seq.push_back(drop);
      } else if (step->axis == Axis::Y && cur.column_count(step->partner) == 0) {
        ReductionStep drop{ReductionRule::DropEmpty, Axis::X, step->partner, 0};
        cur = apply_reduction(cur, drop);
        seq.push_back(drop);
      }
    }
  }
  return seq;
}

std::size_t support_components(const IndicatorArray& I) {
  const std::size_t K = I.k(), L = I.ell();
  std::vector<std::size_t> parent(K + L);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (std::size_t u = 0; u < K; ++u)
    for (std::size_t v = 0; v < L; ++v)
      if (I(u, v)) parent[find(u)] = find(K + v);
  std::size_t n = 0;
  for (std::size_t i = 0; i < K + L; ++i) n += find(i) == i;
  return n;
}

namespace {

// Bipartite transportation network: source -> column u (dx) -> row v
// (unbounded, only where I = 1) -> sink (dy).
struct Transport {
  std::size_t K, L;
  std::vector<std::vector<double>> F;  // flow on the middle edges
  double total = 0.0;
};

Transport max_flow(const RegionSpec& spec) {
  const std::size_t K = spec.k(), L = spec.ell();
  const std::size_t n = K + L + 2, s = K + L, t = K + L + 1;
  const double inf = 4.0;
  std::vector<std::vector<double>> cap(n, std::vector<double>(n, 0.0));
  for (std::size_t u = 0; u < K; ++u) cap[s][u] = spec.dx(u);
  for (std::size_t v = 0; v < L; ++v) cap[K + v][t] = spec.dy(v);
  for (std::size_t u = 0; u < K; ++u)
    for (std::size_t v = 0; v < L; ++v)
      if (spec.I(u, v)) cap[u][K + v] = inf;
  const auto original = cap;
  const double eps = 1e-15;
  double total = 0.0;
  // Edmonds-Karp; the graphs here have at most a few hundred nodes.
  for (;;) {
    std::vector<std::size_t> prev(n, n);
    std::deque<std::size_t> q{s};
    prev[s] = s;
    while (!q.empty() && prev[t] == n) {
      const std::size_t a = q.front();
      q.pop_front();
      for (std::size_t b = 0; b < n; ++b)
        if (prev[b] == n && cap[a][b] > eps) {
          prev[b] = a;
          q.push_back(b);
        }
    }
    if (prev[t] == n) break;
    double push = std::numeric_limits<double>::infinity();
    for (std::size_t b = t; b != s; b = prev[b]) push = std::min(push, cap[prev[b]][b]);
    for (std::size_t b = t; b != s; b = prev[b]) {
      cap[prev[b]][b] -= push;
      cap[b][prev[b]] += push;
    }
    total += push;
  }
  Transport tr{K, L, std::vector<std::vector<double>>(K, std::vector<double>(L, 0.0)), total};
  for (std::size_t u = 0; u < K; ++u)
    for (std::size_t v = 0; v < L; ++v)
      if (spec.I(u, v)) tr.F[u][v] = std::max(0.0, original[u][K + v] - cap[u][K + v]);
  return tr;
}

// Path from row node v back to column node u in the residual graph of the
// middle layer: column -> row always, row -> column where flow is positive.
// Returns the alternating node list [v, u1, v1, ..., u] or empty.
std::vector<std::size_t> residual_path(const IndicatorArray& I, const std::vector<std::vector<double>>& F,
                                       std::size_t v_start, std::size_t u_goal, double eps) {
  const std::size_t K = I.k(), L = I.ell();
  // Nodes: columns 0..K-1, rows K..K+L-1.
  std::vector<std::size_t> prev(K + L, K + L);
  std::deque<std::size_t> q{K + v_start};
  prev[K + v_start] = K + v_start;
  while (!q.empty()) {
    const std::size_t a = q.front();
    q.pop_front();
    if (a == u_goal) break;
    if (a >= K) {
      const std::size_t v = a - K;
      for (std::size_t u = 0; u < K; ++u)
        if (I(u, v) && F[u][v] > eps && prev[u] == K + L) {
          prev[u] = a;
          q.push_back(u);
        }
    } else {
      for (std::size_t v = 0; v < L; ++v)
        if (I(a, v) && prev[K + v] == K + L) {
          prev[K + v] = a;
          q.push_back(K + v);
        }
    }
  }
  if (prev[u_goal] == K + L) return {};
  std::vector<std::size_t> path;
  for (std::size_t b = u_goal; b != K + v_start; b = prev[b]) path.push_back(b);
  path.push_back(K + v_start);
  std::reverse(path.begin(), path.end());
  return path;
}

double feasibility_eps(const RegionSpec& spec) {
  double m = 1.0;
  for (std::size_t u = 0; u < spec.k(); ++u) m = std::min(m, spec.dx(u));
  return 1e-12 * m;
}

}  // namespace

bool support_admits_positive_flow(const RegionSpec& spec, double eps) {
  const Transport tr = max_flow(spec);
  if (std::abs(tr.total - 1.0) > 1e-12) return false;
  for (std::size_t u = 0; u < tr.K; ++u)
    for (std::size_t v = 0; v < tr.L; ++v)
      if (spec.I(u, v) && tr.F[u][v] <= eps && residual_path(spec.I, tr.F, v, u, eps).empty()) return false;
  return true;
}

FeasibleMasses check_nondegenerate(const RegionSpec& spec) {
  validate_basic(spec);
  const double strict = feasibility_eps(spec);

  // The flow test decides; the IPF iterate is only the preferred witness.
  if (!support_admits_positive_flow(spec, strict))
    throw Error(ErrorKind::Degenerate, "no transport plan is positive on every cell with I = 1");

  IpfRun run = run_ipf(spec, 1e-12, 100000);
  auto witness_ok = [&](const std::vector<std::vector<double>>& B) {
    if (marginal_residual(spec, B) > 1e-10) return false;
    for (std::size_t u = 0; u < spec.k(); ++u)
      for (std::size_t v = 0; v < spec.ell(); ++v)
        if (spec.I(u, v) != (B[u][v] > strict)) return false;
    return true;
  };
  if (run.solution.residual < 1e-9 && witness_ok(run.solution.masses)) return {run.solution.masses};

  // Average of one max flow and, for every cell it leaves empty, a copy with
  // some mass pushed around a residual cycle through that cell.
  const Transport tr = max_flow(spec);
  std::vector<std::vector<std::vector<double>>> flows{tr.F};
  for (std::size_t u = 0; u < tr.K; ++u)
    for (std::size_t v = 0; v < tr.L; ++v) {
      if (!spec.I(u, v) || tr.F[u][v] > strict) continue;
      const auto path = residual_path(spec.I, tr.F, v, u, strict);
      double bottleneck = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i + 1 < path.size(); i += 2)
        bottleneck = std::min(bottleneck, tr.F[path[i + 1]][path[i] - tr.K]);
      auto G = tr.F;
      const double delta = 0.5 * bottleneck;
      G[u][v] += delta;
      for (std::size_t i = 0; i + 1 < path.size(); i += 2) {
        G[path[i + 1]][path[i] - tr.K] -= delta;
        if (i + 2 < path.size()) G[path[i + 1]][path[i + 2] - tr.K] += delta;
      }
      flows.push_back(std::move(G));
    }
  FeasibleMasses out{std::vector<std::vector<double>>(tr.K, std::vector<double>(tr.L, 0.0))};
  for (const auto& G : flows)
    for (std::size_t u = 0; u < tr.K; ++u)
      for (std::size_t v = 0; v < tr.L; ++v) out.B[u][v] += G[u][v] / static_cast<double>(flows.size());
  if (!witness_ok(out.B)) throw Error(ErrorKind::Degenerate, "positive transport plan is numerically degenerate");
  return out;
}

}  // namespace permuton
