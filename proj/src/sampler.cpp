#include "permuton/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "permuton/errors.hpp"

namespace permuton {

namespace {

std::vector<std::size_t> cell_lookup(const std::vector<std::size_t>& B, std::size_t n) {
  std::vector<std::size_t> out(n);
  for (std::size_t c = 0; c + 1 < B.size(); ++c)
    for (std::size_t t = B[c]; t < B[c + 1]; ++t) out[t] = c;
  return out;
}

}  // namespace

DiscreteRegion DiscreteRegion::from_breaks(const IndicatorArray& I, std::vector<std::size_t> X,
                                           std::vector<std::size_t> Y) {
  if (X.size() != I.k() + 1 || Y.size() != I.ell() + 1 || X.front() != 0 || Y.front() != 0 || X.back() != Y.back())
    throw Error(ErrorKind::InvalidInput, "discrete breakpoints do not match the array");
  for (std::size_t i = 0; i + 1 < X.size(); ++i)
    if (X[i] > X[i + 1]) throw Error(ErrorKind::InvalidInput, "X is not monotone");
  for (std::size_t i = 0; i + 1 < Y.size(); ++i)
    if (Y[i] > Y[i + 1]) throw Error(ErrorKind::InvalidInput, "Y is not monotone");
  DiscreteRegion R;
  R.n = X.back();
  R.I = I;
  R.col_of = cell_lookup(X, R.n);
  R.row_of = cell_lookup(Y, R.n);
  R.X = std::move(X);
  R.Y = std::move(Y);
  return R;
}

DiscreteRegion DiscreteRegion::from_spec(const RegionSpec& spec, std::size_t n) {
  if (n == 0) throw Error(ErrorKind::InvalidInput, "n must be positive");
  auto scale = [n](const std::vector<double>& b) {
    std::vector<std::size_t> out;
    for (double t : b) out.push_back(static_cast<std::size_t>(std::llround(t * static_cast<double>(n))));
    return out;
  };
  return from_breaks(spec.I, scale(spec.x), scale(spec.y));
}

bool DiscreteRegion::admits(const std::vector<std::size_t>& sigma) const {
  if (sigma.size() != n) return false;
  std::vector<bool> seen(n, false);
  for (std::size_t m = 0; m < n; ++m) {
    if (sigma[m] >= n || seen[sigma[m]] || !allowed(m, sigma[m])) return false;
    seen[sigma[m]] = true;
  }
  return true;
}

long long inv_count(const std::vector<std::size_t>& sigma) {
  std::vector<std::size_t> a = sigma, tmp(sigma.size());
  long long inv = 0;
  // Bottom-up merge sort.
  for (std::size_t width = 1; width < a.size(); width *= 2) {
    for (std::size_t lo = 0; lo < a.size(); lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, a.size()), hi = std::min(lo + 2 * width, a.size());
      std::size_t i = lo, j = mid, o = lo;
      while (i < mid && j < hi) {
        if (a[j] < a[i]) {
          inv += static_cast<long long>(mid - i);
          tmp[o++] = a[j++];
        } else {
          tmp[o++] = a[i++];
        }
      }
      while (i < mid) tmp[o++] = a[i++];
      while (j < hi) tmp[o++] = a[j++];
    }
    std::swap(a, tmp);
  }
  return inv;
}

std::vector<std::size_t> initial_permutation(const DiscreteRegion& R) {
  const std::size_t n = R.n;
  std::vector<long> owner(n, -1);  // value -> position
  std::vector<long> value_of(n, -1);
  for (std::size_t m = 0; m < n; ++m)
    for (std::size_t c = 0; c < n; ++c)
      if (R.allowed(m, c) && owner[c] < 0) {
        owner[c] = static_cast<long>(m);
        value_of[m] = static_cast<long>(c);
        break;
      }
  std::vector<char> visited(n);
  std::function<bool(std::size_t)> augment = [&](std::size_t m) {
    for (std::size_t c = 0; c < n; ++c) {
      if (!R.allowed(m, c) || visited[c]) continue;
      visited[c] = 1;
      if (owner[c] < 0 || augment(static_cast<std::size_t>(owner[c]))) {
        owner[c] = static_cast<long>(m);
        value_of[m] = static_cast<long>(c);
        return true;
      }
    }
    return false;
  };
  for (std::size_t m = 0; m < n; ++m) {
    if (value_of[m] >= 0) continue;
    std::fill(visited.begin(), visited.end(), 0);
    if (!augment(m)) throw Error(ErrorKind::Infeasible, "no permutation is restricted by the region");
  }
  std::vector<std::size_t> sigma(n);
  for (std::size_t m = 0; m < n; ++m) sigma[m] = static_cast<std::size_t>(value_of[m]);
  return sigma;
}

MallowsChain::MallowsChain(const DiscreteRegion& R, double q, std::uint64_t seed)
    : R_(R), log_q_(std::log(q)), seed_(seed), rng_(seed), sigma_(initial_permutation(R)), inv_(inv_count(sigma_)) {
  if (!(q > 0.0) || !std::isfinite(q)) throw Error(ErrorKind::InvalidInput, "q must be positive");
}

void MallowsChain::step() {
  ++steps_;
  const std::size_t n = R_.n;
  if (n < 2) return;
  // i and j independent: i == j holds with probability 1/n and keeps the
  // chain aperiodic (at q = 1 every swap flips the parity otherwise).
  std::size_t i = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
  std::size_t j = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
  if (i == j) return;
  if (i > j) std::swap(i, j);
  const std::size_t a = sigma_[i], b = sigma_[j];
  if (!R_.allowed(i, b) || !R_.allowed(j, a)) return;
  const std::size_t lo = std::min(a, b), width = std::max(a, b) - lo - 1;
  long long between = 0;
  for (std::size_t m = i + 1; m < j; ++m) between += (sigma_[m] - lo - 1) < width;
  const long long delta = (a < b ? 1 : -1) * (1 + 2 * between);
  const double log_ratio = static_cast<double>(delta) * log_q_;
  if (log_ratio < 0.0 && !(std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < std::exp(log_ratio))) return;
  sigma_[i] = b;
  sigma_[j] = a;
  inv_ += delta;
  ++accepted_;
}

void MallowsChain::run(std::uint64_t steps) {
  for (std::uint64_t s = 0; s < steps; ++s) step();
}

PermutationSample MallowsChain::sample() const {
  if (!R_.admits(sigma_)) throw Error(ErrorKind::InvalidInput, "chain left the restricted set");
  PermutationSample s;
  s.n = R_.n;
  s.sigma.resize(R_.n);
  for (std::size_t m = 0; m < R_.n; ++m) s.sigma[m] = sigma_[m] + 1;
  s.inversions = inv_;
  s.seed = seed_;
  s.sweeps = R_.n ? steps_ / R_.n : 0;
  s.q = std::exp(log_q_);
  return s;
}

PermutationSample sample_q(const DiscreteRegion& R, double q, std::uint64_t steps, std::uint64_t seed) {
  MallowsChain chain(R, q, seed);
  chain.run(steps ? steps : static_cast<std::uint64_t>(R.n) * R.n * R.n);
  return chain.sample();
}

PermutationSample sample(const RegionSpec& spec, std::size_t n, std::uint64_t steps, std::uint64_t seed) {
  const DiscreteRegion R = DiscreteRegion::from_spec(spec, n);
  return sample_q(R, std::exp(-spec.r / static_cast<double>(n)), steps, seed);
}

SixVertexGrid to_six_vertex(const PermutationSample& s) {
  const std::size_t n = s.n;
  std::vector<std::size_t> inv(n);
  for (std::size_t k = 0; k < n; ++k) inv[s.sigma[k] - 1] = k;
  SixVertexGrid G;
  G.n = n;
  G.types.assign(n, std::vector<int>(n, 0));
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t sk = s.sigma[k] - 1;
    std::size_t counts[6] = {0, 0, 0, 0, 0, 0};
    for (std::size_t c = 0; c < n; ++c) {
      int t;
      if (c == sk)
        t = 5;
      else if (c > sk)
        t = inv[c] < k ? 4 : 1;
      else
        t = inv[c] < k ? 2 : 3;
      G.types[k][c] = t;
      ++counts[t];
    }
    std::size_t above = 0;  // #{i < k : sigma(i) > sigma(k)}
    for (std::size_t i = 0; i < k; ++i) above += s.sigma[i] > s.sigma[k];
    const std::size_t below = k - above;
    const std::size_t sig = s.sigma[k];
    if (counts[5] != 1 || counts[1] != n - sig - above || counts[2] != below || counts[3] != sig - 1 - below ||
        counts[4] != above)
      throw Error(ErrorKind::InvalidInput, "six-vertex row counts disagree at row " + std::to_string(k + 1));
  }
  return G;
}

std::vector<std::vector<double>> empirical_height(const PermutationSample& s, std::size_t n_grid) {
  const double n = static_cast<double>(s.n);
  std::vector<std::vector<double>> h(n_grid + 1, std::vector<double>(n_grid + 1, 0.0));
  auto overlap = [](double a, double b, double c, double d) { return std::max(0.0, std::min(b, d) - std::max(a, c)); };
  for (std::size_t i = 0; i <= n_grid; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(n_grid);
    for (std::size_t j = 0; j <= n_grid; ++j) {
      const double y = static_cast<double>(j) / static_cast<double>(n_grid);
      double total = 0.0;
      for (std::size_t m = 0; m < s.n; ++m) {
        const double wy = overlap(0.0, y, static_cast<double>(m) / n, static_cast<double>(m + 1) / n);
        if (wy == 0.0) break;
        const double sx = static_cast<double>(s.sigma[m]);
        total += n * wy * overlap(x, 1.0, (sx - 1.0) / n, sx / n);
      }
      h[i][j] = total;
    }
  }
  return h;
}

std::vector<PermutationSample> sample_chains(const RegionSpec& spec, std::size_t n, std::uint64_t steps,
                                             std::uint64_t seed, std::size_t chains) {
  const DiscreteRegion R = DiscreteRegion::from_spec(spec, n);
  const double q = std::exp(-spec.r / static_cast<double>(n));
  std::vector<PermutationSample> out(chains);
  std::vector<std::string> errors(chains);
#pragma omp parallel for schedule(dynamic)
  for (long c = 0; c < static_cast<long>(chains); ++c) {
    try {
      out[c] = sample_q(R, q, steps, seed + static_cast<std::uint64_t>(c));
    } catch (const Error& e) {
      errors[c] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw Error(ErrorKind::Infeasible, e);
  return out;
}

std::vector<PermutationSample> sample_chains_serial(const RegionSpec& spec, std::size_t n, std::uint64_t steps,
                                                    std::uint64_t seed, std::size_t chains) {
  const DiscreteRegion R = DiscreteRegion::from_spec(spec, n);
  const double q = std::exp(-spec.r / static_cast<double>(n));
  std::vector<PermutationSample> out;
  for (std::size_t c = 0; c < chains; ++c) out.push_back(sample_q(R, q, steps, seed + c));
  return out;
}

std::vector<std::vector<std::size_t>> enumerate_restricted(const DiscreteRegion& R) {
  if (R.n > 9) throw Error(ErrorKind::InvalidInput, "enumeration is limited to n <= 9");
  std::vector<std::size_t> p(R.n);
  for (std::size_t i = 0; i < R.n; ++i) p[i] = i;
  std::vector<std::vector<std::size_t>> out;
  do {
    if (R.admits(p)) out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

}  // namespace permuton
