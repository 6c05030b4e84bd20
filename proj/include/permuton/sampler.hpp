#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "permuton/region.hpp"

namespace permuton {

// Omega^{X,Y,I} at size n with X_u = round(n x_u), Y_v = round(n y_v).
// Values and positions are 0-based internally.
struct DiscreteRegion {
  std::size_t n = 0;
  IndicatorArray I;
  std::vector<std::size_t> X, Y;
  std::vector<std::size_t> col_of, row_of;  // cell index of each value / position

  static DiscreteRegion from_spec(const RegionSpec& spec, std::size_t n);
  static DiscreteRegion from_breaks(const IndicatorArray& I, std::vector<std::size_t> X, std::vector<std::size_t> Y);
  // Value sigma(m) allowed at position m.
  bool allowed(std::size_t m, std::size_t value) const { return I(col_of[value], row_of[m]); }
  bool admits(const std::vector<std::size_t>& sigma) const;
};

struct PermutationSample {
  std::size_t n = 0;
  std::vector<std::size_t> sigma;  // 1-based values sigma(1..n)
  long long inversions = 0;
  std::uint64_t seed = 0;
  std::uint64_t sweeps = 0;
  double q = 1.0;
};

long long inv_count(const std::vector<std::size_t>& sigma);

// A restricted permutation from greedy assignment completed by augmenting
// paths; throws Infeasible.
std::vector<std::size_t> initial_permutation(const DiscreteRegion& R);

class MallowsChain {
 public:
  MallowsChain(const DiscreteRegion& R, double q, std::uint64_t seed);

  // One proposal: a uniformly random transposition of two values.
  void step();
  void run(std::uint64_t steps);

  const std::vector<std::size_t>& state() const { return sigma_; }  // 0-based values
  long long inversions() const { return inv_; }
  std::uint64_t steps_done() const { return steps_; }
  std::uint64_t accepted() const { return accepted_; }
  PermutationSample sample() const;

 private:
  const DiscreteRegion& R_;
  double log_q_;
  std::uint64_t seed_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> sigma_;
  long long inv_ = 0;
  std::uint64_t steps_ = 0, accepted_ = 0;
};

// Metropolis chain targeting q^{inv}, q = exp(-r / n); steps = 0 means n^3.
PermutationSample sample(const RegionSpec& spec, std::size_t n, std::uint64_t steps, std::uint64_t seed);
PermutationSample sample_q(const DiscreteRegion& R, double q, std::uint64_t steps, std::uint64_t seed);

struct SixVertexGrid {
  std::size_t n = 0;
  std::vector<std::vector<int>> types;  // [row k][column c], types 1..5
};

// Type 5 at (sigma(k), k); elsewhere the type follows from the side of sigma(k)
// and whether a vertical path passes (sigma^{-1}(c) < k). Checks the row counts.
SixVertexGrid to_six_vertex(const PermutationSample& s);

// h(x, y) = int_0^y int_x^1 of the sample's permuton, at (i / n_grid, j / n_grid);
// [i][j], i along x. At multiples of 1/n this is #{m <= ny : sigma(m) > nx} / n.
std::vector<std::vector<double>> empirical_height(const PermutationSample& s, std::size_t n_grid);

// Independent chains with seeds seed, seed + 1, ...; parallel over chains.
std::vector<PermutationSample> sample_chains(const RegionSpec& spec, std::size_t n, std::uint64_t steps,
                                             std::uint64_t seed, std::size_t chains);
std::vector<PermutationSample> sample_chains_serial(const RegionSpec& spec, std::size_t n, std::uint64_t steps,
                                                    std::uint64_t seed, std::size_t chains);

// All restricted permutations (0-based), for n <= 9.
std::vector<std::vector<std::size_t>> enumerate_restricted(const DiscreteRegion& R);

}  // namespace permuton
