#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <queue>
#include <random>
#include <set>

#include <boost/math/distributions/chi_squared.hpp>

#include "permuton/boundary_solver.hpp"
#include "permuton/density.hpp"
#include "permuton/errors.hpp"
#include "permuton/oracles.hpp"
#include "permuton/sampler.hpp"

using namespace permuton;

namespace {

RegionSpec make_spec(std::vector<double> x, std::vector<double> y, const std::vector<std::vector<int>>& rows,
                     double r = 0.0) {
  RegionSpec s;
  s.x = std::move(x);
  s.y = std::move(y);
  s.I = IndicatorArray::from_rows_top_down(rows);
  s.r = r;
  return s;
}

long long brute_inversions(const std::vector<std::size_t>& s) {
  long long c = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = i + 1; j < s.size(); ++j) c += s[i] > s[j];
  return c;
}

// Restricted permutations by filtering all n! of them.
std::vector<std::vector<std::size_t>> brute_restricted(const DiscreteRegion& R) {
  std::vector<std::size_t> p(R.n);
  std::iota(p.begin(), p.end(), 0);
  std::vector<std::vector<std::size_t>> out;
  do {
    bool ok = true;
    for (std::size_t m = 0; m < R.n && ok; ++m) ok = R.allowed(m, p[m]);
    if (ok) out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

// p-value of the chain's empirical law against q^inv / Z, one record every
// `thin` proposals.
double chain_p_value(const DiscreteRegion& R, double q, std::uint64_t steps, std::uint64_t thin, std::uint64_t seed) {
  const auto states = brute_restricted(R);
  std::map<std::vector<std::size_t>, std::size_t> index;
  std::vector<double> w;
  double Z = 0.0;
  for (const auto& s : states) {
    index[s] = w.size();
    w.push_back(std::pow(q, static_cast<double>(brute_inversions(s))));
    Z += w.back();
  }
  MallowsChain chain(R, q, seed);
  chain.run(1000);
  std::vector<double> counts(states.size(), 0.0);
  const std::uint64_t records = steps / thin;
  for (std::uint64_t i = 0; i < records; ++i) {
    chain.run(thin);
    const auto it = index.find(chain.state());
    REQUIRE(it != index.end());
    counts[it->second] += 1.0;
  }
  double stat = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const double e = static_cast<double>(records) * w[i] / Z;
    stat += (counts[i] - e) * (counts[i] - e) / e;
  }
  const boost::math::chi_squared dist(static_cast<double>(states.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

// Every restricted permutation reachable from every other by transpositions.
bool transpositions_connect(const DiscreteRegion& R) {
  const auto states = brute_restricted(R);
  std::set<std::vector<std::size_t>> all(states.begin(), states.end()), seen{states.front()};
  std::queue<std::vector<std::size_t>> todo;
  todo.push(states.front());
  while (!todo.empty()) {
    auto s = todo.front();
    todo.pop();
    for (std::size_t i = 0; i < s.size(); ++i)
      for (std::size_t j = i + 1; j < s.size(); ++j) {
        auto t = s;
        std::swap(t[i], t[j]);
        if (all.count(t) && seen.insert(t).second) todo.push(t);
      }
  }
  return seen.size() == all.size();
}

// A single test at the 1% level fails once in a hundred seeds by design;
// asking four of five independent chains to pass keeps the false alarm rate
// near 5e-7.
int passing_seeds(const DiscreteRegion& R, double q, std::uint64_t steps) {
  int ok = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) ok += chain_p_value(R, q, steps, 10, seed) > 0.01;
  return ok;
}

}  // namespace

TEST_CASE("inversion counts") {
  CHECK(inv_count({1, 2, 3, 4}) == 0);
  CHECK(inv_count({5, 4, 3, 2, 1}) == 10);
  CHECK(inv_count({2, 1, 3}) == 1);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    std::vector<std::size_t> p(1 + rng() % 200);
    std::iota(p.begin(), p.end(), 1);
    std::shuffle(p.begin(), p.end(), rng);
    CHECK(inv_count(p) == brute_inversions(p));
  }
}

TEST_CASE("enumeration matches brute force") {
  const auto R = DiscreteRegion::from_spec(staircase_spec(0.5, 0.75, 0.0), 4);
  auto a = enumerate_restricted(R), b = brute_restricted(R);
  std::sort(a.begin(), a.end());
  CHECK(a == b);
  CHECK(!a.empty());
}

TEST_CASE("transpositions connect the small test regions") {
  const auto three = make_spec({0, 0.4, 0.8, 1}, {0, 0.2, 0.6, 1}, {{1, 1, 0}, {1, 1, 1}, {0, 1, 1}});
  CHECK(transpositions_connect(DiscreteRegion::from_spec(staircase_spec(0.5, 0.75, 0.0), 4)));
  CHECK(transpositions_connect(DiscreteRegion::from_spec(three, 5)));
  CHECK(transpositions_connect(DiscreteRegion::from_spec(make_spec({0, 1}, {0, 1}, {{1}}), 5)));
  for (std::size_t n : {6u, 8u}) CHECK(transpositions_connect(DiscreteRegion::from_spec(three, n)));
}

TEST_CASE("uniform chain on all of S_6") {
  const auto R = DiscreteRegion::from_spec(make_spec({0, 1}, {0, 1}, {{1}}), 6);
  CHECK(brute_restricted(R).size() == 720);
  CHECK(passing_seeds(R, 1.0, 1000000) >= 4);
}

TEST_CASE("staircase chain at q = 1/2 against enumeration") {
  const auto R = DiscreteRegion::from_spec(staircase_spec(0.5, 0.75, 0.0), 4);
  CHECK(passing_seeds(R, 0.5, 1000000) >= 4);
  const auto three = DiscreteRegion::from_spec(
      make_spec({0, 0.4, 0.8, 1}, {0, 0.2, 0.6, 1}, {{1, 1, 0}, {1, 1, 1}, {0, 1, 1}}), 5);
  CHECK(passing_seeds(three, 2.0, 1000000) >= 4);
  // And state by state within three standard deviations.
  const auto states = brute_restricted(R);
  double Z = 0.0;
  for (const auto& s : states) Z += std::pow(0.5, static_cast<double>(brute_inversions(s)));
  MallowsChain chain(R, 0.5, 99);
  std::map<std::vector<std::size_t>, double> counts;
  const int records = 100000;
  for (int i = 0; i < records; ++i) {
    chain.run(10);
    counts[chain.state()] += 1.0;
  }
  for (const auto& s : states) {
    const double p = std::pow(0.5, static_cast<double>(brute_inversions(s))) / Z;
    const double sd = std::sqrt(records * p * (1 - p));
    CHECK(std::abs(counts[s] - records * p) < 3 * sd + 1);
  }
}

TEST_CASE("a region with one permutation") {
  const auto s = make_spec({0, 0.25, 0.5, 0.75, 1}, {0, 0.25, 0.5, 0.75, 1},
                           {{0, 0, 0, 1}, {0, 0, 1, 0}, {0, 1, 0, 0}, {1, 0, 0, 0}});
  const auto out = sample(s, 4, 1000, 3);
  CHECK(out.sigma == std::vector<std::size_t>{1, 2, 3, 4});
  CHECK(out.inversions == 0);
}

TEST_CASE("infeasible regions are reported") {
  const auto s = make_spec({0, 0.25, 1}, {0, 0.5, 1}, {{1, 0}, {0, 1}});
  try {
    sample(s, 8, 100, 1);
    FAIL("expected Infeasible");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Infeasible);
  }
}

TEST_CASE("samples stay in the region and count inversions exactly") {
  const auto s = make_spec({0, 0.3, 0.7, 1}, {0, 0.25, 0.6, 1}, {{1, 1, 0}, {1, 1, 1}, {0, 1, 1}}, 2.0);
  const auto R = DiscreteRegion::from_spec(s, 40);
  MallowsChain chain(R, std::exp(-2.0 / 40), 8);
  for (int i = 0; i < 200; ++i) {
    chain.run(500);
    CHECK(R.admits(chain.state()));
    CHECK(chain.inversions() == brute_inversions(chain.state()));
  }
  const auto out = sample(s, 40, 0, 8);
  CHECK(out.inversions == inv_count(out.sigma));
  CHECK(std::abs(out.q - std::exp(-2.0 / 40)) < 1e-15);
}

TEST_CASE("sampling is reproducible") {
  const auto s = staircase_spec(0.5, 0.75, 1.0);
  const auto a = sample(s, 60, 20000, 42), b = sample(s, 60, 20000, 42), c = sample(s, 60, 20000, 43);
  CHECK(a.sigma == b.sigma);
  CHECK(a.sigma != c.sigma);
  const auto par = sample_chains(s, 30, 5000, 7, 6), ser = sample_chains_serial(s, 30, 5000, 7, 6);
  REQUIRE(par.size() == ser.size());
  for (std::size_t i = 0; i < par.size(); ++i) {
    CHECK(par[i].sigma == ser[i].sigma);
    CHECK(par[i].seed == 7 + i);
  }
}

TEST_CASE("six-vertex row counts") {
  PermutationSample id;
  id.n = 2;
  id.sigma = {1, 2};
  const auto g2 = to_six_vertex(id);
  CHECK(g2.types[0][0] == 5);
  CHECK(g2.types[1][1] == 5);

  std::mt19937_64 rng(4);
  for (int t = 0; t < 30; ++t) {
    PermutationSample s;
    s.n = 1 + rng() % 30;
    s.sigma.resize(s.n);
    std::iota(s.sigma.begin(), s.sigma.end(), 1);
    std::shuffle(s.sigma.begin(), s.sigma.end(), rng);
    const auto g = to_six_vertex(s);
    const std::size_t N = s.n;
    std::size_t fives = 0;
    std::vector<std::size_t> col_fives(N, 0);
    for (std::size_t k = 0; k < N; ++k) {
      std::size_t c[6] = {0, 0, 0, 0, 0, 0};
      for (std::size_t col = 0; col < N; ++col) {
        ++c[g.types[k][col]];
        if (g.types[k][col] == 5) ++col_fives[col];
      }
      const std::size_t sk = s.sigma[k];
      std::size_t above = 0, below = 0;
      for (std::size_t i = 0; i < k; ++i) (s.sigma[i] > sk ? above : below) += 1;
      CHECK(c[5] == 1);
      CHECK(g.types[k][sk - 1] == 5);
      CHECK(c[1] == N - sk - above);
      CHECK(c[2] == below);
      CHECK(c[3] == sk - 1 - below);
      CHECK(c[4] == above);
      fives += c[5];
    }
    CHECK(fives == N);
    for (std::size_t f : col_fives) CHECK(f == 1);
  }
}

TEST_CASE("empirical height at grid corners") {
  const auto s = sample(staircase_spec(0.5, 0.75, 1.0), 50, 50000, 9);
  const auto h = empirical_height(s, 50);
  for (std::size_t i = 0; i <= 50; ++i) {
    CHECK(h[i][0] == 0.0);
    CHECK(h[50][i] == 0.0);
    CHECK(h[i][50] == Catch::Approx(1.0 - i / 50.0).margin(1e-14));
    CHECK(h[0][i] == Catch::Approx(i / 50.0).margin(1e-14));
  }
  CHECK(h[0][50] == Catch::Approx(1.0).margin(1e-14));
  for (std::size_t i = 0; i <= 50; ++i)
    for (std::size_t j = 0; j <= 50; ++j) {
      std::size_t count = 0;
      for (std::size_t m = 1; m <= j; ++m) count += s.sigma[m - 1] > i;
      CHECK(h[i][j] == Catch::Approx(count / 50.0).margin(1e-14));
    }
}

TEST_CASE("uniform permutations average to the uniform height") {
  const std::size_t n = 100, chains = 200, grid = 20;
  const auto samples = sample_chains(make_spec({0, 1}, {0, 1}, {{1}}), n, 50000, 1, chains);
  std::vector<std::vector<double>> mean(grid + 1, std::vector<double>(grid + 1, 0.0));
  for (const auto& s : samples) {
    const auto h = empirical_height(s, grid);
    for (std::size_t i = 0; i <= grid; ++i)
      for (std::size_t j = 0; j <= grid; ++j) mean[i][j] += h[i][j] / chains;
  }
  double worst = 0.0;
  for (std::size_t i = 0; i <= grid; ++i)
    for (std::size_t j = 0; j <= grid; ++j) {
      const double x = static_cast<double>(i) / grid, y = static_cast<double>(j) / grid;
      worst = std::max(worst, std::abs(mean[i][j] - y * (1 - x)));
    }
  CHECK(worst < 0.03);
}

TEST_CASE("one large sample is near the limit shape") {
  const auto spec = staircase_spec(0.5, 0.75, 1.0);
  const auto f = build_field(spec, solve_simple(spec));
  const auto s = sample(spec, 200, 0, 2024);
  const std::size_t grid = 20;
  const auto h = empirical_height(s, grid);
  double worst = 0.0;
  for (std::size_t i = 0; i <= grid; ++i)
    for (std::size_t j = 0; j <= grid; ++j) {
      const double x = static_cast<double>(i) / grid, y = static_cast<double>(j) / grid;
      worst = std::max(worst, std::abs(h[i][j] - eval_height(f, x, y)));
    }
  CHECK(worst < 0.1);
}
