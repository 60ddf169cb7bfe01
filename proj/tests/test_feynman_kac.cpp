#include <doctest.h>

#include <cmath>

#include "cbss/feynman_kac.hpp"
#include "cbss/frac_bvp.hpp"
#include "cbss/stats.hpp"

using namespace cbss;

namespace {

const BvpSolution& cauchy_solution() {
  static const BvpSolution sol = solve_bvp(StableParams(1.0), Grid::geometric(1e-3, 1e4, 400));
  return sol;
}

}  // namespace

TEST_CASE("exponential jump evaluation") {
  CHECK(exp_jump_expectation(2.0, 3.0) == doctest::Approx(0.4));
  Philox g(3);
  stats::RunningStats s;
  for (int i = 0; i < 200'000; ++i) s.push(std::exp(-0.5 * exponential(g, 0.2)));
  CHECK(std::abs(s.mean() - exp_jump_expectation(0.2, 0.5)) < 3.5 * s.std_err());
}

TEST_CASE("asymptotic fixed point solves u = L / (L + u/2)") {
  for (double a : {0.5, 1.0, 1.5})
    for (double x : {2.0, 50.0, 1e6}) {
      const StableParams p(a);
      const double L = levy_tail_mass(p, x * (1 - 2 * 0.01));
      double lo = 0, hi = 1;
      for (int k = 0; k < 200; ++k) {
        const double m = (lo + hi) / 2;
        (m - L / (L + m / 2) < 0 ? lo : hi) = m;
      }
      CHECK(asymptotic_fixed_point(p, x, 0.01) == doctest::Approx(lo).epsilon(1e-12));
    }
}

TEST_CASE("candidate functions") {
  const auto c = CandidateU::ansatz(1.0, 2.0);
  CHECK(c(-5) == 1.0);
  CHECK(c(1.0) == 1.0);
  CHECK(c(16.0) == doctest::Approx(0.5));
  const auto s = c.scaled(0.5);
  CHECK(s(-1) == 1.0);
  CHECK(s(16.0) == doctest::Approx(0.25));
  CHECK_FALSE(c.label().empty());
  const auto g = CandidateU::from_grid(cauchy_solution().u);
  CHECK(g(100.0) == doctest::Approx(cauchy_solution().u(100.0)));
  CHECK(g(0.0) == 1.0);
}

TEST_CASE("path integral is trapezoidal with left limits at jumps") {
  const auto u = CandidateU::ansatz(1.0, 1.0);  // y^(-1/2) beyond 1
  SamplePath p;
  p.times = {0.0, 1.0, 3.0};
  p.values = {4.0, 9.0, 9.0};
  const double seg2 = 2.0 / 3;
  CHECK(path_integral(p, u, 3.0) == doctest::Approx((0.5 + 1.0 / 3) / 2 + seg2));
  CHECK(path_integral(p, u, 2.0) == doctest::Approx((0.5 + 1.0 / 3) / 2 + 1.0 / 3));
  p.big_jumps = {{1.0, 5.0}};
  CHECK(path_integral(p, u, 3.0) == doctest::Approx(0.5 + seg2));
}

TEST_CASE("zero potential: every surviving path scores one") {
  const StableParams p(1.0);
  FKOptions opt;
  opt.seed = 5;
  opt.dt_rel = 1e-2;
  const auto e = fk_estimate(4.0, CandidateU::ansatz(1.0, 0.0), p, 2'000, opt);
  // the crossing segment is scored with the boundary value 1: an O(dt) charge
  CHECK(e.bracket_high == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(e.mean == doctest::Approx(1.0 - double(e.censored_count) / e.n).epsilon(1e-3));
  CHECK(e.mean <= 1.0);
}

TEST_CASE("Feynman-Kac image of the solved u reproduces it") {
  const StableParams p(1.0);
  const auto u = CandidateU::from_grid(cauchy_solution().u);
  FKOptions opt;
  opt.seed = 7;
  opt.workers = 4;
  opt.dt_rel = 5e-3;
  for (double x : {5.0, 20.0}) {
    const auto e = fk_estimate(x, u, p, 10'000, opt);
    const double ref = cauchy_solution().u(x);
    CHECK(std::abs(e.mean - ref) < 0.02 * ref + 3 * e.std_err);
    CHECK_FALSE(e.flagged());
    // a larger potential kills more mass
    const auto big = fk_estimate(x, u.scaled(2.0), p, 4'000, opt);
    CHECK(big.mean < e.mean);
  }
}

TEST_CASE("martingale constancy and its negative control") {
  const StableParams p(1.0);
  const auto u = CandidateU::from_grid(cauchy_solution().u);
  FKOptions opt;
  opt.seed = 11;
  opt.workers = 4;
  const auto good = martingale_check(u, p, 10.0, {0.5, 2.0, 8.0}, 40'000, opt);
  CHECK(good.u0 == doctest::Approx(cauchy_solution().u(10.0)));
  CHECK(good.t.size() == 3);
  CHECK(good.max_dev_se < 3.5);
  opt.group = 3;
  const auto bad = martingale_check(u.scaled(0.6), p, 10.0, {0.5, 2.0, 8.0}, 40'000, opt);
  CHECK(bad.max_dev_se > 5);
}

TEST_CASE("fixed point iteration settles near the solved u") {
  const StableParams p(1.0);
  const auto grid = Grid::geometric(1.0, 50.0, 5);
  FKOptions opt;
  opt.seed = 13;
  opt.workers = 4;
  opt.dt_rel = 1e-2;
  const auto fp = fk_fixed_point(CandidateU::ansatz(1.0, 3.0), p, grid, 8, 4'000, opt);
  REQUIRE(fp.iterations >= 1);
  CHECK(fp.distances.size() == static_cast<std::size_t>(fp.iterations));
  for (std::size_t i = 1; i < grid.size(); ++i) CHECK(fp.u.values[i] <= fp.u.values[i - 1]);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double ref = cauchy_solution().u(grid.nodes[i]);
    CHECK(std::abs(fp.u.values[i] - ref) < 0.1 * ref);
  }
}
