#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "cbss/rng.hpp"
#include "cbss/stats.hpp"

using namespace cbss;

TEST_CASE("running stats against two-pass formulas") {
  const std::vector<double> xs{1.5, -2.0, 3.25, 0.0, 7.0, 2.5};
  stats::RunningStats s, a, b;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    s.push(xs[i]);
    (i < 2 ? a : b).push(xs[i]);
  }
  double mean = 0;
  for (double x : xs) mean += x;
  mean /= xs.size();
  double ss = 0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  CHECK(s.mean() == doctest::Approx(mean).epsilon(1e-14));
  CHECK(s.variance() == doctest::Approx(ss / (xs.size() - 1)).epsilon(1e-14));
  a.merge(b);
  CHECK(a.count() == 6);
  CHECK(a.mean() == doctest::Approx(mean).epsilon(1e-14));
  CHECK(a.variance() == doctest::Approx(s.variance()).epsilon(1e-13));
}

TEST_CASE("wilson interval reference values") {
  // 10 of 100 at z = 1.96: hand-evaluated score interval
  const auto ci = stats::wilson_interval(10, 100);
  const double z = 1.959963984540054, n = 100, p = 0.1;
  const double c = (p + z * z / (2 * n)) / (1 + z * z / n);
  const double h = z / (1 + z * z / n) * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n));
  CHECK(ci.low == doctest::Approx(c - h).epsilon(1e-12));
  CHECK(ci.high == doctest::Approx(c + h).epsilon(1e-12));
  const auto zero = stats::wilson_interval(0, 50);
  CHECK(zero.low == doctest::Approx(0.0));
  CHECK(zero.high > 0);
}

TEST_CASE("kolmogorov tail") {
  CHECK(stats::kolmogorov_q(1.3580986393225505) == doctest::Approx(0.05).epsilon(1e-6));
  CHECK(stats::kolmogorov_q(0.0) == doctest::Approx(1.0));
}

TEST_CASE("ks tests accept the right law and reject a wrong one") {
  Philox g(5);
  std::vector<double> u(5000), e(5000), v(5000);
  for (auto& x : u) x = uniform01(g);
  for (auto& x : e) x = exponential(g, 2.0);
  for (auto& x : v) x = uniform01(g) * 1.1;
  CHECK(stats::ks_one_sample(u, [](double x) { return std::clamp(x, 0.0, 1.0); }).p_value > 0.001);
  CHECK(stats::ks_one_sample(v, [](double x) { return std::clamp(x, 0.0, 1.0); }).p_value < 1e-6);
  CHECK(stats::ks_exponential(e, 2.0).p_value > 0.001);
  CHECK(stats::ks_exponential(e, 3.0).p_value < 1e-6);
  CHECK(stats::ks_two_sample(u, v).p_value < 1e-3);
}

TEST_CASE("chi-square 2x2") {
  const std::int64_t t[2][2] = {{30, 10}, {20, 40}};
  // expected 20, 20, 30, 30 -> sum (o-e)^2/e
  const double x2 = 100.0 / 20 + 100.0 / 20 + 100.0 / 30 + 100.0 / 30;
  const auto r = stats::chi_square_2x2(t);
  CHECK(r.statistic == doctest::Approx(x2).epsilon(1e-12));
  CHECK(r.p_value == doctest::Approx(std::erfc(std::sqrt(x2 / 2))).epsilon(1e-9));
  const std::int64_t d[2][2] = {{5, 0}, {7, 0}};
  CHECK(stats::chi_square_2x2(d).p_value == 1.0);
}

TEST_CASE("weighted line fit recovers an exact line") {
  const std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7}, w{1, 2, 3, 4};
  const auto f = stats::fit_line(x, y, w);
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  const std::vector<double> y2{0, 1, 1, 3};
  const auto g = stats::fit_line(x, y2);
  CHECK(g.slope == doctest::Approx(0.9));
  CHECK(g.intercept == doctest::Approx(-0.1));
}

TEST_CASE("isotonic regression") {
  const std::vector<double> v{5, 3, 4, 1}, w{1, 1, 1, 1};
  const auto fit = stats::isotonic_nonincreasing(v, w);
  CHECK(fit == std::vector<double>{5, 3.5, 3.5, 1});
  const std::vector<double> w2{1, 1, 3, 1};
  CHECK(stats::isotonic_nonincreasing(v, w2)[1] == doctest::Approx(3.75));
  CHECK(stats::isotonic_violation(std::vector<double>{3, 2, 2, 1}) == 0.0);
  CHECK(stats::isotonic_violation(v) == doctest::Approx(0.5));
}
