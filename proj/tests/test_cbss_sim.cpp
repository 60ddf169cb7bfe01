#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <tuple>

#include "cbss/branching_tree.hpp"
#include "cbss/cbss_sim.hpp"
#include "cbss/stats.hpp"

using namespace cbss;

namespace {

CbssConfig config(double alpha, double dt, std::uint64_t seed = 1) {
  CbssConfig c;
  c.stable = StableParams(alpha);
  c.path = PathConfig::with_default_threshold(c.stable, dt);
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("u is 1 on the non-positive half-line") {
  const auto e = tail_at_nonpositive(-3.0, 10);
  CHECK(e.p_hat == 1.0);
  CHECK(e.hits == 10);
  CHECK(tail_at_nonpositive(0.0, 5).p_hat == 1.0);
  const auto mixed = estimate_tail(config(1.0, 0.1), {-1.0, 0.0, 50.0}, 10);
  CHECK(mixed[0].p_hat == 1.0);
  CHECK(mixed[1].p_hat == 1.0);
  CHECK(mixed[2].p_hat < 1.0);
}

TEST_CASE("config validation") {
  auto c = config(1.0, 0.1);
  c.workers = 0;
  CHECK_THROWS_AS(c.validate(), std::domain_error);
  c = config(1.0, 0.1);
  c.progeny_cap = 0;
  CHECK_THROWS_AS(c.validate(), std::domain_error);
}

TEST_CASE("estimates do not depend on the worker count") {
  auto c = config(1.2, 0.1, 99);
  const auto a = estimate_tail(c, {3.0, 10.0}, 6'000);
  c.workers = 4;
  const auto b = estimate_tail(c, {3.0, 10.0}, 6'000);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].hits == b[k].hits);
    CHECK(a[k].censored_count == b[k].censored_count);
    CHECK(a[k].wall_events == b[k].wall_events);
  }
  CHECK(a[0].p_hat >= a[1].p_hat);
  CHECK(a[0].ci_low <= a[0].p_hat);
  CHECK(a[0].ci_high >= a[0].p_hat);
}

TEST_CASE("early exit does not change the crossing event") {
  const auto c = config(1.0, 0.1);
  RealizationOptions full;
  full.early_exit = false;
  for (std::uint64_t i = 0; i < 400; ++i) {
    Philox g1 = substream(5, 1, i), g2 = substream(5, 1, i);
    const auto fast = simulate_realization(c, 4.0, g1);
    const auto slow = simulate_realization(c, 4.0, g2, full);
    REQUIRE(fast.crossed == slow.crossed);
    REQUIRE(slow.crossed == (slow.max_lower >= 4.0));
    REQUIRE(fast.progeny_used <= slow.progeny_used);
    REQUIRE(slow.min_upper <= 0.0);
  }
}

TEST_CASE("lower side is the mirror image") {
  auto c = config(1.0, 0.1, 3);
  c.workers = 4;
  RealizationOptions lo;
  lo.side = Side::Lower;
  const auto up = estimate_tail(c, {5.0}, 40'000)[0];
  const auto down = estimate_tail(c, {5.0}, 40'000, lo)[0];
  const double se = std::hypot(stats::binomial_se(up.p_hat, up.n), stats::binomial_se(down.p_hat, down.n));
  CHECK(std::abs(up.p_hat - down.p_hat) < 4 * se);
}

TEST_CASE("tail sits below the first-moment bound") {
  // P{M >= x} <= 2 P{X_t >= x} + P{alive at t}
  auto c = config(1.0, 0.1, 8);
  c.workers = 4;
  const double x = 20, t = std::sqrt(x);
  const auto e = estimate_tail(c, {x}, 20'000)[0];
  CHECK(e.p_hat <= 2 * stable_tail(c.stable, t, x) + survival_prob_exact(t));
  CHECK_FALSE(e.flagged());
}

TEST_CASE("occupation counts follow the many-to-one formula") {
  for (const auto& [alpha, t, x] : {std::tuple{1.0, 1.0, std::numbers::pi}, std::tuple{1.5, 2.0, 1.0}, std::tuple{0.6, 0.5, -0.4}}) {
    CAPTURE(alpha);
    auto c = config(alpha, 0.01, 12);
    c.workers = 4;
    const auto occ = occupation_count(c, t, x, 40'000);
    const double ref = stable_tail(c.stable, t, x);
    CHECK(std::abs(occ.mean - ref) < 3.5 * occ.std_err);
    const auto all = occupation_count(c, t, -std::numeric_limits<double>::infinity(), 40'000);
    CHECK(std::abs(all.mean - 1.0) < 3.5 * all.std_err);
    CHECK(all.capped == 0);
  }
}

TEST_CASE("censoring at the progeny cap") {
  auto c = config(1.0, 0.1, 4);
  c.progeny_cap = 3;
  const auto e = estimate_tail(c, {1e6}, 4'000)[0];
  CHECK(e.hits == 0);
  CHECK(std::abs(double(e.censored_count) / e.n - progeny_tail(4)) < 4 * stats::binomial_se(progeny_tail(4), e.n));
  CHECK(e.p_hat_bracket_high == doctest::Approx(double(e.censored_count) / e.n));
  CHECK(e.flagged());
}
