#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <vector>

#include "cbss/branching_tree.hpp"
#include "cbss/stats.hpp"

using namespace cbss;

namespace {

// P(xi = n) from the first-step decomposition: die (n = 1) or split into two
// independent subtrees of sizes a + b = n - 1.
std::vector<double> progeny_law_by_convolution(int n_max) {
  std::vector<double> q(n_max + 1, 0.0);
  q[1] = 0.5;
  for (int n = 2; n <= n_max; ++n) {
    double s = 0;
    for (int a = 1; a < n - 1; ++a) s += q[a] * q[n - 1 - a];
    q[n] = 0.5 * s;
  }
  return q;
}

}  // namespace

TEST_CASE("progeny pmf and tail against convolution") {
  const auto q = progeny_law_by_convolution(2001);
  CHECK(progeny_pmf(0) == doctest::Approx(0.5));
  CHECK(progeny_pmf(1) == doctest::Approx(0.125));
  CHECK(progeny_pmf(2) == doctest::Approx(1.0 / 16));
  for (int k = 0; 2 * k + 1 <= 2001; k += 37) CHECK(progeny_pmf(k) == doctest::Approx(q[2 * k + 1]).epsilon(1e-12));
  double below = 0;
  for (int n = 1; n < 2001; ++n) below += q[n];
  CHECK(progeny_tail(2001) == doctest::Approx(1 - below).epsilon(1e-9));
  CHECK(progeny_tail(1) == doctest::Approx(1.0));
  for (std::int64_t m : {100, 10'000, 1'000'000}) {
    const double v = std::sqrt(double(m)) * progeny_tail(m);
    CHECK(v > 0.7);
    CHECK(v < 0.85);
  }
}

TEST_CASE("survival probability") {
  CHECK(survival_prob_exact(0) == 1.0);
  CHECK(survival_prob_exact(2) == doctest::Approx(0.5));
  CHECK(survival_prob_exact(10) == doctest::Approx(1.0 / 6));
}

TEST_CASE("tree structure is consistent") {
  for (std::uint64_t i = 0; i < 300; ++i) {
    Philox g = substream(1, 1, i);
    const auto tree = sample_tree(g, 100'000, 1e9);
    if (tree.caps_hit) continue;
    REQUIRE(tree.progeny == static_cast<std::int64_t>(tree.nodes.size()));
    REQUIRE(tree.progeny % 2 == 1);
    std::map<std::int64_t, const TreeNode*> by_id;
    for (const auto& nd : tree.nodes) by_id[nd.id] = &nd;
    std::map<std::int64_t, int> children;
    double last_death = 0;
    for (const auto& nd : tree.nodes) {
      last_death = std::max(last_death, nd.death_time());
      if (!nd.parent) {
        REQUIRE(nd.birth_time == 0.0);
        continue;
      }
      const auto& par = *by_id.at(*nd.parent);
      REQUIRE(par.fate == Fate::Split);
      REQUIRE(nd.birth_time == doctest::Approx(par.death_time()));
      ++children[*nd.parent];
    }
    for (const auto& nd : tree.nodes) REQUIRE(children[nd.id] == (nd.fate == Fate::Split ? 2 : 0));
    CHECK(tree.extinction_time == doctest::Approx(last_death));
    CHECK(population_at(tree, tree.extinction_time) == 0);
    CHECK(population_at(tree, 0.0) == 1);
  }
}

TEST_CASE("survival and lifetimes by simulation") {
  const int n = 100'000;
  const std::vector<double> ts{1, 2, 10};
  std::vector<int> alive(ts.size(), 0);
  stats::RunningStats root_life;
  for (int i = 0; i < n; ++i) {
    Philox g = substream(2, 7, static_cast<std::uint64_t>(i));
    const auto tree = sample_tree(g, 10'000'000, 10.0);
    root_life.push(tree.nodes.front().lifetime);
    for (std::size_t k = 0; k < ts.size(); ++k) alive[k] += population_at(tree, ts[k]) > 0;
  }
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const double q = survival_prob_exact(ts[k]);
    CHECK(std::abs(double(alive[k]) / n - q) < 3.5 * stats::binomial_se(q, n));
  }
  CHECK(std::abs(root_life.mean() - 1.0) < 4 * root_life.std_err());
}

TEST_CASE("progeny sampler matches tree sizes and the pmf") {
  const int n = 100'000;
  std::int64_t ones = 0, threes = 0, big = 0, capped = 0;
  std::vector<double> a, b;
  for (int i = 0; i < n; ++i) {
    Philox g = substream(3, 1, static_cast<std::uint64_t>(i));
    const auto xi = sample_progeny(g, 100'000);
    if (!xi) {
      ++capped;
      ++big;
      continue;
    }
    ones += *xi == 1;
    threes += *xi == 3;
    big += *xi >= 1000;
    if (i < 5000) a.push_back(double(*xi));
  }
  CHECK(std::abs(double(ones) / n - 0.5) < 3.5 * stats::binomial_se(0.5, n));
  CHECK(std::abs(double(threes) / n - 0.125) < 3.5 * stats::binomial_se(0.125, n));
  const double qb = progeny_tail(1000);
  CHECK(std::abs(double(big) / n - qb) < 3.5 * stats::binomial_se(qb, n));
  CHECK(std::abs(double(capped) / n - progeny_tail(100'001)) < 3.5 * stats::binomial_se(progeny_tail(100'001), n));
  for (int i = 0; i < 5000; ++i) {
    Philox g = substream(3, 2, static_cast<std::uint64_t>(i));
    b.push_back(double(sample_tree(g, 100'000, 1e9).progeny));
  }
  // discrete law: KS is conservative, so a lenient cut
  CHECK(stats::ks_two_sample(a, b).p_value > 0.001);
}

TEST_CASE("caps are honoured") {
  int hit = 0;
  for (std::uint64_t i = 0; i < 2000; ++i) {
    Philox g = substream(4, 1, i);
    const auto tree = sample_tree(g, 50, 1e9);
    if (tree.caps_hit) {
      ++hit;
      CHECK(tree.progeny <= 50);
    }
    Philox h = substream(4, 2, i);
    const auto tt = sample_tree(h, 1'000'000, 0.5);
    for (const auto& nd : tt.nodes) REQUIRE(nd.birth_time <= 0.5);
  }
  CHECK(std::abs(hit / 2000.0 - progeny_tail(51)) < 4 * stats::binomial_se(progeny_tail(51), 2000));
}

TEST_CASE("tree csv dump") {
  Philox g(6);
  const auto tree = sample_tree(g, 1000, 1e9);
  std::ostringstream os;
  write_tree_csv(tree, os);
  const auto s = os.str();
  CHECK(s.rfind("id,parent,birth_time,lifetime,fate\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == tree.progeny + 1);
}
