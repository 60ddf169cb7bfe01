#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cbss/frac_bvp.hpp"

using namespace cbss;

TEST_CASE("grids") {
  const auto g = Grid::geometric(1e-3, 1e4, 400);
  CHECK(g.size() == 400);
  CHECK(g.nodes.front() == doctest::Approx(1e-3));
  CHECK(g.nodes.back() == 1e4);
  CHECK(g.nodes[1] / g.nodes[0] == doctest::Approx(g.ratio));
  const auto r = g.refined();
  CHECK(r.ratio - 1 == doctest::Approx((g.ratio - 1) / 2).epsilon(0.01));
  CHECK(r.nodes.front() == doctest::Approx(1e-3));
  CHECK(r.nodes.back() == 1e4);
  const auto u = Grid::uniform(10, 50);
  CHECK(u.nodes.front() == doctest::Approx(0.2));
  CHECK(u.refined().size() == 100);
  CHECK_THROWS_AS(Grid::geometric(0.0, 1.0, 10), std::domain_error);
  CHECK_THROWS_AS(Grid::geometric(2.0, 1.0, 10), std::domain_error);
  CHECK_THROWS_AS(Grid::uniform(1.0, 1), std::domain_error);
}

TEST_CASE("grid function evaluation rule") {
  GridFunction f;
  f.grid = Grid::geometric(0.1, 100, 31);
  f.alpha = 1.0;
  f.values.resize(31);
  for (int i = 0; i < 31; ++i) f.values[i] = std::pow(1 + f.grid.nodes[i], -0.5);
  for (int i = 0; i < 31; ++i) CHECK(f(f.grid.nodes[i]) == doctest::Approx(f.values[i]).epsilon(1e-14));
  CHECK(f(-1.0) == 1.0);
  CHECK(f(0.0) == 1.0);
  // first cell: 1 - (1 - u1) (y / x1)^(alpha/2)
  CHECK(f(0.025) == doctest::Approx(1 - (1 - f.values[0]) * 0.5).epsilon(1e-14));
  // linear in log x between nodes
  const double xm = std::sqrt(f.grid.nodes[4] * f.grid.nodes[5]);
  CHECK(f(xm) == doctest::Approx((f.values[4] + f.values[5]) / 2).epsilon(1e-12));
  // power-law closure
  CHECK(f.far_field_coeff() == doctest::Approx(f.values[30] * 10).epsilon(1e-12));
  CHECK(f(400.0) == doctest::Approx(f.values[30] / 2).epsilon(1e-12));
  f.closure = Closure::Flat;
  CHECK(f(400.0) == doctest::Approx(f.values[30]));
}

TEST_CASE("continuous operator: alpha = 1 on the Lorentzian") {
  // symbol pi |xi|, so 1/(1+y^2) maps to pi (1 - x^2) / (1 + x^2)^2
  const auto f = [](double y) { return 1 / (1 + y * y); };
  for (double x : {0.05, 0.5, 1.0, 2.0, 10.0, 300.0}) {
    const double ref = std::numbers::pi * (1 - x * x) / ((1 + x * x) * (1 + x * x));
    CHECK(fractional_laplacian(f, x, 1.0) == doctest::Approx(ref).epsilon(1e-7).scale(std::pow(x, -3)));
  }
}

TEST_CASE("continuous operator: step profile") {
  // 1 on y <= 0 and c on y > 0: the left half-line alone contributes
  for (double a : {0.5, 1.0, 1.5}) {
    const auto f = [](double y) { return y <= 0 ? 1.0 : 0.5; };
    for (double x : {1.0, 7.0}) CHECK(fractional_laplacian(f, x, a) == doctest::Approx(-0.5 * std::pow(x, -a) / a).epsilon(1e-9));
  }
  const auto f = [](double y) { return y <= 0 ? 1.0 : 0.5; };
  CHECK(fractional_laplacian(f, 1.0, 1.0) == doctest::Approx(-0.5).epsilon(1e-10));
  CHECK_THROWS_AS(fractional_laplacian(f, 0.0, 1.0), std::domain_error);
}

TEST_CASE("scaling integral values") {
  // reference values from 50-digit quadrature
  CHECK(scaling_integral(0.5, 1.0) == doctest::Approx(0.396280469471).epsilon(1e-7));
  CHECK(scaling_integral(1.0, 1.0) == doctest::Approx(-1.0).epsilon(1e-7));
  CHECK(scaling_integral(1.5, 1.0) == doctest::Approx(-5.03676259049).epsilon(1e-7));
  for (double a : {0.5, 1.0, 1.5}) {
    const auto s = f_scaling_check(a, 0.7, 4.0);
    CHECK(s.expected == doctest::Approx(std::pow(4.0, -1.5 * a)));
    CHECK(s.rel_error < 1e-6);
  }
}

TEST_CASE("w decay ratio against high-precision quadrature") {
  // 30-digit quadrature of the singular integral at x = 1000
  CHECK(w_decay_ratio(0.5, 1e3) == doctest::Approx(0.7864307507).epsilon(1e-7));
  CHECK(w_decay_ratio(1.0, 1e3) == doctest::Approx(0.9980026635).epsilon(1e-7));
  CHECK(w_decay_ratio(1.5, 1e3) == doctest::Approx(1.030791459).epsilon(1e-7));
}

TEST_CASE("w decay ratio approaches one") {
  CHECK(w_decay_ratio(1.0, 1e3) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(w_decay_ratio(1.5, 1e3) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(std::abs(w_decay_ratio(1.0, 1e5) - 1) < std::abs(w_decay_ratio(1.0, 1e2) - 1));
}

TEST_CASE("discrete operator tracks the continuous one") {
  const auto g = Grid::geometric(1e-3, 1e4, 400);
  for (double a : {0.5, 1.0, 1.5}) {
    CAPTURE(a);
    const auto w = [a](double y) { return y > 0 ? std::pow(1.0 + y, -a / 2) : 1.0; };
    Eigen::VectorXd v(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) v[i] = w(g.nodes[i]);
    const FracLaplacian op(g, a);
    const Eigen::VectorXd d = op.apply(v);
    for (std::size_t i = 0; i < g.size(); i += 7) {
      const double x = g.nodes[i];
      if (x < 1e-2 || x > 1e3) continue;
      CHECK(std::abs(d[i] - fractional_laplacian(w, x, a)) * std::pow(x, a) < 5e-3);
    }
    GridFunction gf{g, v, a};
    CHECK(frac_laplacian_apply(gf, 200) == doctest::Approx(d[200]).epsilon(1e-9));
  }
}

TEST_CASE("discrete operator is an M-matrix and kills constants") {
  const auto g = Grid::geometric(1e-2, 1e3, 120);
  for (double a : {0.5, 1.0, 1.5}) {
    const FracLaplacian op(g, a);
    const auto& A = op.matrix();
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      REQUIRE(A(i, i) > 0);
      for (Eigen::Index j = 0; j < A.cols(); ++j)
        if (j != i) REQUIRE(A(i, j) <= 0);
      REQUIRE(A.row(i).sum() > 0);
    }
    CHECK((op.offset().array() < 0).all());
    const FracLaplacian flat(g, a, Closure::Flat);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(g.size()));
    CHECK(flat.apply(ones).cwiseAbs().maxCoeff() < 1e-6 * flat.matrix().diagonal().maxCoeff());
  }
}

TEST_CASE("solver: alpha = 1") {
  const StableParams p(1.0);
  const auto sol = solve_bvp(p, Grid::geometric(1e-3, 1e4, 400));
  CHECK(sol.residual.cwiseAbs().maxCoeff() < 1e-8);
  CHECK(sol.monotone);
  CHECK(sol.clamped == 0);
  CHECK(sol.residual_history.size() == static_cast<std::size_t>(sol.iterations + 1));
  const auto& u = sol.u.values;
  CHECK(u.maxCoeff() <= 1.0);
  CHECK(u.minCoeff() > 0.0);
  for (Eigen::Index i = 1; i < u.size(); ++i) REQUIRE(u[i] < u[i - 1]);
  CHECK(tail_constant(sol.u, 5000) == doctest::Approx(std::sqrt(2.0)).epsilon(0.15));
  const auto fine = solve_bvp(p, sol.u.grid.refined());
  CHECK(tail_constant(fine.u, 5000) == doctest::Approx(tail_constant(sol.u, 5000)).epsilon(0.02));

  CHECK(comparison_check(sol.u, SolutionKind::Super, 1e-8).pass);
  CHECK(comparison_check(sol.u, SolutionKind::Sub, 1e-8).pass);
  GridFunction low = sol.u;
  low.values *= 0.9;
  CHECK(comparison_check(low, SolutionKind::Sub).pass);
  CHECK_FALSE(comparison_check(low, SolutionKind::Super).pass);
}

TEST_CASE("solver: other indices and the tail exponent") {
  for (double a : {0.5, 1.5}) {
    const auto sol = solve_bvp(StableParams(a), Grid::geometric(1e-3, 1e4, 300));
    CHECK(sol.monotone);
    const double slope = std::log(sol.u(2000) / sol.u(500)) / std::log(4.0);
    CHECK(slope < 0);
    CHECK(slope > -a);
  }
}

TEST_CASE("solver reports non-convergence") {
  SolverConfig cfg;
  cfg.max_iters = 1;
  cfg.tol = 1e-15;
  try {
    solve_bvp(StableParams(1.0), Grid::geometric(1e-2, 1e3, 100), cfg);
    FAIL("expected NonConvergence");
  } catch (const NonConvergence& e) {
    CHECK(e.residual_history.size() == 2);
  }
  cfg = {};
  cfg.damping = 0;
  CHECK_THROWS_AS(cfg.validate(), std::domain_error);
}

TEST_CASE("comparison principle on explicit candidates") {
  std::vector<double> xs;
  for (double x = 1e-2; x <= 1e4; x *= std::sqrt(10.0)) xs.push_back(x);
  const auto sup = comparison_check(shifted_power_candidate(1.0, 4.0), 1.0, SolutionKind::Super, xs);
  const auto sub = comparison_check(shifted_power_candidate(1.0, 0.25), 1.0, SolutionKind::Sub, xs);
  CHECK(sup.pass);
  CHECK(sup.boundary_ok);
  CHECK(sub.pass);
  // a decaying candidate that is too small cannot be a supersolution
  const auto bad = comparison_check(shifted_power_candidate(1.0, 0.25), 1.0, SolutionKind::Super, xs);
  CHECK_FALSE(bad.pass);
  CHECK(bad.worst_violation > 0);
  // and one that exceeds 1 on the left fails the boundary condition as a subsolution
  const auto over = comparison_check([](double y) { return y <= 0 ? 2.0 : 0.1; }, 1.0, SolutionKind::Sub, xs);
  CHECK_FALSE(over.boundary_ok);
}
