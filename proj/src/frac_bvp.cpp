#include "cbss/frac_bvp.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <limits>

namespace cbss {

namespace {

using boost::math::quadrature::gauss;
using boost::math::quadrature::tanh_sinh;

constexpr int kGaussPoints = 10;

tanh_sinh<double>& ts_integrator() {
  thread_local tanh_sinh<double> integrator(15);
  return integrator;
}

/// Gauss-Legendre over [a, b] (one side of the pole at x), split so that no
/// piece is wider than its distance to the pole.  Pieces touching `origin`
/// (the first-cell power singularity) are split geometrically towards it.
/// visit(y, w) receives nodes and weights already multiplied by |x - y|^(-1-alpha).
template <class Visit>
void kernel_quadrature(double a, double b, double x, double alpha, bool origin_singular, Visit&& visit) {
  if (!(b > a)) return;
  const double to_pole = b <= x ? x - b : a - x;
  const double to_origin = origin_singular ? a : std::numeric_limits<double>::infinity();
  const double dist = std::min(to_pole, to_origin);
  const double width = b - a;
  if (width > dist * (1 + 1e-9)) {
    if (origin_singular && to_origin < to_pole) {
      if (b < 1e-14 * std::max(x, 1.0)) return;  // negligible sliver next to 0
      const double m = a == 0.0 ? b / 2 : 2 * a;
      kernel_quadrature(a, m, x, alpha, true, visit);
      kernel_quadrature(m, b, x, alpha, true, visit);
      return;
    }
    const double d = std::max(to_pole, 1e-300);
    if (b <= x) {
      kernel_quadrature(a, b - d, x, alpha, origin_singular, visit);
      kernel_quadrature(b - d, b, x, alpha, origin_singular, visit);
    } else {
      kernel_quadrature(a, a + d, x, alpha, origin_singular, visit);
      kernel_quadrature(a + d, b, x, alpha, origin_singular, visit);
    }
    return;
  }
  const auto& xs = gauss<double, kGaussPoints>::abscissa();
  const auto& ws = gauss<double, kGaussPoints>::weights();
  const double half = width / 2, mid = a + half;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    for (const double sgn : {-1.0, 1.0}) {
      const double y = mid + sgn * half * xs[k];
      visit(y, half * ws[k] * std::pow(std::abs(x - y), -1.0 - alpha));
    }
  }
}

double interp_weight(const Grid& g, std::size_t j, double y) {
  const double lo = g.nodes[j], hi = g.nodes[j + 1];
  if (g.grading == Grading::Geometric) return std::log(y / lo) / std::log(hi / lo);
  return (y - lo) / (hi - lo);
}

}  // namespace

Grid Grid::uniform(double L, int n) {
  if (!(L > 0) || n < 3) throw std::domain_error("Grid::uniform: need L > 0 and n >= 3");
  Grid g;
  g.L = L;
  g.grading = Grading::Uniform;
  g.ratio = 1.0;
  for (int k = 1; k <= n; ++k) g.nodes.push_back(L * k / n);
  g.nodes.back() = L;
  return g;
}

Grid Grid::geometric(double x_min, double L, int n) {
  if (!(x_min > 0) || !(L > x_min) || n < 3) {
    throw std::domain_error("Grid::geometric: need 0 < x_min < L and n >= 3");
  }
  Grid g;
  g.L = L;
  g.grading = Grading::Geometric;
  g.ratio = std::pow(L / x_min, 1.0 / (n - 1));
  for (int k = 0; k < n; ++k) g.nodes.push_back(x_min * std::pow(g.ratio, k));
  g.nodes.back() = L;
  return g;
}

Grid Grid::refined() const {
  if (grading == Grading::Uniform) return uniform(L, static_cast<int>(2 * size()));
  const double q = 1.0 + (ratio - 1.0) / 2.0;
  const int n = static_cast<int>(std::ceil(std::log(L / nodes.front()) / std::log(q))) + 1;
  return geometric(nodes.front(), L, n);
}

void Grid::validate() const {
  if (nodes.size() < 3) throw std::domain_error("Grid: need at least 3 nodes");
  if (!(nodes.front() > 0)) throw std::domain_error("Grid: first node must be positive");
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (!(nodes[i] > nodes[i - 1])) throw std::domain_error("Grid: nodes must increase");
  }
  if (nodes.back() != L) throw std::domain_error("Grid: last node must equal L");
}

double GridFunction::far_field_coeff() const {
  return values[values.size() - 1] * std::pow(grid.L, far_field_exponent());
}

double GridFunction::operator()(double y) const {
  const auto& x = grid.nodes;
  const auto n = x.size();
  if (y <= 0) return left_value;
  if (y < x.front()) {
    return left_value - (left_value - values[0]) * std::pow(y / x.front(), alpha / 2);
  }
  if (y >= grid.L) {
    const double last = values[static_cast<Eigen::Index>(n - 1)];
    return closure == Closure::Flat ? last : last * std::pow(grid.L / y, alpha / 2);
  }
  const auto it = std::upper_bound(x.begin(), x.end(), y);
  const auto j = static_cast<std::size_t>(it - x.begin()) - 1;
  const double t = interp_weight(grid, j, y);
  return (1 - t) * values[static_cast<Eigen::Index>(j)] + t * values[static_cast<Eigen::Index>(j + 1)];
}

void SolverConfig::validate() const {
  if (!(damping > 0 && damping <= 1)) throw std::domain_error("SolverConfig: damping must be in (0, 1]");
  if (!(tol > 0) || !(quad_tol > 0)) throw std::domain_error("SolverConfig: tolerances must be positive");
  if (max_iters < 1) throw std::domain_error("SolverConfig: max_iters must be >= 1");
}

FracLaplacian::FracLaplacian(const Grid& grid, double alpha, Closure closure, double quad_tol)
    : grid_(grid), alpha_(alpha), closure_(closure), quad_tol_(quad_tol) {
  StableParams check(alpha);
  grid_.validate();
  const auto n = static_cast<Eigen::Index>(grid_.size());
  A_ = Eigen::MatrixXd::Zero(n, n);
  b_ = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < grid_.size(); ++i) assemble_row(i);
}

void FracLaplacian::assemble_row(std::size_t i) {
  const auto& x = grid_.nodes;
  const std::size_t n = x.size();
  const double a = alpha_;
  const double xi = x[i];
  auto row = A_.row(static_cast<Eigen::Index>(i));
  auto at = [](std::size_t j) { return static_cast<Eigen::Index>(j); };
  double diag = 0.0, left = 0.0;

  // y <= 0
  const double left_mass = std::pow(xi, -a) / a;
  diag += left_mass;
  left -= left_mass;

  // Near zone |y - xi| < r: second-difference form with a 3-point u''.
  double h1, h2;
  if (i == 0) {
    h2 = x[1] - x[0];
    h1 = std::min(x[0] / 2, h2);
  } else if (i == n - 1) {
    h1 = x[i] - x[i - 1];
    h2 = h1;
  } else {
    h1 = xi - x[i - 1];
    h2 = x[i + 1] - xi;
  }
  const double r = std::min(h1, h2);
  const double kappa = std::pow(r, 2 - a) / (2 - a);
  const double cm = 2 / (h1 * (h1 + h2)), cp = 2 / (h2 * (h1 + h2));
  diag += kappa * (cm + cp);
  if (i == 0) {
    const double s = std::pow((xi - h1) / xi, a / 2);
    left -= kappa * cm * (1 - s);
    diag -= kappa * cm * s;
  } else {
    row(at(i - 1)) -= kappa * cm;
  }
  if (i == n - 1) {
    const double ghost = closure_ == Closure::Flat ? 1.0 : std::pow(xi / (xi + h2), a / 2);
    diag -= kappa * cp * ghost;
  } else {
    row(at(i + 1)) -= kappa * cp;
  }

  // First cell (0, x_0) with the boundary shape.
  const double x0 = x[0];
  kernel_quadrature(0.0, std::min(x0, xi - r), xi, a, true, [&](double y, double w) {
    const double s = std::pow(y / x0, a / 2);
    diag += w;
    left -= w * (1 - s);
    row(0) -= w * s;
  });

  // Interior cells minus the near zone.
  for (std::size_t j = 0; j + 1 < n; ++j) {
    double lo = x[j], hi = x[j + 1];
    if (hi <= xi) hi = std::min(hi, xi - r);
    else lo = std::max(lo, xi + r);
    kernel_quadrature(lo, hi, xi, a, false, [&](double y, double w) {
      const double t = interp_weight(grid_, j, y);
      diag += w;
      row(at(j)) -= w * (1 - t);
      row(at(j + 1)) -= w * t;
    });
  }

  // y beyond L (beyond the ghost point for the last node).
  const double start = i == n - 1 ? grid_.L + r : grid_.L;
  const double d = start - xi;
  diag += std::pow(d, -a) / a;
  if (closure_ == Closure::Flat) {
    row(at(n - 1)) -= std::pow(d, -a) / a;
  } else {
    // int_start^inf (L/y)^(a/2) (y - xi)^(-1-a) dy with y = xi + d / v^(1/p), p = 3a/2.
    const double p = 1.5 * a;
    double err = 0.0;
    const double I = ts_integrator().integrate(
        [&](double v) { return std::pow(xi * std::pow(v, 1 / p) + d, -a / 2); }, 0.0, 1.0,
        quad_tol_, &err);
    if (!(err <= std::sqrt(quad_tol_) * std::abs(I))) {
      throw NumericError("FracLaplacian: far-field quadrature did not converge");
    }
    row(at(n - 1)) -= std::pow(d, -a) * std::pow(grid_.L, a / 2) / p * I;
  }

  row(at(i)) += diag;
  b_[at(i)] = left;
}

double frac_laplacian_apply(const GridFunction& u, std::size_t node, double quad_tol) {
  if (node >= u.grid.size()) throw std::domain_error("frac_laplacian_apply: node out of range");
  // The operator is assembled row by row; one row costs O(n) quadrature work.
  const FracLaplacian op(u.grid, u.alpha, u.closure, quad_tol);
  const auto i = static_cast<Eigen::Index>(node);
  return op.matrix().row(i).dot(u.values) + u.left_value * op.offset()[i];
}

double fractional_laplacian(const std::function<double(double)>& f, double x, double alpha, double tol) {
  if (!(x > 0)) throw std::domain_error("fractional_laplacian: x must be positive");
  StableParams check(alpha);
  const double fx = f(x);
  auto& ts = ts_integrator();
  // floor: roundoff in 2f(x) - f(x+s) - f(x-s) times the kernel mass of the piece
  double err = 0, l1 = 0;
  auto checked = [&](double value, double mass) {
    const double floor = 1e4 * std::numeric_limits<double>::epsilon() * std::abs(fx) * mass;
    if (!std::isfinite(value) || err > 1e3 * tol * std::max(l1, 1e-300) + floor) {
      throw NumericError("fractional_laplacian: quadrature did not converge");
    }
    return value;
  };

  // |s| < s0: -f''(x) s0^(2-a)/(2-a), f'' by Richardson-extrapolated differences.
  const double s0 = 1e-3 * x;
  auto d2 = [&](double h) { return (f(x + h) - 2 * fx + f(x - h)) / (h * h); };
  const double h = 0.1 * x;
  const double r1 = (4 * d2(h / 2) - d2(h)) / 3;
  const double r2 = (4 * d2(h / 4) - d2(h / 2)) / 3;
  const double f2 = (16 * r2 - r1) / 15;
  double total = -f2 * std::pow(s0, 2 - alpha) / (2 - alpha);

  auto sym = [&](double s) { return (2 * fx - f(x + s) - f(x - s)) * std::pow(s, -1 - alpha); };
  for (double lo = s0; lo < x / 4;) {
    const double hi = std::min(4 * lo, x / 4);
    const double piece = ts.integrate(sym, lo, hi, tol, &err, &l1);
    total += checked(piece, (std::pow(lo, -alpha) - std::pow(hi, -alpha)) / alpha);
    lo = hi;
  }
  // s in [x/4, x] written in y = x - s so the endpoint y -> 0 is resolved.
  const double mid = ts.integrate(
      [&](double y) { return (2 * fx - f(2 * x - y) - f(y)) * std::pow(x - y, -1 - alpha); }, 0.0,
      0.75 * x, tol, &err, &l1);
  total += checked(mid, (std::pow(x / 4, -alpha) - std::pow(x, -alpha)) / alpha);
  // s >= x with s = x v^(-1/alpha).
  const double tail = ts.integrate(
      [&](double v) {
        const double s = std::min(x * std::pow(v, -1 / alpha), 1e300);
        return 2 * fx - f(x + s) - f(x - s);
      },
      0.0, 1.0, tol, &err, &l1);
  total += checked(tail, 1.0) * std::pow(x, -alpha) / alpha;
  return total;
}

Eigen::VectorXd bvp_residual(const FracLaplacian& op, const Eigen::VectorXd& u) {
  return op.apply(u) + 0.5 * u.cwiseProduct(u);
}

BvpSolution solve_bvp(const StableParams& stable, const Grid& grid, const SolverConfig& cfg) {
  cfg.validate();
  const double a = stable.alpha();
  const FracLaplacian op(grid, a, Closure::PowerLaw, cfg.quad_tol);
  const auto n = static_cast<Eigen::Index>(grid.size());
  Eigen::VectorXd xs = Eigen::Map<const Eigen::VectorXd>(grid.nodes.data(), n);

  BvpSolution sol;
  Eigen::VectorXd u(n), F(n);
  double C2 = 1.0;
  for (;; C2 *= 1.25) {
    u = (C2 * (1.0 + xs.array()).pow(-a / 2)).min(1.0);
    F = bvp_residual(op, u);
    if (F.minCoeff() >= 0) break;
    if (u.minCoeff() >= 1.0) throw NumericError("solve_bvp: no supersolution start found");
  }
  sol.start_coeff = C2;
  sol.residual_history.push_back(F.cwiseAbs().maxCoeff());

  int it = 0;
  while (sol.residual_history.back() >= cfg.tol) {
    if (it == cfg.max_iters) {
      throw NonConvergence("solve_bvp: residual above tolerance after max_iters", sol.residual_history);
    }
    ++it;
    Eigen::MatrixXd J = op.matrix();
    J.diagonal() += u;
    const Eigen::VectorXd delta = J.partialPivLu().solve(F);
    Eigen::VectorXd next = u - cfg.damping * delta;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (next[k] <= 0) {
        next[k] = u[k] / 2;
        ++sol.clamped;
      } else if (next[k] > 1) {
        next[k] = 1;
        ++sol.clamped;
      }
      if (next[k] > u[k] * (1 + 1e-13)) sol.monotone = false;
    }
    u = next;
    F = bvp_residual(op, u);
    sol.residual_history.push_back(F.cwiseAbs().maxCoeff());
  }
  sol.iterations = it;
  sol.residual = F;
  sol.u.grid = grid;
  sol.u.values = u;
  sol.u.alpha = a;
  return sol;
}

double tail_constant(const GridFunction& u, double x) { return std::pow(x, u.alpha / 2) * u(x); }

ComparisonReport comparison_check(const GridFunction& candidate, SolutionKind kind, double tol,
                                  double quad_tol) {
  const FracLaplacian op(candidate.grid, candidate.alpha, candidate.closure, quad_tol);
  const Eigen::VectorXd R =
      op.apply(candidate.values, candidate.left_value) + 0.5 * candidate.values.cwiseProduct(candidate.values);
  ComparisonReport rep{kind};
  const double sign = kind == SolutionKind::Super ? -1.0 : 1.0;
  for (Eigen::Index i = 0; i < R.size(); ++i) {
    const double v = sign * R[i];
    if (v > rep.worst_violation) {
      rep.worst_violation = v;
      rep.worst_at = candidate.grid.nodes[static_cast<std::size_t>(i)];
    }
  }
  rep.boundary_ok = kind == SolutionKind::Super ? candidate.left_value >= 1.0 : candidate.left_value <= 1.0;
  rep.pass = rep.boundary_ok && rep.worst_violation <= tol;
  return rep;
}

ComparisonReport comparison_check(const std::function<double(double)>& candidate, double alpha,
                                  SolutionKind kind, const std::vector<double>& xs, double tol) {
  ComparisonReport rep{kind};
  const double sign = kind == SolutionKind::Super ? -1.0 : 1.0;
  for (const double x : xs) {
    const double U = candidate(x);
    const double v = sign * (fractional_laplacian(candidate, x, alpha) + 0.5 * U * U);
    if (v > rep.worst_violation) {
      rep.worst_violation = v;
      rep.worst_at = x;
    }
  }
  rep.boundary_ok = true;
  for (const double y : {0.0, -1e-3, -1.0, -10.0, -1e3}) {
    const double U = candidate(y);
    if (kind == SolutionKind::Super ? U < 1.0 : U > 1.0) rep.boundary_ok = false;
  }
  rep.pass = rep.boundary_ok && rep.worst_violation <= tol;
  return rep;
}

std::function<double(double)> shifted_power_candidate(double alpha, double C) {
  return [alpha, C](double y) { return y <= 0 ? 1.0 : C * std::pow(2.0 + y, -alpha / 2); };
}

double scaling_integral(double alpha, double x) {
  const auto ghat = [alpha](double y) { return y > 0 ? std::pow(y, -alpha / 2) : 0.0; };
  return fractional_laplacian(ghat, x, alpha) - std::pow(x, -1.5 * alpha) / alpha;
}

ScalingReport f_scaling_check(double alpha, double x, double lambda) {
  if (!(x > 0) || !(lambda > 0)) throw std::domain_error("f_scaling_check: x and lambda must be positive");
  ScalingReport rep{};
  rep.f_x = scaling_integral(alpha, x);
  rep.f_lx = lambda == 1.0 ? rep.f_x : scaling_integral(alpha, lambda * x);
  rep.ratio = rep.f_lx / rep.f_x;
  rep.expected = std::pow(lambda, -1.5 * alpha);
  rep.rel_error = std::abs(rep.ratio / rep.expected - 1.0);
  return rep;
}

double w_decay_ratio(double alpha, double x) {
  const auto w = [alpha](double y) { return y > 0 ? std::pow(1.0 + y, -alpha / 2) : 1.0; };
  return -alpha * std::pow(x, alpha) * fractional_laplacian(w, x, alpha);
}

}  // namespace cbss
