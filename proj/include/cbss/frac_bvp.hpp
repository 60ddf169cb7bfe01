#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "cbss/stable_core.hpp"

namespace cbss {

enum class Grading { Uniform, Geometric };

/// Mesh on (0, L]: first node > 0, last node = L.
struct Grid {
  std::vector<double> nodes;
  double L = 0;
  Grading grading = Grading::Geometric;
  double ratio = 1.0;  ///< x_{i+1}/x_i for geometric grids

  static Grid uniform(double L, int n);
  static Grid geometric(double x_min, double L, int n);

  /// Geometric: ratio - 1 halved, same x_min and L.  Uniform: twice the nodes.
  Grid refined() const;

  std::size_t size() const noexcept { return nodes.size(); }
  void validate() const;
};

/// Extension beyond L.  PowerLaw continues as coeff * y^(-alpha/2) with the
/// coefficient matched at L; Flat holds the last value.
enum class Closure { PowerLaw, Flat };

/// Grid values plus the rule that extends them to all of R: left_value on
/// y <= 0, 1 - (1 - u_1)(y/x_1)^(alpha/2) on the first cell (with left_value
/// in place of 1), log-linear between nodes (linear on uniform grids), and
/// the closure beyond L.
struct GridFunction {
  Grid grid;
  Eigen::VectorXd values;
  double alpha = 1.0;
  double left_value = 1.0;
  Closure closure = Closure::PowerLaw;

  double far_field_exponent() const noexcept { return closure == Closure::PowerLaw ? alpha / 2 : 0.0; }
  double far_field_coeff() const;
  double operator()(double y) const;
};

struct SolverConfig {
  double damping = 1.0;
  double tol = 1e-8;
  int max_iters = 60;
  double quad_tol = 1e-10;

  void validate() const;
};

/// Dense discretization of the fractional Laplacian
///   (-Delta)^(alpha/2) u(x) = int (u(x) - u(y)) |x - y|^(-1-alpha) dy
/// at the grid nodes: (-Delta) u = A u + left_value * b.
///
/// A has positive diagonal, non-positive off-diagonal entries and positive
/// row sums (an M-matrix).
class FracLaplacian {
 public:
  FracLaplacian(const Grid& grid, double alpha, Closure closure = Closure::PowerLaw,
                double quad_tol = 1e-10);

  const Eigen::MatrixXd& matrix() const noexcept { return A_; }
  const Eigen::VectorXd& offset() const noexcept { return b_; }
  const Grid& grid() const noexcept { return grid_; }
  double alpha() const noexcept { return alpha_; }
  Closure closure() const noexcept { return closure_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& u, double left_value = 1.0) const {
    return A_ * u + left_value * b_;
  }

 private:
  Grid grid_;
  double alpha_;
  Closure closure_;
  double quad_tol_;
  Eigen::MatrixXd A_;
  Eigen::VectorXd b_;

  void assemble_row(std::size_t i);
};

/// One row of the discrete operator applied to u at node `node`.
double frac_laplacian_apply(const GridFunction& u, std::size_t node, double quad_tol = 1e-10);

/// Fractional Laplacian of a callable at x > 0.  f may have kinks or
/// integrable singularities at 0 and must be smooth near x.
double fractional_laplacian(const std::function<double(double)>& f, double x, double alpha,
                            double tol = 1e-11);

class NonConvergence : public NumericError {
 public:
  NonConvergence(const std::string& what, std::vector<double> history)
      : NumericError(what), residual_history(std::move(history)) {}
  std::vector<double> residual_history;
};

struct BvpSolution {
  GridFunction u;
  Eigen::VectorXd residual;
  std::vector<double> residual_history;  ///< sup-norm per iterate, starting point first
  int iterations = 0;
  bool monotone = true;  ///< iterates never increased at any node
  int clamped = 0;       ///< node updates pulled back into (0, 1]
  double start_coeff = 1.0;  ///< C2 of the starting supersolution
};

/// Residual (-Delta)u + u^2/2 at the nodes.
Eigen::VectorXd bvp_residual(const FracLaplacian& op, const Eigen::VectorXd& u);

/// Damped Newton from the supersolution min(1, C2 (1+x)^(-alpha/2)), C2
/// enlarged until the discrete residual is non-negative.
BvpSolution solve_bvp(const StableParams& stable, const Grid& grid, const SolverConfig& cfg = {});

/// x^(alpha/2) u(x) via the grid function's evaluation rule.
double tail_constant(const GridFunction& u, double x);

enum class SolutionKind { Super, Sub };

struct ComparisonReport {
  SolutionKind kind;
  bool pass = false;
  double worst_violation = 0;  ///< largest residual of the wrong sign (0 if none)
  double worst_at = 0;
  bool boundary_ok = false;    ///< U >= 1 (Super) or U <= 1 (Sub) on x <= 0
};

/// Residual sign check on the grid for a grid function; `tol` absorbs
/// rounding and solver residual.
ComparisonReport comparison_check(const GridFunction& candidate, SolutionKind kind, double tol = 0.0,
                                  double quad_tol = 1e-10);

/// Residual sign check for a callable candidate at the given points.
ComparisonReport comparison_check(const std::function<double(double)>& candidate, double alpha,
                                  SolutionKind kind, const std::vector<double>& xs, double tol = 0.0);

/// C * (2 + x)^(-alpha/2) on x > 0, 1 on x <= 0.
std::function<double(double)> shifted_power_candidate(double alpha, double C);

/// F(x) = int_0^inf (x^(-alpha/2) - y^(-alpha/2)) |x - y|^(-1-alpha) dy.
double scaling_integral(double alpha, double x);

struct ScalingReport {
  double f_x;
  double f_lx;
  double ratio;
  double expected;  ///< lambda^(-3 alpha / 2)
  double rel_error;
};

ScalingReport f_scaling_check(double alpha, double x, double lambda);

/// alpha x^alpha (-(-Delta) w)(x) for w(y) = (1+y)^(-alpha/2) on y > 0, 1 on y <= 0.
double w_decay_ratio(double alpha, double x);

}  // namespace cbss
