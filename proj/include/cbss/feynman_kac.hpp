#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cbss/frac_bvp.hpp"
#include "cbss/levy_path.hpp"

namespace cbss {

/// A candidate u on all of R: 1 on x <= 0.
class CandidateU {
 public:
  static CandidateU from_grid(GridFunction g);
  /// min(1, c x^(-alpha/2)) on x > 0.
  static CandidateU ansatz(double alpha, double c);

  /// factor * u on x > 0; 1 on x <= 0 is kept.
  CandidateU scaled(double factor) const;

  double operator()(double x) const { return x <= 0 ? 1.0 : fn_(x); }
  const std::string& label() const noexcept { return label_; }

 private:
  CandidateU(std::function<double(double)> fn, std::string label)
      : fn_(std::move(fn)), label_(std::move(label)) {}
  std::function<double(double)> fn_;
  std::string label_;
};

/// Trapezoidal integral of u along the skeleton up to t_stop, using the left
/// limit at each jump node.
double path_integral(const SamplePath& path, const CandidateU& u, double t_stop);

struct FKOptions {
  double dt_rel = 2e-3;        ///< dt = dt_rel * x^alpha, h = dt^(1/alpha)
  double horizon_mult = 50.0;  ///< horizon = horizon_mult * x^alpha
  PathScheme scheme = PathScheme::HybridJumpDiffusion;
  std::uint64_t seed = 1;
  std::uint64_t group = 0;     ///< substream group for this estimate
  int workers = 1;
};

/// Path config used for a start point x.
PathConfig fk_path_config(const StableParams& stable, double x, const FKOptions& opt);

struct FKEstimate {
  double x = 0;
  std::int64_t n = 0;
  double mean = 0;
  double std_err = 0;
  std::int64_t censored_count = 0;  ///< horizon reached before tau_0
  double bracket_high = 0;          ///< censored paths counted at exp(-Psi_horizon / 2)
  /// Censored mass, bracket_high - mean, above 0.1%.
  bool flagged() const noexcept { return bracket_high - mean > 1e-3; }
};

/// E^x exp(-1/2 int_0^tau u(X_s) ds), tau the first passage below 0.
FKEstimate fk_estimate(double x, const CandidateU& u, const StableParams& stable, std::int64_t n,
                       const FKOptions& opt = {});

struct FixedPointResult {
  GridFunction u;                 ///< smoothed final iterate
  std::vector<double> raw;        ///< last raw FK image at the nodes
  std::vector<double> std_err;    ///< per-node standard errors of the last image
  std::vector<double> distances;  ///< sup distance between successive iterates
  std::vector<double> noise;      ///< matching MC noise levels
  int iterations = 0;
  bool converged = false;         ///< distance < 2 * noise reached
};

/// Iterates u <- (u + iso(FK image of u)) / 2 at the grid nodes, where iso is a
/// weighted non-increasing regression.  Stops early once the successive sup
/// distance falls below twice the MC noise; throws NumericError when the
/// distance grows three times in a row.
FixedPointResult fk_fixed_point(const CandidateU& initial, const StableParams& stable, const Grid& grid,
                                int iters, std::int64_t n_per_node, const FKOptions& opt = {});

/// E exp(-theta nu) = rate / (rate + theta) for nu ~ Exp(rate).
double exp_jump_expectation(double rate, double theta);

struct MartingaleReport {
  double u0;
  std::vector<double> t;
  std::vector<double> mean;
  std::vector<double> std_err;
  double max_dev_se = 0;  ///< max over t of |mean - u0| / std_err
};

/// E Z_{t ^ tau} for Z_t = u(X_t) exp(-1/2 int_0^t u(X_s) ds), all t read off one path.
MartingaleReport martingale_check(const CandidateU& u, const StableParams& stable, double x,
                                  std::vector<double> t_list, std::int64_t n, const FKOptions& opt = {});

/// Fixed point of u = L / (L + u/2) with L = levy_tail_mass(x (1 - 2 delta)).
double asymptotic_fixed_point(const StableParams& stable, double x, double delta);

}  // namespace cbss
