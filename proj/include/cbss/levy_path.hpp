#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "cbss/stable_core.hpp"
#include "cbss/stats.hpp"

namespace cbss {

enum class PathScheme {
  GridIncrements,      ///< exact stable(dt) increments on a fixed grid
  HybridJumpDiffusion  ///< exact jumps above h, Brownian stand-in for the rest
};

struct PathConfig {
  double dt = 0.01;
  double jump_threshold = 0.1;  ///< h
  PathScheme scheme = PathScheme::HybridJumpDiffusion;
  std::int64_t max_nodes = 20'000'000;

  /// h = dt^(1/alpha), which makes jump and grid resolutions commensurate.
  static PathConfig with_default_threshold(const StableParams& params, double dt,
                                           PathScheme scheme = PathScheme::HybridJumpDiffusion);
  void validate() const;
};

/// Variance rate of the jumps smaller than h: 2 h^(2-alpha) / (2-alpha).
double small_jump_variance(const StableParams& params, double h);

/// Rate of jumps with |size| > h: 2 h^(-alpha) / alpha.
double big_jump_rate(const StableParams& params, double h);

/// One skeleton node emitted by PathStepper.  At a big jump `left` is the
/// left limit and `value` the post-jump position; elsewhere they coincide.
struct PathEvent {
  double t;
  double left;
  double value;
  bool jump;
};

/// Streams a sample path as skeleton nodes without storing it.
class PathStepper {
 public:
  PathStepper(const StableParams& params, const PathConfig& config);

  const StableParams& params() const noexcept { return params_; }
  const PathConfig& config() const noexcept { return config_; }

  /// Simulates on (0, horizon] from `start`, calling `visit(const PathEvent&)`
  /// for every node; stops early when `visit` returns false.  Returns the
  /// time of the last emitted node.
  template <class Rng, class Visit>
  double run(double start, double horizon, Rng& rng, Visit&& visit) const;

 private:
  StableParams params_;
  PathConfig config_;
  double grid_scale_;   // (c dt)^(1/alpha)
  double jump_rate_;    // two-sided rate of |y| > h
  double diffusion_sd_; // sqrt(sigma_h^2)
};

struct Jump {
  double time;
  double size;
};

struct SamplePath {
  std::vector<double> times;
  std::vector<double> values;
  std::vector<Jump> big_jumps;
  bool truncated = false;  ///< node cap reached before the horizon

  double last_time() const { return times.back(); }
};

struct FirstPassageRecord {
  double tau;
  double position;
  bool censored;
};

SamplePath simulate_path(const StableParams& params, const PathConfig& config, double start,
                         double horizon, Philox& rng);

/// Skeleton maximum on [0, t], including left limits at big jumps.
double running_max(const SamplePath& path, double t);

/// First skeleton time with X >= A, with overshoot; censored at the horizon.
FirstPassageRecord first_passage_up(const StableParams& params, const PathConfig& config,
                                    double start, double A, double horizon, Philox& rng);

/// First skeleton time with X <= B.
FirstPassageRecord first_passage_down(const StableParams& params, const PathConfig& config,
                                      double start, double B, double horizon, Philox& rng);

struct ConditionalTail {
  double p;
  std::int64_t events;  ///< paths with tau_A < eps
  stats::Interval ci;
  bool wide_ci;         ///< fewer than 100 conditioning events
};

/// Monte Carlo P(X_{tau_A} > x | tau_A < eps) from X_0 = 0.
ConditionalTail overshoot_conditional_tail(const StableParams& params, const PathConfig& config,
                                           double A, double x, double eps, std::int64_t n,
                                           std::uint64_t seed, int workers = 1);

/// Jump-size interval J = [lo, hi) lying entirely on one side of 0.
struct JumpInterval {
  double lo;
  double hi;
};

/// Binary functional of the path strictly before the first J-jump at time nu.
using PreJumpFunctional = std::function<bool(const SamplePath& pre_jump, double nu)>;

/// Sign of X at nu/2 (skeleton value at the last node not after nu/2).
bool sign_at_half_jump_time(const SamplePath& pre_jump, double nu);

struct IndependenceReport {
  double chi_square;
  double p_value;
  std::int64_t events;
  std::int64_t table[2][2];
  double size_ks_p;        ///< KS p-value of J-jump sizes against lambda|_J / lambda(J)
  bool insufficient;       ///< some expected cell count below 5
};

/// Chi-square test of independence between the first J-jump's size (split
/// at the median of lambda|_J) and a functional of the path before it.
IndependenceReport jump_independence_check(const StableParams& params, const PathConfig& config,
                                           JumpInterval J, std::int64_t n, std::uint64_t seed,
                                           const PreJumpFunctional& functional = sign_at_half_jump_time,
                                           int workers = 1);

/// CSV dump: "time,value" rows; the jump list goes to a second stream as
/// "time,size" rows.
void write_path_csv(const SamplePath& path, std::ostream& values, std::ostream& jumps);

// --- implementation -------------------------------------------------------

template <class Rng, class Visit>
double PathStepper::run(double start, double horizon, Rng& rng, Visit&& visit) const {
  const double dt = config_.dt;
  const double alpha = params_.alpha();
  double t = 0.0;
  double x = start;
  if (!(horizon > 0)) return 0.0;

  if (config_.scheme == PathScheme::GridIncrements) {
    while (t < horizon) {
      double step = dt;
      double scale = grid_scale_;
      if (t + dt >= horizon) {
        step = horizon - t;
        scale = std::pow(step * params_.char_scale(), 1.0 / alpha);
      }
      x += scale * standard_stable_variate(alpha, rng);
      t = (step == dt) ? t + dt : horizon;
      if (!visit(PathEvent{t, x, x, false})) return t;
    }
    return t;
  }

  double next_jump = exponential(rng, jump_rate_);
  while (t < horizon) {
    const double grid_next = std::min(t + dt, horizon);
    if (next_jump < grid_next) {
      x += diffusion_sd_ * std::sqrt(next_jump - t) * standard_normal(rng);
      const double left = x;
      const double magnitude = config_.jump_threshold * std::pow(uniform01(rng), -1.0 / alpha);
      x += coin(rng) ? magnitude : -magnitude;
      t = next_jump;
      next_jump = t + exponential(rng, jump_rate_);
      if (!visit(PathEvent{t, left, x, true})) return t;
    } else {
      x += diffusion_sd_ * std::sqrt(grid_next - t) * standard_normal(rng);
      t = grid_next;
      if (!visit(PathEvent{t, x, x, false})) return t;
    }
  }
  return t;
}

}  // namespace cbss
