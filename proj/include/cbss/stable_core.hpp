#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "cbss/rng.hpp"

namespace cbss {

/// Raised when a numerical procedure fails to reach its tolerance.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Symmetric alpha-stable law normalized by its Levy measure |y|^(-1-alpha) dy.
///
/// The characteristic function is exp(-t c |theta|^alpha) with
/// c = char_scale() = 2 * int_0^inf (1 - cos u) u^(-1-alpha) du.
class StableParams {
 public:
  explicit StableParams(double alpha);

  double alpha() const noexcept { return alpha_; }
  double char_scale() const noexcept { return char_scale_; }

  /// Fourier inversion loses accuracy as alpha approaches 0 or 2.
  bool reduced_accuracy() const noexcept { return alpha_ < 0.2 || alpha_ > 1.9; }

 private:
  double alpha_;
  double char_scale_;
};

/// lambda[A, inf) = A^(-alpha) / alpha, the one-sided Levy tail mass.
double levy_tail_mass(const StableParams& params, double A);

/// 2 Gamma(2-alpha) cos(pi alpha/2) / (alpha (1-alpha)); pi at alpha = 1.
double char_exponent_scale(double alpha);

struct StableSample {
  double value;
  double t;
};

/// Chambers-Mallows-Stuck draw with characteristic function exp(-|theta|^alpha).
template <class Rng>
double standard_stable_variate(double alpha, Rng& rng) {
  const double v = std::numbers::pi * (uniform01(rng) - 0.5);
  if (alpha == 1.0) return std::tan(v);
  const double w = exponential(rng);
  const double av = alpha * v;
  return std::sin(av) / std::pow(std::cos(v), 1.0 / alpha) *
         std::pow(std::cos(v - av) / w, (1.0 - alpha) / alpha);
}

/// X_t for the Levy-measure normalization: (t c)^(1/alpha) times a standard draw.
template <class Rng>
StableSample sample_stable(const StableParams& params, double t, Rng& rng) {
  if (!(t > 0)) throw std::domain_error("sample_stable: t must be positive");
  const double scale = std::pow(t * params.char_scale(), 1.0 / params.alpha());
  return {scale * standard_stable_variate(params.alpha(), rng), t};
}

/// P{X_t >= x} by Fourier inversion of the characteristic function.
/// Absolute accuracy is about 1e-10 away from the reduced-accuracy range.
double stable_tail(const StableParams& params, double t, double x);

}  // namespace cbss
