#include "cbss/stable_core.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <limits>

namespace cbss {

StableParams::StableParams(double alpha) : alpha_(alpha), char_scale_(0.0) {
  if (!(alpha > 0.0 && alpha < 2.0)) {
    throw std::domain_error("StableParams: alpha must lie in (0, 2), got " + std::to_string(alpha));
  }
  char_scale_ = char_exponent_scale(alpha);
}

double levy_tail_mass(const StableParams& params, double A) {
  if (!(A > 0)) throw std::domain_error("levy_tail_mass: A must be positive");
  if (std::isinf(A)) return 0.0;
  return std::pow(A, -params.alpha()) / params.alpha();
}

double char_exponent_scale(double alpha) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw std::domain_error("char_exponent_scale: alpha outside (0, 2)");
  if (alpha == 1.0) return std::numbers::pi;
  // The closed form is 0/0 at alpha = 1; near it use the expansion of
  // cos(pi a / 2) / (1 - a) to stay continuous.
  const double eps = 1.0 - alpha;
  if (std::abs(eps) < 1e-6) {
    const double h = std::numbers::pi / 2.0;
    const double ratio = h * (1.0 - h * h * eps * eps / 6.0);  // sin(h eps) / eps
    return 2.0 * boost::math::tgamma(2.0 - alpha) * ratio / alpha;
  }
  return 2.0 * boost::math::tgamma(2.0 - alpha) * std::cos(std::numbers::pi * alpha / 2.0) /
         (alpha * eps);
}

namespace {

// P{S >= z} = (1/pi) sum_k (-1)^(k+1) Gamma(k alpha) sin(k pi alpha / 2) z^(-k alpha) / k!,
// convergent for alpha < 1 and asymptotic above.
double series_tail(double alpha, double z) {
  const double za = std::pow(z, -alpha);
  double sum = 0.0, power = 1.0, log_fact = 0.0, prev = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 80; ++k) {
    power *= za;
    log_fact += std::log(static_cast<double>(k));
    const double mag = std::exp(boost::math::lgamma(k * alpha) - log_fact) * power;
    if (mag > prev) break;
    sum += (k % 2 ? 1.0 : -1.0) * mag * std::sin(k * std::numbers::pi * alpha / 2.0);
    if (mag < 1e-18 * std::abs(sum)) break;
    prev = mag;
  }
  return sum / std::numbers::pi;
}

// P{S >= z} for S with characteristic function exp(-|theta|^alpha), z > 0:
// 1/2 - (1/pi) int_0^inf sin(theta z) exp(-theta^alpha) / theta dtheta.
double standard_tail(double alpha, double z) {
  if (std::pow(z, alpha) >= (alpha < 1.0 ? 1.0 : 1e4)) return series_tail(alpha, z);
  using Gauss = boost::math::quadrature::gauss<double, 20>;
  const double theta_max = std::pow(42.0, 1.0 / alpha);  // exp(-42) < 1e-18
  const double panel = std::min(std::numbers::pi / z, 1.0);
  const double panels = std::ceil(theta_max / panel);
  if (panels > 4e6) {
    throw NumericError("stable_tail: Fourier inversion needs " + std::to_string(panels) +
                       " panels (alpha=" + std::to_string(alpha) + ", z=" + std::to_string(z) + ")");
  }
  auto integrand = [alpha, z](double theta) {
    return std::sin(theta * z) / theta * std::exp(-std::pow(theta, alpha));
  };
  // exp(-theta^alpha) has a cusp at 0: the first panel is split geometrically.
  double sum = 0.0;
  for (int j = 0; j < 60; ++j) sum += Gauss::integrate(integrand, panel * std::ldexp(1.0, -j - 1), panel * std::ldexp(1.0, -j));
  const auto count = static_cast<long>(panels);
  for (long k = 1; k < count; ++k) {
    sum += Gauss::integrate(integrand, k * panel, (k + 1) * panel);
  }
  return 0.5 - sum / std::numbers::pi;
}

}  // namespace

double stable_tail(const StableParams& params, double t, double x) {
  if (!(t > 0)) throw std::domain_error("stable_tail: t must be positive");
  if (x == 0.0) return 0.5;
  if (std::isinf(x)) return x > 0 ? 0.0 : 1.0;
  const double alpha = params.alpha();
  if (alpha == 1.0) {
    // Cauchy with scale t * pi.
    return 0.5 - std::atan(x / (t * std::numbers::pi)) / std::numbers::pi;
  }
  const double z = x / std::pow(t * params.char_scale(), 1.0 / alpha);
  if (z < 0) return 1.0 - standard_tail(alpha, -z);
  return standard_tail(alpha, z);
}

}  // namespace cbss
