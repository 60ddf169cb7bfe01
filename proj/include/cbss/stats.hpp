#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace cbss::stats {

/// Welford accumulator for mean and standard error.
class RunningStats {
 public:
  void push(double x) noexcept {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  /// Order-dependent merge (Chan et al.); callers merge in a fixed order.
  void merge(const RunningStats& o) noexcept;

  std::int64_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double std_err() const noexcept {
    return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  }

 private:
  std::int64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct Interval {
  double low;
  double high;
};

/// Wilson score interval for a binomial proportion.
Interval wilson_interval(std::int64_t hits, std::int64_t n, double z = 1.959963984540054);

/// Standard error of a binomial proportion estimate (plug-in).
inline double binomial_se(double p, std::int64_t n) {
  return n > 0 ? std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(n)) : 0.0;
}

struct TestResult {
  double statistic;
  double p_value;
};

/// Asymptotic Kolmogorov survival function Q(lambda) = P(K > lambda).
double kolmogorov_q(double lambda);

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
TestResult ks_one_sample(std::vector<double> sample, const std::function<double(double)>& cdf);

/// Two-sample Kolmogorov-Smirnov test.
TestResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Pearson chi-square test of independence on a 2x2 table (no continuity
/// correction).  A table with an empty row or column is degenerate and
/// reports p = 1.
TestResult chi_square_2x2(const std::int64_t table[2][2]);

/// Kolmogorov-Smirnov test that inter-arrival gaps are exponential(rate).
TestResult ks_exponential(std::vector<double> gaps, double rate);

/// Weighted least-squares fit y = a + b x.
struct LinearFit {
  double intercept;
  double slope;
  double slope_se;
};
LinearFit fit_line(std::span<const double> x, std::span<const double> y,
                   std::span<const double> weights = {});

/// Weighted pool-adjacent-violators fit constrained to be non-increasing.
std::vector<double> isotonic_nonincreasing(std::span<const double> values,
                                           std::span<const double> weights);

/// Sup-distance between `values` and their unweighted non-increasing
/// isotonic fit; 0 exactly when the sequence is non-increasing.
double isotonic_violation(std::span<const double> values);

}  // namespace cbss::stats
