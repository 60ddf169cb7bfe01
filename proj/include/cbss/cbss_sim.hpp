#pragma once

#include <cstdint>
#include <vector>

#include "cbss/levy_path.hpp"
#include "cbss/stable_core.hpp"

namespace cbss {

/// Critical branching symmetric stable process: the rate-1 binary skeleton
/// with independent stable motions started at each particle's birth point.
struct CbssConfig {
  StableParams stable{1.0};
  PathConfig path;
  std::int64_t progeny_cap = 10'000'000;
  double time_cap = 1e9;
  std::uint64_t seed = 1;
  int workers = 1;

  void validate() const;
};

enum class Side { Upper, Lower };

struct RealizationOptions {
  bool early_exit = true;  ///< stop at the first skeleton value beyond the level
  Side side = Side::Upper; ///< Lower tracks the event {min <= -x}
};

struct RealizationResult {
  bool crossed = false;
  double max_lower = 0.0;  ///< skeleton maximum seen (a lower bound on M)
  double min_upper = 0.0;  ///< skeleton minimum seen
  bool censored = false;
  std::int64_t progeny_used = 0;
  std::int64_t wall_events = 0;  ///< skeleton nodes simulated
};

RealizationResult simulate_realization(const CbssConfig& config, double x, Philox& rng,
                                       const RealizationOptions& options = {});

struct TailEstimate {
  double x = 0;
  std::int64_t n = 0;
  std::int64_t hits = 0;
  std::int64_t censored_count = 0;
  double p_hat = 0;
  double ci_low = 0;
  double ci_high = 0;
  double p_hat_bracket_high = 0;  ///< censored runs counted as hits
  std::int64_t wall_events = 0;

  /// More than 1% of the runs were censored.
  bool flagged() const noexcept { return censored_count * 100 > n; }
};

/// P{M >= x} for each x from n independent realizations per level.
/// Realization i at level j uses its own substream, so results do not depend
/// on config.workers.
std::vector<TailEstimate> estimate_tail(const CbssConfig& config, const std::vector<double>& xs,
                                        std::int64_t n, const RealizationOptions& options = {});

/// u(x) = 1 for x <= 0; the estimator proper needs x > 0.
TailEstimate tail_at_nonpositive(double x, std::int64_t n);

struct OccupationEstimate {
  double t;
  double x;
  std::int64_t n;
  double mean;
  double std_err;
  std::int64_t capped = 0;  ///< realizations that hit the progeny cap before t
};

/// E[number of particles at positions >= x at time t]; x = -inf counts all.
OccupationEstimate occupation_count(const CbssConfig& config, double t, double x, std::int64_t n);

}  // namespace cbss
