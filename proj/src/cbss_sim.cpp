#include "cbss/cbss_sim.hpp"

#include <functional>
#include <limits>
#include <queue>

#include "cbss/stats.hpp"

namespace cbss {

namespace {

constexpr std::uint64_t kTailGroup = 0x7A11;
constexpr std::uint64_t kLowerTailGroup = 0x7A12;
constexpr std::uint64_t kOccupationGroup = 0x0CC0;
constexpr std::int64_t kBlock = 4096;

struct Particle {
  double birth;
  double position;
  std::int64_t id;
  bool operator>(const Particle& o) const {
    return birth > o.birth || (birth == o.birth && id > o.id);
  }
};
using ParticleQueue = std::priority_queue<Particle, std::vector<Particle>, std::greater<>>;

}  // namespace

void CbssConfig::validate() const {
  path.validate();
  if (progeny_cap < 1 || !(time_cap > 0)) throw std::domain_error("CbssConfig: caps must be positive");
  if (workers < 1) throw std::domain_error("CbssConfig: workers must be >= 1");
}

RealizationResult simulate_realization(const CbssConfig& config, double x, Philox& rng,
                                       const RealizationOptions& options) {
  if (!(x > 0)) throw std::domain_error("simulate_realization: level must be positive");
  const PathStepper stepper(config.stable, config.path);
  const bool upper = options.side == Side::Upper;
  auto beyond = [&](double v) { return upper ? v >= x : v <= -x; };

  RealizationResult res;
  ParticleQueue queue;
  queue.push({0.0, 0.0, 0});
  std::int64_t next_id = 1;

  while (!queue.empty()) {
    const Particle p = queue.top();
    if (res.progeny_used >= config.progeny_cap || p.birth > config.time_cap) {
      res.censored = !res.crossed;
      break;
    }
    queue.pop();
    ++res.progeny_used;
    const double lifetime = exponential(rng);
    const double span = std::min(lifetime, config.time_cap - p.birth);
    double end = p.position;
    bool stop = false;
    stepper.run(p.position, span, rng, [&](const PathEvent& e) {
      ++res.wall_events;
      end = e.value;
      res.max_lower = std::max({res.max_lower, e.left, e.value});
      res.min_upper = std::min({res.min_upper, e.left, e.value});
      if (!res.crossed && (beyond(e.left) || beyond(e.value))) {
        res.crossed = true;
        if (options.early_exit) {
          stop = true;
          return false;
        }
      }
      return true;
    });
    if (stop) return res;
    if (span < lifetime) {
      // Alive at the time cap: its future is unknown.
      res.censored = !res.crossed;
      break;
    }
    if (coin(rng)) {
      queue.push({p.birth + lifetime, end, next_id++});
      queue.push({p.birth + lifetime, end, next_id++});
    }
  }
  return res;
}

std::vector<TailEstimate> estimate_tail(const CbssConfig& config, const std::vector<double>& xs,
                                        std::int64_t n, const RealizationOptions& options) {
  config.validate();
  if (n < 1) throw std::domain_error("estimate_tail: n must be >= 1");
  std::vector<TailEstimate> out;
  out.reserve(xs.size());
  const std::uint64_t group = options.side == Side::Upper ? kTailGroup : kLowerTailGroup;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    const double x = xs[j];
    if (x <= 0) {
      out.push_back(tail_at_nonpositive(x, n));
      continue;
    }
    struct Counts {
      std::int64_t hits = 0, censored = 0, events = 0;
    };
    const auto parts = parallel_blocks(n, kBlock, config.workers, [&](std::int64_t lo, std::int64_t hi) {
      Counts c;
      for (std::int64_t i = lo; i < hi; ++i) {
        Philox rng = substream(config.seed, group + (j << 20), static_cast<std::uint64_t>(i));
        const auto r = simulate_realization(config, x, rng, options);
        c.hits += r.crossed;
        c.censored += r.censored;
        c.events += r.wall_events;
      }
      return c;
    });
    TailEstimate est;
    est.x = x;
    est.n = n;
    for (const auto& c : parts) {
      est.hits += c.hits;
      est.censored_count += c.censored;
      est.wall_events += c.events;
    }
    const double nn = static_cast<double>(n);
    est.p_hat = static_cast<double>(est.hits) / nn;
    const auto ci = stats::wilson_interval(est.hits, n);
    est.ci_low = ci.low;
    est.ci_high = ci.high;
    est.p_hat_bracket_high = static_cast<double>(est.hits + est.censored_count) / nn;
    out.push_back(est);
  }
  return out;
}

TailEstimate tail_at_nonpositive(double x, std::int64_t n) {
  TailEstimate est;
  est.x = x;
  est.n = n;
  est.hits = n;
  est.p_hat = est.ci_low = est.ci_high = est.p_hat_bracket_high = 1.0;
  return est;
}

OccupationEstimate occupation_count(const CbssConfig& config, double t, double x, std::int64_t n) {
  config.validate();
  if (!(t > 0)) throw std::domain_error("occupation_count: t must be positive");
  const PathStepper stepper(config.stable, config.path);
  struct Part {
    stats::RunningStats counts;
    std::int64_t capped = 0;
  };
  const auto parts = parallel_blocks(n, kBlock, config.workers, [&](std::int64_t lo, std::int64_t hi) {
    Part part;
    for (std::int64_t i = lo; i < hi; ++i) {
      Philox rng = substream(config.seed, kOccupationGroup, static_cast<std::uint64_t>(i));
      ParticleQueue queue;
      queue.push({0.0, 0.0, 0});
      std::int64_t next_id = 1, used = 0, count = 0;
      while (!queue.empty()) {
        const Particle p = queue.top();
        queue.pop();
        if (++used > config.progeny_cap) {
          ++part.capped;
          break;
        }
        const double lifetime = exponential(rng);
        const double span = std::min(lifetime, t - p.birth);
        double end = p.position;
        stepper.run(p.position, span, rng, [&](const PathEvent& e) {
          end = e.value;
          return true;
        });
        if (lifetime > t - p.birth) {
          if (end >= x) ++count;
          continue;
        }
        if (coin(rng)) {
          queue.push({p.birth + lifetime, end, next_id++});
          queue.push({p.birth + lifetime, end, next_id++});
        }
      }
      part.counts.push(static_cast<double>(count));
    }
    return part;
  });
  OccupationEstimate est{t, x, n, 0.0, 0.0, 0};
  stats::RunningStats all;
  for (const auto& p : parts) {
    all.merge(p.counts);
    est.capped += p.capped;
  }
  est.mean = all.mean();
  est.std_err = all.std_err();
  return est;
}

}  // namespace cbss
