#include "cbss/levy_path.hpp"

#include <algorithm>
#include <limits>
#include <ostream>

namespace cbss {

namespace {
constexpr std::uint64_t kOvershootGroup = 0x0F;
constexpr std::uint64_t kIndependenceGroup = 0x1A;
}  // namespace

PathConfig PathConfig::with_default_threshold(const StableParams& params, double dt,
                                              PathScheme scheme) {
  PathConfig cfg;
  cfg.dt = dt;
  cfg.jump_threshold = std::pow(dt, 1.0 / params.alpha());
  cfg.scheme = scheme;
  return cfg;
}

void PathConfig::validate() const {
  if (!(dt > 0)) throw std::domain_error("PathConfig: dt must be positive");
  if (!(jump_threshold > 0)) throw std::domain_error("PathConfig: jump threshold must be positive");
  if (max_nodes < 2) throw std::domain_error("PathConfig: max_nodes must be at least 2");
}

double small_jump_variance(const StableParams& params, double h) {
  const double a = params.alpha();
  return 2.0 * std::pow(h, 2.0 - a) / (2.0 - a);
}

double big_jump_rate(const StableParams& params, double h) { return 2.0 * levy_tail_mass(params, h); }

PathStepper::PathStepper(const StableParams& params, const PathConfig& config)
    : params_(params), config_(config) {
  config_.validate();
  grid_scale_ = std::pow(config_.dt * params_.char_scale(), 1.0 / params_.alpha());
  jump_rate_ = big_jump_rate(params_, config_.jump_threshold);
  diffusion_sd_ = std::sqrt(small_jump_variance(params_, config_.jump_threshold));
}

SamplePath simulate_path(const StableParams& params, const PathConfig& config, double start,
                         double horizon, Philox& rng) {
  if (horizon < 0) throw std::domain_error("simulate_path: negative horizon");
  SamplePath path;
  path.times.push_back(0.0);
  path.values.push_back(start);
  if (horizon == 0.0) return path;
  const PathStepper stepper(params, config);
  stepper.run(start, horizon, rng, [&](const PathEvent& e) {
    if (static_cast<std::int64_t>(path.times.size()) >= config.max_nodes) {
      path.truncated = true;
      return false;
    }
    path.times.push_back(e.t);
    path.values.push_back(e.value);
    if (e.jump) path.big_jumps.push_back({e.t, e.value - e.left});
    return true;
  });
  return path;
}

double running_max(const SamplePath& path, double t) {
  if (path.times.empty()) throw std::domain_error("running_max: empty path");
  if (t < 0 || t > path.last_time()) throw std::domain_error("running_max: t outside the path");
  double best = path.values.front();
  auto jump = path.big_jumps.begin();
  for (std::size_t i = 1; i < path.times.size() && path.times[i] <= t; ++i) {
    best = std::max(best, path.values[i]);
    while (jump != path.big_jumps.end() && jump->time < path.times[i]) ++jump;
    if (jump != path.big_jumps.end() && jump->time == path.times[i]) {
      best = std::max(best, path.values[i] - jump->size);
    }
  }
  return best;
}

namespace {

template <class Crossed>
FirstPassageRecord first_passage(const StableParams& params, const PathConfig& config,
                                 double start, double horizon, Philox& rng, Crossed crossed) {
  FirstPassageRecord rec{horizon, start, true};
  const PathStepper stepper(params, config);
  double last = start;
  stepper.run(start, horizon, rng, [&](const PathEvent& e) {
    last = e.value;
    if (e.jump && crossed(e.left)) {
      rec = {e.t, e.left, false};
      return false;
    }
    if (crossed(e.value)) {
      rec = {e.t, e.value, false};
      return false;
    }
    return true;
  });
  if (rec.censored) rec.position = last;
  return rec;
}

}  // namespace

FirstPassageRecord first_passage_up(const StableParams& params, const PathConfig& config,
                                    double start, double A, double horizon, Philox& rng) {
  if (start >= A) return {0.0, start, false};
  return first_passage(params, config, start, horizon, rng, [A](double v) { return v >= A; });
}

FirstPassageRecord first_passage_down(const StableParams& params, const PathConfig& config,
                                      double start, double B, double horizon, Philox& rng) {
  if (start <= B) return {0.0, start, false};
  return first_passage(params, config, start, horizon, rng, [B](double v) { return v <= B; });
}

ConditionalTail overshoot_conditional_tail(const StableParams& params, const PathConfig& config,
                                           double A, double x, double eps, std::int64_t n,
                                           std::uint64_t seed, int workers) {
  if (!(A > 0) || x < A) throw std::domain_error("overshoot_conditional_tail: need x >= A > 0");
  if (!(eps > 0) || n < 1) throw std::domain_error("overshoot_conditional_tail: need eps > 0, n >= 1");
  struct Counts {
    std::int64_t events = 0;
    std::int64_t hits = 0;
  };
  const auto parts = parallel_blocks(n, 1 << 16, workers, [&](std::int64_t lo, std::int64_t hi) {
    Counts c;
    for (std::int64_t i = lo; i < hi; ++i) {
      Philox rng = substream(seed, kOvershootGroup, static_cast<std::uint64_t>(i));
      const auto rec = first_passage_up(params, config, 0.0, A, eps, rng);
      if (rec.censored) continue;
      ++c.events;
      if (rec.position > x) ++c.hits;
    }
    return c;
  });
  Counts total;
  for (const auto& c : parts) {
    total.events += c.events;
    total.hits += c.hits;
  }
  ConditionalTail out{};
  out.events = total.events;
  out.p = total.events > 0 ? static_cast<double>(total.hits) / static_cast<double>(total.events) : 0.0;
  out.ci = stats::wilson_interval(total.hits, total.events);
  out.wide_ci = total.events < 100;
  return out;
}

bool sign_at_half_jump_time(const SamplePath& pre_jump, double nu) {
  const auto it = std::upper_bound(pre_jump.times.begin(), pre_jump.times.end(), nu / 2.0);
  const auto idx = static_cast<std::size_t>(std::distance(pre_jump.times.begin(), it)) - 1;
  return pre_jump.values[idx] > 0.0;
}

IndependenceReport jump_independence_check(const StableParams& params, const PathConfig& config,
                                           JumpInterval J, std::int64_t n, std::uint64_t seed,
                                           const PreJumpFunctional& functional, int workers) {
  if (!(J.lo < J.hi) || (J.lo <= 0.0 && J.hi >= 0.0)) {
    throw std::domain_error("jump_independence_check: J must lie on one side of 0");
  }
  const double near = std::min(std::abs(J.lo), std::abs(J.hi));
  const double far = std::max(std::abs(J.lo), std::abs(J.hi));
  if (config.scheme != PathScheme::HybridJumpDiffusion || config.jump_threshold >= near) {
    throw std::domain_error("jump_independence_check: needs the hybrid scheme with h below |J|");
  }
  const double a = params.alpha();
  const double near_mass = std::pow(near, -a);
  const double far_mass = std::isinf(far) ? 0.0 : std::pow(far, -a);
  const double median = std::pow((near_mass + far_mass) / 2.0, -1.0 / a);
  const double rate_J = (near_mass - far_mass) / a;
  const double horizon = 200.0 / rate_J;
  auto in_J = [&](double s) { return s >= J.lo && s < J.hi; };

  struct Part {
    std::int64_t table[2][2] = {{0, 0}, {0, 0}};
    std::vector<double> sizes;
  };
  const PathStepper stepper(params, config);
  const auto parts = parallel_blocks(n, 1 << 12, workers, [&](std::int64_t lo, std::int64_t hi) {
    Part part;
    for (std::int64_t i = lo; i < hi; ++i) {
      Philox rng = substream(seed, kIndependenceGroup, static_cast<std::uint64_t>(i));
      SamplePath pre;
      pre.times.push_back(0.0);
      pre.values.push_back(0.0);
      double nu = -1.0, size = 0.0;
      stepper.run(0.0, horizon, rng, [&](const PathEvent& e) {
        if (e.jump && in_J(e.value - e.left)) {
          nu = e.t;
          size = e.value - e.left;
          return false;
        }
        pre.times.push_back(e.t);
        pre.values.push_back(e.value);
        if (e.jump) pre.big_jumps.push_back({e.t, e.value - e.left});
        return true;
      });
      if (nu < 0) continue;
      const int row = functional(pre, nu) ? 1 : 0;
      const int col = std::abs(size) >= median ? 1 : 0;
      ++part.table[row][col];
      part.sizes.push_back(std::abs(size));
    }
    return part;
  });

  IndependenceReport rep{};
  std::vector<double> sizes;
  for (const auto& p : parts) {
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) rep.table[r][c] += p.table[r][c];
    sizes.insert(sizes.end(), p.sizes.begin(), p.sizes.end());
  }
  rep.events = static_cast<std::int64_t>(sizes.size());
  const auto chi = stats::chi_square_2x2(rep.table);
  rep.chi_square = chi.statistic;
  rep.p_value = chi.p_value;
  rep.insufficient = rep.events == 0;
  for (int r = 0; r < 2 && !rep.insufficient; ++r) {
    for (int c = 0; c < 2; ++c) {
      const double rows = static_cast<double>(rep.table[r][0] + rep.table[r][1]);
      const double cols = static_cast<double>(rep.table[0][c] + rep.table[1][c]);
      // An empty row is a constant functional: independence is trivial.
      if (rows > 0 && rows * cols / static_cast<double>(rep.events) < 5.0) rep.insufficient = true;
    }
  }
  rep.size_ks_p = rep.events > 0
                      ? stats::ks_one_sample(sizes, [&](double s) {
                          if (s <= near) return 0.0;
                          return (near_mass - std::pow(s, -a)) / (near_mass - far_mass);
                        }).p_value
                      : 0.0;
  return rep;
}

void write_path_csv(const SamplePath& path, std::ostream& values, std::ostream& jumps) {
  values << "time,value\n";
  values.precision(17);
  for (std::size_t i = 0; i < path.times.size(); ++i) values << path.times[i] << ',' << path.values[i] << '\n';
  jumps << "time,size\n";
  jumps.precision(17);
  for (const auto& j : path.big_jumps) jumps << j.time << ',' << j.size << '\n';
}

}  // namespace cbss
