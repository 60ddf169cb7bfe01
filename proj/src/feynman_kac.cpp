#include "cbss/feynman_kac.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "cbss/stats.hpp"

namespace cbss {

namespace {

// exp(-40) is far below any MC resolution used here.
constexpr double kPsiCutoff = 80.0;

struct WalkEnd {
  double psi = 0;
  bool crossed = false;
  bool cut = false;
};

/// Streams a path from x accumulating Psi until it enters (-inf, 0], Psi
/// passes `psi_cut`, or the horizon ends.  at_time(t, Z) is called for
/// every target time (ascending) with Z = u(X_t) e^(-Psi_t/2), or
/// e^(-Psi_tau/2) once tau <= t.
template <class AtTime>
WalkEnd walk(const PathStepper& stepper, const CandidateU& u, double x, double horizon, double psi_cut,
             Philox& rng, const std::vector<double>& targets, AtTime&& at_time) {
  WalkEnd end;
  double pt = 0, pv = x, pu = u(x);
  std::size_t next = 0;
  while (next < targets.size() && targets[next] <= 0) at_time(next++, pu);
  stepper.run(x, horizon, rng, [&](const PathEvent& e) {
    double seg_end = e.t, end_pos = e.left;
    if (e.left <= 0) {
      seg_end = pt + (e.t - pt) * pv / (pv - e.left);
      end_pos = 0;
      end.crossed = true;
    }
    const double end_u = end.crossed ? 1.0 : u(end_pos);
    for (; next < targets.size() && targets[next] <= seg_end; ++next) {
      const double f = (targets[next] - pt) / (e.t - pt);
      const double pos = pv + f * (e.left - pv);
      const double up = u(pos);
      at_time(next, up * std::exp(-(end.psi + (targets[next] - pt) * (pu + up) / 2) / 2));
    }
    end.psi += (seg_end - pt) * (pu + end_u) / 2;
    if (!end.crossed && e.value <= 0) end.crossed = true;
    if (end.crossed) return false;
    pt = e.t;
    pv = e.value;
    pu = u(pv);
    if (end.psi > psi_cut) {
      end.cut = true;
      return false;
    }
    return true;
  });
  const double z_end = end.crossed ? std::exp(-end.psi / 2) : 0.0;
  for (; next < targets.size(); ++next) at_time(next, z_end);
  return end;
}

}  // namespace

CandidateU CandidateU::from_grid(GridFunction g) {
  auto shared = std::make_shared<const GridFunction>(std::move(g));
  return CandidateU([shared](double x) { return (*shared)(x); }, "grid");
}

CandidateU CandidateU::ansatz(double alpha, double c) {
  if (c < 0) throw std::domain_error("CandidateU::ansatz: c must be non-negative");
  return CandidateU([alpha, c](double x) { return std::min(1.0, c * std::pow(x, -alpha / 2)); },
                    "ansatz:" + std::to_string(c));
}

CandidateU CandidateU::scaled(double factor) const {
  auto inner = fn_;
  return CandidateU([inner, factor](double x) { return factor * inner(x); },
                    label_ + "*" + std::to_string(factor));
}

double path_integral(const SamplePath& path, const CandidateU& u, double t_stop) {
  if (t_stop < 0 || t_stop > path.last_time()) throw std::domain_error("path_integral: t_stop outside the path");
  double psi = 0;
  auto jump = path.big_jumps.begin();
  for (std::size_t k = 1; k < path.times.size() && path.times[k - 1] < t_stop; ++k) {
    while (jump != path.big_jumps.end() && jump->time < path.times[k]) ++jump;
    double left = path.values[k];
    if (jump != path.big_jumps.end() && jump->time == path.times[k]) left -= jump->size;
    const double t0 = path.times[k - 1], t1 = path.times[k];
    const double u0 = u(path.values[k - 1]);
    if (t1 <= t_stop) {
      psi += (t1 - t0) * (u0 + u(left)) / 2;
    } else {
      const double pos = path.values[k - 1] + (t_stop - t0) / (t1 - t0) * (left - path.values[k - 1]);
      psi += (t_stop - t0) * (u0 + u(pos)) / 2;
    }
  }
  return psi;
}

PathConfig fk_path_config(const StableParams& stable, double x, const FKOptions& opt) {
  return PathConfig::with_default_threshold(stable, opt.dt_rel * std::pow(x, stable.alpha()), opt.scheme);
}

FKEstimate fk_estimate(double x, const CandidateU& u, const StableParams& stable, std::int64_t n,
                       const FKOptions& opt) {
  if (!(x > 0)) throw std::domain_error("fk_estimate: x must be positive");
  if (n < 1) throw std::domain_error("fk_estimate: n must be >= 1");
  const PathStepper stepper(stable, fk_path_config(stable, x, opt));
  const double horizon = opt.horizon_mult * std::pow(x, stable.alpha());
  struct Part {
    stats::RunningStats z;
    std::int64_t censored = 0;
    double censored_mass = 0;
  };
  const std::vector<double> none;
  const auto parts = parallel_blocks(n, 1024, opt.workers, [&](std::int64_t lo, std::int64_t hi) {
    Part p;
    for (std::int64_t i = lo; i < hi; ++i) {
      Philox rng = substream(opt.seed, opt.group, static_cast<std::uint64_t>(i));
      const auto end = walk(stepper, u, x, horizon, kPsiCutoff, rng, none, [](std::size_t, double) {});
      if (end.crossed) {
        p.z.push(std::exp(-end.psi / 2));
      } else {
        p.z.push(0.0);
        if (!end.cut) {
          ++p.censored;
          p.censored_mass += std::exp(-end.psi / 2);
        }
      }
    }
    return p;
  });
  FKEstimate est;
  est.x = x;
  est.n = n;
  stats::RunningStats all;
  double censored_mass = 0;
  for (const auto& p : parts) {
    all.merge(p.z);
    est.censored_count += p.censored;
    censored_mass += p.censored_mass;
  }
  est.mean = all.mean();
  est.std_err = all.std_err();
  est.bracket_high = est.mean + censored_mass / static_cast<double>(n);
  return est;
}

FixedPointResult fk_fixed_point(const CandidateU& initial, const StableParams& stable, const Grid& grid,
                                int iters, std::int64_t n_per_node, const FKOptions& opt) {
  if (iters < 1) throw std::domain_error("fk_fixed_point: iters must be >= 1");
  grid.validate();
  const std::size_t m = grid.size();
  FixedPointResult res;
  res.u.grid = grid;
  res.u.alpha = stable.alpha();
  res.u.values.resize(static_cast<Eigen::Index>(m));
  for (std::size_t j = 0; j < m; ++j) res.u.values[static_cast<Eigen::Index>(j)] = initial(grid.nodes[j]);

  int growth = 0;
  for (int k = 0; k < iters; ++k) {
    const CandidateU current = CandidateU::from_grid(res.u);
    res.raw.assign(m, 0.0);
    res.std_err.assign(m, 0.0);
    std::vector<double> weights(m);
    for (std::size_t j = 0; j < m; ++j) {
      FKOptions o = opt;
      o.group = opt.group + (static_cast<std::uint64_t>(k + 1) << 20) + j;
      const auto est = fk_estimate(grid.nodes[j], current, stable, n_per_node, o);
      res.raw[j] = est.mean;
      res.std_err[j] = est.std_err;
      weights[j] = 1.0 / std::max(est.std_err * est.std_err, 1e-12);
    }
    const auto smooth = stats::isotonic_nonincreasing(res.raw, weights);
    double dist = 0, noise = 0;
    for (std::size_t j = 0; j < m; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      const double next = std::clamp(0.5 * (res.u.values[jj] + smooth[j]), 1e-300, 1.0);
      dist = std::max(dist, std::abs(next - res.u.values[jj]));
      noise = std::max(noise, 0.5 * res.std_err[j]);
      res.u.values[jj] = next;
    }
    res.distances.push_back(dist);
    res.noise.push_back(noise);
    res.iterations = k + 1;
    if (dist < 2 * noise) {
      res.converged = true;
      break;
    }
    const auto nd = res.distances.size();
    growth = (nd >= 2 && res.distances[nd - 1] > res.distances[nd - 2]) ? growth + 1 : 0;
    if (growth >= 3) {
      std::string msg = "fk_fixed_point: iteration is not contracting; distances";
      for (const double d : res.distances) msg += " " + std::to_string(d);
      throw NumericError(msg);
    }
  }
  return res;
}

double exp_jump_expectation(double rate, double theta) {
  if (!(rate > 0) || theta < 0) throw std::domain_error("exp_jump_expectation: need rate > 0, theta >= 0");
  return rate / (rate + theta);
}

MartingaleReport martingale_check(const CandidateU& u, const StableParams& stable, double x,
                                  std::vector<double> t_list, std::int64_t n, const FKOptions& opt) {
  if (!(x > 0) || t_list.empty() || n < 2) throw std::domain_error("martingale_check: bad arguments");
  std::sort(t_list.begin(), t_list.end());
  if (t_list.front() < 0) throw std::domain_error("martingale_check: negative time");
  const PathStepper stepper(stable, fk_path_config(stable, x, opt));
  const double horizon = t_list.back();
  const std::size_t k = t_list.size();
  const auto parts = parallel_blocks(n, 1024, opt.workers, [&](std::int64_t lo, std::int64_t hi) {
    std::vector<stats::RunningStats> acc(k);
    for (std::int64_t i = lo; i < hi; ++i) {
      Philox rng = substream(opt.seed, opt.group, static_cast<std::uint64_t>(i));
      walk(stepper, u, x, horizon, std::numeric_limits<double>::infinity(), rng, t_list,
           [&](std::size_t idx, double z) { acc[idx].push(z); });
    }
    return acc;
  });
  MartingaleReport rep;
  rep.u0 = u(x);
  rep.t = t_list;
  for (std::size_t j = 0; j < k; ++j) {
    stats::RunningStats all;
    for (const auto& p : parts) all.merge(p[j]);
    rep.mean.push_back(all.mean());
    rep.std_err.push_back(all.std_err());
    const double dev = std::abs(all.mean() - rep.u0);
    if (dev > 0) {
      rep.max_dev_se = std::max(rep.max_dev_se, all.std_err() > 0 ? dev / all.std_err()
                                                                  : std::numeric_limits<double>::infinity());
    }
  }
  return rep;
}

double asymptotic_fixed_point(const StableParams& stable, double x, double delta) {
  if (!(x > 0) || !(delta >= 0 && delta < 0.5)) throw std::domain_error("asymptotic_fixed_point: bad arguments");
  const double L = levy_tail_mass(stable, x * (1 - 2 * delta));
  return -L + std::sqrt(L * L + 2 * L);
}

}  // namespace cbss
