#include "cbss/verify.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <json.hpp>
#include <limits>
#include <numbers>
#include <ostream>

#include "cbss/branching_tree.hpp"
#include "cbss/cbss_sim.hpp"
#include "cbss/feynman_kac.hpp"
#include "cbss/frac_bvp.hpp"
#include "cbss/levy_path.hpp"
#include "cbss/stable_core.hpp"
#include "cbss/stats.hpp"

namespace cbss {

namespace {

struct Battery {
  VerifyReport& report;
  std::ostream* log;

  void run(const std::string& id, const std::string& anchor, const std::function<CheckResult()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult r;
    try {
      r = fn();
    } catch (const std::exception& e) {
      r.pass = false;
      r.statistic = std::numeric_limits<double>::quiet_NaN();
      r.detail = std::string("exception: ") + e.what();
    }
    r.id = id;
    r.anchor = anchor;
    report.checks.push_back(r);
    if (log) {
      const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      *log << (r.pass ? "PASS " : "FAIL ") << id << "  stat=" << r.statistic << " thr=" << r.threshold
           << "  (" << s << " s) " << r.detail << std::endl;
    }
  }
};

CheckResult result(bool pass, double stat, double thr, std::string detail = {}) {
  CheckResult r;
  r.pass = pass;
  r.statistic = stat;
  r.threshold = thr;
  r.detail = std::move(detail);
  return r;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

bool VerifyReport::pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

std::string VerifyReport::to_json() const {
  nlohmann::json j;
  j["level"] = level == VerifyLevel::Quick ? "quick" : "full";
  j["seed"] = seed;
  j["seconds"] = seconds;
  j["pass"] = pass();
  j["checks"] = nlohmann::json::array();
  for (const auto& c : checks) {
    nlohmann::json e;
    e["check_id"] = c.id;
    e["anchor"] = c.anchor;
    e["status"] = c.pass ? "pass" : "fail";
    e["statistic"] = std::isfinite(c.statistic) ? nlohmann::json(c.statistic) : nlohmann::json(nullptr);
    e["threshold"] = c.threshold;
    e["detail"] = c.detail;
    j["checks"].push_back(e);
  }
  return j.dump(2);
}

VerifyReport verify(VerifyLevel level, std::uint64_t seed, int workers, std::ostream* log) {
  const auto t_start = std::chrono::steady_clock::now();
  VerifyReport report;
  report.level = level;
  report.seed = seed;
  Battery bat{report, log};
  const bool full = level == VerifyLevel::Full;
  auto pick = [full](std::int64_t quick, std::int64_t big) { return full ? big : quick; };
  const StableParams cauchy(1.0);

  bat.run("levy-tail-mass", "levy-normalization", [&] {
    double err = std::abs(levy_tail_mass(cauchy, 2.0) - 0.5);
    err = std::max(err, std::abs(levy_tail_mass(StableParams(0.5), 4.0) - 1.0));
    err = std::max(err, std::abs(char_exponent_scale(1.0) - std::numbers::pi));
    err = std::max(err, std::abs(stable_tail(cauchy, 1.0, std::numbers::pi) - 0.25));
    return result(err < 1e-12, err, 1e-12);
  });

  bat.run("tail-sampler-consistency", "levy-normalization", [&] {
    const StableParams p(1.5);
    const std::int64_t n = pick(100'000, 1'000'000);
    const std::vector<double> xs{0.5, 2.0, 10.0};
    std::vector<std::int64_t> hits(xs.size(), 0);
    Philox rng(seed, 0x51);
    for (std::int64_t i = 0; i < n; ++i) {
      const double v = sample_stable(p, 1.0, rng).value;
      for (std::size_t k = 0; k < xs.size(); ++k) hits[k] += v >= xs[k];
    }
    double worst = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const double q = stable_tail(p, 1.0, xs[k]);
      worst = std::max(worst, std::abs(static_cast<double>(hits[k]) / n - q) / stats::binomial_se(q, n));
    }
    return result(worst <= 3.5, worst, 3.5, "max |empirical - Fourier| in binomial SE");
  });

  bat.run("scaling-law", "scaling-law", [&] {
    const StableParams p(1.5);
    const std::int64_t n = pick(20'000, 100'000);
    Philox r1(seed, 0x52), r8(seed, 0x53);
    std::vector<double> a(n), b(n);
    const double s = std::pow(8.0, -1 / p.alpha());
    for (std::int64_t i = 0; i < n; ++i) {
      a[i] = sample_stable(p, 1.0, r1).value;
      b[i] = sample_stable(p, 8.0, r8).value * s;
    }
    const auto ks = stats::ks_two_sample(a, b);
    return result(ks.p_value > 0.01, ks.p_value, 0.01, "KS p-value, X_8 / 8^(1/alpha) vs X_1");
  });

  bat.run("reflection-inequality", "reflection-principle", [&] {
    const std::int64_t n = pick(20'000, 100'000);
    const PathStepper stepper(cauchy, PathConfig::with_default_threshold(cauchy, 0.01));
    const std::vector<double> ys{2.0, 5.0, 10.0};
    std::vector<stats::RunningStats> diff(ys.size());
    for (std::int64_t i = 0; i < n; ++i) {
      Philox rng = substream(seed, 0x54, static_cast<std::uint64_t>(i));
      double mx = 0, last = 0;
      stepper.run(0.0, 1.0, rng, [&](const PathEvent& e) {
        mx = std::max({mx, e.left, e.value});
        last = e.value;
        return true;
      });
      for (std::size_t k = 0; k < ys.size(); ++k) diff[k].push((mx >= ys[k]) - 2.0 * (last >= ys[k]));
    }
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& d : diff) worst = std::max(worst, d.mean() / d.std_err());
    return result(worst <= 3.0, worst, 3.0, "max (P{X*>=y} - 2P{X>=y}) in SE");
  });

  bat.run("short-time-first-passage", "short-time-first-passage", [&] {
    const double A = 5.0, eps = full ? 1e-3 : 1e-2;
    const std::int64_t n = pick(200'000, 10'000'000);
    PathConfig cfg;
    cfg.dt = eps / 10;
    cfg.jump_threshold = 0.05;
    const auto parts = parallel_blocks(n, 1 << 16, workers, [&](std::int64_t lo, std::int64_t hi) {
      std::int64_t h = 0;
      for (std::int64_t i = lo; i < hi; ++i) {
        Philox rng = substream(seed, 0x55, static_cast<std::uint64_t>(i));
        h += !first_passage_up(cauchy, cfg, 0.0, A, eps, rng).censored;
      }
      return h;
    });
    std::int64_t hits = 0;
    for (const auto h : parts) hits += h;
    const double p = static_cast<double>(hits) / n;
    const double target = levy_tail_mass(cauchy, A);
    const double rel = std::abs(p / eps / target - 1);
    const double rel_se = stats::binomial_se(p, n) / p;
    const double thr = 0.10 + 3 * rel_se;
    return result(rel <= thr, rel, thr, "eps^-1 P(tau < eps) = " + fmt(p / eps) + " vs " + fmt(target));
  });

  bat.run("overshoot-law", "overshoot-law", [&] {
    PathConfig cfg;
    cfg.dt = 1e-4;
    cfg.jump_threshold = 0.01;
    const auto t = overshoot_conditional_tail(cauchy, cfg, 1.0, 2.0, 1e-3, pick(300'000, 1'000'000), seed, workers);
    const double se = stats::binomial_se(0.5, t.events);
    const double z = std::abs(t.p - 0.5) / se;
    return result(z <= 3 && !t.wide_ci, z, 3.0,
                  "p = " + fmt(t.p) + " from " + std::to_string(t.events) + " events");
  });

  bat.run("jump-independence", "jump-independence", [&] {
    const auto cfg = PathConfig::with_default_threshold(cauchy, 0.05);
    const auto rep = jump_independence_check(cauchy, cfg, {5.0, std::numeric_limits<double>::infinity()},
                                             pick(3'000, 10'000), seed, sign_at_half_jump_time, workers);
    const double stat = std::min(rep.p_value, rep.size_ks_p);
    return result(stat > 0.01 && !rep.insufficient, stat, 0.01,
                  "chi-square p = " + fmt(rep.p_value) + ", size KS p = " + fmt(rep.size_ks_p));
  });

  bat.run("survival", "survival", [&] {
    const std::int64_t n = pick(20'000, 100'000);
    double worst = 0;
    for (const double t : {1.0, 2.0, 10.0}) {
      std::int64_t alive = 0;
      for (std::int64_t i = 0; i < n; ++i) {
        Philox rng = substream(seed, 0x56 + static_cast<std::uint64_t>(t * 16), static_cast<std::uint64_t>(i));
        const auto tree = sample_tree(rng, 10'000'000, t);
        alive += population_at(tree, t) > 0;
      }
      const double q = survival_prob_exact(t);
      worst = std::max(worst, std::abs(static_cast<double>(alive) / n - q) / stats::binomial_se(q, n));
    }
    return result(worst <= 3, worst, 3.0, "max deviation from 2/(t+2) in SE");
  });

  bat.run("progeny-law", "progeny-law", [&] {
    const std::int64_t n = pick(100'000, 1'000'000);
    const std::int64_t cap = 10'000;
    std::int64_t c[3] = {0, 0, 0};
    std::vector<std::int64_t> tail{100, 1'000, 10'000};
    std::vector<std::int64_t> tail_hits(tail.size(), 0);
    for (std::int64_t i = 0; i < n; ++i) {
      Philox rng = substream(seed, 0x57, static_cast<std::uint64_t>(i));
      const auto xi = sample_progeny(rng, cap);
      const std::int64_t v = xi ? *xi : cap + 1;
      if (v <= 5) ++c[(v - 1) / 2];
      for (std::size_t k = 0; k < tail.size(); ++k) tail_hits[k] += v >= tail[k];
    }
    double worst = 0;
    for (int k = 0; k < 3; ++k) {
      const double q = progeny_pmf(k);
      worst = std::max(worst, std::abs(static_cast<double>(c[k]) / n - q) / stats::binomial_se(q, n));
    }
    for (std::size_t k = 0; k < tail.size(); ++k) {
      const double q = progeny_tail(tail[k]);
      worst = std::max(worst, std::abs(static_cast<double>(tail_hits[k]) / n - q) / stats::binomial_se(q, n));
    }
    return result(worst <= 3, worst, 3.0, "pmf at 1,3,5 and tail at 1e2..1e4, max deviation in SE");
  });

  bat.run("progeny-tail-band", "progeny-tail", [&] {
    double lo = 1e9, hi = 0;
    for (std::int64_t m = 10; m <= 1'000'000; m *= 10) {
      const double v = std::sqrt(static_cast<double>(m)) * progeny_tail(m);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    return result(lo >= 0.6 && hi <= 1.0, hi - lo, 0.4, "sqrt(m) P(xi >= m) in [" + fmt(lo) + ", " + fmt(hi) + "]");
  });

  BvpSolution bvp;
  bat.run("bvp-tail-constant", "tail-asymptotics", [&] {
    bvp = solve_bvp(cauchy, Grid::geometric(1e-3, 1e4, 400));
    const double c = tail_constant(bvp.u, 5000);
    const double rel = std::abs(c / std::sqrt(2.0) - 1);
    return result(rel <= 0.15 && bvp.monotone, rel, 0.15, "x^(1/2) u(5000) = " + fmt(c));
  });

  bat.run("bvp-refinement", "tail-asymptotics", [&] {
    const auto fine = solve_bvp(cauchy, bvp.u.grid.refined());
    const double rel = std::abs(tail_constant(fine.u, 5000) / tail_constant(bvp.u, 5000) - 1);
    return result(rel < 0.02, rel, 0.02);
  });

  bat.run("bvp-comparison", "comparison-principle", [&] {
    const auto sup = comparison_check(bvp.u, SolutionKind::Super, 1e-8);
    const auto sub = comparison_check(bvp.u, SolutionKind::Sub, 1e-8);
    std::vector<double> xs;
    for (double x = 1e-2; x <= 1e4; x *= std::sqrt(10.0)) xs.push_back(x);
    const auto csup = comparison_check(shifted_power_candidate(1.0, 4.0), 1.0, SolutionKind::Super, xs);
    const auto csub = comparison_check(shifted_power_candidate(1.0, 0.25), 1.0, SolutionKind::Sub, xs);
    const double worst = std::max({sup.worst_violation, sub.worst_violation, csup.worst_violation, csub.worst_violation});
    return result(sup.pass && sub.pass && csup.pass && csub.pass, worst, 1e-8,
                  "solution both ways; 4 w(x+1) super, w(x+1)/4 sub");
  });

  for (const double a : full ? std::vector<double>{0.5, 1.0, 1.5} : std::vector<double>{1.0}) {
    bat.run("w-decay-alpha-" + fmt(a), "w-supersolution", [&] {
      const double r = w_decay_ratio(a, 1e3);
      return result(std::abs(r - 1) <= 0.05, r, 1.05, "alpha x^alpha (-(-Delta)w) at x = 1000, band [0.95, 1.05]");
    });
  }

  bat.run("f-scaling", "f-scaling", [&] {
    const auto s = f_scaling_check(1.0, 1.0, 4.0);
    return result(s.rel_error < 0.01, s.rel_error, 0.01, "F(4)/F(1) = " + fmt(s.ratio));
  });

  bat.run("exp-jump-closed-form", "exponential-jump-evaluation", [&] {
    const double rate = 0.01, theta = 0.07;
    const std::int64_t n = pick(100'000, 1'000'000);
    Philox rng(seed, 0x58);
    stats::RunningStats s;
    for (std::int64_t i = 0; i < n; ++i) s.push(std::exp(-theta * exponential(rng, rate)));
    const double z = std::abs(s.mean() - exp_jump_expectation(rate, theta)) / s.std_err();
    return result(z <= 3, z, 3.0);
  });

  bat.run("asymptotic-fixed-point", "exponential-jump-evaluation", [&] {
    const double delta = 1e-3;
    double worst = 0;
    for (const double a : {0.5, 1.0, 1.5}) {
      const StableParams p(a);
      const double x = 1e12;
      const double ratio = std::pow(x, a / 2) * asymptotic_fixed_point(p, x, delta) / std::sqrt(2 / a);
      worst = std::max(worst, std::abs(ratio - 1) / delta);
    }
    return result(worst <= 3, worst, 3.0, "|x^(a/2) u / sqrt(2/a) - 1| / delta");
  });

  bat.run("occupation-identity", "occupation-density", [&] {
    CbssConfig cfg;
    cfg.stable = cauchy;
    cfg.path = PathConfig::with_default_threshold(cauchy, 0.01);
    cfg.seed = seed;
    cfg.workers = workers;
    const std::int64_t n = pick(20'000, 100'000);
    const auto at_pi = occupation_count(cfg, 1.0, std::numbers::pi, n);
    const auto all = occupation_count(cfg, 1.0, -std::numeric_limits<double>::infinity(), n);
    const double z = std::max(std::abs(at_pi.mean - 0.25) / at_pi.std_err, std::abs(all.mean - 1.0) / all.std_err);
    return result(z <= 3, z, 3.0, "E count >= pi = " + fmt(at_pi.mean) + ", E count = " + fmt(all.mean));
  });

  bat.run("upper-bound-inequality", "occupation-density", [&] {
    CbssConfig cfg;
    cfg.stable = cauchy;
    cfg.path = PathConfig::with_default_threshold(cauchy, 0.1);
    cfg.seed = seed;
    cfg.workers = workers;
    const double x = 100, t = std::pow(x, cauchy.alpha() / 2);
    const auto e = estimate_tail(cfg, {x}, pick(20'000, 100'000))[0];
    const double bound = 2 * stable_tail(cauchy, t, x) + survival_prob_exact(t);
    const double z = (e.p_hat - bound) / stats::binomial_se(e.p_hat, e.n);
    return result(z <= 3, z, 3.0, "p(100) = " + fmt(e.p_hat) + " vs bound " + fmt(bound));
  });

  bat.run("fk-martingale", "feynman-kac-martingale", [&] {
    const auto u = CandidateU::from_grid(bvp.u);
    FKOptions opt;
    opt.seed = seed;
    opt.workers = workers;
    const auto good = martingale_check(u, cauchy, 20.0, {0.5, 1, 2, 5}, pick(20'000, 100'000), opt);
    opt.group = 1;
    const auto bad = martingale_check(u.scaled(1.5), cauchy, 20.0, {0.5, 1, 2, 5}, pick(20'000, 100'000), opt);
    return result(good.max_dev_se <= 3 && bad.max_dev_se > 5, good.max_dev_se, 3.0,
                  "perturbed candidate deviates by " + fmt(bad.max_dev_se) + " SE");
  });

  bat.run("determinism", "plumbing", [&] {
    CbssConfig cfg;
    cfg.stable = cauchy;
    cfg.path = PathConfig::with_default_threshold(cauchy, 0.1);
    cfg.seed = seed;
    cfg.workers = 1;
    const auto a = estimate_tail(cfg, {10.0}, 20'000);
    cfg.workers = 4;
    const auto b = estimate_tail(cfg, {10.0}, 20'000);
    const bool same = a[0].hits == b[0].hits && a[0].censored_count == b[0].censored_count &&
                      a[0].wall_events == b[0].wall_events;
    return result(same, same ? 0 : 1, 0, "workers 1 vs 4");
  });

  if (full) {
    std::vector<TailEstimate> mc;
    const std::vector<double> xs{25, 50, 100, 200};
    bat.run("mc-tail-slope", "tail-asymptotics", [&] {
      CbssConfig cfg;
      cfg.stable = cauchy;
      cfg.path = PathConfig::with_default_threshold(cauchy, 0.1);
      cfg.seed = seed;
      cfg.workers = workers;
      mc = estimate_tail(cfg, xs, 1'000'000);
      std::vector<double> lx, ly, w;
      double gap = 0;
      for (const auto& e : mc) {
        lx.push_back(std::log(e.x));
        ly.push_back(std::log(e.p_hat));
        w.push_back(e.hits * e.n / static_cast<double>(e.n - e.hits));
        gap = std::max(gap, (e.p_hat_bracket_high - e.p_hat) / e.p_hat);
      }
      const auto fit = stats::fit_line(lx, ly, w);
      const double c100 = std::sqrt(100.0) * mc[2].p_hat;
      const bool ok = std::abs(fit.slope + 0.5) <= 0.08 && std::abs(c100 / std::sqrt(2.0) - 1) <= 0.2 && gap < 0.05;
      return result(ok, fit.slope, -0.5, "x^(1/2) p(100) = " + fmt(c100) + ", bracket gap " + fmt(gap));
    });
    bat.run("three-way-agreement", "tail-asymptotics", [&] {
      if (mc.size() != xs.size()) throw NumericError("no Monte Carlo estimates");
      double worst = 0;
      std::string detail;
      FKOptions opt;
      opt.seed = seed;
      opt.workers = workers;
      opt.group = 2;
      const auto u = CandidateU::from_grid(bvp.u);
      bool ok = true;
      for (const std::size_t k : {std::size_t{0}, std::size_t{2}}) {
        const double ub = bvp.u(mc[k].x);
        const double half = (mc[k].ci_high - mc[k].ci_low) / 2;
        const double dev = std::abs(ub - mc[k].p_hat);
        ok = ok && dev <= half + 0.02 * ub;
        worst = std::max(worst, dev / (half + 0.02 * ub));
        const auto fk = fk_estimate(mc[k].x, u, cauchy, 20'000, opt);
        const double ratio = fk.mean / ub, se = fk.std_err / ub;
        ok = ok && ratio >= 0.95 - 3 * se && ratio <= 1.05 + 3 * se;
        detail += "x=" + fmt(mc[k].x) + " bvp " + fmt(ub) + " mc " + fmt(mc[k].p_hat) + " fk/bvp " + fmt(ratio) + "; ";
      }
      return result(ok, worst, 1.0, detail);
    });
  }

  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return report;
}

}  // namespace cbss
