#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cbss/cbss_sim.hpp"
#include "cbss/feynman_kac.hpp"
#include "cbss/frac_bvp.hpp"
#include "cbss/stable_core.hpp"
#include "cbss/verify.hpp"

using namespace cbss;
using nlohmann::json;

namespace {

struct Shared {
  double alpha = 1.0;
  std::uint64_t seed = 1;
  int workers = 1;
  std::string out;
  std::string format = "csv";
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

/// Writes to --out or stdout.
void emit(const Shared& s, const std::string& text) {
  if (s.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(s.out, std::ios::binary);
  if (!f) throw UsageError("cannot open " + s.out);
  f << text;
}

/// Renders rows as CSV or as a JSON array of objects.
std::string table(const Shared& s, const std::vector<std::string>& cols,
                  const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream os;
  if (s.format == "json") {
    json arr = json::array();
    for (const auto& r : rows) {
      json o;
      for (std::size_t k = 0; k < cols.size(); ++k) {
        try {
          std::size_t used = 0;
          const double v = std::stod(r[k], &used);
          o[cols[k]] = used == r[k].size() ? json(v) : json(r[k]);
        } catch (const std::exception&) {
          o[cols[k]] = r[k];
        }
      }
      arr.push_back(o);
    }
    os << arr.dump(2) << '\n';
    return os.str();
  }
  for (std::size_t k = 0; k < cols.size(); ++k) os << (k ? "," : "") << cols[k];
  os << '\n';
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < r.size(); ++k) os << (k ? "," : "") << r[k];
    os << '\n';
  }
  return os.str();
}

PathScheme parse_scheme(const std::string& s) {
  if (s == "hybrid") return PathScheme::HybridJumpDiffusion;
  if (s == "grid") return PathScheme::GridIncrements;
  throw UsageError("unknown scheme " + s);
}

/// Appends "--key value" for every key=value line of the file whose flag is
/// not already on the command line.
std::vector<std::string> merge_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i + 1 < args.size(); ++i) {
    if (args[i] == "--config") path = args[i + 1];
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path);
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = "--" + trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    bool present = false;
    for (const auto& a : args) present = present || a == key || a.rfind(key + "=", 0) == 0;
    if (!present) {
      args.push_back(key);
      args.push_back(value);
    }
  }
  return args;
}

void add_shared(CLI::App* sub, Shared& s) {
  sub->add_option("--alpha", s.alpha, "stability index in (0, 2)");
  sub->add_option("--seed", s.seed, "root seed");
  sub->add_option("--workers", s.workers, "worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--out", s.out, "output file (default stdout)");
  sub->add_option("--format", s.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  static std::string config_path;
  sub->add_option("--config", config_path, "flat key=value file; flags override it");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Critical branching stable process toolkit"};
  app.require_subcommand(1);
  Shared s;

  auto* sample = app.add_subcommand("sample-stable", "draw X_t");
  add_shared(sample, s);
  double t_sample = 1.0;
  std::int64_t n_sample = 1000;
  sample->add_option("--t", t_sample);
  sample->add_option("--n", n_sample);

  auto* sim = app.add_subcommand("simulate-cbss", "single realizations of the branching process");
  add_shared(sim, s);
  auto* est = app.add_subcommand("estimate-tail", "Monte Carlo P{M >= x}");
  add_shared(est, s);
  std::vector<double> xs{100.0};
  std::int64_t n_real = 10'000;
  double dt = 0.1, jump_threshold = 0;
  std::string scheme = "hybrid";
  std::int64_t progeny_cap = 10'000'000;
  double time_cap = 1e9;
  for (auto* sub : {sim, est}) {
    sub->add_option("--x", xs, "level(s); repeatable");
    sub->add_option("--n", n_real, "realizations");
    sub->add_option("--dt", dt);
    sub->add_option("--scheme", scheme)->check(CLI::IsMember({"hybrid", "grid"}));
    sub->add_option("--jump-threshold", jump_threshold, "h (default dt^(1/alpha))");
    sub->add_option("--progeny-cap", progeny_cap);
    sub->add_option("--time-cap", time_cap);
  }

  auto* bvp = app.add_subcommand("solve-bvp", "solve the nonlinear nonlocal problem for u");
  add_shared(bvp, s);
  double L = 1e4, x_min = 1e-3;
  int nodes = 400;
  std::string grading = "geometric";
  SolverConfig scfg;
  bvp->add_option("--L", L);
  bvp->add_option("--nodes", nodes);
  bvp->add_option("--x-min", x_min, "first node of a geometric grid");
  bvp->add_option("--grading", grading)->check(CLI::IsMember({"geometric", "uniform"}));
  bvp->add_option("--tol", scfg.tol);
  bvp->add_option("--max-iters", scfg.max_iters);
  bvp->add_option("--damping", scfg.damping);

  auto* fk = app.add_subcommand("fk-check", "Feynman-Kac image of a candidate u");
  add_shared(fk, s);
  std::vector<double> fk_xs{10.0, 100.0};
  std::int64_t fk_n = 10'000;
  std::string candidate = "bvp";
  FKOptions fko;
  fk->add_option("--x", fk_xs);
  fk->add_option("--n", fk_n);
  fk->add_option("--candidate", candidate, "bvp or ansatz:<c>");
  fk->add_option("--horizon-mult", fko.horizon_mult);
  fk->add_option("--dt-rel", fko.dt_rel);
  fk->add_option("--L", L);
  fk->add_option("--nodes", nodes);

  auto* ver = app.add_subcommand("verify", "run the check battery and write a JSON report");
  add_shared(ver, s);
  std::string level = "quick";
  ver->add_option("--level", level)->check(CLI::IsMember({"quick", "full"}));

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = merge_config(args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    const StableParams stable(s.alpha);

    if (*sample) {
      Philox rng(s.seed);
      std::vector<std::vector<std::string>> rows;
      for (std::int64_t i = 0; i < n_sample; ++i) rows.push_back({num(sample_stable(stable, t_sample, rng).value)});
      emit(s, table(s, {"value"}, rows));
      return 0;
    }

    if (*sim || *est) {
      CbssConfig cfg;
      cfg.stable = stable;
      cfg.path = PathConfig::with_default_threshold(stable, dt, parse_scheme(scheme));
      if (jump_threshold > 0) cfg.path.jump_threshold = jump_threshold;
      cfg.progeny_cap = progeny_cap;
      cfg.time_cap = time_cap;
      cfg.seed = s.seed;
      cfg.workers = s.workers;
      cfg.validate();
      if (*sim) {
        std::vector<std::vector<std::string>> rows;
        for (std::size_t j = 0; j < xs.size(); ++j) {
          for (std::int64_t i = 0; i < n_real; ++i) {
            Philox rng = substream(s.seed, j, static_cast<std::uint64_t>(i));
            const auto r = simulate_realization(cfg, xs[j], rng);
            rows.push_back({num(xs[j]), std::to_string(i), r.crossed ? "1" : "0", num(r.max_lower),
                            r.censored ? "1" : "0", std::to_string(r.progeny_used), std::to_string(r.wall_events)});
          }
        }
        emit(s, table(s, {"x", "realization", "crossed", "max_lower", "censored", "progeny_used", "wall_events"}, rows));
        return 0;
      }
      const auto res = estimate_tail(cfg, xs, n_real);
      std::vector<std::vector<std::string>> rows;
      for (const auto& e : res) {
        const double theory = std::sqrt(2 / s.alpha) * std::pow(e.x, -s.alpha / 2);
        rows.push_back({num(s.alpha), num(e.x), std::to_string(e.n), std::to_string(e.hits),
                        std::to_string(e.censored_count), num(e.p_hat), num(e.ci_low), num(e.ci_high),
                        num(e.p_hat_bracket_high), num(theory), num(e.p_hat / theory)});
        if (e.flagged()) std::cerr << "warning: more than 1% censored at x = " << e.x << '\n';
      }
      emit(s, table(s, {"alpha", "x", "n", "hits", "censored", "p_hat", "ci_low", "ci_high", "bracket_high", "theory", "ratio"},
                    rows));
      return 0;
    }

    auto make_grid = [&] {
      return grading == "uniform" ? Grid::uniform(L, nodes) : Grid::geometric(x_min, L, nodes);
    };

    if (*bvp) {
      const auto sol = solve_bvp(stable, make_grid(), scfg);
      std::vector<std::vector<std::string>> rows;
      for (std::size_t i = 0; i < sol.u.grid.size(); ++i) {
        const double x = sol.u.grid.nodes[i];
        const double u = sol.u.values[static_cast<Eigen::Index>(i)];
        rows.push_back({num(x), num(u), num(std::pow(x, s.alpha / 2) * u), num(sol.residual[static_cast<Eigen::Index>(i)])});
      }
      std::cerr << "iterations " << sol.iterations << ", residual " << sol.residual_history.back() << '\n';
      emit(s, table(s, {"x", "u", "x^(alpha/2)*u", "residual"}, rows));
      return 0;
    }

    if (*fk) {
      fko.seed = s.seed;
      fko.workers = s.workers;
      std::optional<CandidateU> u;
      if (candidate == "bvp") {
        u = CandidateU::from_grid(solve_bvp(stable, Grid::geometric(x_min, L, nodes)).u);
      } else if (candidate.rfind("ansatz:", 0) == 0) {
        u = CandidateU::ansatz(s.alpha, std::stod(candidate.substr(7)));
      } else {
        throw UsageError("candidate must be bvp or ansatz:<c>");
      }
      std::vector<std::vector<std::string>> rows;
      for (std::size_t j = 0; j < fk_xs.size(); ++j) {
        fko.group = j;
        const auto e = fk_estimate(fk_xs[j], *u, stable, fk_n, fko);
        const double cu = (*u)(fk_xs[j]);
        rows.push_back({num(e.x), num(e.mean), num(e.std_err), num(cu), num(e.mean / cu)});
        if (e.flagged()) std::cerr << "warning: censored mass above 0.1% at x = " << e.x << '\n';
      }
      emit(s, table(s, {"x", "fk_mean", "fk_se", "candidate_u", "ratio"}, rows));
      return 0;
    }

    if (*ver) {
      const auto rep = verify(level == "full" ? VerifyLevel::Full : VerifyLevel::Quick, s.seed, s.workers, &std::cerr);
      emit(s, rep.to_json() + "\n");
      return rep.pass() ? 0 : 4;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 3;
  } catch (const std::domain_error& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
