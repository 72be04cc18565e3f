// Acceptance suite: nine criteria, each printed as a single PASS/FAIL line
// with the measured quantities. Run all (default) or one with --only N.
// --cli PATH points at the built command-line binary; criteria 1 and 9
// exercise it end to end and are skipped-as-failed without it.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "moranmc/analytic.hpp"
#include "moranmc/experiment.hpp"
#include "moranmc/replicate.hpp"
#include "moranmc/sim.hpp"
#include "moranmc/stats.hpp"

using namespace moranmc;
namespace fs = std::filesystem;

namespace {

struct Options {
  std::string cli_path;
  fs::path work_dir;
};

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const Options& opts, const std::string& name) {
  const fs::path dir = opts.work_dir / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_command(const std::string& command) { return std::system(command.c_str()); }

// ---- criterion 1: alpha constant, value and runtime ----
Outcome criterion_alpha(const Options& opts) {
  Outcome out;
  const double value = alpha(1.0);
  const auto t0 = std::chrono::steady_clock::now();
  double sink = 0.0;
  const int evals = 1000;
  for (int i = 0; i < evals; ++i) sink += alpha(1.0);
  const double per_call_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
          .count() /
      evals;
  out.pass = std::fabs(value - 1.433) <= 5e-4 && per_call_ms < 1.0 && sink > 0.0;
  out.detail = "alpha(1)=" + fmt(value) + " (|diff from 1.433|=" +
               fmt(std::fabs(value - 1.433)) + " <= 5e-4), " + fmt(per_call_ms) +
               " ms/eval (< 1 ms)";
  if (!opts.cli_path.empty()) {
    const fs::path dir = scratch(opts, "c1");
    const fs::path json_path = dir / "alpha.json";
    const int rc = run_command(opts.cli_path + " limits alpha --gamma 1 --out " +
                               json_path.string());
    double cli_value = 0.0;
    if (rc == 0) cli_value = json::parse(slurp(json_path))["alpha"].get<double>();
    const bool cli_ok = rc == 0 && std::fabs(cli_value - 1.433) <= 5e-4;
    out.pass = out.pass && cli_ok;
    out.detail += std::string("; cli ") + (cli_ok ? "agrees" : "FAILED");
  }
  return out;
}

// ---- criterion 2: figure 1 ----
Outcome criterion_fig1(const Options& opts) {
  TauExperimentSpec spec = figure_preset("fig1");
  spec.seed = 42;
  spec.out_base = (scratch(opts, "c2") / "fig1").string();
  const auto result = run_tau_experiment(spec);
  Outcome out;
  out.pass = result.gof && result.gof->ks_statistic <= 0.05 &&
             result.censored_fraction == 0.0;
  out.detail = "KS(tau*N*u1*sqrt(u2) vs Exp(1))=" + fmt(result.gof->ks_statistic) +
               " (<= 0.05 required), censored_fraction=" + fmt(result.censored_fraction) +
               ", n=10000, seed=42";
  return out;
}

// ---- criterion 3: figure 2 ----
Outcome criterion_fig2(const Options& opts) {
  TauExperimentSpec spec = figure_preset("fig2");
  spec.seed = 42;
  spec.out_base = (scratch(opts, "c3") / "fig2").string();
  const auto result = run_tau_experiment(spec);

  std::vector<double> scaled;
  for (const auto& o : result.outcomes) {
    if (o.termination == TauTermination::hit_type_m) scaled.push_back(o.tau * result.scale_factor);
  }
  const auto vs_exp = ks_statistic(scaled, [](double t) { return -std::expm1(-t); });

  Outcome out;
  out.pass = result.gof && result.gof->ks_statistic <= 0.05 &&
             vs_exp.ks_statistic > result.gof->ks_statistic &&
             result.censored_fraction == 0.0;
  out.detail = "KS vs theorem1(lambda=1)=" + fmt(result.gof->ks_statistic) +
               " (<= 0.05), KS vs Exp(1)=" + fmt(vs_exp.ks_statistic) +
               " (must be larger), n=10000, seed=42";
  return out;
}

// ---- criterion 4: figure 3 ----
Outcome criterion_fig3(const Options& opts) {
  TauExperimentSpec spec = figure_preset("fig3");
  spec.replicates = 2000;
  spec.seed = 42;
  spec.out_base = (scratch(opts, "c4") / "fig3").string();
  const auto result = run_tau_experiment(spec);
  Outcome out;
  out.pass = result.gof && result.gof->ks_statistic <= 0.06 &&
             result.censored_fraction == 0.0;
  out.detail = "KS(u1*tau vs Exp(alpha=1.433))=" + fmt(result.gof->ks_statistic) +
               " (<= 0.06 required), censored_fraction=" + fmt(result.censored_fraction) +
               ", n=2000, seed=42";
  return out;
}

// ---- criterion 5: three-stage tunneling law ----
Outcome criterion_theorem2_m3(const Options& opts) {
  TauExperimentSpec spec;
  spec.params = PopulationParams(2000, MutationRates({1e-5, 1e-2, 1e-2}));
  spec.replicates = 2000;
  spec.seed = 42;
  spec.compare = CompareLaw::theorem2;
  spec.out_base = (scratch(opts, "c5") / "m3").string();
  const auto result = run_tau_experiment(spec);

  std::vector<double> scaled;
  for (const auto& o : result.outcomes) {
    if (o.termination == TauTermination::hit_type_m) scaled.push_back(o.tau * result.scale_factor);
  }
  const auto m = mean_se(scaled);

  Outcome out;
  const bool mean_ok = m.mean >= 0.9 && m.mean <= 1.1;
  const bool ks_ok = result.gof && result.gof->ks_statistic <= 0.08;
  out.pass = mean_ok && ks_ok && result.censored_fraction == 0.0;
  out.detail = "mean(tau*N*r0)=" + fmt(m.mean) + "+-" + fmt(m.se) +
               " (required in [0.9,1.1]" + (mean_ok ? "" : ", VIOLATED") +
               "), KS vs Exp(1)=" + fmt(result.gof->ks_statistic) + " (<= 0.08" +
               (ks_ok ? "" : ", VIOLATED") + "), n=2000";
  return out;
}

// ---- criterion 6: two-type model oracle suite ----
Outcome criterion_m0(const Options& opts) {
  M0ExperimentSpec spec;
  spec.population_size = 50;
  spec.initial_mutants = 1;
  spec.replicates = 100000;
  spec.seed = 42;
  spec.out_base = (scratch(opts, "c6") / "m0").string();
  const auto result = run_m0_experiment(spec);
  const double reps = static_cast<double>(result.outcomes.size());

  Outcome out;
  std::string bad;

  const double fix_diff = std::fabs(result.fixation_frequency - 0.02);
  if (fix_diff > 3.0 * result.fixation_se) {
    out.pass = false;
    bad += " fixation=" + fmt(result.fixation_frequency);
  }
  const double et = m0_expectations(50, 1).et;
  if (std::fabs(result.absorption_time.mean - et) > 3.0 * result.absorption_time.se) {
    out.pass = false;
    bad += " meanT=" + fmt(result.absorption_time.mean) + " vs " + fmt(et);
  }
  for (const std::int64_t k : {1, 2, 5, 10, 25}) {
    std::vector<double> lk, rk;
    lk.reserve(result.outcomes.size());
    rk.reserve(result.outcomes.size());
    for (const auto& o : result.outcomes) {
      lk.push_back(o.occupation_time[static_cast<std::size_t>(k)]);
      rk.push_back(static_cast<double>(o.level_visits[static_cast<std::size_t>(k)]));
    }
    const auto e = m0_expectations(50, k);
    const auto ml = mean_se(lk);
    const auto mr = mean_se(rk);
    if (std::fabs(ml.mean - e.el_k) > 3.0 * ml.se) {
      out.pass = false;
      bad += " L_" + std::to_string(k);
    }
    if (std::fabs(mr.mean - e.er_k) > 3.0 * mr.se) {
      out.pass = false;
      bad += " R_" + std::to_string(k);
    }
  }
  out.detail = "n=1e5: fixation=" + fmt(result.fixation_frequency) + " (1/50 +- " +
               fmt(3.0 * result.fixation_se) + "), mean T=" +
               fmt(result.absorption_time.mean) + " (H_49=" + fmt(et) +
               "), L_k and R_k at k in {1,2,5,10,25} within 3 se";
  if (!out.pass) out.detail += "; violations:" + bad;
  (void)reps;
  return out;
}

// ---- criterion 7: branching suite ----
Outcome criterion_branching(const Options& opts) {
  (void)opts;
  SimConfig config;
  config.max_events = 1e6;
  const std::size_t reps = 100000;

  Outcome out;
  std::string bad;

  const MutationRates neutral({0.0, 0.0});
  const auto plain = run_replicates(
      [&](SeedSpec s) { return simulate_branching(neutral, config, s); }, reps, 42);
  std::string tails;
  for (const std::int64_t n : {1, 2, 5, 20}) {
    double count = 0.0;
    for (const auto& o : plain) {
      count += o.total_progeny > static_cast<std::uint64_t>(n) ? 1.0 : 0.0;
    }
    const double p = count / static_cast<double>(reps);
    const double expect = total_progeny_tail(n);
    const double se = std::sqrt(expect * (1.0 - expect) / static_cast<double>(reps));
    if (std::fabs(p - expect) > 3.0 * se) {
      out.pass = false;
      bad += " P(Z>" + std::to_string(n) + ")=" + fmt(p) + " vs " + fmt(expect);
    }
    tails += (tails.empty() ? "" : " ") + std::string("P(Z>") + std::to_string(n) +
             ")=" + fmt(p);
  }

  const MutationRates mutating({0.0, 1e-2});
  const auto mutated = run_replicates(
      [&](SeedSpec s) { return simulate_branching(mutating, config, s); }, reps, 43);
  double born = 0.0;
  for (const auto& o : mutated) born += o.type_m_born ? 1.0 : 0.0;
  const double q = born / static_cast<double>(reps);
  const double p12 = p_recursion(mutating).front();
  const double se = std::sqrt(p12 * (1.0 - p12) / static_cast<double>(reps));
  if (std::fabs(q - p12) > 3.0 * se) {
    out.pass = false;
    bad += " type2=" + fmt(q) + " vs p12=" + fmt(p12);
  }

  out.detail = "n=1e5: " + tails + " (all vs exact binomial tail, 3 se); type-2 prob=" +
               fmt(q) + " vs p_{1,2}=" + fmt(p12) + " (3 se)";
  if (!out.pass) out.detail += "; violations:" + bad;
  return out;
}

// ---- criterion 8: analytic self-consistency ----
Outcome criterion_analytic(const Options& opts) {
  (void)opts;
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  std::string bad;

  // g2 Riccati ODE residual via central differences.
  double g2_res = 0.0;
  for (const double u2 : {1e-2, 1e-4, 1e-6}) {
    const double h = 1e-3 / std::sqrt(u2);
    for (const double s : {0.1, 1.0, 5.0}) {
      const double t = s / std::sqrt(u2);
      const double d = (g2(t + h, u2) - g2(t - h, u2)) / (2.0 * h);
      const double v = g2(t, u2);
      g2_res = std::max(g2_res, std::fabs(d + u2 * v + v * v - u2));
    }
  }
  if (g2_res > 1e-8) {
    out.pass = false;
    bad += " g2_ode=" + fmt(g2_res);
  }

  // Vieta residuals.
  double vieta = 0.0;
  for (const double u2 : {1e-2, 1e-4, 1e-6, 1e-8}) {
    const auto r = riccati_roots(u2);
    vieta = std::max(vieta, std::fabs(r.r1 + r.r2 + u2) / u2);
    vieta = std::max(vieta, std::fabs(r.r1 * r.r2 + u2) / u2);
  }
  if (vieta > 1e-12) {
    out.pass = false;
    bad += " vieta=" + fmt(vieta);
  }

  // u(x) ODE residual and alpha = -u'(0).
  double u_res = 0.0, alpha_res = 0.0;
  for (const double gamma : {0.5, 1.0, 5.0}) {
    for (const double x : {0.1, 0.5, 0.9}) {
      const auto d = u_series_derivatives(x, gamma);
      u_res = std::max(u_res, std::fabs((1.0 - x) * d.d2 - gamma * d.value));
    }
    alpha_res = std::max(alpha_res,
                         std::fabs(alpha(gamma) + u_series_derivatives(0.0, gamma).d1));
  }
  if (u_res > 1e-10) {
    out.pass = false;
    bad += " u_ode=" + fmt(u_res);
  }
  if (alpha_res > 1e-10) {
    out.pass = false;
    bad += " alpha_vs_du=" + fmt(alpha_res);
  }

  // Hazard-form law density mass.
  double mass_err = 0.0;
  for (const double lambda : {0.0, 1.0}) {
    const LimitLaw law = theorem1_law(lambda);
    double cutoff = 1.0;
    while (law.survival(cutoff) > 1e-10) cutoff *= 2.0;
    const double mass =
        detail::adaptive_simpson([&](double t) { return law.pdf(t); }, 0.0, cutoff, 1e-12);
    mass_err = std::max(mass_err, std::fabs(mass - 1.0));
  }
  if (mass_err > 1e-6) {
    out.pass = false;
    bad += " pdf_mass=" + fmt(mass_err);
  }

  // Progeny tail against its square-root asymptote.
  const double tail = total_progeny_tail(1000000);
  const double asym = 1.0 / std::sqrt(std::numbers::pi * 1e6);
  const double tail_rel = std::fabs(tail - asym) / asym;
  if (tail_rel > 1e-7) {
    out.pass = false;
    bad += " progeny_rel_dev=" + fmt(tail_rel);
  }

  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.detail = "g2_ode=" + fmt(g2_res) + " (<=1e-8), vieta=" + fmt(vieta) +
               " (<=1e-12), u_ode=" + fmt(u_res) + " (<=1e-10), |alpha+u'(0)|=" +
               fmt(alpha_res) + " (<=1e-10), pdf_mass_err=" + fmt(mass_err) +
               " (<=1e-6), progeny_rel_dev=" + fmt(tail_rel) + " (<=1e-7), " +
               fmt(elapsed) + " s";
  if (!out.pass) out.detail += "; violations:" + bad;
  return out;
}

// ---- criterion 9: determinism across thread counts, through the CLI ----
Outcome criterion_determinism(const Options& opts) {
  Outcome out;
  if (opts.cli_path.empty()) {
    out.pass = false;
    out.detail = "requires --cli <path to binary>";
    return out;
  }
  const fs::path dir = scratch(opts, "c9");
  const std::string quiet = " > " + (dir / "log").string() + " 2>&1";

  const auto fig_cmd = [&](const std::string& tag, int threads) {
    return opts.cli_path + " figure fig1 --reps 500 --seed 11 --threads " +
           std::to_string(threads) + " --out " + (dir / tag).string() + quiet;
  };
  const auto m0_cmd = [&](const std::string& tag, int threads) {
    return opts.cli_path + " m0 --n 50 --j0 1 --reps 2000 --seed 11 --threads " +
           std::to_string(threads) + " --out " + (dir / tag).string() + quiet;
  };

  bool ok = run_command(fig_cmd("f1", 1)) == 0 && run_command(fig_cmd("f2", 2)) == 0 &&
            run_command(fig_cmd("f4", 4)) == 0;
  const bool fig_same = ok && slurp(dir / "f1.csv") == slurp(dir / "f2.csv") &&
                        slurp(dir / "f1.csv") == slurp(dir / "f4.csv") &&
                        slurp(dir / "f1.law.csv") == slurp(dir / "f4.law.csv");

  ok = run_command(m0_cmd("m1", 1)) == 0 && run_command(m0_cmd("m3", 3)) == 0;
  const bool m0_same = ok && slurp(dir / "m1.csv") == slurp(dir / "m3.csv") &&
                       slurp(dir / "m1.levels.csv") == slurp(dir / "m3.levels.csv");

  out.pass = fig_same && m0_same;
  out.detail = std::string("figure fig1 csv bytes ") + (fig_same ? "identical" : "DIFFER") +
               " across --threads {1,2,4}; m0 csv bytes " + (m0_same ? "identical" : "DIFFER") +
               " across --threads {1,3}";
  return out;
}

struct Criterion {
  int number;
  const char* name;
  std::function<Outcome(const Options&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  Options opts;
  opts.work_dir = fs::temp_directory_path() / "moranmc_acceptance";
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else if (arg == "--cli" && i + 1 < argc) {
      opts.cli_path = argv[++i];
    } else if (arg == "--work-dir" && i + 1 < argc) {
      opts.work_dir = argv[++i];
    } else {
      std::fprintf(stderr, "usage: acceptance [--only N] [--cli PATH] [--work-dir DIR]\n");
      return 2;
    }
  }
  fs::create_directories(opts.work_dir);

  const std::vector<Criterion> criteria = {
      {1, "alpha constant value and runtime", criterion_alpha},
      {2, "figure 1 reproduction (tunneling, exponential fit)", criterion_fig1},
      {3, "figure 2 reproduction (hazard-form law fit)", criterion_fig2},
      {4, "figure 3 reproduction (borderline regime)", criterion_fig3},
      {5, "three-stage tunneling law (mean and fit)", criterion_theorem2_m3},
      {6, "two-type model closed-form suite", criterion_m0},
      {7, "branching process suite", criterion_branching},
      {8, "analytic self-consistency", criterion_analytic},
      {9, "byte-identical output across thread counts", criterion_determinism},
  };

  int failures = 0;
  int ran = 0;
  for (const auto& criterion : criteria) {
    if (only != 0 && criterion.number != only) continue;
    ++ran;
    const Outcome outcome = criterion.run(opts);
    std::printf("[%s] criterion %d: %s -- %s\n", outcome.pass ? "PASS" : "FAIL",
                criterion.number, criterion.name, outcome.detail.c_str());
    std::fflush(stdout);
    failures += outcome.pass ? 0 : 1;
  }
  if (ran == 0) {
    std::fprintf(stderr, "no criterion selected (--only %d)\n", only);
    return 2;
  }
  if (only == 0) {
    std::printf("%d/%d criteria passed\n", ran - failures, ran);
  }
  return failures == 0 ? 0 : 1;
}
