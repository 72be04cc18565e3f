#pragma once

// Command-line front end. Subcommands:
//   tau     -- waiting-time experiment for the full multi-type model
//   figure  -- presets reproducing the published two-stage simulations
//   m0      -- the neutral two-type model with its closed-form table
//   limits  -- direct evaluation of the analytic quantities
// Exit codes: 0 success, 2 argument error, 3 I/O error, 4 internal error.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "moranmc/experiment.hpp"

namespace moranmc {

namespace cli_detail {

inline unsigned default_threads_from_env() {
  if (const char* env = std::getenv("MORANMC_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return 0;  // resolve to hardware concurrency later
}

inline void emit_json(const json& doc, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << doc.dump(2) << '\n';
  } else {
    write_json_file(out_path, doc);
  }
}

struct TableRange {
  bool enabled = false;
  double from = 0.0;
  double to = 0.0;
  int points = 129;
};

inline void emit_table(const TableRange& range, const std::string& x_name,
                       const std::string& y_name, const std::function<double(double)>& f,
                       const std::string& out_path) {
  if (range.points < 2) throw std::invalid_argument("--points must be at least 2");
  if (!(range.to > range.from)) throw std::invalid_argument("--to must exceed --from");
  std::optional<CsvWriter> file;
  if (!out_path.empty()) file.emplace(out_path);
  const auto row = [&](const std::string& a, const std::string& b) {
    if (file) {
      file->row({a, b});
    } else {
      std::cout << a << ',' << b << '\n';
    }
  };
  row(x_name, y_name);
  for (int i = 0; i < range.points; ++i) {
    const double x =
        range.from + (range.to - range.from) * static_cast<double>(i) /
                         static_cast<double>(range.points - 1);
    row(format_double(x), format_double(f(x)));
  }
  if (file) file->close();
}

}  // namespace cli_detail

inline int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Event-driven Monte Carlo for multi-stage mutation waiting times"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  const unsigned env_threads = cli_detail::default_threads_from_env();

  // ---- tau ----
  auto* tau = app.add_subcommand("tau", "Sample tau_m, the first time a type-m cell exists");
  std::int64_t tau_n = 1000;
  std::vector<double> tau_u;
  std::size_t tau_reps = 10000;
  std::uint64_t tau_seed = 1;
  double tau_max_time = 0.0;
  double tau_max_events = 1e10;
  std::string tau_out = "tau";
  std::string tau_format = "csv";
  unsigned tau_threads = env_threads;
  std::string tau_compare = "auto";
  tau->add_option("--n", tau_n, "Population size N")->required();
  tau->add_option("--u", tau_u, "Comma-separated mutation rates u1..um (m inferred)")
      ->required()
      ->delimiter(',');
  tau->add_option("--reps", tau_reps, "Number of replicates");
  tau->add_option("--seed", tau_seed, "Master seed");
  tau->add_option("--max-time", tau_max_time, "Time cutoff (0: 1e6 mean waiting times)");
  tau->add_option("--max-events", tau_max_events, "Event-count cutoff per replicate");
  tau->add_option("--out", tau_out, "Output prefix (<out>.csv, <out>.manifest.json)");
  tau->add_option("--format", tau_format, "Sample format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  tau->add_option("--threads", tau_threads, "Worker threads (0: all cores)");
  tau->add_option("--compare", tau_compare,
                  "Reference law: auto|theorem1|theorem2|theorem3|none");

  // ---- figure ----
  auto* figure = app.add_subcommand("figure", "Published two-stage simulation presets");
  std::string figure_preset_name;
  std::size_t figure_reps = 0;
  std::uint64_t figure_seed = 1;
  std::string figure_out;
  unsigned figure_threads = env_threads;
  figure->add_option("preset", figure_preset_name, "fig1, fig2 or fig3")->required();
  figure->add_option("--reps", figure_reps, "Override the preset's 10000 replicates");
  figure->add_option("--seed", figure_seed, "Master seed");
  figure->add_option("--out", figure_out, "Output prefix (default: preset name)");
  figure->add_option("--threads", figure_threads, "Worker threads (0: all cores)");

  // ---- m0 ----
  auto* m0 = app.add_subcommand("m0", "Neutral two-type model with closed-form table");
  std::int64_t m0_n = 50;
  std::int64_t m0_j0 = 1;
  std::size_t m0_reps = 100000;
  std::uint64_t m0_seed = 1;
  double m0_max_events = 1e10;
  std::string m0_out = "m0";
  unsigned m0_threads = env_threads;
  m0->add_option("--n", m0_n, "Population size N")->required();
  m0->add_option("--j0", m0_j0, "Initial mutant count")->required();
  m0->add_option("--reps", m0_reps, "Number of replicates");
  m0->add_option("--seed", m0_seed, "Master seed");
  m0->add_option("--max-events", m0_max_events, "Event-count safety cutoff");
  m0->add_option("--out", m0_out, "Output prefix");
  m0->add_option("--threads", m0_threads, "Worker threads (0: all cores)");

  // ---- limits ----
  auto* limits = app.add_subcommand("limits", "Evaluate the analytic quantities");
  limits->require_subcommand(1);
  std::string lim_out;
  bool lim_table = false;
  cli_detail::TableRange range;
  bool range_from_set = false, range_to_set = false;
  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out", lim_out, "Write result to file instead of stdout");
    cmd->add_flag("--table", lim_table, "Emit a grid CSV over the primary variable");
    cmd->add_option("--from", range.from, "Table start")->each([&](const std::string&) {
      range_from_set = true;
    });
    cmd->add_option("--to", range.to, "Table end")->each([&](const std::string&) {
      range_to_set = true;
    });
    cmd->add_option("--points", range.points, "Table point count");
  };

  auto* lim_alpha = limits->add_subcommand("alpha", "Borderline-regime rate multiplier");
  double alpha_gamma = 1.0;
  lim_alpha->add_option("--gamma", alpha_gamma, "gamma > 0")->required();
  add_common(lim_alpha);

  auto* lim_u = limits->add_subcommand("u", "Boundary-value series u(x)");
  double u_gamma = 1.0, u_x = 0.5;
  lim_u->add_option("--gamma", u_gamma, "gamma > 0")->required();
  lim_u->add_option("--x", u_x, "x in [0, 1]");
  add_common(lim_u);

  auto* lim_g2 = limits->add_subcommand("g2", "Single-family mutant probability g2(t)");
  double g2_u2 = 1e-4, g2_t = 0.0;
  lim_g2->add_option("--u2", g2_u2, "mutation rate u2 > 0")->required();
  lim_g2->add_option("--t", g2_t, "time t >= 0");
  add_common(lim_g2);

  auto* lim_f2 = limits->add_subcommand("f2", "Hazard-form limit law");
  double f2_lambda = 1.0, f2_t = 1.0;
  lim_f2->add_option("--lambda", f2_lambda, "lambda >= 0")->required();
  lim_f2->add_option("--t", f2_t, "time t >= 0");
  add_common(lim_f2);

  auto* lim_r = limits->add_subcommand("r", "Scaling constants r_{j,m}");
  std::vector<double> r_u;
  int r_m = 0;
  lim_r->add_option("--u", r_u, "Rates; u1..um, or u2..um together with --m")
      ->required()
      ->delimiter(',');
  lim_r->add_option("--m", r_m, "Stage count (to pass u2..um without u1)");
  lim_r->add_option("--out", lim_out, "Write result to file instead of stdout");

  auto* lim_progeny = limits->add_subcommand("progeny", "Total-progeny tail P(Z > n)");
  std::int64_t progeny_n = 1;
  lim_progeny->add_option("--n", progeny_n, "n >= 0")->required();
  add_common(lim_progeny);

  auto* lim_m0 = limits->add_subcommand("m0", "Two-type model expectations");
  std::int64_t lim_m0_n = 50, lim_m0_k = 1;
  lim_m0->add_option("--n", lim_m0_n, "Population size N")->required();
  lim_m0->add_option("--k", lim_m0_k, "Level k in [1, N-1]")->required();
  lim_m0->add_option("--out", lim_out, "Write result to file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*tau) {
      TauExperimentSpec spec;
      spec.params = PopulationParams(tau_n, MutationRates(tau_u));
      spec.replicates = tau_reps;
      spec.seed = tau_seed;
      spec.max_time = tau_max_time;
      spec.max_events = tau_max_events;
      spec.threads = tau_threads;
      spec.compare = parse_compare(tau_compare);
      spec.format = tau_format == "csv" ? SampleFormat::csv : SampleFormat::json_rows;
      spec.out_base = tau_out;
      const auto result = run_tau_experiment(spec);
      std::cout << "wrote " << result.samples_path.string() << " and "
                << result.manifest_path.string() << '\n';
      if (result.gof) {
        std::cout << "ks=" << format_double(result.gof->ks_statistic)
                  << " p=" << format_double(result.gof->p_value)
                  << " censored_fraction=" << format_double(result.censored_fraction)
                  << '\n';
      }
    } else if (*figure) {
      TauExperimentSpec spec = figure_preset(figure_preset_name);
      if (figure->count("--reps")) spec.replicates = figure_reps;
      spec.seed = figure_seed;
      spec.threads = figure_threads;
      if (!figure_out.empty()) spec.out_base = figure_out;
      const auto result = run_tau_experiment(spec);
      std::cout << "wrote " << result.samples_path.string() << ", "
                << result.law_grid_path->string() << " and "
                << result.manifest_path.string() << '\n';
      if (result.gof) {
        std::cout << "ks=" << format_double(result.gof->ks_statistic)
                  << " p=" << format_double(result.gof->p_value)
                  << " censored_fraction=" << format_double(result.censored_fraction)
                  << '\n';
      }
    } else if (*m0) {
      M0ExperimentSpec spec;
      spec.population_size = m0_n;
      spec.initial_mutants = m0_j0;
      spec.replicates = m0_reps;
      spec.seed = m0_seed;
      spec.max_events = m0_max_events;
      spec.threads = m0_threads;
      spec.out_base = m0_out;
      const auto result = run_m0_experiment(spec);
      std::cout << "wrote " << result.samples_path.string() << ", "
                << result.levels_path.string() << " and " << result.manifest_path.string()
                << '\n';
      std::cout << "fixation_frequency=" << format_double(result.fixation_frequency)
                << " (expected " << format_double(static_cast<double>(m0_j0) / m0_n) << ")\n";
    } else if (*limits) {
      using cli_detail::emit_json;
      using cli_detail::emit_table;
      if (*lim_alpha) {
        if (lim_table) {
          if (!range_from_set) range.from = 0.1;
          if (!range_to_set) range.to = 10.0;
          emit_table(range, "gamma", "alpha", [](double g) { return alpha(g); }, lim_out);
        } else {
          emit_json({{"gamma", alpha_gamma}, {"alpha", alpha(alpha_gamma)}}, lim_out);
        }
      } else if (*lim_u) {
        if (lim_table) {
          if (!range_from_set) range.from = 0.0;
          if (!range_to_set) range.to = 1.0;
          emit_table(range, "x", "u", [&](double x) { return u_series(x, u_gamma); }, lim_out);
        } else {
          const auto d = u_series_derivatives(u_x, u_gamma);
          emit_json({{"gamma", u_gamma},
                     {"x", u_x},
                     {"u", d.value},
                     {"du_dx", d.d1},
                     {"d2u_dx2", d.d2}},
                    lim_out);
        }
      } else if (*lim_g2) {
        const auto roots = riccati_roots(g2_u2);
        if (lim_table) {
          if (!range_from_set) range.from = 0.0;
          if (!range_to_set) range.to = 5.0 / std::sqrt(g2_u2);
          emit_table(range, "t", "g2", [&](double t) { return g2(t, g2_u2); }, lim_out);
        } else {
          emit_json({{"u2", g2_u2},
                     {"t", g2_t},
                     {"g2", g2(g2_t, g2_u2)},
                     {"r1", roots.r1},
                     {"r2", roots.r2}},
                    lim_out);
        }
      } else if (*lim_f2) {
        const LimitLaw law = theorem1_law(f2_lambda);
        if (lim_table) {
          if (!range_from_set) range.from = 0.0;
          if (!range_to_set) range.to = law.quantile(0.999);
          emit_table(range, "t", "cdf", [&](double t) { return law.cdf(t); }, lim_out);
        } else {
          emit_json({{"lambda", f2_lambda},
                     {"t", f2_t},
                     {"pdf", law.pdf(f2_t)},
                     {"cdf", law.cdf(f2_t)},
                     {"survival", law.survival(f2_t)},
                     {"hazard", law.hazard(f2_t)}},
                    lim_out);
        }
      } else if (*lim_r) {
        std::vector<double> u_full = r_u;
        bool have_u1 = true;
        if (r_m > 0 && static_cast<int>(r_u.size()) == r_m - 1) {
          u_full.insert(u_full.begin(), 0.0);
          have_u1 = false;
        } else if (r_m > 0 && static_cast<int>(r_u.size()) != r_m) {
          throw std::invalid_argument("--u must list m or m-1 rates when --m is given");
        }
        const auto sc = scaling_constants(MutationRates(u_full));
        json doc{{"m", static_cast<int>(u_full.size())}, {"r", sc.r}};
        if (!have_u1) {
          doc["r"].erase(0);
          doc["r0"] = nullptr;
          doc["note"] = "u1 not supplied; r0 = u1*r1 omitted";
        } else {
          doc["r0"] = sc.r0();
        }
        doc["r1"] = sc.r1();
        emit_json(doc, lim_out);
      } else if (*lim_progeny) {
        if (lim_table) {
          if (!range_from_set) range.from = 0.0;
          if (!range_to_set) range.to = 100.0;
          emit_table(range, "n", "tail",
                     [](double x) { return total_progeny_tail(static_cast<std::int64_t>(x)); },
                     lim_out);
        } else {
          emit_json({{"n", progeny_n}, {"tail", total_progeny_tail(progeny_n)}}, lim_out);
        }
      } else if (*lim_m0) {
        const auto e = m0_expectations(lim_m0_n, lim_m0_k);
        emit_json({{"population_size", lim_m0_n},
                   {"k", lim_m0_k},
                   {"ER_k", e.er_k},
                   {"ER_k_given_loss", e.er_k_given_loss},
                   {"ER_k_given_fix", e.er_k_given_fix},
                   {"EL_k", e.el_k},
                   {"ET", e.et}},
                  lim_out);
      }
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}

}  // namespace moranmc
