#pragma once

// Experiment drivers behind the CLI: run a replicate batch, serialize the
// per-replicate rows to CSV, fit the configured reference law, and emit a
// manifest JSON that is sufficient to re-run the experiment bit-identically.
// All numeric work happens in the model/sim/analytic/stats modules; this
// layer only composes and serializes.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "moranmc/analytic.hpp"
#include "moranmc/model.hpp"
#include "moranmc/replicate.hpp"
#include "moranmc/sim.hpp"
#include "moranmc/stats.hpp"
#include "moranmc/version.hpp"

namespace moranmc {

using json = nlohmann::json;

/// Raised for output-file failures; the CLI maps it to exit code 3.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Hard invariant violations surfaced to the user; exit code 4.
struct InternalError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Locale-independent float formatting, 17 significant digits (round-trip
/// exact for doubles).
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path) : path_(path) {
    if (path.has_parent_path()) {
      std::error_code ec;
      std::filesystem::create_directories(path.parent_path(), ec);
    }
    stream_.open(path, std::ios::binary | std::ios::trunc);
    if (!stream_) throw IoError("cannot open " + path.string() + " for writing");
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) stream_ << ',';
      stream_ << cells[i];
    }
    stream_ << '\n';
    if (!stream_) throw IoError("write failed on " + path_.string());
  }

  void close() {
    stream_.close();
    if (stream_.fail()) throw IoError("close failed on " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream stream_;
};

inline void write_json_file(const std::filesystem::path& path, const json& doc) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("write failed on " + path.string());
}

enum class CompareLaw { automatic, theorem1, theorem2, theorem3, none };

inline const char* to_string(CompareLaw c) noexcept {
  switch (c) {
    case CompareLaw::automatic: return "auto";
    case CompareLaw::theorem1: return "theorem1";
    case CompareLaw::theorem2: return "theorem2";
    case CompareLaw::theorem3: return "theorem3";
    case CompareLaw::none: return "none";
  }
  return "auto";
}

inline CompareLaw parse_compare(const std::string& name) {
  if (name == "auto") return CompareLaw::automatic;
  if (name == "theorem1") return CompareLaw::theorem1;
  if (name == "theorem2") return CompareLaw::theorem2;
  if (name == "theorem3") return CompareLaw::theorem3;
  if (name == "none") return CompareLaw::none;
  throw std::invalid_argument("unknown comparison law '" + name +
                              "' (expected auto|theorem1|theorem2|theorem3|none)");
}

enum class SampleFormat { csv, json_rows };

struct TauExperimentSpec {
  PopulationParams params;
  std::size_t replicates = 10000;
  std::uint64_t seed = 1;
  double max_time = 0.0;    // 0: default to 1e6 mean waiting times
  double max_events = 1e10;
  unsigned threads = 0;     // 0: hardware concurrency
  CompareLaw compare = CompareLaw::automatic;
  SampleFormat format = SampleFormat::csv;
  std::string out_base = "tau";
  bool law_grid = false;    // also write <out>.law.csv (512-point cdf grid)
  std::string preset;       // set by the figure presets
};

struct TauExperimentResult {
  std::vector<TauOutcome> outcomes;
  double censored_fraction = 0.0;
  std::optional<LimitLaw> law;
  std::string scale_name;   // "tau*N*r0", "u1*tau" or "tau"
  double scale_factor = 1.0;
  std::optional<GofReport> gof;
  RegimeReport regime;
  json manifest;
  std::filesystem::path samples_path;
  std::filesystem::path manifest_path;
  std::optional<std::filesystem::path> law_grid_path;
};

namespace detail {

inline json regime_json(const RegimeReport& r) {
  return json{
      {"classification", to_string(r.classification)},
      {"lambda_hat", r.lambda_hat},
      {"tunneling_strength", r.tunneling_strength},
      {"gamma_hat", r.gamma_hat},
      {"conditions",
       {{"small_mutation_supply", r.cond_small_mutation_supply},
        {"rate_ratios_bounded", r.cond_rate_ratios_bounded},
        {"small_final_rate", r.cond_small_final_rate},
        {"strong_tunneling", r.cond_strong_tunneling}}},
  };
}

inline json law_json(const LimitLaw& law) {
  json out{{"label", law.label()}, {"rate", law.rate()}};
  switch (law.kind()) {
    case LimitLaw::Kind::theorem1:
      out["kind"] = "theorem1";
      out["lambda"] = law.lambda();
      break;
    case LimitLaw::Kind::theorem3:
      out["kind"] = "theorem3";
      out["gamma"] = law.gamma();
      out["alpha"] = law.rate();
      break;
    case LimitLaw::Kind::exponential:
      out["kind"] = "exponential";
      break;
  }
  return out;
}

}  // namespace detail

/// Resolve the comparison law and time scale for a tau experiment.
/// theorem1/theorem2 compare on tau*N*r0 (equal to tau*N*u1*sqrt(u2) for
/// m = 2); theorem3 compares on u1*tau against Exp(alpha(gamma_hat)).
inline std::pair<std::optional<LimitLaw>, std::string> resolve_comparison(
    const PopulationParams& params, CompareLaw compare, const RegimeReport& regime) {
  const int m = params.rates.stages();
  CompareLaw effective = compare;
  if (compare == CompareLaw::automatic) {
    switch (regime.classification) {
      case Regime::theorem2: effective = CompareLaw::theorem2; break;
      case Regime::theorem3_borderline: effective = CompareLaw::theorem3; break;
      default: effective = CompareLaw::none; break;
    }
  }
  switch (effective) {
    case CompareLaw::theorem1:
      if (m != 2) throw std::invalid_argument("theorem1 comparison requires exactly two stages");
      return {theorem1_law(regime.lambda_hat), "tau*N*r0"};
    case CompareLaw::theorem2:
      return {exponential_law(1.0), "tau*N*r0"};
    case CompareLaw::theorem3:
      if (!(regime.gamma_hat > 0.0)) {
        throw std::invalid_argument("theorem3 comparison requires positive gamma");
      }
      return {theorem3_law(regime.gamma_hat), "u1*tau"};
    case CompareLaw::none:
    case CompareLaw::automatic:
      break;
  }
  return {std::nullopt, ""};
}

inline TauExperimentResult run_tau_experiment(const TauExperimentSpec& spec) {
  const auto t_start = std::chrono::steady_clock::now();
  const auto& params = spec.params;
  const double n = static_cast<double>(params.population_size);
  const ScalingConstants sc = scaling_constants(params.rates);
  const RegimeReport regime = check_regime(params);

  TauExperimentResult result;
  result.regime = regime;
  auto [law, scale_name] = resolve_comparison(params, spec.compare, regime);
  result.law = law;

  if (scale_name == "u1*tau") {
    result.scale_factor = params.rates.u[0];
  } else if (sc.r0() > 0.0) {
    scale_name = scale_name.empty() ? "tau*N*r0" : scale_name;
    result.scale_factor = n * sc.r0();
  } else {
    scale_name = "tau";
    result.scale_factor = 1.0;
  }
  result.scale_name = scale_name;

  SimConfig config;
  config.max_events = spec.max_events;
  if (spec.max_time > 0.0) {
    config.max_time = spec.max_time;
  } else if (sc.r0() > 0.0) {
    config.max_time = 1e6 / (n * sc.r0());  // ~1e6 mean waiting times
  } else {
    config.max_time = 1e6;
  }

  result.outcomes = run_replicates(
      [&](SeedSpec s) { return simulate_tau_m(params, config, s); }, spec.replicates,
      spec.seed, spec.threads);

  std::vector<double> scaled;
  scaled.reserve(result.outcomes.size());
  std::size_t censored = 0;
  for (const auto& o : result.outcomes) {
    if (o.termination == TauTermination::hit_type_m) {
      scaled.push_back(o.tau * result.scale_factor);
    } else {
      ++censored;
    }
  }
  result.censored_fraction =
      result.outcomes.empty()
          ? 0.0
          : static_cast<double>(censored) / static_cast<double>(result.outcomes.size());

  if (result.law && !scaled.empty()) {
    result.gof = ks_statistic(
        scaled, [&](double t) { return result.law->cdf(t); }, result.censored_fraction);
  }

  // Samples file.
  const int m = params.rates.stages();
  const std::filesystem::path samples_path =
      spec.out_base + (spec.format == SampleFormat::csv ? ".csv" : ".json");
  if (spec.format == SampleFormat::csv) {
    CsvWriter csv(samples_path);
    std::vector<std::string> header = {"replicate_index", "tau",        "scaled_tau",
                                       "termination",     "n_events",   "type1_fixation"};
    for (int j = 1; j <= m; ++j) header.push_back("mutations_stage_" + std::to_string(j));
    csv.row(header);
    for (std::size_t i = 0; i < result.outcomes.size(); ++i) {
      const auto& o = result.outcomes[i];
      std::vector<std::string> row = {std::to_string(i), format_double(o.tau),
                                      format_double(o.tau * result.scale_factor),
                                      to_string(o.termination), std::to_string(o.n_events),
                                      o.type1_fixation_occurred ? "1" : "0"};
      for (int j = 0; j < m; ++j) row.push_back(std::to_string(o.mutations_per_stage[j]));
      csv.row(row);
    }
    csv.close();
  } else {
    json rows = json::array();
    for (std::size_t i = 0; i < result.outcomes.size(); ++i) {
      const auto& o = result.outcomes[i];
      rows.push_back({{"replicate_index", i},
                      {"tau", o.tau},
                      {"scaled_tau", o.tau * result.scale_factor},
                      {"termination", to_string(o.termination)},
                      {"n_events", o.n_events},
                      {"type1_fixation", o.type1_fixation_occurred},
                      {"mutations_per_stage", o.mutations_per_stage}});
    }
    write_json_file(samples_path, rows);
  }
  result.samples_path = samples_path;

  // Reference-law grid for plotting.
  if (spec.law_grid && result.law) {
    const std::filesystem::path grid_path = spec.out_base + ".law.csv";
    CsvWriter grid(grid_path);
    grid.row({"t", "cdf"});
    const double t_max = result.law->quantile(1.0 - 1e-3);
    for (int i = 0; i < 512; ++i) {
      const double t = t_max * static_cast<double>(i) / 511.0;
      grid.row({format_double(t), format_double(result.law->cdf(t))});
    }
    grid.close();
    result.law_grid_path = grid_path;
  }

  // Manifest.
  json manifest;
  manifest["schema_version"] = kManifestSchemaVersion;
  manifest["tool_version"] = kVersion;
  manifest["command"] = "tau";
  if (!spec.preset.empty()) manifest["preset"] = spec.preset;
  manifest["parameters"] = {
      {"population_size", params.population_size},
      {"stages", m},
      {"mutation_rates", params.rates.u},
      {"replicates", spec.replicates},
      {"seed", spec.seed},
      {"max_time", config.max_time},
      {"max_events", config.max_events},
      {"threads_requested", spec.threads},
      {"compare", to_string(spec.compare)},
      {"format", spec.format == SampleFormat::csv ? "csv" : "json"},
      {"out", spec.out_base},
  };
  manifest["regime"] = detail::regime_json(regime);
  manifest["scaling_constants"] = sc.r;
  if (sc.r0() > 0.0) manifest["waiting_scale"] = 1.0 / (n * sc.r0());
  if (result.law) {
    manifest["comparison"] = detail::law_json(*result.law);
    manifest["comparison"]["scale"] = result.scale_name;
  } else {
    manifest["comparison"] = {{"kind", "none"}, {"scale", result.scale_name}};
  }
  json summary;
  summary["n_replicates"] = result.outcomes.size();
  summary["censored_fraction"] = result.censored_fraction;
  summary["censored_flag"] = result.censored_fraction > 0.0;
  if (result.gof) {
    summary["ks_statistic"] = result.gof->ks_statistic;
    summary["ks_p_value"] = result.gof->p_value;
  }
  if (scaled.size() >= 2) {
    const MeanSe m_scaled = mean_se(scaled);
    summary["scaled_mean"] = m_scaled.mean;
    summary["scaled_mean_se"] = m_scaled.se;
    bool positive = true;
    for (double v : scaled) positive = positive && v > 0.0;
    if (positive) {
      const RateEstimate rate = rate_mle(scaled);
      summary["rate_mle"] = rate.rate;
      summary["rate_mle_se"] = rate.se;
    }
  }
  manifest["summary"] = summary;
  json outputs;
  outputs["samples"] = samples_path.string();
  if (result.law_grid_path) outputs["law_grid"] = result.law_grid_path->string();
  manifest["outputs"] = outputs;
  manifest["duration_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

  result.manifest = manifest;
  result.manifest_path = spec.out_base + ".manifest.json";
  write_json_file(result.manifest_path, manifest);
  return result;
}

/// The published two-stage simulation settings, reproduced as presets.
/// fig1: tunneling with small mutation supply, compared against Exp(1);
/// fig2: mutation supply N u1 = 1, compared against the hazard-form law;
/// fig3: borderline regime gamma = 1, compared against Exp(alpha(1)) on the
/// u1*tau scale.
inline TauExperimentSpec figure_preset(const std::string& name) {
  TauExperimentSpec spec;
  spec.replicates = 10000;
  spec.law_grid = true;
  spec.preset = name;
  spec.out_base = name;
  if (name == "fig1") {
    spec.params = PopulationParams(1000, MutationRates({1e-4, 1e-4}));
    spec.compare = CompareLaw::theorem2;
  } else if (name == "fig2") {
    spec.params = PopulationParams(1000, MutationRates({1e-3, 1e-4}));
    spec.compare = CompareLaw::theorem1;
  } else if (name == "fig3") {
    spec.params = PopulationParams(1000, MutationRates({1e-4, 1e-6}));
    spec.compare = CompareLaw::theorem3;
  } else {
    throw std::invalid_argument("unknown figure preset '" + name + "' (fig1|fig2|fig3)");
  }
  return spec;
}

struct M0ExperimentSpec {
  std::int64_t population_size = 50;
  std::int64_t initial_mutants = 1;
  std::size_t replicates = 100000;
  std::uint64_t seed = 1;
  double max_events = 1e10;
  unsigned threads = 0;
  std::string out_base = "m0";
};

struct M0ExperimentResult {
  std::vector<M0Outcome> outcomes;
  double fixation_frequency = 0.0;
  double fixation_se = 0.0;
  MeanSe absorption_time;
  json manifest;
  std::filesystem::path samples_path;
  std::filesystem::path levels_path;
  std::filesystem::path manifest_path;
};

inline M0ExperimentResult run_m0_experiment(const M0ExperimentSpec& spec) {
  const auto t_start = std::chrono::steady_clock::now();
  if (spec.initial_mutants < 0 || spec.initial_mutants > spec.population_size) {
    throw std::invalid_argument("m0: initial mutant count must lie in [0, N]");
  }
  SimConfig config;
  config.max_events = spec.max_events;

  M0ExperimentResult result;
  result.outcomes = run_replicates(
      [&](SeedSpec s) {
        return simulate_m0(spec.population_size, spec.initial_mutants, config, s);
      },
      spec.replicates, spec.seed, spec.threads);

  const std::size_t reps = result.outcomes.size();
  const double n = static_cast<double>(spec.population_size);

  // Per-replicate rows.
  const std::filesystem::path samples_path = spec.out_base + ".csv";
  {
    CsvWriter csv(samples_path);
    csv.row({"replicate_index", "absorbed_at", "absorption_time", "r_total", "termination"});
    for (std::size_t i = 0; i < reps; ++i) {
      const auto& o = result.outcomes[i];
      csv.row({std::to_string(i), std::to_string(o.absorbed_at),
               format_double(o.absorption_time), std::to_string(o.r_total),
               o.termination == M0Termination::absorbed ? "absorbed" : "event_cutoff"});
    }
    csv.close();
  }
  result.samples_path = samples_path;

  // Aggregated per-level table with the closed forms side by side.
  const std::filesystem::path levels_path = spec.out_base + ".levels.csv";
  {
    CsvWriter csv(levels_path);
    csv.row({"k", "mean_L", "se_L", "exact_EL", "mean_R", "se_R", "exact_ER",
             "exact_ER_given_loss", "exact_ER_given_fix"});
    std::vector<double> lk(reps), rk(reps);
    for (std::int64_t k = 1; k <= spec.population_size - 1; ++k) {
      for (std::size_t i = 0; i < reps; ++i) {
        lk[i] = result.outcomes[i].occupation_time[static_cast<std::size_t>(k)];
        rk[i] = static_cast<double>(result.outcomes[i].level_visits[static_cast<std::size_t>(k)]);
      }
      const auto e = m0_expectations(spec.population_size, k);
      std::string mean_l = "", se_l = "", mean_r = "", se_r = "";
      if (reps >= 2) {
        const auto ml = mean_se(lk);
        const auto mr = mean_se(rk);
        mean_l = format_double(ml.mean);
        se_l = format_double(ml.se);
        mean_r = format_double(mr.mean);
        se_r = format_double(mr.se);
      }
      csv.row({std::to_string(k), mean_l, se_l, format_double(e.el_k), mean_r, se_r,
               format_double(e.er_k), format_double(e.er_k_given_loss),
               format_double(e.er_k_given_fix)});
    }
    csv.close();
  }
  result.levels_path = levels_path;

  double fixations = 0.0;
  std::vector<double> times;
  times.reserve(reps);
  for (const auto& o : result.outcomes) {
    fixations += o.absorbed_at == spec.population_size ? 1.0 : 0.0;
    times.push_back(o.absorption_time);
  }
  result.fixation_frequency = reps ? fixations / static_cast<double>(reps) : 0.0;
  result.fixation_se =
      reps ? std::sqrt(result.fixation_frequency * (1.0 - result.fixation_frequency) /
                       static_cast<double>(reps))
           : 0.0;
  if (times.size() >= 2) result.absorption_time = mean_se(times);

  json manifest;
  manifest["schema_version"] = kManifestSchemaVersion;
  manifest["tool_version"] = kVersion;
  manifest["command"] = "m0";
  manifest["parameters"] = {
      {"population_size", spec.population_size}, {"initial_mutants", spec.initial_mutants},
      {"replicates", spec.replicates},           {"seed", spec.seed},
      {"max_events", spec.max_events},           {"threads_requested", spec.threads},
      {"out", spec.out_base},
  };
  json summary;
  summary["n_replicates"] = reps;
  summary["fixation_frequency"] = result.fixation_frequency;
  summary["fixation_se"] = result.fixation_se;
  summary["fixation_expected"] = static_cast<double>(spec.initial_mutants) / n;
  if (times.size() >= 2) {
    summary["mean_absorption_time"] = result.absorption_time.mean;
    summary["se_absorption_time"] = result.absorption_time.se;
    if (spec.initial_mutants == 1) {
      summary["exact_mean_absorption_time"] = m0_expectations(spec.population_size, 1).et;
    }
  }
  manifest["summary"] = summary;
  manifest["outputs"] = {{"samples", samples_path.string()},
                         {"levels", levels_path.string()}};
  manifest["duration_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

  result.manifest = manifest;
  result.manifest_path = spec.out_base + ".manifest.json";
  write_json_file(result.manifest_path, manifest);
  return result;
}

}  // namespace moranmc
