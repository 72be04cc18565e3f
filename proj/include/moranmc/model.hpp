#pragma once

// Model inputs, simulator state and regime diagnostics for the multi-type
// Moran mutation-accumulation process. A population of N cells evolves by
// neutral Moran replacement (each individual dies at rate 1 and is replaced
// by a copy of a uniformly chosen individual, itself included) while type
// j-1 individuals mutate to type j at rate u_j during their lifetime.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace moranmc {

/// Per-stage mutation rates u_1..u_m; u[j-1] is the rate at which a type
/// j-1 individual becomes type j. A zero rate disables that stage (useful
/// for degenerate tests); rates must lie in [0, 1).
struct MutationRates {
  std::vector<double> u;

  MutationRates() = default;

  explicit MutationRates(std::vector<double> rates) : u(std::move(rates)) {
    if (u.empty()) throw std::invalid_argument("MutationRates: need at least one stage");
    for (std::size_t j = 0; j < u.size(); ++j) {
      if (!(u[j] >= 0.0) || u[j] >= 1.0 || !std::isfinite(u[j])) {
        throw std::invalid_argument("MutationRates: u_" + std::to_string(j + 1) +
                                    " = " + std::to_string(u[j]) +
                                    " is outside [0, 1)");
      }
    }
  }

  int stages() const noexcept { return static_cast<int>(u.size()); }
};

struct PopulationParams {
  std::int64_t population_size = 0;  // N
  MutationRates rates;

  PopulationParams() = default;

  PopulationParams(std::int64_t n, MutationRates r)
      : population_size(n), rates(std::move(r)) {
    if (population_size < 2) {
      throw std::invalid_argument("PopulationParams: population size must be >= 2");
    }
  }
};

/// Individuals per type, x[0..m]. Entries are nonnegative and sum to N after
/// every event; the simulators assert this in debug builds.
struct TypeCounts {
  std::vector<std::int64_t> x;

  std::int64_t total() const noexcept {
    return std::accumulate(x.begin(), x.end(), std::int64_t{0});
  }
};

/// Scaling constants r_{0,m}..r_{m,m}: r_{m,m} = 1, r_{j,m}^2 = u_{j+1} r_{j+1,m}
/// for 1 <= j < m, and r_{0,m} = u_1 r_{1,m}. r_{j,m} is the asymptotic
/// probability that a single type-j individual spawns a type-m descendant;
/// 1/(N r_{0,m}) is the waiting-time scale.
struct ScalingConstants {
  std::vector<double> r;  // index j = 0..m

  double r0() const noexcept { return r.front(); }
  double r1() const noexcept { return r[1]; }
};

/// Backward square-root recursion for the scaling constants. Computed this
/// way (rather than as products of fractional powers) so that the identity
/// r_j^2 = u_{j+1} r_{j+1} holds to round-off.
inline ScalingConstants scaling_constants(const MutationRates& rates) {
  const int m = rates.stages();
  ScalingConstants out;
  out.r.assign(static_cast<std::size_t>(m) + 1, 0.0);
  out.r[static_cast<std::size_t>(m)] = 1.0;
  for (int j = m - 1; j >= 1; --j) {
    out.r[j] = std::sqrt(rates.u[j] * out.r[j + 1]);
  }
  out.r[0] = rates.u[0] * (m >= 1 ? out.r[1] : 1.0);
  return out;
}

/// Cutoffs used to classify where a parameter set sits relative to the
/// tunneling (theorem2) and borderline (theorem3) asymptotic regimes. The
/// defaults bracket the published simulation settings; the report is
/// advisory and never gates a simulation.
struct RegimeThresholds {
  double lambda_max = 0.2;      // mutation supply N*u1 considered "small"
  double tunneling_min = 5.0;   // N*r_{1,m} considered "large"
  double gamma_lo = 0.1;        // borderline band for (N*r_{1,m})^2
  double gamma_hi = 10.0;
  double tunneling_fix = 0.1;   // below this, fixation dominates
  double ratio_min = 0.01;      // u_{j+1}/u_j considered bounded below
  double um_max = 0.1;          // final-stage rate considered "small"
};

enum class Regime {
  theorem2,
  theorem3_borderline,
  fixation_dominated,
  indeterminate,
};

inline const char* to_string(Regime r) noexcept {
  switch (r) {
    case Regime::theorem2: return "theorem2";
    case Regime::theorem3_borderline: return "theorem3-borderline";
    case Regime::fixation_dominated: return "fixation-dominated";
    case Regime::indeterminate: return "indeterminate";
  }
  return "indeterminate";
}

struct RegimeReport {
  double lambda_hat = 0.0;          // N*u1
  double tunneling_strength = 0.0;  // N*r_{1,m}
  double gamma_hat = 0.0;           // (N*r_{1,m})^2
  Regime classification = Regime::indeterminate;
  // Finite-N proxies for the four hypotheses of the tunneling limit law.
  bool cond_small_mutation_supply = false;  // (i)   N*u1 small
  bool cond_rate_ratios_bounded = false;    // (ii)  u_{j+1}/u_j bounded below
  bool cond_small_final_rate = false;       // (iii) u_m small
  bool cond_strong_tunneling = false;       // (iv)  N*r_{1,m} large
};

/// Pure threshold classification; deterministic in (params, thresholds).
inline RegimeReport check_regime(const PopulationParams& params,
                                 const RegimeThresholds& th = {}) {
  const auto& u = params.rates.u;
  const double n = static_cast<double>(params.population_size);
  const ScalingConstants sc = scaling_constants(params.rates);

  RegimeReport rep;
  rep.lambda_hat = n * u[0];
  rep.tunneling_strength = n * sc.r1();
  rep.gamma_hat = rep.tunneling_strength * rep.tunneling_strength;

  rep.cond_small_mutation_supply = rep.lambda_hat <= th.lambda_max;
  rep.cond_rate_ratios_bounded = true;
  for (std::size_t j = 0; j + 1 < u.size(); ++j) {
    if (!(u[j + 1] >= th.ratio_min * u[j])) rep.cond_rate_ratios_bounded = false;
  }
  rep.cond_small_final_rate = u.back() <= th.um_max;
  rep.cond_strong_tunneling = rep.tunneling_strength >= th.tunneling_min;

  if (rep.cond_small_mutation_supply && rep.cond_strong_tunneling) {
    rep.classification = Regime::theorem2;
  } else if (rep.cond_small_mutation_supply && rep.gamma_hat >= th.gamma_lo &&
             rep.gamma_hat <= th.gamma_hi) {
    rep.classification = Regime::theorem3_borderline;
  } else if (rep.tunneling_strength <= th.tunneling_fix) {
    rep.classification = Regime::fixation_dominated;
  } else {
    rep.classification = Regime::indeterminate;
  }
  return rep;
}

}  // namespace moranmc
