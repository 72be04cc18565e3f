#pragma once

// Exact event-driven simulation of the multi-type Moran mutation model and
// the auxiliary processes used to validate it: the neutral two-type model,
// the single-mutant multi-type model, the multi-type critical branching
// process, and the branching process with immigration.
//
// The Moran simulators draw only composition-changing events: a replacement
// in which the dying individual and the parent share a type is a no-op, so
// the (dying type i, parent type j) channels with i != j fire at rate
// x_i x_j / N and self-replacements are never drawn. A monomorphic state
// therefore advances in a single exponential jump of the active mutation
// clock, which is what makes the small-mutation-rate regimes tractable.

#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "moranmc/model.hpp"
#include "moranmc/rng.hpp"

namespace moranmc {

struct SimConfig {
  double max_time = std::numeric_limits<double>::infinity();
  double max_events = 1e10;
  bool record_trajectory = false;
};

inline void validate(const SimConfig& config) {
  if (!(config.max_time > 0.0)) throw std::invalid_argument("SimConfig: max_time must be > 0");
  if (!(config.max_events > 0.0)) throw std::invalid_argument("SimConfig: max_events must be > 0");
}

struct TrajectoryPoint {
  double time = 0.0;
  std::vector<std::int64_t> counts;
};

namespace detail {

// One thinned Gillespie step. Channels, in scan order: replacement pairs
// (dying i, parent j != i) at rate x_i x_j / N, then lifetime mutations
// j -> j+1 at rate x_j u_{j+1} for j >= min_mutation_source. The selection
// uniform is drawn against the same accumulation order, with the last
// active channel as the round-off fallback.
struct MoranEvent {
  bool fired = false;     // false: no channel active (state is absorbing)
  bool mutation = false;  // true when the event was a mutation; to = new type
  int to = -1;
  double dt = 0.0;
};

inline MoranEvent moran_step(std::vector<std::int64_t>& x, const std::vector<double>& u,
                             int min_mutation_source, double inv_n, Rng& rng) {
  const int types = static_cast<int>(x.size());
  const int stages = static_cast<int>(u.size());
  // The total and the selection scan accumulate the same terms in the same
  // order, so the selection uniform (strictly below the total) always lands
  // inside a positive-rate channel.
  double total = 0.0;
  for (int i = 0; i < types; ++i) {
    if (x[i] == 0) continue;
    for (int j = 0; j < types; ++j) {
      if (j == i || x[j] == 0) continue;
      total += static_cast<double>(x[i]) * static_cast<double>(x[j]) * inv_n;
    }
  }
  for (int j = min_mutation_source; j < stages; ++j) {
    if (x[j] != 0 && u[j] > 0.0) total += static_cast<double>(x[j]) * u[j];
  }

  MoranEvent ev;
  if (total <= 0.0) return ev;
  ev.fired = true;
  ev.dt = rng.exponential(total);

  const double pick = rng.uniform01() * total;
  double acc = 0.0;
  int fb_i = -1;
  int fb_j = -1;
  for (int i = 0; i < types; ++i) {
    if (x[i] == 0) continue;
    for (int j = 0; j < types; ++j) {
      if (j == i || x[j] == 0) continue;
      acc += static_cast<double>(x[i]) * static_cast<double>(x[j]) * inv_n;
      fb_i = i;
      fb_j = j;
      if (pick < acc) {
        --x[i];
        ++x[j];
        return ev;
      }
    }
  }
  for (int j = min_mutation_source; j < stages; ++j) {
    if (x[j] == 0 || u[j] <= 0.0) continue;
    acc += static_cast<double>(x[j]) * u[j];
    if (pick < acc) {
      ev.mutation = true;
      ev.to = j + 1;
      --x[j];
      ++x[j + 1];
      return ev;
    }
    fb_i = j;
    fb_j = -1;  // remember: mutation channel
  }
  // Unreachable in exact arithmetic; absorb a stray ulp into the last
  // positive channel seen.
  if (fb_j >= 0) {
    --x[fb_i];
    ++x[fb_j];
  } else {
    ev.mutation = true;
    ev.to = fb_i + 1;
    --x[fb_i];
    ++x[fb_i + 1];
  }
  return ev;
}

}  // namespace detail

enum class TauTermination { hit_type_m, time_cutoff, event_cutoff };

inline const char* to_string(TauTermination t) noexcept {
  switch (t) {
    case TauTermination::hit_type_m: return "hit_type_m";
    case TauTermination::time_cutoff: return "time_cutoff";
    case TauTermination::event_cutoff: return "event_cutoff";
  }
  return "event_cutoff";
}

struct TauOutcome {
  double tau = 0.0;
  TauTermination termination = TauTermination::hit_type_m;
  std::uint64_t n_events = 0;
  std::vector<std::uint64_t> mutations_per_stage;  // [j-1]: count of type-j mutations
  bool type1_fixation_occurred = false;
  std::vector<TrajectoryPoint> trajectory;  // filled when config.record_trajectory
};

/// First time a type-m individual exists, starting from an all-type-0
/// population. Exact competing-clock sample; stops at the mutation that sets
/// x_m to 1, or at a cutoff (tau then holds the cutoff value and the
/// termination flag says which).
inline TauOutcome simulate_tau_m(const PopulationParams& params, const SimConfig& config,
                                 const SeedSpec& seed) {
  validate(config);
  const int m = params.rates.stages();
  const std::int64_t n = params.population_size;
  const double inv_n = 1.0 / static_cast<double>(n);
  Rng rng = make_rng(seed);

  std::vector<std::int64_t> x(static_cast<std::size_t>(m) + 1, 0);
  x[0] = n;
  TauOutcome out;
  out.mutations_per_stage.assign(static_cast<std::size_t>(m), 0);
  if (config.record_trajectory) out.trajectory.push_back({0.0, x});

  double t = 0.0;
  for (;;) {
    if (static_cast<double>(out.n_events) >= config.max_events) {
      out.tau = t;
      out.termination = TauTermination::event_cutoff;
      return out;
    }
    detail::MoranEvent ev = detail::moran_step(x, params.rates.u, 0, inv_n, rng);
    if (!ev.fired || t + ev.dt > config.max_time) {
      out.tau = config.max_time;
      out.termination = TauTermination::time_cutoff;
      return out;
    }
    t += ev.dt;
    ++out.n_events;
    assert(TypeCounts{x}.total() == n);
    if (ev.mutation) ++out.mutations_per_stage[static_cast<std::size_t>(ev.to) - 1];
    if (x[1] == n) out.type1_fixation_occurred = true;
    if (config.record_trajectory) out.trajectory.push_back({t, x});
    if (ev.mutation && ev.to == m) {
      out.tau = t;
      out.termination = TauTermination::hit_type_m;
      return out;
    }
  }
}

enum class M0Termination { absorbed, event_cutoff };

struct M0Outcome {
  std::int64_t absorbed_at = 0;  // 0 or N; the current level on event cutoff
  double absorption_time = 0.0;  // T
  std::vector<double> occupation_time;       // L_k, index k = 0..N
  std::vector<std::uint64_t> level_visits;   // R_k: sojourn intervals at k
  std::uint64_t r_total = 0;                 // 1 + sum of interior R_k
  M0Termination termination = M0Termination::absorbed;
};

/// Neutral two-type Moran model: mutant count jumps up and down at rate
/// k(N-k)/N each until absorption at 0 or N. Records the absorption time,
/// per-level occupation times, and per-level visit counts R_k. R_k counts
/// sojourn intervals at k, the initial interval included; this is the
/// convention under which E[R_k] = 2(N-k)/N and E[L_k] = R_k-mean times the
/// holding time N/(2k(N-k)) hold from a single starting mutant.
inline M0Outcome simulate_m0(std::int64_t population_size, std::int64_t initial_mutants,
                             const SimConfig& config, const SeedSpec& seed) {
  validate(config);
  if (population_size < 2) throw std::invalid_argument("simulate_m0: population size must be >= 2");
  if (initial_mutants < 0 || initial_mutants > population_size) {
    throw std::invalid_argument("simulate_m0: initial mutant count must lie in [0, N]");
  }
  const std::int64_t n = population_size;
  Rng rng = make_rng(seed);

  M0Outcome out;
  out.occupation_time.assign(static_cast<std::size_t>(n) + 1, 0.0);
  out.level_visits.assign(static_cast<std::size_t>(n) + 1, 0);

  std::int64_t k = initial_mutants;
  if (k != 0 && k != n) ++out.level_visits[static_cast<std::size_t>(k)];
  double t = 0.0;
  std::uint64_t events = 0;
  while (k != 0 && k != n) {
    if (static_cast<double>(events) >= config.max_events) {
      out.termination = M0Termination::event_cutoff;
      break;
    }
    const double rate = 2.0 * static_cast<double>(k) * static_cast<double>(n - k) /
                        static_cast<double>(n);
    const double dt = rng.exponential(rate);
    out.occupation_time[static_cast<std::size_t>(k)] += dt;
    t += dt;
    k += rng.uniform01() < 0.5 ? 1 : -1;
    ++events;
    if (k != 0 && k != n) ++out.level_visits[static_cast<std::size_t>(k)];
  }
  out.absorbed_at = k;
  out.absorption_time = t;
  out.r_total = 1;
  for (std::int64_t level = 1; level <= n - 1; ++level) {
    out.r_total += out.level_visits[static_cast<std::size_t>(level)];
  }
  return out;
}

enum class M1Termination { resolved, time_cutoff, event_cutoff };

struct M1Outcome {
  bool type_m_born = false;
  double extinction_or_fixation_time = 0.0;  // first time the nonzero count hits 0 or N
  std::int64_t max_nonzero = 0;              // running max of the nonzero-type count
  M1Termination termination = M1Termination::resolved;
  std::uint64_t n_events = 0;
  std::vector<TrajectoryPoint> trajectory;
};

/// Single-mutant model: one type-1 individual, N-1 type-0, further type-1
/// mutations disabled, mutations j -> j+1 for j >= 1 active. Runs until the
/// nonzero types die out, a type m is born, type m has become unreachable,
/// or a cutoff. The replicate mean of type_m_born estimates q_m.
inline M1Outcome simulate_m1(const PopulationParams& params, const SimConfig& config,
                             const SeedSpec& seed) {
  validate(config);
  const int m = params.rates.stages();
  if (m < 2) throw std::invalid_argument("simulate_m1: need m >= 2");
  const std::int64_t n = params.population_size;
  const double inv_n = 1.0 / static_cast<double>(n);
  Rng rng = make_rng(seed);

  // Highest stage with a zero rate: individuals below it can never reach m.
  int blocked = 0;
  for (int j = 2; j <= m; ++j) {
    if (params.rates.u[j - 1] == 0.0) blocked = j;
  }

  std::vector<std::int64_t> x(static_cast<std::size_t>(m) + 1, 0);
  x[0] = n - 1;
  x[1] = 1;
  M1Outcome out;
  out.max_nonzero = 1;
  if (config.record_trajectory) out.trajectory.push_back({0.0, x});

  double t = 0.0;
  bool absorbed_seen = false;
  for (;;) {
    const std::int64_t nonzero = n - x[0];
    if (!absorbed_seen && (nonzero == 0 || nonzero == n)) {
      out.extinction_or_fixation_time = t;
      absorbed_seen = true;
    }
    if (nonzero == 0) return out;  // extinct; type_m_born stays false
    if (blocked >= 2) {
      std::int64_t reachable = 0;
      for (int j = blocked; j <= m; ++j) reachable += x[j];
      if (nonzero == n && reachable == 0) {
        // Fixed population with no individual above the dead stage: a type m
        // can never appear.
        if (!absorbed_seen) out.extinction_or_fixation_time = t;
        return out;
      }
    }
    if (static_cast<double>(out.n_events) >= config.max_events) {
      out.termination = M1Termination::event_cutoff;
      if (!absorbed_seen) out.extinction_or_fixation_time = t;
      return out;
    }
    detail::MoranEvent ev = detail::moran_step(x, params.rates.u, 1, inv_n, rng);
    if (!ev.fired) {
      // Monomorphic in a type with no outgoing mutation; nothing can happen.
      if (!absorbed_seen) out.extinction_or_fixation_time = t;
      return out;
    }
    if (t + ev.dt > config.max_time) {
      out.termination = M1Termination::time_cutoff;
      if (!absorbed_seen) out.extinction_or_fixation_time = config.max_time;
      return out;
    }
    t += ev.dt;
    ++out.n_events;
    assert(TypeCounts{x}.total() == n);
    out.max_nonzero = std::max(out.max_nonzero, n - x[0]);
    if (config.record_trajectory) out.trajectory.push_back({t, x});
    if (ev.mutation && ev.to == m) {
      out.type_m_born = true;
      if (!absorbed_seen) out.extinction_or_fixation_time = t;
      return out;
    }
  }
}

enum class BranchTermination { extinct, hit_type_m, time_cutoff, event_cutoff };

struct BranchOutcome {
  bool type_m_born = false;
  std::uint64_t total_progeny = 1;  // type-1 individuals ever alive
  double lifetime = 0.0;            // extinction time (meaningful when extinct)
  BranchTermination termination = BranchTermination::extinct;
  std::uint64_t n_events = 0;
};

/// Multi-type critical branching process from one type-1 individual: types
/// 1 <= j < m give birth at rate 1, die at rate 1, and mutate to j+1 at rate
/// u_{j+1}. Stops as soon as a type m appears. The total-progeny tail is
/// heavy (P(Z > n) ~ 1/sqrt(pi n)), so the event cutoff is load-bearing when
/// all mutation rates vanish.
inline BranchOutcome simulate_branching(const MutationRates& rates, const SimConfig& config,
                                        const SeedSpec& seed) {
  validate(config);
  const int m = rates.stages();
  if (m < 2) throw std::invalid_argument("simulate_branching: need m >= 2");
  Rng rng = make_rng(seed);

  std::vector<std::int64_t> x(static_cast<std::size_t>(m), 0);  // x[j]: type-j count, j < m
  x[1] = 1;
  std::int64_t alive = 1;
  BranchOutcome out;

  double t = 0.0;
  for (;;) {
    if (alive == 0) {
      out.lifetime = t;
      out.termination = BranchTermination::extinct;
      return out;
    }
    if (static_cast<double>(out.n_events) >= config.max_events) {
      out.lifetime = t;
      out.termination = BranchTermination::event_cutoff;
      return out;
    }
    // Same accumulation order in the total and the selection scan, so the
    // pick always lands in a positive-rate channel.
    double total = 0.0;
    for (int j = 1; j < m; ++j) {
      if (x[j] == 0) continue;
      const double xj = static_cast<double>(x[j]);
      total += xj;
      total += xj;
      if (rates.u[j] > 0.0) total += xj * rates.u[j];
    }
    const double dt = rng.exponential(total);
    if (t + dt > config.max_time) {
      out.lifetime = config.max_time;
      out.termination = BranchTermination::time_cutoff;
      return out;
    }
    t += dt;
    ++out.n_events;

    const double pick = rng.uniform01() * total;
    double acc = 0.0;
    int type = -1;
    int action = -1;  // 0 birth, 1 death, 2 mutation
    int fb_type = -1;
    int fb_action = -1;
    for (int j = 1; j < m && action < 0; ++j) {
      if (x[j] == 0) continue;
      const double xj = static_cast<double>(x[j]);
      if (pick < (acc += xj)) { type = j; action = 0; break; }
      fb_type = j;
      fb_action = 1;
      if (pick < (acc += xj)) { type = j; action = 1; break; }
      if (rates.u[j] > 0.0) {
        fb_action = 2;
        if (pick < (acc += xj * rates.u[j])) { type = j; action = 2; break; }
      }
    }
    if (action < 0) {  // stray ulp; last positive channel absorbs it
      type = fb_type;
      action = fb_action;
    }
    if (action == 0) {
      ++x[type];
      ++alive;
      if (type == 1) ++out.total_progeny;
    } else if (action == 1) {
      --x[type];
      --alive;
    } else {
      if (type + 1 == m) {
        out.type_m_born = true;
        out.lifetime = t;
        out.termination = BranchTermination::hit_type_m;
        return out;
      }
      --x[type];
      ++x[type + 1];
    }
  }
}

struct ImmigrationOutcome {
  double tau2 = 0.0;  // first mutant time; the cutoff value when censored
  bool censored = false;
  std::uint64_t n_events = 0;
};

/// Branching process with immigration: count jumps k -> k+1 at rate
/// k + immigration_rate and k -> k-1 at rate k, every individual carrying a
/// mutation clock of rate u2. Returns the first clock firing, censored at
/// the horizon.
inline ImmigrationOutcome simulate_branching_immigration(double immigration_rate, double u2,
                                                         double horizon, const SimConfig& config,
                                                         const SeedSpec& seed) {
  validate(config);
  if (!(immigration_rate >= 0.0)) {
    throw std::invalid_argument("simulate_branching_immigration: immigration rate must be >= 0");
  }
  if (!(u2 >= 0.0)) throw std::invalid_argument("simulate_branching_immigration: u2 must be >= 0");
  if (!(horizon > 0.0)) throw std::invalid_argument("simulate_branching_immigration: horizon must be > 0");
  Rng rng = make_rng(seed);

  ImmigrationOutcome out;
  std::int64_t k = 0;
  double t = 0.0;
  for (;;) {
    if (static_cast<double>(out.n_events) >= config.max_events) {
      out.tau2 = t;
      out.censored = true;
      return out;
    }
    const double kd = static_cast<double>(k);
    const double up = kd + immigration_rate;
    const double down = kd;
    const double mut = kd * u2;
    const double total = up + down + mut;
    if (total <= 0.0) {
      out.tau2 = horizon;
      out.censored = true;
      return out;
    }
    const double dt = rng.exponential(total);
    if (t + dt > horizon || t + dt > config.max_time) {
      out.tau2 = std::min(horizon, config.max_time);
      out.censored = true;
      return out;
    }
    t += dt;
    ++out.n_events;
    const double pick = rng.uniform01() * total;
    if (pick < up) {
      ++k;
    } else if (pick < up + down) {
      --k;
    } else {
      out.tau2 = t;
      return out;
    }
  }
}

}  // namespace moranmc
