#pragma once

// Closed forms and series attached to the waiting-time problem: the scaling
// constants' companion quantities, the Riccati solution for the single-family
// success probability g2, the waiting-time law of the branching process with
// immigration, the hazard-form limit law, the borderline-regime constant
// alpha(gamma) and its boundary-value series u(x), the multi-stage success
// probability recursion, the total-progeny tail and the two-type model
// expectations. Everything here is a pure function of its arguments.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "moranmc/model.hpp"

namespace moranmc {

namespace detail {

// Adaptive Simpson with Richardson correction. g2 and the hazards integrated
// here are smooth and monotone, so the depth cap is never the binding limit.
template <class F>
double adaptive_simpson_step(const F& f, double a, double fa, double b, double fb,
                             double m, double fm, double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adaptive_simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

template <class F>
double adaptive_simpson(const F& f, double a, double b, double abs_tol = 1e-10,
                        int max_depth = 60) {
  if (!(b > a)) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson_step(f, a, fa, b, fb, m, fm, whole, abs_tol, max_depth);
}

}  // namespace detail

/// Roots r1 > 0 > r2 of x^2 + u2*x - u2 = 0. r1 is the probability that a
/// critical binary family with per-individual mutation rate u2 ever produces
/// a mutant; r1 ~ sqrt(u2) as u2 -> 0.
struct RiccatiRoots {
  double r1 = 0.0;
  double r2 = 0.0;
};

inline RiccatiRoots riccati_roots(double u2) {
  if (!(u2 > 0.0) || !std::isfinite(u2)) {
    throw std::invalid_argument("riccati_roots: u2 must be positive");
  }
  // r1 = 2u2/(u2 + sqrt(u2^2+4u2)) avoids the cancellation the textbook
  // (-u2 + sqrt(...))/2 form suffers as u2 -> 0.
  const double disc = std::sqrt(u2 * u2 + 4.0 * u2);
  RiccatiRoots roots;
  roots.r1 = 2.0 * u2 / (u2 + disc);
  roots.r2 = -u2 - roots.r1;
  return roots;
}

/// g2(t): probability that a single critical binary family, whose members
/// mutate at rate u2, produces a mutant by time t. Strictly increasing from
/// 0 toward r1; solves g2' = -u2*g2 - g2^2 + u2 with g2(0) = 0.
inline double g2(double t, double u2) {
  if (!(t >= 0.0)) throw std::invalid_argument("g2: t must be >= 0");
  const RiccatiRoots roots = riccati_roots(u2);
  // (r2 - r1) t <= 0; exp underflow flushes to the exact limit r1.
  const double decay = std::exp((roots.r2 - roots.r1) * t);
  return roots.r1 * (1.0 - decay) / (1.0 - (roots.r1 / roots.r2) * decay);
}

/// Waiting-time CDF for the first mutant in the branching process with
/// immigration at rate `immigration_rate` (new families founded at that rate,
/// each evolving like the g2 family): 1 - exp(-rate * int_0^t g2).
inline double tau2_cdf_immigration(double t, double immigration_rate, double u2) {
  if (!(t >= 0.0)) throw std::invalid_argument("tau2_cdf_immigration: t must be >= 0");
  if (!(immigration_rate >= 0.0)) {
    throw std::invalid_argument("tau2_cdf_immigration: immigration rate must be >= 0");
  }
  if (t == 0.0 || immigration_rate == 0.0) return 0.0;
  const double integral =
      detail::adaptive_simpson([u2](double s) { return g2(s, u2); }, 0.0, t);
  return -std::expm1(-immigration_rate * integral);
}

/// alpha(gamma) > 1, the borderline-regime rate multiplier: the ratio of
/// sum_k gamma^k/((k-1)!(k-1)!) to sum_k gamma^k/(k!(k-1)!).
inline double alpha(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw std::invalid_argument("alpha: gamma must be positive");
  }
  double num_term = gamma;  // gamma^k/((k-1)!)^2, k = 1
  double den_term = gamma;  // gamma^k/(k!(k-1)!), k = 1
  double num = num_term;
  double den = den_term;
  for (int k = 1; k < 500; ++k) {
    num_term *= gamma / (static_cast<double>(k) * static_cast<double>(k));
    den_term *= gamma / (static_cast<double>(k) * static_cast<double>(k + 1));
    num += num_term;
    den += den_term;
    if (num_term < 1e-16 * num && den_term < 1e-16 * den) break;
  }
  return num / den;
}

/// Value and first two derivatives of the normalized series
/// u(x) = S(x)/S(0) with S(x) = sum_k gamma^k (1-x)^k / (k!(k-1)!),
/// the solution of (1-x) u'' = gamma u with u(0) = 1, u(1) = 0.
struct USeriesDerivatives {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

inline USeriesDerivatives u_series_derivatives(double x, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("u_series: gamma must be positive");
  if (!(x >= 0.0) || !(x <= 1.0)) {
    throw std::invalid_argument("u_series: x must lie in [0, 1]");
  }
  // S(y) = sum_{k>=1} c_k y^k with c_k = gamma^k/(k!(k-1)!) and y = 1-x.
  // At x = 0 the value accumulator replays the normalizer term by term, so
  // u(0) = 1 exactly; at x = 1 every term vanishes, so u(1) = 0 exactly.
  const double y = 1.0 - x;
  double c = gamma;     // c_k
  double norm = c;      // S(0)
  double s = c * y;     // sum c_k y^k
  double sd1 = c;       // sum k c_k y^(k-1)
  double sd2 = 0.0;     // sum k(k-1) c_k y^(k-2)
  double y_km2 = 1.0;   // y^(k-2) entering the k-th term
  for (int k = 2; k <= 500; ++k) {
    c *= gamma / (static_cast<double>(k) * static_cast<double>(k - 1));
    const double kd = static_cast<double>(k);
    sd2 += c * kd * (kd - 1.0) * y_km2;
    const double y_km1 = y_km2 * y;
    sd1 += c * kd * y_km1;
    s += c * y_km1 * y;
    norm += c;
    y_km2 = y_km1;
    if (c < 1e-16 * norm) break;
  }
  USeriesDerivatives out;
  out.value = s / norm;
  out.d1 = -sd1 / norm;  // d/dx = -d/dy
  out.d2 = sd2 / norm;
  return out;
}

inline double u_series(double x, double gamma) {
  return u_series_derivatives(x, gamma).value;
}

/// Which rate enters the linear term of the success-probability quadratic:
/// lifetime mutation (individuals switch type at rate u) or mutation at
/// birth (type-j parents beget type-(j+1) offspring at rate u).
enum class MutationTiming { lifetime, at_birth };

/// Success probabilities p_{j,m}, j = 1..m, that one type-j individual in the
/// multi-type critical branching process ever has a type-m descendant.
/// Backward recursion from p_{m,m} = 1 via
///   p_j = (-b + sqrt(b^2 + 4 u_{j+1} p_{j+1}))/2.
inline std::vector<double> p_recursion(const MutationRates& rates,
                                       MutationTiming timing = MutationTiming::lifetime) {
  const int m = rates.stages();
  if (m < 2) throw std::invalid_argument("p_recursion: need m >= 2");
  for (int j = 1; j < m; ++j) {
    if (!(rates.u[j] > 0.0)) {
      throw std::invalid_argument("p_recursion: u_" + std::to_string(j + 1) +
                                  " must be positive");
    }
  }
  std::vector<double> p(static_cast<std::size_t>(m), 0.0);
  p[m - 1] = 1.0;
  for (int j = m - 2; j >= 0; --j) {
    const double u_next = rates.u[j + 1];
    const double b = timing == MutationTiming::lifetime ? u_next : u_next * p[j + 1];
    p[j] = (-b + std::sqrt(b * b + 4.0 * u_next * p[j + 1])) / 2.0;
  }
  return p;
}

/// Exact tail P(Z > n) = 4^{-n} C(2n, n) of the total progeny of a critical
/// binary branching process, via log-gamma (no overflow for any n).
inline double total_progeny_tail(std::int64_t n) {
  if (n < 0) throw std::invalid_argument("total_progeny_tail: n must be >= 0");
  if (n == 0) return 1.0;
  const double nd = static_cast<double>(n);
  const double log_tail = std::lgamma(2.0 * nd + 1.0) - 2.0 * std::lgamma(nd + 1.0) -
                          2.0 * nd * std::log(2.0);
  return std::exp(log_tail);
}

/// Closed-form expectations for the neutral two-type model started from one
/// mutant: jump counts R_k into level k (unconditional and conditional on
/// loss/fixation), occupation time L_k, and the absorption time T.
struct M0Expectations {
  double er_k = 0.0;             // E[R_k] = 2(N-k)/N
  double er_k_given_loss = 0.0;  // E[R_k | T_0 < T_N] = 2(N-k)^2/(N(N-1))
  double er_k_given_fix = 0.0;   // E[R_k | T_N < T_0] = 2k(N-k)/N
  double el_k = 0.0;             // E[L_k] = 1/k
  double et = 0.0;               // E[T] = sum_{k=1}^{N-1} 1/k
};

inline M0Expectations m0_expectations(std::int64_t population_size, std::int64_t k) {
  if (population_size < 2) {
    throw std::invalid_argument("m0_expectations: population size must be >= 2");
  }
  if (k < 1 || k > population_size - 1) {
    throw std::invalid_argument("m0_expectations: level k must lie in [1, N-1]");
  }
  const double n = static_cast<double>(population_size);
  const double kd = static_cast<double>(k);
  M0Expectations e;
  e.er_k = 2.0 * (n - kd) / n;
  e.er_k_given_loss = 2.0 * (n - kd) * (n - kd) / (n * (n - 1.0));
  e.er_k_given_fix = 2.0 * kd * (n - kd) / n;
  e.el_k = 1.0 / kd;
  e.et = 0.0;
  for (std::int64_t j = population_size - 1; j >= 1; --j) {
    e.et += 1.0 / static_cast<double>(j);
  }
  return e;
}

/// Expected waiting-time scale 1/(N u_1 r_{1,m}) = 1/(N r_{0,m}).
inline double waiting_scale(const PopulationParams& params) {
  for (double uj : params.rates.u) {
    if (!(uj > 0.0)) {
      throw std::invalid_argument("waiting_scale: all mutation rates must be positive");
    }
  }
  const ScalingConstants sc = scaling_constants(params.rates);
  return 1.0 / (static_cast<double>(params.population_size) * sc.r0());
}

/// An evaluatable limit law for scaled waiting times. Three kinds:
///   - exponential(rate): P(T > t) = exp(-rate t)
///   - theorem1(lambda):  hazard h(s) = tanh(s/lambda), survival
///                        exp(-t) ((1+e^{-2t/lambda})/2)^{-lambda};
///                        lambda = 0 degenerates to Exp(1) exactly
///   - theorem3(gamma):   Exp(alpha(gamma)) on the u1*tau scale
class LimitLaw {
 public:
  enum class Kind { exponential, theorem1, theorem3 };

  static LimitLaw exponential(double rate) {
    if (!(rate > 0.0)) throw std::invalid_argument("LimitLaw: rate must be positive");
    LimitLaw law;
    law.kind_ = Kind::exponential;
    law.rate_ = rate;
    return law;
  }

  static LimitLaw theorem1(double lambda) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("LimitLaw: lambda must be >= 0");
    LimitLaw law;
    law.kind_ = Kind::theorem1;
    law.lambda_ = lambda;
    law.rate_ = 1.0;
    return law;
  }

  static LimitLaw theorem3(double gamma) {
    LimitLaw law;
    law.kind_ = Kind::theorem3;
    law.gamma_ = gamma;
    law.rate_ = moranmc::alpha(gamma);
    return law;
  }

  Kind kind() const noexcept { return kind_; }
  double rate() const noexcept { return rate_; }
  double lambda() const noexcept { return lambda_; }
  double gamma() const noexcept { return gamma_; }

  double survival(double t) const {
    if (t <= 0.0) return 1.0;
    if (kind_ == Kind::theorem1 && lambda_ > 0.0) {
      // exp(-int_0^t h) with int h = t + lambda ln((1+e^{-2t/lambda})/2).
      const double z = std::exp(-2.0 * t / lambda_);
      return std::exp(-t) * std::pow(0.5 * (1.0 + z), -lambda_);
    }
    return std::exp(-rate_ * t);
  }

  double cdf(double t) const { return t <= 0.0 ? 0.0 : 1.0 - survival(t); }

  double pdf(double t) const {
    if (t < 0.0) return 0.0;
    if (kind_ == Kind::theorem1 && lambda_ > 0.0) {
      return hazard(t) * survival(t);
    }
    return rate_ * std::exp(-rate_ * t);
  }

  /// Hazard h(t) = pdf/survival.
  double hazard(double t) const {
    if (kind_ == Kind::theorem1 && lambda_ > 0.0) {
      return std::tanh(t / lambda_);
    }
    return rate_;
  }

  /// Smallest t with cdf(t) >= p, by bisection; used for plot grids.
  double quantile(double p) const {
    if (!(p >= 0.0) || !(p < 1.0)) {
      throw std::invalid_argument("LimitLaw::quantile: p must lie in [0, 1)");
    }
    if (p == 0.0) return 0.0;
    double hi = 1.0;
    while (cdf(hi) < p) hi *= 2.0;
    double lo = 0.0;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }

  std::string label() const {
    switch (kind_) {
      case Kind::theorem1:
        return "theorem1(lambda=" + std::to_string(lambda_) + ")";
      case Kind::theorem3:
        return "exp(alpha(" + std::to_string(gamma_) + ")=" + std::to_string(rate_) + ")";
      case Kind::exponential:
        break;
    }
    return "exp(" + std::to_string(rate_) + ")";
  }

 private:
  Kind kind_ = Kind::exponential;
  double rate_ = 1.0;
  double lambda_ = 0.0;
  double gamma_ = 0.0;
};

/// Limit law of tau_2 * N u_1 sqrt(u_2) when N u_1 -> lambda; lambda = 0 is
/// exactly Exp(1).
inline LimitLaw theorem1_law(double lambda) { return LimitLaw::theorem1(lambda); }

inline LimitLaw exponential_law(double rate) { return LimitLaw::exponential(rate); }

/// Limit law of u_1 * tau_m in the borderline regime (N r_{1,m})^2 -> gamma.
inline LimitLaw theorem3_law(double gamma) { return LimitLaw::theorem3(gamma); }

}  // namespace moranmc
