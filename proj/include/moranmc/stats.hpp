#pragma once

// Empirical-distribution machinery for validating simulator output against
// reference laws: ECDF evaluation, the exact two-sided Kolmogorov-Smirnov
// statistic with its asymptotic p-value, and moment estimates with standard
// errors. All operations are pure and deterministic.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace moranmc {

/// Empirical CDF of a finite sample; evaluation at t returns (#samples <= t)/n.
class Ecdf {
 public:
  explicit Ecdf(std::vector<double> samples) : sorted_(std::move(samples)) {
    if (sorted_.empty()) throw std::invalid_argument("Ecdf: empty sample");
    std::sort(sorted_.begin(), sorted_.end());
  }

  double operator()(double t) const noexcept {
    const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), t);
    return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
  }

  std::size_t size() const noexcept { return sorted_.size(); }
  const std::vector<double>& sorted() const noexcept { return sorted_; }

 private:
  std::vector<double> sorted_;
};

inline Ecdf ecdf(std::vector<double> samples) { return Ecdf(std::move(samples)); }

struct GofReport {
  double ks_statistic = 0.0;
  std::size_t n = 0;
  double p_value = 1.0;
  double censored_fraction = 0.0;
};

/// Survival function of the Kolmogorov distribution, Q(x) = P(K > x).
/// Alternating series for moderate x, dual theta series for small x; terms
/// truncated below 1e-12.
inline double kolmogorov_survival(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 0.3) {
    double cdf = 0.0;
    const double pre = std::sqrt(2.0 * std::numbers::pi) / x;
    for (int k = 1; k < 200; k += 2) {
      const double term = std::exp(-static_cast<double>(k) * static_cast<double>(k) *
                                   std::numbers::pi * std::numbers::pi / (8.0 * x * x));
      cdf += pre * term;
      if (pre * term < 1e-12) break;
    }
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double q = 0.0;
  double sign = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double term = std::exp(-2.0 * static_cast<double>(k) * static_cast<double>(k) * x * x);
    q += sign * 2.0 * term;
    if (2.0 * term < 1e-12) break;
    sign = -sign;
  }
  return std::clamp(q, 0.0, 1.0);
}

/// Two-sided KS distance sup_t |ECDF(t) - cdf(t)|, evaluated exactly by
/// checking both one-sided gaps at every sample point (ties handled by the
/// i/n and (i-1)/n limits). The p-value is asymptotic, from K(sqrt(n) D_n).
template <class Cdf>
GofReport ks_statistic(std::span<const double> samples, Cdf&& cdf,
                       double censored_fraction = 0.0) {
  if (samples.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = cdf(sorted[i]);
    const double upper = static_cast<double>(i + 1) / static_cast<double>(n) - f;
    const double lower = f - static_cast<double>(i) / static_cast<double>(n);
    d = std::max({d, upper, lower});
  }
  GofReport report;
  report.ks_statistic = d;
  report.n = n;
  report.p_value = kolmogorov_survival(std::sqrt(static_cast<double>(n)) * d);
  report.censored_fraction = censored_fraction;
  return report;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

/// Sample mean and standard error s/sqrt(n), with s the n-1 denominator
/// standard deviation.
inline MeanSe mean_se(std::span<const double> samples) {
  const std::size_t n = samples.size();
  if (n < 2) throw std::invalid_argument("mean_se: need at least two samples");
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  const double var = ss / static_cast<double>(n - 1);
  return {mean, std::sqrt(var / static_cast<double>(n))};
}

struct RateEstimate {
  double rate = 0.0;
  double se = 0.0;
};

/// Exponential-rate MLE 1/mean with delta-method standard error rate/sqrt(n).
inline RateEstimate rate_mle(std::span<const double> samples) {
  if (samples.size() < 2) throw std::invalid_argument("rate_mle: need at least two samples");
  for (double v : samples) {
    if (!(v > 0.0)) throw std::invalid_argument("rate_mle: samples must be positive");
  }
  const MeanSe m = mean_se(samples);
  const double rate = 1.0 / m.mean;
  return {rate, rate / std::sqrt(static_cast<double>(samples.size()))};
}

}  // namespace moranmc
