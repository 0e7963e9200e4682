#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "coexsim/error.hpp"

namespace coexsim {

inline constexpr double kZ95 = 1.959963984540054;

struct Interval {
  double lo = 0;
  double hi = 0;
};

/// Wilson score interval for k successes out of n trials.
inline Interval wilson_interval(std::size_t k, std::size_t n, double z = kZ95) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  // At k = 0 or k = n one endpoint is exactly p; rounding must not move it.
  return {k == 0 ? 0.0 : std::max(0.0, center - half), k == n ? 1.0 : std::min(1.0, center + half)};
}

struct SummaryStats {
  double mean = 0;
  double stderr_ = 0;
  Interval ci;
  std::size_t count = 0;
  bool proportion = false;
};

/// Proportions (values in {0, 1}) get Wilson intervals, everything else a
/// Student-t interval on the mean.
inline SummaryStats summarize(std::span<const double> rows, bool proportion) {
  if (rows.empty()) throw InvalidParameter("summarize: empty input");
  SummaryStats s;
  s.count = rows.size();
  s.proportion = proportion;
  const double n = static_cast<double>(rows.size());
  s.mean = std::accumulate(rows.begin(), rows.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : rows) ss += (v - s.mean) * (v - s.mean);
  const double var = rows.size() > 1 ? ss / (n - 1.0) : 0.0;
  s.stderr_ = std::sqrt(var / n);
  if (proportion) {
    std::size_t k = 0;
    for (double v : rows) k += v != 0.0 ? 1 : 0;
    s.ci = wilson_interval(k, rows.size());
  } else if (rows.size() > 1) {
    boost::math::students_t dist(n - 1.0);
    const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
    s.ci = {s.mean - t * s.stderr_, s.mean + t * s.stderr_};
  } else {
    s.ci = {s.mean, s.mean};
  }
  return s;
}

struct LinearFit {
  double slope = 0;
  double intercept = 0;
  double r2 = 0;
  double slope_stderr = 0;
  std::size_t n = 0;
};

/// Ordinary least squares y = intercept + slope x.
inline LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidParameter("linear_fit: need >= 2 paired points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) throw InvalidParameter("linear_fit: degenerate x values");
  LinearFit f;
  f.n = x.size();
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  if (x.size() > 2) {
    const double rss = std::max(0.0, syy - f.slope * sxy);
    f.slope_stderr = std::sqrt(rss / (n - 2.0) / sxx);
  }
  return f;
}

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InvalidParameter("ks_statistic: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

/// Asymptotic critical value of the two-sample KS statistic at level alpha.
inline double ks_critical(std::size_t na, std::size_t nb, double alpha) {
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  const double a = static_cast<double>(na), b = static_cast<double>(nb);
  return c * std::sqrt((a + b) / (a * b));
}

/// Smallest sample value v such that at least a fraction q of the sample is <= v.
inline double upper_order_statistic(std::vector<double> v, double q) {
  if (v.empty()) throw InvalidParameter("upper_order_statistic: empty sample");
  std::sort(v.begin(), v.end());
  auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
  k = std::clamp<std::size_t>(k, 1, v.size());
  return v[k - 1];
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw InvalidParameter("median: empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace coexsim
