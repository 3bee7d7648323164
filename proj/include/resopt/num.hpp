#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <limits>

namespace resopt {

/// Numerically stable logistic function 1 / (1 + exp(-x)).
inline double logistic(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double clamp(double x, double lo, double hi) {
  return x < lo ? lo : (x > hi ? hi : x);
}

/// Round to nearest integer, ties to even. Does not depend on the
/// floating-point environment's rounding mode.
inline double round_half_even(double x) {
  const double f = std::floor(x);
  const double frac = x - f;
  if (frac > 0.5) return f + 1.0;
  if (frac < 0.5) return f;
  return (std::fmod(f, 2.0) == 0.0) ? f : f + 1.0;
}

/// Relative error with a floored denominator: coordinates where both values
/// are below `floor` are effectively compared in absolute terms against it.
inline double relative_error(double a, double b, double floor = 1e-3) {
  const double denom = std::max({std::fabs(a), std::fabs(b), floor});
  return std::fabs(a - b) / denom;
}

inline bool is_finite(double x) { return std::isfinite(x); }

struct mean_std {
  double mean = 0.0;
  double std_dev = 0.0;
};

template <class Range>
mean_std population_stats(const Range& xs) {
  mean_std r;
  std::size_t n = 0;
  for (double x : xs) {
    r.mean += x;
    ++n;
  }
  if (n == 0) return r;
  r.mean /= static_cast<double>(n);
  double variance = 0.0;
  for (double x : xs) variance += (x - r.mean) * (x - r.mean);
  r.std_dev = std::sqrt(variance / static_cast<double>(n));
  return r;
}

/// Pearson correlation; 0 when either series is (numerically) constant.
template <class RangeX, class RangeY>
double pearson_correlation(const RangeX& xs, const RangeY& ys) {
  std::size_t n = 0;
  double mx = 0.0, my = 0.0;
  auto yi = std::begin(ys);
  for (double x : xs) {
    mx += x;
    my += *yi++;
    ++n;
  }
  if (n < 2) return 0.0;
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  yi = std::begin(ys);
  for (double x : xs) {
    const double dy = *yi++ - my;
    sxy += (x - mx) * dy;
    sxx += (x - mx) * (x - mx);
    syy += dy * dy;
  }
  if (sxx < 1e-24 || syy < 1e-24) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace resopt
