#pragma once

// Independent reference implementations used to cross-check the main code
// paths. Everything here is deliberately written from first principles
// (quadratic-time ranks, greedy transport, naive loops) and must not call
// the functions it verifies.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "resopt/histogram.hpp"
#include "resopt/losses.hpp"
#include "resopt/rng.hpp"

namespace resopt::verify {

/// Exact 1D optimal transport between histograms treated as point masses at
/// bin centers: greedy monotone coupling, which is optimal on the line.
inline double wasserstein_monotone_coupling(const histogram& p, const histogram& q) {
  const std::size_t k = p.masses.size();
  std::vector<double> centers(k);
  for (std::size_t i = 0; i < k; ++i) centers[i] = 0.5 * (p.edges[i] + p.edges[i + 1]);

  std::vector<double> supply = p.masses;
  std::vector<double> demand = q.masses;
  double cost = 0.0;
  std::size_t i = 0, j = 0;
  while (i < k && j < k) {
    const double moved = std::min(supply[i], demand[j]);
    cost += moved * std::fabs(centers[i] - centers[j]);
    supply[i] -= moved;
    demand[j] -= moved;
    if (supply[i] <= 1e-15) ++i;
    if (demand[j] <= 1e-15) ++j;
  }
  return cost;
}

/// Chatterjee's xi with quadratic-time rank counting. Shares only the
/// tie-break permutation scheme (shuffle + stable sort) with the main
/// implementation, since that choice is arbitrary by definition.
inline double xi_brute_force(std::span<const double> x, std::span<const double> y,
                             std::uint64_t tie_seed) {
  const std::size_t n = x.size();
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  rng tie_rng(tie_seed);
  tie_rng.shuffle(order.begin(), order.end());
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return x[a] < x[b]; });

  const auto count_le = [&](double v) {
    std::size_t c = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (y[j] <= v) ++c;
    }
    return c;
  };
  const auto count_ge = [&](double v) {
    std::size_t c = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (y[j] >= v) ++c;
    }
    return c;
  };

  double jump_sum = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double r0 = static_cast<double>(count_le(y[order[i]]));
    const double r1 = static_cast<double>(count_le(y[order[i + 1]]));
    jump_sum += std::fabs(r1 - r0);
  }

  bool ties = false;
  {
    std::vector<double> sy(y.begin(), y.end());
    std::sort(sy.begin(), sy.end());
    for (std::size_t i = 1; i < n; ++i) {
      if (sy[i] == sy[i - 1]) ties = true;
    }
  }
  const double nd = static_cast<double>(n);
  if (!ties) {
    const double denom = nd * nd - 1.0;
    return (denom - 3.0 * jump_sum) / denom;
  }
  double tie_denom = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double l = static_cast<double>(count_ge(y[i]));
    tie_denom += l * (nd - l);
  }
  if (tie_denom == 0.0) return 0.0;
  return (2.0 * tie_denom - nd * jump_sum) / (2.0 * tie_denom);
}

/// Random normalized histogram on the given edges.
inline histogram random_histogram(std::span<const double> edges, rng& g) {
  histogram h;
  h.edges.assign(edges.begin(), edges.end());
  const std::size_t k = edges.size() - 1;
  h.masses.resize(k);
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    h.masses[i] = g.uniform(0.0, 1.0) + 1e-6;
    total += h.masses[i];
  }
  for (double& m : h.masses) m /= total;
  return h;
}

/// Mean and std of a Beta distribution estimated by discretizing it onto a
/// fine grid, for cross-checking the closed-form moments.
inline beta_moments_result beta_moments_from_histogram(const beta_params& p,
                                                       std::size_t bins) {
  const auto edges = uniform_edges(bins);
  const histogram h = beta_pdf_histogram(p, edges);
  double mean = 0.0;
  for (std::size_t i = 0; i < bins; ++i) {
    mean += h.masses[i] * 0.5 * (edges[i] + edges[i + 1]);
  }
  double variance = 0.0;
  for (std::size_t i = 0; i < bins; ++i) {
    const double c = 0.5 * (edges[i] + edges[i + 1]);
    variance += h.masses[i] * (c - mean) * (c - mean);
  }
  return {mean, std::sqrt(variance)};
}

/// Pearson correlation, naive two-pass formula.
inline double pearson(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx < 1e-24 || syy < 1e-24) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace resopt::verify
