#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "resopt/errors.hpp"

namespace resopt {

/// Discrete distribution over K bins. Masses are templated so the same
/// carrier holds plain numbers or autodiff nodes.
template <class T>
struct basic_histogram {
  std::vector<double> edges;  // K+1 strictly ascending, within [0, 1]
  std::vector<T> masses;      // K

  std::size_t bins() const { return masses.size(); }
};

using histogram = basic_histogram<double>;

inline void validate_edges(std::span<const double> edges) {
  if (edges.size() < 2)
    throw invalid_parameter_error("histogram: need at least one bin");
  if (!(edges.front() >= 0.0) || !(edges.back() <= 1.0))
    throw invalid_parameter_error("histogram: edges must lie in [0, 1]");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1]))
      throw invalid_parameter_error("histogram: edges must be strictly ascending");
  }
}

inline std::vector<double> uniform_edges(std::size_t k, double lo = 0.0, double hi = 1.0) {
  if (k < 1) throw invalid_parameter_error("uniform_edges: need k >= 1");
  std::vector<double> edges(k + 1);
  for (std::size_t i = 0; i <= k; ++i) {
    edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(k);
  }
  edges.back() = hi;
  return edges;
}

inline bool same_edges(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return false;
  }
  return true;
}

/// Bin index of x, clamped into [0, K-1]; the last bin is closed above.
inline std::size_t bin_index(std::span<const double> edges, double x) {
  const std::size_t k = edges.size() - 1;
  if (x <= edges.front()) return 0;
  if (x >= edges.back()) return k - 1;
  std::size_t lo = 0, hi = k;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if (x >= edges[mid]) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

}  // namespace resopt
