#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "resopt/autodiff.hpp"
#include "resopt/num.hpp"

namespace resopt {

/// A differentiable scalar function of a parameter vector: receives a fresh
/// tape with one leaf per coordinate and returns the scalar root.
using tape_function = std::function<var(tape&, std::span<const var>)>;

struct grad_check_result {
  std::vector<double> analytic;
  std::vector<double> numeric;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  bool pass = false;
};

/// Compare reverse-mode gradients against central finite differences
/// (f(p + h e_i) - f(p - h e_i)) / 2h. Relative error uses a floored
/// denominator (see relative_error), so near-zero coordinates are compared
/// absolutely against the floor. Points near subgradient kinks are the
/// caller's responsibility to avoid (sample with a margin).
inline grad_check_result check_gradients(const tape_function& f,
                                         std::span<const double> point, double h,
                                         double tol, double denom_floor = 1e-3) {
  const std::size_t n = point.size();
  grad_check_result r;
  r.analytic.resize(n);
  r.numeric.resize(n);

  tape t;  // reused across evaluations; reset keeps capacity
  {
    auto xs = t.leaves(point);
    var root = f(t, xs);
    t.backward(root);
    for (std::size_t i = 0; i < n; ++i) r.analytic[i] = xs[i].grad();
  }

  std::vector<double> p(point.begin(), point.end());
  const auto eval = [&](std::span<const double> at) {
    t.reset();
    auto xs = t.leaves(at);
    return f(t, xs).value();
  };
  for (std::size_t i = 0; i < n; ++i) {
    const double saved = p[i];
    p[i] = saved + h;
    const double fp = eval(p);
    p[i] = saved - h;
    const double fm = eval(p);
    p[i] = saved;
    r.numeric[i] = (fp - fm) / (2.0 * h);
  }

  for (std::size_t i = 0; i < n; ++i) {
    const double e = relative_error(r.analytic[i], r.numeric[i], denom_floor);
    if (e > r.max_rel_error) {
      r.max_rel_error = e;
      r.worst_index = i;
    }
  }
  r.pass = r.max_rel_error < tol;
  return r;
}

}  // namespace resopt
