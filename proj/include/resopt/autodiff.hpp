#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "resopt/errors.hpp"
#include "resopt/num.hpp"

namespace resopt {

class tape;

/// Handle to one scalar node on a tape. Copyable, trivially cheap; the value
/// and adjoint live in the tape. A var is invalidated by tape::reset() and by
/// tape::rewind() past its index.
class var {
public:
  var() = default;

  double value() const;
  double grad() const;
  tape* owner() const { return tape_; }
  std::uint32_t index() const { return index_; }
  bool valid() const { return tape_ != nullptr; }

private:
  friend class tape;
  var(tape* t, std::uint32_t i) : tape_(t), index_(i) {}

  tape* tape_ = nullptr;
  std::uint32_t index_ = 0;
};

/// Append-only record of a scalar computation. Nodes hold at most two
/// parents with precomputed local partials, so backward is a single reverse
/// sweep, linear in tape length.
class tape {
public:
  struct node {
    double value;
    double grad;
    double partial[2];
    std::uint32_t parent[2];
    std::uint32_t arity;
  };

  var leaf(double v) { return var(this, push(v, 0, 0, 0.0, 0, 0.0)); }

  std::vector<var> leaves(std::span<const double> values) {
    std::vector<var> out;
    out.reserve(values.size());
    for (double v : values) out.push_back(leaf(v));
    return out;
  }

  /// Accumulate d(root)/d(node) into every node's grad. Adjoints are formed
  /// in a scratch buffer first, so repeated calls add up cleanly.
  void backward(var root) {
    assert(root.owner() == this);
    const std::uint32_t r = root.index();
    scratch_.assign(r + 1, 0.0);
    scratch_[r] = 1.0;
    for (std::uint32_t i = r + 1; i-- > 0;) {
      const double a = scratch_[i];
      if (a == 0.0) continue;
      const node& n = nodes_[i];
      for (std::uint32_t k = 0; k < n.arity; ++k) {
        scratch_[n.parent[k]] += n.partial[k] * a;
      }
    }
    for (std::uint32_t i = 0; i <= r; ++i) nodes_[i].grad += scratch_[i];
  }

  void zero_grads() {
    for (node& n : nodes_) n.grad = 0.0;
  }

  /// Drop every node; outstanding vars become invalid. Capacity is retained.
  void reset() { nodes_.clear(); }

  std::size_t size() const { return nodes_.size(); }

  /// Checkpoint token for rewind().
  std::size_t mark() const { return nodes_.size(); }

  /// Truncate back to a mark; vars created after it become invalid.
  void rewind(std::size_t m) {
    assert(m <= nodes_.size());
    nodes_.resize(m);
  }

  double value_at(std::uint32_t i) const { return nodes_[i].value; }
  double grad_at(std::uint32_t i) const { return nodes_[i].grad; }

  /// Internal node constructors, exposed for the primitive free functions.
  std::uint32_t push(double v, std::uint32_t arity, std::uint32_t p0, double d0,
                     std::uint32_t p1, double d1) {
    node n;
    n.value = v;
    n.grad = 0.0;
    n.parent[0] = p0;
    n.parent[1] = p1;
    n.partial[0] = d0;
    n.partial[1] = d1;
    n.arity = arity;
    nodes_.push_back(n);
    return static_cast<std::uint32_t>(nodes_.size() - 1);
  }

  var unary(double v, var x, double dx) {
    assert(x.owner() == this);
    return var(this, push(v, 1, x.index(), dx, 0, 0.0));
  }

  var binary(double v, var x, double dx, var y, double dy) {
    assert(x.owner() == this && y.owner() == this);
    return var(this, push(v, 2, x.index(), dx, y.index(), dy));
  }

private:
  std::vector<node> nodes_;
  std::vector<double> scratch_;
};

inline double var::value() const { return tape_->value_at(index_); }
inline double var::grad() const { return tape_->grad_at(index_); }

inline double value_of(double x) { return x; }
inline double value_of(var v) { return v.value(); }

// ---- arithmetic -----------------------------------------------------------

inline var operator+(var a, var b) {
  return a.owner()->binary(a.value() + b.value(), a, 1.0, b, 1.0);
}
inline var operator+(var a, double c) { return a.owner()->unary(a.value() + c, a, 1.0); }
inline var operator+(double c, var a) { return a + c; }

inline var operator-(var a) { return a.owner()->unary(-a.value(), a, -1.0); }
inline var operator-(var a, var b) {
  return a.owner()->binary(a.value() - b.value(), a, 1.0, b, -1.0);
}
inline var operator-(var a, double c) { return a.owner()->unary(a.value() - c, a, 1.0); }
inline var operator-(double c, var a) { return a.owner()->unary(c - a.value(), a, -1.0); }

inline var operator*(var a, var b) {
  return a.owner()->binary(a.value() * b.value(), a, b.value(), b, a.value());
}
inline var operator*(var a, double c) { return a.owner()->unary(a.value() * c, a, c); }
inline var operator*(double c, var a) { return a * c; }

inline var operator/(var a, var b) {
  const double bv = b.value();
  return a.owner()->binary(a.value() / bv, a, 1.0 / bv, b, -a.value() / (bv * bv));
}
inline var operator/(var a, double c) { return a * (1.0 / c); }
inline var operator/(double c, var a) {
  const double av = a.value();
  return a.owner()->unary(c / av, a, -c / (av * av));
}

// ---- elementary functions ---------------------------------------------------

inline var exp(var x) {
  const double v = std::exp(x.value());
  return x.owner()->unary(v, x, v);
}

/// Natural log; throws domain_error for non-positive input (callers clamp).
inline var log(var x) {
  const double xv = x.value();
  if (!(xv > 0.0)) throw domain_error("log: non-positive argument");
  return x.owner()->unary(std::log(xv), x, 1.0 / xv);
}

inline var logistic(var x) {
  const double s = logistic(x.value());
  return x.owner()->unary(s, x, s * (1.0 - s));
}

inline var tanh(var x) {
  const double t = std::tanh(x.value());
  return x.owner()->unary(t, x, 1.0 - t * t);
}

inline var abs(var x) {
  const double xv = x.value();
  const double sign = xv > 0.0 ? 1.0 : (xv < 0.0 ? -1.0 : 0.0);
  return x.owner()->unary(std::fabs(xv), x, sign);
}

/// max(x, c) with subgradient 0 on the clamped (flat) branch.
inline var max_const(var x, double c) {
  const double xv = x.value();
  return x.owner()->unary(xv > c ? xv : c, x, xv > c ? 1.0 : 0.0);
}
inline double max_const(double x, double c) { return x > c ? x : c; }

/// clamp(x, lo, hi) with subgradient 0 outside the open interval.
inline var clamp(var x, double lo, double hi) {
  const double xv = x.value();
  const double v = xv < lo ? lo : (xv > hi ? hi : xv);
  const double d = (xv > lo && xv < hi) ? 1.0 : 0.0;
  return x.owner()->unary(v, x, d);
}

inline var relu(var x) { return max_const(x, 0.0); }
inline double relu(double x) { return x > 0.0 ? x : 0.0; }

inline var sum(std::span<const var> xs) {
  assert(!xs.empty());
  var acc = xs[0];
  for (std::size_t i = 1; i < xs.size(); ++i) acc = acc + xs[i];
  return acc;
}

inline var mean(std::span<const var> xs) {
  return sum(xs) * (1.0 / static_cast<double>(xs.size()));
}

}  // namespace resopt
