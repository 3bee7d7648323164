#pragma once

#include <cmath>
#include <string>

#include "resopt/autodiff.hpp"
#include "resopt/errors.hpp"
#include "resopt/num.hpp"

namespace resopt {

/// Boundary target steepness so sigma_b reads 0.99 / 0.5 / 0.01 at
/// lower boundary / midpoint / upper boundary: ln(99).
inline constexpr double default_steepness = 4.595119850134589927;

/// Scale-factor range [tau_min, tau_max).
struct scale_config {
  double tau_min = 0.2;
  double tau_max = 1.5;

  double range() const { return tau_max - tau_min; }

  void validate() const {
    if (!(tau_min > 0.0) || !(tau_max > tau_min)) {
      throw invalid_parameter_error("scale_config: need 0 < tau_min < tau_max, got [" +
                                    std::to_string(tau_min) + ", " +
                                    std::to_string(tau_max) + "]");
    }
  }
};

/// Object-area thresholds (normalized units) where the up-scaling target
/// saturates: 1 below `lower`, 0 above `upper`.
struct boundaries {
  double lower = 0.0;
  double upper = 1.0;

  void validate() const {
    if (!(lower >= 0.0) || !(upper > lower)) {
      throw invalid_boundary_error("boundaries: need 0 <= lower < upper, got [" +
                                   std::to_string(lower) + ", " +
                                   std::to_string(upper) + "]");
    }
  }
};

struct resolution {
  int width = 1;
  int height = 1;

  bool operator==(const resolution&) const = default;

  void validate() const {
    if (width < 1 || height < 1)
      throw invalid_parameter_error("resolution: sides must be >= 1");
  }
};

/// phi = max(logistic(phi_raw) * tau_max, tau_min). Total on all reals;
/// gradient is 0 on the clamped branch. Works on double and on var.
/// phi < tau_max except where the logistic saturates to 1 in doubles
/// (phi_raw beyond roughly 37).
template <class T>
T clamp_scale_factor(T phi_raw, const scale_config& cfg) {
  return max_const(logistic(phi_raw) * cfg.tau_max, cfg.tau_min);
}

/// Reflected sigmoid over the boundary interval: 1 below b.lower, 0 above
/// b.upper, and logistic(-steepness * z) inside, where z affinely maps
/// [b.lower, b.upper] onto [-1, 1]. Monotone non-increasing in area.
inline double modified_sigmoid(double area, const boundaries& b, double steepness) {
  b.validate();
  if (!(steepness > 0.0))
    throw invalid_parameter_error("modified_sigmoid: steepness must be > 0");
  if (area > b.upper) return 0.0;
  if (area < b.lower) return 1.0;
  const double midpoint = 0.5 * (b.lower + b.upper);
  const double half_width = 0.5 * (b.upper - b.lower);
  const double z = (area - midpoint) / half_width;
  return logistic(-steepness * z);
}

/// Continuous up-scaling target for a ground-truth object: the reflected
/// sigmoid of its normalized area width*height / area_ref.
inline double target_up_probability(double width, double height, const boundaries& b,
                                    double area_ref, double steepness) {
  if (!(width > 0.0) || !(height > 0.0))
    throw invalid_parameter_error("target_up_probability: object sides must be > 0");
  if (!(area_ref > 0.0))
    throw invalid_parameter_error("target_up_probability: area_ref must be > 0");
  return modified_sigmoid((width * height) / area_ref, b, steepness);
}

/// Scale a resolution by phi, rounding the shorter side to the nearest
/// positive multiple of 8 (ties to even) and the longer side to the nearest
/// integer under the adjusted effective factor.
inline resolution scale_resolution(resolution res, double phi) {
  res.validate();
  if (!(phi > 0.0)) throw invalid_parameter_error("scale_resolution: phi must be > 0");
  const bool width_is_short = res.width <= res.height;
  const double short_side = width_is_short ? res.width : res.height;
  const double long_side = width_is_short ? res.height : res.width;

  double multiple = round_half_even(phi * short_side / 8.0);
  if (multiple < 1.0) multiple = 1.0;
  const double short_out = 8.0 * multiple;
  const double effective = short_out / short_side;
  double long_out = round_half_even(long_side * effective);
  if (long_out < 1.0) long_out = 1.0;

  resolution out;
  out.width = static_cast<int>(width_is_short ? short_out : long_out);
  out.height = static_cast<int>(width_is_short ? long_out : short_out);
  return out;
}

}  // namespace resopt
