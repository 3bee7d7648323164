#pragma once

#include <cmath>
#include <cstdint>

#include "resopt/dataset.hpp"
#include "resopt/errors.hpp"
#include "resopt/rng.hpp"

namespace resopt {

/// Synthetic detection oracle standing in for the detector: a log-quadratic
/// bowl over the object's scaled area. Loss is minimal when
/// phi^2 * area == sweet_spot, grows symmetrically in log-area, scales with
/// object difficulty, and carries multiplicative log-normal noise.
struct oracle_config {
  double sweet_spot = 30000.0;  // scaled area, pixels^2, where loss bottoms out
  double sharpness = 1.0;       // curvature of the bowl
  double noise_std = 0.1;       // std of the multiplicative log-normal noise
  std::uint64_t seed = 7;

  void validate() const {
    if (!(sweet_spot > 0.0) || !(sharpness > 0.0) || !(noise_std >= 0.0))
      throw invalid_parameter_error(
          "oracle_config: need sweet_spot > 0, sharpness > 0, noise_std >= 0");
  }
};

/// loss = sharpness * ln(phi^2 area / sweet_spot)^2 * difficulty * noise,
/// noise = exp(noise_std * g) with g standard normal drawn from
/// (config seed, step_seed). Deterministic given step_seed; symmetric in the
/// object's width and height.
inline double oracle_loss(const scene_object& obj, double phi, const oracle_config& oc,
                          std::uint64_t step_seed) {
  if (!(phi > 0.0)) throw invalid_parameter_error("oracle_loss: phi must be > 0");
  const double scaled_area = phi * phi * obj.width * obj.height;
  const double log_ratio = std::log(scaled_area / oc.sweet_spot);
  double loss = oc.sharpness * log_ratio * log_ratio * obj.difficulty;
  if (oc.noise_std > 0.0) {
    rng g(mix_seed(oc.seed, step_seed));
    loss *= std::exp(oc.noise_std * g.normal());
  }
  return loss;
}

}  // namespace resopt
