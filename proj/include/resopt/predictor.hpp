#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "resopt/autodiff.hpp"
#include "resopt/errors.hpp"
#include "resopt/rng.hpp"
#include "resopt/scale.hpp"

namespace resopt {

enum class activation_kind { tanh, relu };

inline std::string to_string(activation_kind a) {
  return a == activation_kind::tanh ? "tanh" : "relu";
}

inline activation_kind activation_from_string(const std::string& s) {
  if (s == "tanh") return activation_kind::tanh;
  if (s == "relu") return activation_kind::relu;
  throw invalid_parameter_error("unknown activation: " + s);
}

/// Feed-forward scale predictor: feature vector in, single raw scale factor
/// out, closed by clamp_scale_factor.
struct predictor_config {
  std::size_t input_dim = 16;
  std::vector<std::size_t> hidden_dims{32, 16};
  activation_kind activation = activation_kind::tanh;
  std::uint64_t init_seed = 1;
  /// Shrink on the output layer's init. The default zero-initializes the
  /// head, so an untrained predictor emits a constant scale factor; hidden
  /// layers keep the full fan-in-scaled range either way.
  double head_init_gain = 0.0;

  void validate() const {
    if (input_dim < 1)
      throw invalid_parameter_error("predictor_config: input_dim must be >= 1");
    for (std::size_t w : hidden_dims) {
      if (w < 1)
        throw invalid_parameter_error("predictor_config: hidden widths must be >= 1");
    }
    if (!(head_init_gain >= 0.0 && head_init_gain <= 1.0))
      throw invalid_parameter_error("predictor_config: head_init_gain must be in [0, 1]");
  }
};

/// Layer widths including input and the scalar output.
inline std::vector<std::size_t> layer_widths(const predictor_config& cfg) {
  std::vector<std::size_t> w;
  w.reserve(cfg.hidden_dims.size() + 2);
  w.push_back(cfg.input_dim);
  for (std::size_t h : cfg.hidden_dims) w.push_back(h);
  w.push_back(1);
  return w;
}

inline std::size_t param_count(const predictor_config& cfg) {
  const auto widths = layer_widths(cfg);
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    n += widths[i] * widths[i + 1] + widths[i + 1];
  }
  return n;
}

/// Trainable weights, flat per layer: W (out x in, row-major) then bias.
struct predictor_params {
  predictor_config config;
  std::vector<double> values;
};

/// Fan-in-scaled symmetric uniform init, biases zero, deterministic in
/// init_seed. The output layer is additionally shrunk by head_init_gain.
inline predictor_params init_params(const predictor_config& cfg) {
  cfg.validate();
  predictor_params p;
  p.config = cfg;
  p.values.reserve(param_count(cfg));
  rng g(cfg.init_seed);
  const auto widths = layer_widths(cfg);
  for (std::size_t layer = 0; layer + 1 < widths.size(); ++layer) {
    const std::size_t fan_in = widths[layer];
    const std::size_t fan_out = widths[layer + 1];
    double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    if (layer + 2 == widths.size()) bound *= cfg.head_init_gain;
    for (std::size_t i = 0; i < fan_in * fan_out; ++i) {
      p.values.push_back(g.uniform(-bound, bound));
    }
    for (std::size_t i = 0; i < fan_out; ++i) p.values.push_back(0.0);
  }
  return p;
}

template <class T>
T apply_activation(activation_kind a, T z) {
  using std::tanh;
  return a == activation_kind::tanh ? tanh(z) : relu(z);
}

/// Forward pass to the raw (pre-clamp) scale factor. T is double for
/// inference or var for training.
template <class T>
T predictor_forward(const predictor_config& cfg, std::span<const T> params,
                    std::span<const double> features) {
  if (features.size() != cfg.input_dim)
    throw dimension_error("predictor_forward: feature width " +
                          std::to_string(features.size()) + " != input_dim " +
                          std::to_string(cfg.input_dim));
  if (params.size() != param_count(cfg))
    throw dimension_error("predictor_forward: parameter count mismatch");

  const auto widths = layer_widths(cfg);
  std::size_t off = 0;
  std::vector<T> act;
  for (std::size_t layer = 0; layer + 1 < widths.size(); ++layer) {
    const std::size_t n_in = widths[layer];
    const std::size_t n_out = widths[layer + 1];
    const bool is_output = (layer + 2 == widths.size());
    std::vector<T> next;
    next.reserve(n_out);
    for (std::size_t j = 0; j < n_out; ++j) {
      T z = params[off + n_in * n_out + j];  // bias
      const std::size_t w_base = off + j * n_in;
      if (layer == 0) {
        for (std::size_t i = 0; i < n_in; ++i) {
          z = z + params[w_base + i] * features[i];
        }
      } else {
        for (std::size_t i = 0; i < n_in; ++i) {
          z = z + params[w_base + i] * act[i];
        }
      }
      next.push_back(is_output ? z : apply_activation(cfg.activation, z));
    }
    act = std::move(next);
    off += n_in * n_out + n_out;
  }
  return act[0];
}

struct scale_prediction {
  var phi_raw;
  var phi;
};

/// Training-path prediction: returns both the differentiable raw output and
/// the clamped scale factor on the same tape.
inline scale_prediction predict_scale(std::span<const var> params,
                                      std::span<const double> features,
                                      const predictor_config& pc,
                                      const scale_config& sc) {
  sc.validate();
  var raw = predictor_forward<var>(pc, params, features);
  return {raw, clamp_scale_factor(raw, sc)};
}

/// Inference-path prediction: plain doubles, no tape.
inline double predict_scale(std::span<const double> params,
                            std::span<const double> features,
                            const predictor_config& pc, const scale_config& sc) {
  sc.validate();
  return clamp_scale_factor(predictor_forward<double>(pc, params, features), sc);
}

}  // namespace resopt
