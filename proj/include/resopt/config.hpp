#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include "json.hpp"
#include "resopt/dataset.hpp"
#include "resopt/errors.hpp"
#include "resopt/oracle.hpp"
#include "resopt/predictor.hpp"
#include "resopt/scale.hpp"
#include "resopt/train.hpp"

namespace resopt {

inline std::string to_string(target_form f) {
  return f == target_form::likelihood ? "likelihood" : "plain";
}

inline target_form target_form_from_string(const std::string& s) {
  if (s == "likelihood") return target_form::likelihood;
  if (s == "plain") return target_form::plain;
  throw config_error("unknown distribution-loss form: " + s +
                     " (expected likelihood or plain)");
}

/// tau_max ladder named after the model sizes S/M/B/L/H.
inline double preset_tau_max(char preset) {
  switch (preset) {
    case 'S': return 1.25;
    case 'M': return 1.50;
    case 'B': return 1.75;
    case 'L': return 2.00;
    case 'H': return 2.25;
    default:
      throw config_error(std::string("unknown preset '") + preset +
                         "' (expected one of S, M, B, L, H)");
  }
}

inline constexpr char preset_names[5] = {'S', 'M', 'B', 'L', 'H'};

struct check_config {
  std::size_t points = 100;
  double h = 1e-5;
  double tol = 1e-4;
  std::uint64_t seed = 99;

  void validate() const {
    if (points < 1) throw invalid_parameter_error("check: points must be >= 1");
    if (!(h > 0.0)) throw invalid_parameter_error("check: h must be > 0");
    if (!(tol > 0.0)) throw invalid_parameter_error("check: tol must be > 0");
  }
};

/// One declarative file drives every command. Component seeds default to
/// values derived from the master seed; setting them in the file pins them.
struct experiment_config {
  std::uint64_t seed = 42;
  std::string out_dir = "out";
  std::string dataset_path;  // empty: resolved to <out_dir>/dataset.txt
  dataset_config dataset;
  scale_config scale;
  predictor_config predictor;
  oracle_config oracle;
  train_hyperparams train;
  check_config check;

  std::string resolved_dataset_path() const {
    return dataset_path.empty() ? out_dir + "/dataset.txt" : dataset_path;
  }

  void validate() const {
    dataset.validate();
    scale.validate();
    predictor.validate();
    oracle.validate();
    train.validate();
    check.validate();
    if (dataset.feature_dim != predictor.input_dim)
      throw config_error("dataset.feature_dim must equal predictor.input_dim");
    if (out_dir.empty()) throw config_error("out_dir must not be empty");
  }
};

/// Rederive all component seeds from a new master seed.
inline void reseed(experiment_config& cfg, std::uint64_t master) {
  cfg.seed = master;
  cfg.predictor.init_seed = mix_seed(master, 0x11);
  cfg.oracle.seed = mix_seed(master, 0x22);
  cfg.train.seed = mix_seed(master, 0x33);
  cfg.check.seed = mix_seed(master, 0x44);
}

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj,
                                std::initializer_list<const char*> allowed,
                                const std::string& where) {
  if (!obj.is_object()) throw config_error(where + ": expected a JSON object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) {
          return it.key() == k;
        }) == allowed.end()) {
      throw config_error("unknown key '" + it.key() + "' in " + where);
    }
  }
}

template <class T>
bool read_field(const nlohmann::json& obj, const char* key, T& out,
                const std::string& where) {
  if (!obj.contains(key)) return false;
  try {
    obj.at(key).get_to(out);
  } catch (const nlohmann::json::exception& e) {
    throw config_error(where + "." + key + ": " + e.what());
  }
  return true;
}

}  // namespace detail

/// Parse a config object on top of the defaults. Unknown keys are rejected
/// and every field is validated before returning.
inline experiment_config parse_experiment_config(const nlohmann::json& j) {
  using detail::read_field;
  using detail::reject_unknown_keys;

  experiment_config cfg;
  reject_unknown_keys(j, {"seed", "out_dir", "dataset_path", "dataset", "scale",
                          "predictor", "oracle", "train", "check"},
                      "config");
  read_field(j, "seed", cfg.seed, "config");
  read_field(j, "out_dir", cfg.out_dir, "config");
  read_field(j, "dataset_path", cfg.dataset_path, "config");

  bool pinned_init_seed = false, pinned_oracle_seed = false, pinned_train_seed = false,
       pinned_check_seed = false;

  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    reject_unknown_keys(d,
                        {"n_scenes", "nominal_width", "nominal_height", "min_objects",
                         "max_objects", "scene_area_log_mean", "scene_area_log_std",
                         "object_area_log_std", "area_min", "area_max",
                         "aspect_log_std", "difficulty_log_std"},
                        "dataset");
    read_field(d, "n_scenes", cfg.dataset.n_scenes, "dataset");
    read_field(d, "nominal_width", cfg.dataset.nominal.width, "dataset");
    read_field(d, "nominal_height", cfg.dataset.nominal.height, "dataset");
    read_field(d, "min_objects", cfg.dataset.min_objects, "dataset");
    read_field(d, "max_objects", cfg.dataset.max_objects, "dataset");
    read_field(d, "scene_area_log_mean", cfg.dataset.scene_area_log_mean, "dataset");
    read_field(d, "scene_area_log_std", cfg.dataset.scene_area_log_std, "dataset");
    read_field(d, "object_area_log_std", cfg.dataset.object_area_log_std, "dataset");
    read_field(d, "area_min", cfg.dataset.area_min, "dataset");
    read_field(d, "area_max", cfg.dataset.area_max, "dataset");
    read_field(d, "aspect_log_std", cfg.dataset.aspect_log_std, "dataset");
    read_field(d, "difficulty_log_std", cfg.dataset.difficulty_log_std, "dataset");
  }

  if (j.contains("scale")) {
    const auto& s = j.at("scale");
    reject_unknown_keys(s, {"tau_min", "tau_max"}, "scale");
    read_field(s, "tau_min", cfg.scale.tau_min, "scale");
    read_field(s, "tau_max", cfg.scale.tau_max, "scale");
  }

  if (j.contains("predictor")) {
    const auto& p = j.at("predictor");
    reject_unknown_keys(p,
                        {"input_dim", "hidden_dims", "activation", "init_seed",
                         "head_init_gain"},
                        "predictor");
    read_field(p, "input_dim", cfg.predictor.input_dim, "predictor");
    read_field(p, "hidden_dims", cfg.predictor.hidden_dims, "predictor");
    std::string act;
    if (read_field(p, "activation", act, "predictor")) {
      cfg.predictor.activation = activation_from_string(act);
    }
    pinned_init_seed = read_field(p, "init_seed", cfg.predictor.init_seed, "predictor");
    read_field(p, "head_init_gain", cfg.predictor.head_init_gain, "predictor");
  }

  if (j.contains("oracle")) {
    const auto& o = j.at("oracle");
    reject_unknown_keys(o, {"sweet_spot", "sharpness", "noise_std", "seed"}, "oracle");
    read_field(o, "sweet_spot", cfg.oracle.sweet_spot, "oracle");
    read_field(o, "sharpness", cfg.oracle.sharpness, "oracle");
    read_field(o, "noise_std", cfg.oracle.noise_std, "oracle");
    pinned_oracle_seed = read_field(o, "seed", cfg.oracle.seed, "oracle");
  }

  if (j.contains("train")) {
    const auto& t = j.at("train");
    reject_unknown_keys(t,
                        {"iters", "batch", "lr_predictor", "lr_beta", "lambda_cls",
                         "lambda_loc", "lambda_scale", "lambda_dist", "lambda_base",
                         "use_lpf", "form", "bins", "steepness", "bce_epsilon",
                         "alpha_init", "beta_init", "seed", "log_every"},
                        "train");
    read_field(t, "iters", cfg.train.iters, "train");
    read_field(t, "batch", cfg.train.batch, "train");
    read_field(t, "lr_predictor", cfg.train.lr_predictor, "train");
    read_field(t, "lr_beta", cfg.train.lr_beta, "train");
    read_field(t, "lambda_cls", cfg.train.lambdas.cls, "train");
    read_field(t, "lambda_loc", cfg.train.lambdas.loc, "train");
    read_field(t, "lambda_scale", cfg.train.lambdas.scale, "train");
    read_field(t, "lambda_dist", cfg.train.lambdas.dist, "train");
    read_field(t, "lambda_base", cfg.train.lambda_base, "train");
    read_field(t, "use_lpf", cfg.train.use_lpf, "train");
    std::string form;
    if (read_field(t, "form", form, "train")) {
      cfg.train.form = target_form_from_string(form);
    }
    read_field(t, "bins", cfg.train.bins, "train");
    read_field(t, "steepness", cfg.train.steepness, "train");
    read_field(t, "bce_epsilon", cfg.train.bce_epsilon, "train");
    read_field(t, "alpha_init", cfg.train.alpha_init, "train");
    read_field(t, "beta_init", cfg.train.beta_init, "train");
    pinned_train_seed = read_field(t, "seed", cfg.train.seed, "train");
    read_field(t, "log_every", cfg.train.log_every, "train");
  }

  if (j.contains("check")) {
    const auto& c = j.at("check");
    reject_unknown_keys(c, {"points", "h", "tol", "seed"}, "check");
    read_field(c, "points", cfg.check.points, "check");
    read_field(c, "h", cfg.check.h, "check");
    read_field(c, "tol", cfg.check.tol, "check");
    pinned_check_seed = read_field(c, "seed", cfg.check.seed, "check");
  }

  if (!pinned_init_seed) cfg.predictor.init_seed = mix_seed(cfg.seed, 0x11);
  if (!pinned_oracle_seed) cfg.oracle.seed = mix_seed(cfg.seed, 0x22);
  if (!pinned_train_seed) cfg.train.seed = mix_seed(cfg.seed, 0x33);
  if (!pinned_check_seed) cfg.check.seed = mix_seed(cfg.seed, 0x44);
  cfg.dataset.feature_dim = cfg.predictor.input_dim;

  cfg.validate();
  return cfg;
}

inline experiment_config load_experiment_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw config_error("cannot open config file " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw config_error(path + ": invalid JSON: " + e.what());
  }
  return parse_experiment_config(j);
}

/// Fully resolved config, suitable for byte-stable echo into the run
/// directory; reloading it reproduces the experiment exactly.
inline nlohmann::json to_json(const experiment_config& cfg) {
  nlohmann::json j;
  j["seed"] = cfg.seed;
  j["out_dir"] = cfg.out_dir;
  j["dataset_path"] = cfg.resolved_dataset_path();
  j["dataset"] = {{"n_scenes", cfg.dataset.n_scenes},
                  {"nominal_width", cfg.dataset.nominal.width},
                  {"nominal_height", cfg.dataset.nominal.height},
                  {"min_objects", cfg.dataset.min_objects},
                  {"max_objects", cfg.dataset.max_objects},
                  {"scene_area_log_mean", cfg.dataset.scene_area_log_mean},
                  {"scene_area_log_std", cfg.dataset.scene_area_log_std},
                  {"object_area_log_std", cfg.dataset.object_area_log_std},
                  {"area_min", cfg.dataset.area_min},
                  {"area_max", cfg.dataset.area_max},
                  {"aspect_log_std", cfg.dataset.aspect_log_std},
                  {"difficulty_log_std", cfg.dataset.difficulty_log_std}};
  j["scale"] = {{"tau_min", cfg.scale.tau_min}, {"tau_max", cfg.scale.tau_max}};
  j["predictor"] = {{"input_dim", cfg.predictor.input_dim},
                    {"hidden_dims", cfg.predictor.hidden_dims},
                    {"activation", to_string(cfg.predictor.activation)},
                    {"init_seed", cfg.predictor.init_seed},
                    {"head_init_gain", cfg.predictor.head_init_gain}};
  j["oracle"] = {{"sweet_spot", cfg.oracle.sweet_spot},
                 {"sharpness", cfg.oracle.sharpness},
                 {"noise_std", cfg.oracle.noise_std},
                 {"seed", cfg.oracle.seed}};
  j["train"] = {{"iters", cfg.train.iters},
                {"batch", cfg.train.batch},
                {"lr_predictor", cfg.train.lr_predictor},
                {"lr_beta", cfg.train.lr_beta},
                {"lambda_cls", cfg.train.lambdas.cls},
                {"lambda_loc", cfg.train.lambdas.loc},
                {"lambda_scale", cfg.train.lambdas.scale},
                {"lambda_dist", cfg.train.lambdas.dist},
                {"lambda_base", cfg.train.lambda_base},
                {"use_lpf", cfg.train.use_lpf},
                {"form", to_string(cfg.train.form)},
                {"bins", cfg.train.bins},
                {"steepness", cfg.train.steepness},
                {"bce_epsilon", cfg.train.bce_epsilon},
                {"alpha_init", cfg.train.alpha_init},
                {"beta_init", cfg.train.beta_init},
                {"seed", cfg.train.seed},
                {"log_every", cfg.train.log_every}};
  j["check"] = {{"points", cfg.check.points},
                {"h", cfg.check.h},
                {"tol", cfg.check.tol},
                {"seed", cfg.check.seed}};
  return j;
}

}  // namespace resopt
