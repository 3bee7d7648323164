#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "resopt/errors.hpp"
#include "resopt/rng.hpp"
#include "resopt/scale.hpp"

namespace resopt {

struct scene_object {
  double width = 1.0;       // pixels
  double height = 1.0;      // pixels
  double difficulty = 1.0;  // multiplicative loss factor, > 0
};

/// One synthetic image record: nominal resolution, ground-truth object sizes,
/// and the precomputed feature vector fed to the scale predictor.
struct scene {
  resolution nominal{600, 1000};
  std::vector<scene_object> objects;
  std::vector<double> features;

  double nominal_area() const {
    return static_cast<double>(nominal.width) * static_cast<double>(nominal.height);
  }

  double mean_normalized_area() const {
    if (objects.empty()) return 0.0;
    double s = 0.0;
    for (const auto& o : objects) s += o.width * o.height;
    return s / (static_cast<double>(objects.size()) * nominal_area());
  }
};

/// Synthetic dataset knobs. Object areas are drawn log-normally around a
/// per-scene scale (itself log-normal), then clamped into [area_min,
/// area_max] and into the frame; this makes scenes differ strongly in their
/// typical object size.
struct dataset_config {
  std::size_t n_scenes = 2000;
  resolution nominal{600, 1000};
  std::size_t min_objects = 1;
  std::size_t max_objects = 10;
  double scene_area_log_mean = -3.0;  // ln of the median normalized scene scale
  double scene_area_log_std = 1.0;
  double object_area_log_std = 0.5;
  double area_min = 1e-4;
  double area_max = 0.5;
  double aspect_log_std = 0.4;
  double difficulty_log_std = 0.25;
  std::size_t feature_dim = 16;

  void validate() const {
    nominal.validate();
    if (n_scenes < 1) throw invalid_parameter_error("dataset_config: n_scenes >= 1");
    if (min_objects > max_objects)
      throw invalid_parameter_error("dataset_config: min_objects > max_objects");
    if (!(area_min > 0.0 && area_max > area_min && area_max <= 1.0))
      throw invalid_parameter_error("dataset_config: need 0 < area_min < area_max <= 1");
    if (!(scene_area_log_std >= 0.0 && object_area_log_std >= 0.0 &&
          aspect_log_std >= 0.0 && difficulty_log_std >= 0.0))
      throw invalid_parameter_error("dataset_config: log-stds must be >= 0");
    if (feature_dim < 1)
      throw invalid_parameter_error("dataset_config: feature_dim >= 1");
  }
};

/// Fixed-width scene summary fed to the predictor: eight size statistics
/// followed by a sqrt-area histogram sketch in the remaining slots. An empty
/// scene maps to the zero vector.
inline std::vector<double> scene_features(const scene& s, std::size_t dim) {
  std::vector<double> f(dim, 0.0);
  if (s.objects.empty()) return f;

  const double area_ref = s.nominal_area();
  std::vector<double> areas;
  areas.reserve(s.objects.size());
  for (const auto& o : s.objects) areas.push_back(o.width * o.height / area_ref);

  const double n = static_cast<double>(areas.size());
  double mean = 0.0, lo = areas[0], hi = areas[0];
  for (double a : areas) {
    mean += a;
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  mean /= n;
  double variance = 0.0;
  for (double a : areas) variance += (a - mean) * (a - mean);
  variance /= n;

  std::vector<double> sorted_areas = areas;
  std::sort(sorted_areas.begin(), sorted_areas.end());
  const std::size_t mid = sorted_areas.size() / 2;
  const double median = sorted_areas.size() % 2 == 1
                            ? sorted_areas[mid]
                            : 0.5 * (sorted_areas[mid - 1] + sorted_areas[mid]);

  const double stats[8] = {n / 10.0,
                           mean,
                           std::sqrt(variance),
                           lo,
                           hi,
                           std::sqrt(mean),
                           std::log(mean + 1e-6) / 10.0,
                           median};
  const std::size_t n_stats = std::min<std::size_t>(8, dim);
  for (std::size_t i = 0; i < n_stats; ++i) f[i] = stats[i];

  const std::size_t n_bins = dim > 8 ? dim - 8 : 0;
  if (n_bins > 0) {
    for (double a : areas) {
      const double u = std::min(std::sqrt(a), 1.0 - 1e-12);
      const std::size_t b = static_cast<std::size_t>(u * static_cast<double>(n_bins));
      f[8 + b] += 1.0 / n;
    }
  }
  return f;
}

/// Deterministic synthetic scenes. Each scene draws from its own stream
/// seeded by (seed, scene index), so generation order does not matter.
inline std::vector<scene> generate_dataset(const dataset_config& cfg,
                                           std::uint64_t seed) {
  cfg.validate();
  std::vector<scene> scenes(cfg.n_scenes);
  for (std::size_t s = 0; s < cfg.n_scenes; ++s) {
    rng g(mix_seed(seed, s));
    scene& sc = scenes[s];
    sc.nominal = cfg.nominal;
    const double area_ref = sc.nominal_area();
    const std::size_t count = static_cast<std::size_t>(
        g.uniform_int(cfg.min_objects, cfg.max_objects));
    const double scene_scale = g.log_normal(cfg.scene_area_log_mean,
                                            cfg.scene_area_log_std);
    sc.objects.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      const double a = clamp(scene_scale * g.log_normal(0.0, cfg.object_area_log_std),
                             cfg.area_min, cfg.area_max);
      const double aspect = g.log_normal(0.0, cfg.aspect_log_std);
      scene_object obj;
      obj.width = std::sqrt(a * area_ref * aspect);
      obj.height = std::sqrt(a * area_ref / aspect);
      obj.width = clamp(obj.width, 1.0, 0.99 * sc.nominal.width);
      obj.height = clamp(obj.height, 1.0, 0.99 * sc.nominal.height);
      obj.difficulty = g.log_normal(0.0, cfg.difficulty_log_std);
      sc.objects.push_back(obj);
    }
    sc.features = scene_features(sc, cfg.feature_dim);
  }
  return scenes;
}

// ---- dataset file format ----------------------------------------------------
//
// Plain text, one scene per line after a one-line header:
//
//   resopt-dataset 1
//   <W> <H> <n> <w1> <h1> <d1> ... <wn> <hn> <dn>
//
// W, H are the nominal resolution; each object contributes width, height and
// difficulty. Doubles are printed with %.17g, so rewriting a loaded file is
// byte-identical.

inline void write_dataset(std::ostream& os, const std::vector<scene>& scenes) {
  os << "resopt-dataset 1\n";
  char buf[64];
  for (const scene& s : scenes) {
    os << s.nominal.width << ' ' << s.nominal.height << ' ' << s.objects.size();
    for (const auto& o : s.objects) {
      for (double v : {o.width, o.height, o.difficulty}) {
        std::snprintf(buf, sizeof buf, " %.17g", v);
        os << buf;
      }
    }
    os << '\n';
  }
}

inline void write_dataset(const std::string& path, const std::vector<scene>& scenes) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw io_error("write_dataset: cannot open " + path);
  write_dataset(os, scenes);
  if (!os) throw io_error("write_dataset: write failed for " + path);
}

inline std::vector<scene> read_dataset(std::istream& is, std::size_t feature_dim) {
  std::string line;
  if (!std::getline(is, line) || line != "resopt-dataset 1")
    throw io_error("read_dataset: missing or unsupported header line");
  std::vector<scene> scenes;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    scene s;
    std::size_t n = 0;
    if (!(ls >> s.nominal.width >> s.nominal.height >> n))
      throw io_error("read_dataset: malformed scene on line " + std::to_string(line_no));
    s.nominal.validate();
    s.objects.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (!(ls >> s.objects[i].width >> s.objects[i].height >> s.objects[i].difficulty))
        throw io_error("read_dataset: truncated object list on line " +
                       std::to_string(line_no));
    }
    s.features = scene_features(s, feature_dim);
    scenes.push_back(std::move(s));
  }
  return scenes;
}

inline std::vector<scene> read_dataset(const std::string& path, std::size_t feature_dim) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw io_error("read_dataset: cannot open " + path);
  return read_dataset(is, feature_dim);
}

}  // namespace resopt
