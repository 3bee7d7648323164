#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "resopt/autodiff.hpp"
#include "resopt/errors.hpp"
#include "resopt/histogram.hpp"
#include "resopt/num.hpp"
#include "resopt/rng.hpp"
#include "resopt/scale.hpp"

namespace resopt {

// ---- binary cross entropy with continuous targets ---------------------------

/// -(y ln p + (1-y) ln(1-p)) with p clamped to [epsilon, 1-epsilon].
/// Minimized over p at p = target when the target is inside the clamp range.
template <class T>
T bce(double target, T predicted, double epsilon = 1e-6) {
  using std::log;
  if (!(target >= 0.0 && target <= 1.0))
    throw invalid_parameter_error("bce: target must be in [0, 1]");
  if (!(epsilon > 0.0 && epsilon < 0.5))
    throw invalid_parameter_error("bce: epsilon must be in (0, 0.5)");
  T p = clamp(predicted, epsilon, 1.0 - epsilon);
  if (target == 1.0) return -log(p);
  if (target == 0.0) return -log(1.0 - p);
  return -(target * log(p) + (1.0 - target) * log(1.0 - p));
}

// ---- scale loss -------------------------------------------------------------

/// Object-level scale loss: BCE between the boundary-derived target
/// probability of the object and the normalized scale factor phi / tau_max.
template <class T>
T scale_loss_object(double width, double height, T phi, const boundaries& b,
                    const scale_config& cfg, double area_ref, double steepness,
                    double bce_epsilon = 1e-6) {
  cfg.validate();
  const double target = target_up_probability(width, height, b, area_ref, steepness);
  return bce(target, phi * (1.0 / cfg.tau_max), bce_epsilon);
}

struct sized_object {
  double width = 0.0;
  double height = 0.0;
};

template <class T>
struct scale_loss_image {
  std::vector<sized_object> objects;
  T phi{};
  double area_ref = 1.0;
};

/// Batch scale loss: mean over images of each image's per-object mean, so
/// every image weighs equally regardless of how many objects it holds.
/// Images without objects are excluded from both averages.
template <class T>
T scale_loss_batch(std::span<const scale_loss_image<T>> images, const boundaries& b,
                   const scale_config& cfg, double steepness,
                   double bce_epsilon = 1e-6) {
  std::optional<T> acc;
  std::size_t n_images = 0;
  for (const auto& image : images) {
    if (image.objects.empty()) continue;
    std::optional<T> image_acc;
    for (const sized_object& obj : image.objects) {
      T term = scale_loss_object(obj.width, obj.height, image.phi, b, cfg,
                                 image.area_ref, steepness, bce_epsilon);
      image_acc = image_acc ? *image_acc + term : term;
    }
    T image_mean = *image_acc * (1.0 / static_cast<double>(image.objects.size()));
    acc = acc ? *acc + image_mean : image_mean;
    ++n_images;
  }
  if (!acc) throw empty_batch_error("scale_loss_batch: no image carries objects");
  return *acc * (1.0 / static_cast<double>(n_images));
}

// ---- beta distribution -------------------------------------------------------

struct beta_params {
  double alpha = 2.0;
  double beta = 2.0;

  void validate() const {
    if (!(alpha > 0.0) || !(beta > 0.0))
      throw invalid_parameter_error("beta_params: alpha and beta must be > 0");
  }
};

struct beta_moments_result {
  double mean;
  double std_dev;
};

inline beta_moments_result beta_moments(const beta_params& p) {
  p.validate();
  const double s = p.alpha + p.beta;
  const double mean = p.alpha / s;
  const double variance = p.alpha * p.beta / (s * s * (s + 1.0));
  return {mean, std::sqrt(variance)};
}

/// Normalized-area boundaries extracted from the distribution as mean +/- std,
/// with the lower one floored at 0. area_ref is carried along so callers can
/// convert back to pixel areas.
struct beta_boundaries {
  boundaries bounds;
  double area_ref = 1.0;

  double lower_pixels() const { return bounds.lower * area_ref; }
  double upper_pixels() const { return bounds.upper * area_ref; }
};

inline beta_boundaries boundaries_from_beta(const beta_params& p, double area_ref) {
  if (!(area_ref > 0.0))
    throw invalid_parameter_error("boundaries_from_beta: area_ref must be > 0");
  const beta_moments_result m = beta_moments(p);
  boundaries b;
  b.lower = std::max(0.0, m.mean - m.std_dev);
  b.upper = m.mean + m.std_dev;
  return {b, area_ref};
}

/// Discretized Beta(alpha, beta) density: mass per bin proportional to the
/// density at the bin center times the bin width, normalized to sum 1
/// (midpoint quadrature by contract). The Beta normalizing constant cancels,
/// so only exp((a-1) ln c + (b-1) ln(1-c)) is evaluated, shifted by the
/// detached max exponent for stability.
template <class T>
basic_histogram<T> beta_pdf_histogram(T alpha, T beta, std::span<const double> edges) {
  using std::exp;
  validate_edges(edges);
  const std::size_t k = edges.size() - 1;
  if (k < 2) throw invalid_parameter_error("beta_pdf_histogram: need at least 2 bins");
  if (!(value_of(alpha) > 0.0) || !(value_of(beta) > 0.0))
    throw invalid_parameter_error("beta_pdf_histogram: alpha and beta must be > 0");

  std::vector<T> exponents;
  exponents.reserve(k);
  double max_exponent = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < k; ++i) {
    const double center = 0.5 * (edges[i] + edges[i + 1]);
    T e = (alpha - 1.0) * std::log(center) + (beta - 1.0) * std::log1p(-center);
    max_exponent = std::max(max_exponent, value_of(e));
    exponents.push_back(e);
  }

  basic_histogram<T> out;
  out.edges.assign(edges.begin(), edges.end());
  out.masses.reserve(k);
  std::optional<T> total;
  for (std::size_t i = 0; i < k; ++i) {
    const double width = edges[i + 1] - edges[i];
    T m = exp(exponents[i] - max_exponent) * width;
    total = total ? *total + m : m;
    out.masses.push_back(m);
  }
  for (std::size_t i = 0; i < k; ++i) out.masses[i] = out.masses[i] / *total;
  return out;
}

inline histogram beta_pdf_histogram(const beta_params& p, std::span<const double> edges) {
  return beta_pdf_histogram<double>(p.alpha, p.beta, edges);
}

// ---- target distribution ------------------------------------------------------

enum class target_form { likelihood, plain };

/// One detected object: its normalized area and the detection loss it drew.
struct object_loss_record {
  double area = 0.0;
  double loss_value = 0.0;

  void validate() const {
    if (!(area > 0.0) || !(area < 1.0))
      throw invalid_parameter_error("object_loss_record: area must be in (0, 1)");
    if (!(loss_value >= 0.0) || !std::isfinite(loss_value))
      throw invalid_parameter_error("object_loss_record: loss must be finite and >= 0");
  }
};

/// Per-record weight: exp(-loss) for the likelihood form (detectable
/// likelihood), raw loss for the plain form.
inline double record_weight(const object_loss_record& r, target_form form) {
  return form == target_form::likelihood ? std::exp(-r.loss_value) : r.loss_value;
}

inline void record_series(std::span<const object_loss_record> records, target_form form,
                          std::vector<double>& areas, std::vector<double>& weights) {
  areas.clear();
  weights.clear();
  areas.reserve(records.size());
  weights.reserve(records.size());
  for (const auto& r : records) {
    areas.push_back(r.area);
    weights.push_back(record_weight(r, form));
  }
}

/// Histogram of per-object weights over area bins, normalized by the total
/// weight. Empty bins carry mass 0.
inline histogram target_distribution(std::span<const object_loss_record> records,
                                     std::span<const double> edges, target_form form) {
  validate_edges(edges);
  if (records.empty())
    throw insufficient_data_error("target_distribution: need at least one record");
  const std::size_t k = edges.size() - 1;
  histogram out;
  out.edges.assign(edges.begin(), edges.end());
  out.masses.assign(k, 0.0);
  double total = 0.0;
  for (const auto& r : records) {
    r.validate();
    const double w = record_weight(r, form);
    out.masses[bin_index(edges, r.area)] += w;
    total += w;
  }
  if (!(total > 0.0))
    throw degenerate_target_error("target_distribution: total weight is zero");
  for (double& m : out.masses) m /= total;
  return out;
}

// ---- wasserstein distance ------------------------------------------------------

/// W1 between histograms on identical edges: sum over bins of
/// |CDF_p - CDF_q| * bin_width. Symmetric, zero iff the histograms agree.
template <class T, class U>
auto wasserstein_1d(const basic_histogram<T>& p, const basic_histogram<U>& q) {
  using std::abs;
  if (!same_edges(p.edges, q.edges))
    throw incompatible_support_error("wasserstein_1d: histograms have different edges");
  validate_edges(p.edges);
  const std::size_t k = p.edges.size() - 1;
  if (p.masses.size() != k || q.masses.size() != k)
    throw invalid_parameter_error("wasserstein_1d: mass/edge size mismatch");

  T cdf_p = p.masses[0];
  U cdf_q = q.masses[0];
  auto acc = abs(cdf_p - cdf_q) * (p.edges[1] - p.edges[0]);
  for (std::size_t i = 1; i < k; ++i) {
    cdf_p = cdf_p + p.masses[i];
    cdf_q = cdf_q + q.masses[i];
    acc = acc + abs(cdf_p - cdf_q) * (p.edges[i + 1] - p.edges[i]);
  }
  return acc;
}

// ---- xi correlation --------------------------------------------------------------

/// Chatterjee's rank correlation xi_n. Pairs are ordered by x with ties
/// broken uniformly at random from tie_seed; y ranks r_i count values <= y_i.
/// Without ties in y this is 1 - 3 sum|r_{i+1}-r_i| / (n^2-1); with ties the
/// denominator becomes 2 sum l_i (n - l_i) with l_i counting values >= y_i
/// and the numerator is scaled by n. Returns 0 when y is constant.
inline double xi_correlation(std::span<const double> x, std::span<const double> y,
                             std::uint64_t tie_seed) {
  if (x.size() != y.size())
    throw invalid_parameter_error("xi_correlation: series length mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw insufficient_data_error("xi_correlation: need at least 2 samples");

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  rng tie_rng(tie_seed);
  tie_rng.shuffle(order.begin(), order.end());
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return x[a] < x[b]; });

  std::vector<double> sorted_y(y.begin(), y.end());
  std::sort(sorted_y.begin(), sorted_y.end());
  bool y_has_ties = false;
  for (std::size_t i = 1; i < n; ++i) {
    if (sorted_y[i] == sorted_y[i - 1]) {
      y_has_ties = true;
      break;
    }
  }

  const auto rank_le = [&](double v) -> std::uint64_t {
    return static_cast<std::uint64_t>(
        std::upper_bound(sorted_y.begin(), sorted_y.end(), v) - sorted_y.begin());
  };

  std::uint64_t jump_sum = 0;
  std::uint64_t prev_rank = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t r = rank_le(y[order[i]]);
    if (i > 0) jump_sum += r > prev_rank ? r - prev_rank : prev_rank - r;
    prev_rank = r;
  }

  const double nd = static_cast<double>(n);
  if (!y_has_ties) {
    const double denom = nd * nd - 1.0;
    return (denom - 3.0 * static_cast<double>(jump_sum)) / denom;
  }
  std::uint64_t tie_denom = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t below =
        static_cast<std::uint64_t>(std::lower_bound(sorted_y.begin(), sorted_y.end(),
                                                    y[i]) -
                                   sorted_y.begin());
    const std::uint64_t l = static_cast<std::uint64_t>(n) - below;
    tie_denom += l * (static_cast<std::uint64_t>(n) - l);
  }
  if (tie_denom == 0) return 0.0;  // y constant
  const double denom = 2.0 * static_cast<double>(tie_denom);
  return (denom - nd * static_cast<double>(jump_sum)) / denom;
}

// ---- low-pass filter and smoothed target ----------------------------------------

/// Convex blend lambda * x_prime + (1 - lambda) * x, renormalized to sum 1.
/// The endpoints return the inputs bit-for-bit.
inline histogram lpf(double lambda_coef, const histogram& x_prime, const histogram& x) {
  if (!same_edges(x_prime.edges, x.edges))
    throw incompatible_support_error("lpf: histograms have different edges");
  const double c = clamp(lambda_coef, 0.0, 1.0);
  if (c == 0.0) return x;
  if (c == 1.0) return x_prime;
  histogram out;
  out.edges = x.edges;
  out.masses.resize(x.masses.size());
  double total = 0.0;
  for (std::size_t i = 0; i < x.masses.size(); ++i) {
    out.masses[i] = c * x_prime.masses[i] + (1.0 - c) * x.masses[i];
    total += out.masses[i];
  }
  if (!(total > 0.0)) throw degenerate_target_error("lpf: blended mass is zero");
  for (double& m : out.masses) m /= total;
  return out;
}

/// The gate coefficient of the smoothed target: lambda_base * |xi| clamped
/// into [0, 1], with xi evaluated between the records' areas and their
/// per-record weights.
inline double smoothing_gate(std::span<const object_loss_record> records,
                             double lambda_base, target_form form,
                             std::uint64_t tie_seed) {
  std::vector<double> areas, weights;
  record_series(records, form, areas, weights);
  const double xi = xi_correlation(areas, weights, tie_seed);
  return clamp(lambda_base * std::fabs(xi), 0.0, 1.0);
}

/// Smoothed target distribution: blends the measured target toward the
/// current Beta histogram, gated by lambda_base * |xi(areas, weights)|.
inline histogram smoothed_target(std::span<const object_loss_record> records,
                                 const beta_params& params,
                                 std::span<const double> edges, double lambda_base,
                                 target_form form, std::uint64_t tie_seed) {
  const histogram measured = target_distribution(records, edges, form);
  const double c = smoothing_gate(records, lambda_base, form, tie_seed);
  return lpf(c, measured, beta_pdf_histogram(params, edges));
}

/// LPF blend whose model side stays live: the measured x_prime is a plain
/// histogram (detached data), while x carries whatever scalar type the
/// caller is differentiating. No endpoint special-casing here; the plain
/// double overload above keeps its bit-exact endpoints.
template <class T>
basic_histogram<T> lpf(double lambda_coef, const histogram& x_prime,
                       const basic_histogram<T>& x) {
  if (!same_edges(x_prime.edges, x.edges))
    throw incompatible_support_error("lpf: histograms have different edges");
  const double c = clamp(lambda_coef, 0.0, 1.0);
  basic_histogram<T> out;
  out.edges = x.edges;
  out.masses.reserve(x.masses.size());
  std::optional<T> total;
  for (std::size_t i = 0; i < x.masses.size(); ++i) {
    T m = (1.0 - c) * x.masses[i] + c * x_prime.masses[i];
    total = total ? *total + m : m;
    out.masses.push_back(m);
  }
  if (!(value_of(*total) > 0.0))
    throw degenerate_target_error("lpf: blended mass is zero");
  for (auto& m : out.masses) m = m / *total;
  return out;
}

// ---- distribution loss ------------------------------------------------------------

/// Wasserstein distance between the Beta histogram and the smoothed target.
/// The measured component of the target is detached data; the target's
/// Beta-blend component stays on the tape, so the xi gate scales the
/// gradient w.r.t. (alpha, beta) by exactly c = clamp(lambda_base * |xi|).
template <class T>
T distribution_loss(std::span<const object_loss_record> records, T alpha, T beta,
                    std::span<const double> edges, double lambda_base,
                    target_form form, std::uint64_t tie_seed) {
  const histogram measured = target_distribution(records, edges, form);
  const double c = smoothing_gate(records, lambda_base, form, tie_seed);
  basic_histogram<T> model = beta_pdf_histogram(alpha, beta, edges);
  basic_histogram<T> target = lpf(c, measured, model);
  return wasserstein_1d(model, target);
}

inline double distribution_loss(std::span<const object_loss_record> records,
                                const beta_params& params, std::span<const double> edges,
                                double lambda_base, target_form form,
                                std::uint64_t tie_seed) {
  return distribution_loss<double>(records, params.alpha, params.beta, edges,
                                   lambda_base, form, tie_seed);
}

// ---- weighted total ------------------------------------------------------------------

struct loss_lambdas {
  double cls = 1.0;
  double loc = 1.0;
  double scale = 0.5;  // base weight, multiplied by the detached coupling
  double dist = 0.5;   // base weight, multiplied by the detached coupling

  void validate() const {
    if (!(cls >= 0.0 && loc >= 0.0 && scale >= 0.0 && dist >= 0.0))
      throw invalid_parameter_error("loss_lambdas: weights must be >= 0");
  }
};

template <class T>
struct weighted_total {
  T total{};
  double lambda_scale_eff = 0.0;
  double lambda_dist_eff = 0.0;
};

/// Total training objective. The effective scale/dist weights couple to the
/// detached detector losses: lambda_eff = (cls + loc) * lambda_base, and no
/// gradient flows through the coupling scalars.
template <class T>
weighted_total<T> weighted_total_loss(double cls_loss, double loc_loss, T scale_loss,
                                      T dist_loss, const loss_lambdas& lam) {
  lam.validate();
  if (!std::isfinite(cls_loss) || !std::isfinite(loc_loss))
    throw invalid_parameter_error("weighted_total_loss: detached losses must be finite");
  const double coupling = cls_loss + loc_loss;
  const double lambda_scale_eff = coupling * lam.scale;
  const double lambda_dist_eff = coupling * lam.dist;
  T total = lambda_scale_eff * scale_loss + lambda_dist_eff * dist_loss +
            (lam.cls * cls_loss + lam.loc * loc_loss);
  return {total, lambda_scale_eff, lambda_dist_eff};
}

}  // namespace resopt
