#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "resopt/autodiff.hpp"
#include "resopt/dataset.hpp"
#include "resopt/errors.hpp"
#include "resopt/losses.hpp"
#include "resopt/num.hpp"
#include "resopt/oracle.hpp"
#include "resopt/predictor.hpp"
#include "resopt/rng.hpp"
#include "resopt/scale.hpp"

namespace resopt {

struct train_hyperparams {
  std::size_t iters = 3000;
  std::size_t batch = 16;
  double lr_predictor = 1e-2;
  double lr_beta = 1e-3;  // step size for (log alpha, log beta)
  loss_lambdas lambdas;
  double lambda_base = 0.9;  // gate for the xi-coupled low-pass filter
  bool use_lpf = true;       // false: train against the raw measured target
  target_form form = target_form::likelihood;
  std::size_t bins = 32;
  double steepness = default_steepness;
  double bce_epsilon = 1e-6;
  double alpha_init = 2.0;
  double beta_init = 2.0;
  std::uint64_t seed = 42;
  std::size_t log_every = 1;

  void validate() const {
    lambdas.validate();
    if (iters < 1) throw invalid_parameter_error("train: iters must be >= 1");
    if (batch < 1) throw invalid_parameter_error("train: batch must be >= 1");
    if (!(lr_predictor > 0.0) || !(lr_beta > 0.0))
      throw invalid_parameter_error("train: learning rates must be > 0");
    if (!(lambda_base >= 0.0))
      throw invalid_parameter_error("train: lambda_base must be >= 0");
    if (bins < 2) throw invalid_parameter_error("train: bins must be >= 2");
    if (!(steepness > 0.0)) throw invalid_parameter_error("train: steepness must be > 0");
    if (!(bce_epsilon > 0.0 && bce_epsilon < 0.5))
      throw invalid_parameter_error("train: bce_epsilon must be in (0, 0.5)");
    if (!(alpha_init > 0.0 && beta_init > 0.0))
      throw invalid_parameter_error("train: beta init parameters must be > 0");
    if (log_every < 1) throw invalid_parameter_error("train: log_every must be >= 1");
  }
};

struct train_record {
  std::size_t iter = 0;
  double total_loss = 0.0;
  double scale_loss = 0.0;
  double dist_loss = 0.0;
  double oracle_mean = 0.0;
  double lambda_scale_eff = 0.0;
  double lambda_dist_eff = 0.0;
  double phi_mean = 0.0;
  double phi_std = 0.0;
  double boundary_lower = 0.0;
  double boundary_upper = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double xi = 0.0;
  double pearson_batch = 0.0;
};

struct train_report {
  std::vector<train_record> records;
  bool diverged = false;
  std::size_t divergence_iter = 0;
  std::string divergence_note;

  static constexpr const char* csv_header =
      "iter,total_loss,scale_loss,dist_loss,oracle_mean,lambda_scale_eff,"
      "lambda_dist_eff,phi_mean,phi_std,boundary_lower,boundary_upper,alpha,beta,"
      "xi,pearson_batch";

  void write_csv(std::ostream& os) const {
    os << csv_header << '\n';
    char buf[400];
    for (const auto& r : records) {
      std::snprintf(buf, sizeof buf,
                    "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                    "%.17g,%.17g,%.17g,%.17g,%.17g",
                    r.iter, r.total_loss, r.scale_loss, r.dist_loss, r.oracle_mean,
                    r.lambda_scale_eff, r.lambda_dist_eff, r.phi_mean, r.phi_std,
                    r.boundary_lower, r.boundary_upper, r.alpha, r.beta, r.xi,
                    r.pearson_batch);
      os << buf << '\n';
    }
  }

  void write_boundaries_csv(std::ostream& os) const {
    os << "iter,boundary_lower,boundary_upper\n";
    char buf[128];
    for (const auto& r : records) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g", r.iter, r.boundary_lower,
                    r.boundary_upper);
      os << buf << '\n';
    }
  }

  /// Total variation of the boundary trajectory over the logged records.
  double boundary_total_variation() const {
    double tv = 0.0;
    for (std::size_t i = 1; i < records.size(); ++i) {
      tv += std::fabs(records[i].boundary_lower - records[i - 1].boundary_lower) +
            std::fabs(records[i].boundary_upper - records[i - 1].boundary_upper);
    }
    return tv;
  }
};

struct train_result {
  predictor_params params;
  double log_alpha = 0.0;
  double log_beta = 0.0;
  train_report report;
};

/// Joint training loop: per iteration, draw batch scenes uniformly with
/// replacement, predict a scale factor per scene, score each object with the
/// detection oracle at the scaled size, build the measured target from those
/// losses (pooled across the batch), and descend the weighted total.
/// Predictor weights learn through the scale loss; (log alpha, log beta)
/// learn through the distribution loss; boundaries are refreshed from the
/// Beta moments every iteration. Deterministic given the seed.
inline train_result train(const std::vector<scene>& dataset, const predictor_config& pc,
                          const scale_config& sc, const oracle_config& oc,
                          const train_hyperparams& hp) {
  pc.validate();
  sc.validate();
  oc.validate();
  hp.validate();
  if (dataset.empty()) throw empty_batch_error("train: dataset is empty");

  train_result out;
  out.params = init_params(pc);
  out.log_alpha = std::log(hp.alpha_init);
  out.log_beta = std::log(hp.beta_init);

  const std::vector<double> edges = uniform_edges(hp.bins);
  const std::size_t n_params = out.params.values.size();

  tape t;
  std::vector<std::size_t> batch_idx(hp.batch);
  std::vector<scale_loss_image<var>> images;
  std::vector<object_loss_record> records;
  std::vector<double> phis, scene_sizes, scene_phis, areas, weights;

  for (std::size_t iter = 0; iter < hp.iters; ++iter) {
    rng batch_rng(mix_seed(hp.seed, iter, 0));
    for (auto& idx : batch_idx) {
      idx = static_cast<std::size_t>(batch_rng.uniform_int(0, dataset.size() - 1));
    }

    t.reset();
    const std::vector<var> param_leaves = t.leaves(out.params.values);
    const var log_alpha_leaf = t.leaf(out.log_alpha);
    const var log_beta_leaf = t.leaf(out.log_beta);
    const var alpha = exp(log_alpha_leaf);
    const var beta = exp(log_beta_leaf);

    const beta_params current_beta{std::exp(out.log_alpha), std::exp(out.log_beta)};
    const boundaries bounds = boundaries_from_beta(current_beta, 1.0).bounds;

    images.clear();
    records.clear();
    phis.clear();
    scene_sizes.clear();
    scene_phis.clear();
    double oracle_sum = 0.0;
    std::size_t oracle_count = 0;

    for (std::size_t k = 0; k < hp.batch; ++k) {
      const scene& s = dataset[batch_idx[k]];
      const scale_prediction pred = predict_scale(param_leaves, s.features, pc, sc);
      const double phi_value = pred.phi.value();
      phis.push_back(phi_value);

      if (s.objects.empty()) continue;
      scale_loss_image<var> image;
      image.phi = pred.phi;
      image.area_ref = s.nominal_area();
      image.objects.reserve(s.objects.size());
      for (std::size_t j = 0; j < s.objects.size(); ++j) {
        const scene_object& obj = s.objects[j];
        image.objects.push_back({obj.width, obj.height});
        const double loss =
            oracle_loss(obj, phi_value, oc, mix_seed(iter, batch_idx[k], j));
        const double area_n = clamp(obj.width * obj.height / image.area_ref, 1e-12,
                                    1.0 - 1e-12);
        records.push_back({area_n, loss});
        oracle_sum += loss;
        ++oracle_count;
      }
      images.push_back(std::move(image));
      scene_sizes.push_back(s.mean_normalized_area());
      scene_phis.push_back(phi_value);
    }

    const double oracle_mean =
        oracle_count > 0 ? oracle_sum / static_cast<double>(oracle_count) : 0.0;

    const var scale_loss_total =
        images.empty()
            ? t.leaf(0.0)
            : scale_loss_batch<var>(images, bounds, sc, hp.steepness, hp.bce_epsilon);

    double xi = 0.0;
    var dist_loss_total;
    if (records.size() >= 2) {
      record_series(records, hp.form, areas, weights);
      const std::uint64_t tie_seed = mix_seed(hp.seed, iter, 1);
      xi = xi_correlation(areas, weights, tie_seed);
      if (hp.use_lpf) {
        dist_loss_total = distribution_loss<var>(records, alpha, beta, edges,
                                                 hp.lambda_base, hp.form, tie_seed);
      } else {
        dist_loss_total =
            wasserstein_1d(beta_pdf_histogram<var>(alpha, beta, edges),
                           target_distribution(records, edges, hp.form));
      }
    } else {
      dist_loss_total = t.leaf(0.0);
    }

    const weighted_total<var> totals = weighted_total_loss(
        oracle_mean, oracle_mean, scale_loss_total, dist_loss_total, hp.lambdas);

    const auto push_record = [&]() {
      const mean_std phi_stats = population_stats(phis);
      train_record rec;
      rec.iter = iter;
      rec.total_loss = totals.total.value();
      rec.scale_loss = scale_loss_total.value();
      rec.dist_loss = dist_loss_total.value();
      rec.oracle_mean = oracle_mean;
      rec.lambda_scale_eff = totals.lambda_scale_eff;
      rec.lambda_dist_eff = totals.lambda_dist_eff;
      rec.phi_mean = phi_stats.mean;
      rec.phi_std = phi_stats.std_dev;
      rec.boundary_lower = bounds.lower;
      rec.boundary_upper = bounds.upper;
      rec.alpha = current_beta.alpha;
      rec.beta = current_beta.beta;
      rec.xi = xi;
      rec.pearson_batch = pearson_correlation(scene_sizes, scene_phis);
      out.report.records.push_back(rec);
    };

    if (!std::isfinite(totals.total.value())) {
      out.report.diverged = true;
      out.report.divergence_iter = iter;
      out.report.divergence_note = "non-finite total loss at iteration " +
                                   std::to_string(iter);
      push_record();  // diagnostic record for the aborted iteration
      break;
    }

    t.backward(totals.total);
    for (std::size_t i = 0; i < n_params; ++i) {
      out.params.values[i] -= hp.lr_predictor * param_leaves[i].grad();
    }
    out.log_alpha -= hp.lr_beta * log_alpha_leaf.grad();
    out.log_beta -= hp.lr_beta * log_beta_leaf.grad();

    // exp() of the log-Beta parameters must stay positive and finite, or the
    // next iteration's Beta fit is garbage
    bool finite = std::isfinite(out.log_alpha) && std::isfinite(out.log_beta) &&
                  std::exp(out.log_alpha) > 0.0 && std::exp(out.log_beta) > 0.0 &&
                  std::isfinite(std::exp(out.log_alpha)) &&
                  std::isfinite(std::exp(out.log_beta));
    for (std::size_t i = 0; finite && i < n_params; ++i) {
      finite = std::isfinite(out.params.values[i]);
    }
    if (!finite) {
      out.report.diverged = true;
      out.report.divergence_iter = iter;
      out.report.divergence_note =
          "non-finite parameters after update at iteration " + std::to_string(iter);
      push_record();
      break;
    }

    if (iter % hp.log_every == 0 || iter + 1 == hp.iters) push_record();
  }

  t.reset();
  return out;
}

// ---- evaluation ---------------------------------------------------------------

struct size_bucket {
  double size_lo = 0.0;
  double size_hi = 0.0;
  double mean_phi = 0.0;
  std::size_t count = 0;
};

struct phi_histogram_counts {
  std::vector<double> edges;
  std::vector<std::size_t> counts;
};

struct evaluate_metrics {
  std::vector<double> phi;  // one per scene, dataset order
  double phi_mean = 0.0;
  double phi_std = 0.0;
  double pearson = 0.0;           // mean normalized object size vs phi
  double mean_oracle_loss = 0.0;  // noise-free oracle at the predicted scales
  phi_histogram_counts phi_hist;
  std::vector<size_bucket> buckets;  // quantile buckets by mean object size
};

/// Inference-only pass over a dataset: per-scene scale factors, their
/// statistics, correlation against mean object size, noise-free oracle loss,
/// and bucketed scale factors across ascending size quantiles.
inline evaluate_metrics evaluate(const std::vector<scene>& dataset,
                                 const predictor_params& params, const scale_config& sc,
                                 const oracle_config& oc, std::size_t n_buckets = 8,
                                 std::size_t hist_bins = 20) {
  sc.validate();
  oc.validate();
  if (dataset.empty()) throw empty_batch_error("evaluate: dataset is empty");

  evaluate_metrics m;
  m.phi.reserve(dataset.size());
  oracle_config quiet = oc;
  quiet.noise_std = 0.0;

  std::vector<double> sizes, phis_with_objects;
  double loss_sum = 0.0;
  std::size_t loss_count = 0;
  for (const scene& s : dataset) {
    const double phi = predict_scale(params.values, s.features, params.config, sc);
    m.phi.push_back(phi);
    if (s.objects.empty()) continue;
    sizes.push_back(s.mean_normalized_area());
    phis_with_objects.push_back(phi);
    for (const scene_object& obj : s.objects) {
      loss_sum += oracle_loss(obj, phi, quiet, 0);
      ++loss_count;
    }
  }

  const mean_std stats = population_stats(m.phi);
  m.phi_mean = stats.mean;
  m.phi_std = stats.std_dev;
  m.pearson = pearson_correlation(sizes, phis_with_objects);
  m.mean_oracle_loss = loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : 0.0;

  m.phi_hist.edges.resize(hist_bins + 1);
  m.phi_hist.counts.assign(hist_bins, 0);
  for (std::size_t i = 0; i <= hist_bins; ++i) {
    m.phi_hist.edges[i] =
        sc.tau_min + sc.range() * static_cast<double>(i) / static_cast<double>(hist_bins);
  }
  for (double phi : m.phi) {
    double u = (phi - sc.tau_min) / sc.range();
    u = clamp(u, 0.0, 1.0 - 1e-12);
    m.phi_hist.counts[static_cast<std::size_t>(u * static_cast<double>(hist_bins))]++;
  }

  if (!sizes.empty()) {
    std::vector<std::size_t> order(sizes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return sizes[a] < sizes[b]; });
    const std::size_t nb = std::min(n_buckets, order.size());
    for (std::size_t b = 0; b < nb; ++b) {
      const std::size_t lo = b * order.size() / nb;
      const std::size_t hi = (b + 1) * order.size() / nb;
      if (hi <= lo) continue;
      size_bucket bucket;
      bucket.size_lo = sizes[order[lo]];
      bucket.size_hi = sizes[order[hi - 1]];
      double sum = 0.0;
      for (std::size_t i = lo; i < hi; ++i) sum += phis_with_objects[order[i]];
      bucket.count = hi - lo;
      bucket.mean_phi = sum / static_cast<double>(bucket.count);
      m.buckets.push_back(bucket);
    }
  }
  return m;
}

}  // namespace resopt
