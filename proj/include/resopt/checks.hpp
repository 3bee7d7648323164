#pragma once

// Runtime verification suites behind the `check` command and the acceptance
// tests: gradient fidelity against finite differences, Wasserstein metric
// properties against the monotone-coupling oracle, xi correlation against a
// brute-force rank implementation, and Beta moment consistency.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "resopt/dataset.hpp"
#include "resopt/gradcheck.hpp"
#include "resopt/losses.hpp"
#include "resopt/oracle.hpp"
#include "resopt/predictor.hpp"
#include "resopt/rng.hpp"
#include "resopt/verify.hpp"

namespace resopt::checks {

struct check_outcome {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace detail {

inline std::string format_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

/// Apply the negative-control fault: bump one analytic gradient and rescore.
inline void inject_gradient_fault(grad_check_result& r, double tol) {
  if (r.analytic.empty()) return;
  r.analytic[0] += 0.5;
  r.max_rel_error = 0.0;
  for (std::size_t i = 0; i < r.analytic.size(); ++i) {
    const double e = relative_error(r.analytic[i], r.numeric[i]);
    if (e > r.max_rel_error) {
      r.max_rel_error = e;
      r.worst_index = i;
    }
  }
  r.pass = r.max_rel_error < tol;
}

}  // namespace detail

/// Gradient fidelity at random interior points (margin-checked away from the
/// clamp and |.| kinks). `inject_fault` names a check whose analytic gradient
/// is deliberately corrupted, as a negative control.
inline std::vector<check_outcome> gradient_checks(std::size_t points, double h,
                                                  double tol, std::uint64_t seed,
                                                  const std::string& inject_fault = "") {
  std::vector<check_outcome> outcomes;
  const double kink_margin = 1e-3;

  // -- scale loss w.r.t. phi_raw through the clamp interior -------------------
  {
    check_outcome oc;
    oc.name = "grad.scale_loss_object.phi_raw";
    oc.pass = true;
    double worst = 0.0;
    rng g(mix_seed(seed, 1));
    for (std::size_t p = 0; p < points; ++p) {
      scale_config sc;
      sc.tau_min = 0.2;
      sc.tau_max = g.uniform(1.25, 2.25);
      boundaries b;
      b.lower = g.uniform(0.0, 0.3);
      b.upper = b.lower + g.uniform(0.05, 0.5);
      const double area_ref = 600.0 * 1000.0;
      const double w = g.uniform(5.0, 550.0);
      const double hh = g.uniform(5.0, 550.0);
      const double eps = 1e-6;

      double phi_raw;
      for (;;) {
        phi_raw = g.uniform(-3.0, 3.0);
        const double phi = logistic(phi_raw) * sc.tau_max;
        const double pred = phi / sc.tau_max;
        if (phi > sc.tau_min + kink_margin && pred > eps + kink_margin &&
            pred < 1.0 - eps - kink_margin) {
          break;
        }
      }

      const tape_function f = [=](tape& t, std::span<const var> xs) -> var {
        (void)t;
        var phi = clamp_scale_factor(xs[0], sc);
        return scale_loss_object(w, hh, phi, b, sc, area_ref, default_steepness, eps);
      };
      const double point[1] = {phi_raw};
      auto r = check_gradients(f, point, h, tol);
      if (oc.name == inject_fault) detail::inject_gradient_fault(r, tol);
      worst = std::max(worst, r.max_rel_error);
      if (!r.pass) {
        oc.pass = false;
        break;
      }
    }
    oc.detail = "max rel err " + detail::format_g(worst) + " over " +
                std::to_string(points) + " points";
    outcomes.push_back(oc);
  }

  // -- distribution loss w.r.t. (log alpha, log beta) --------------------------
  {
    check_outcome oc;
    oc.name = "grad.distribution_loss.log_beta_params";
    oc.pass = true;
    double worst = 0.0;
    std::size_t evaluated = 0;
    rng g(mix_seed(seed, 2));
    const auto edges = uniform_edges(32);
    for (std::size_t p = 0; p < points; ++p) {
      const target_form form =
          (p % 2 == 0) ? target_form::likelihood : target_form::plain;
      std::vector<object_loss_record> records(24);
      const std::uint64_t tie_seed = g.next_u64();

      double la = 0.0, lb = 0.0;
      bool interior = false;
      for (int attempt = 0; attempt < 64 && !interior; ++attempt) {
        for (auto& r : records) {
          r.area = g.uniform(0.005, 0.7);
          r.loss_value = g.uniform(0.01, 3.0);
        }
        la = g.uniform(std::log(0.7), std::log(6.0));
        lb = g.uniform(std::log(0.7), std::log(6.0));
        const beta_params bp{std::exp(la), std::exp(lb)};
        const histogram bh = beta_pdf_histogram(bp, edges);
        const histogram target = smoothed_target(records, bp, edges, 0.9, form,
                                                 tie_seed);
        interior = smoothing_gate(records, 0.9, form, tie_seed) >= 0.05;
        // last bin excluded: both CDFs end at 1 there by construction
        double cp = 0.0, cq = 0.0;
        for (std::size_t i = 0; i + 1 < bh.masses.size(); ++i) {
          cp += bh.masses[i];
          cq += target.masses[i];
          if (std::fabs(cp - cq) < 3e-5) interior = false;
        }
      }
      if (!interior) continue;  // could not find a kink-free draw; skip point
      ++evaluated;

      const std::vector<object_loss_record> fixed = records;
      const tape_function f = [=](tape& t, std::span<const var> xs) -> var {
        (void)t;
        return distribution_loss<var>(fixed, exp(xs[0]), exp(xs[1]), edges, 0.9, form,
                                      tie_seed);
      };
      const double point[2] = {la, lb};
      auto r = check_gradients(f, point, h, tol);
      if (oc.name == inject_fault) detail::inject_gradient_fault(r, tol);
      worst = std::max(worst, r.max_rel_error);
      if (!r.pass) {
        oc.pass = false;
        break;
      }
    }
    if (evaluated < points) oc.pass = false;
    oc.detail = "max rel err " + detail::format_g(worst) + " over " +
                std::to_string(evaluated) + "/" + std::to_string(points) + " points";
    outcomes.push_back(oc);
  }

  // -- full weighted total w.r.t. all predictor weights (+ log beta params) ----
  {
    check_outcome oc;
    oc.name = "grad.weighted_total.predictor_weights";
    oc.pass = true;
    double worst = 0.0;
    std::size_t evaluated = 0;
    rng g(mix_seed(seed, 3));

    predictor_config pc;  // default 16 -> [32, 16] -> 1
    scale_config sc;
    oracle_config ocfg;
    ocfg.noise_std = 0.05;
    dataset_config dc;
    dc.n_scenes = 2;
    dc.min_objects = 3;
    dc.max_objects = 5;
    const auto scenes = generate_dataset(dc, mix_seed(seed, 30));
    const auto edges = uniform_edges(32);
    const std::size_t n = param_count(pc);
    const double eps = 1e-6;

    std::size_t p = 0;
    while (evaluated < points && p < 200 * points) {
      ++p;
      std::vector<double> point(n + 2);
      beta_params bp;
      {
        predictor_config rc = pc;
        rc.init_seed = g.next_u64();
        rc.head_init_gain = 0.3;  // nonzero head: gradients reach every layer
        const predictor_params pp = init_params(rc);
        for (std::size_t i = 0; i < n; ++i) {
          point[i] = pp.values[i] + g.uniform(-0.1, 0.1);
        }
        point[n] = g.uniform(std::log(1.0), std::log(4.0));
        point[n + 1] = g.uniform(std::log(1.0), std::log(4.0));
        bp = beta_params{std::exp(point[n]), std::exp(point[n + 1])};
      }

      bool interior = true;
      for (const scene& s : scenes) {
        const double phi = predict_scale(std::span<const double>(point.data(), n),
                                         s.features, pc, sc);
        const double pred = phi / sc.tau_max;
        if (phi < sc.tau_min + kink_margin || pred < eps + kink_margin ||
            pred > 1.0 - eps - kink_margin) {
          interior = false;
        }
      }
      if (!interior) continue;

      // Detached quantities are fixed at the base point, as in training.
      std::vector<object_loss_record> records;
      double oracle_sum = 0.0;
      std::size_t oracle_count = 0;
      std::vector<std::vector<sized_object>> scene_objects;
      std::vector<double> area_refs;
      for (std::size_t si = 0; si < scenes.size(); ++si) {
        const scene& s = scenes[si];
        const double phi = predict_scale(std::span<const double>(point.data(), n),
                                         s.features, pc, sc);
        std::vector<sized_object> objs;
        for (std::size_t j = 0; j < s.objects.size(); ++j) {
          const auto& obj = s.objects[j];
          objs.push_back({obj.width, obj.height});
          const double loss = oracle_loss(obj, phi, ocfg, mix_seed(p, si, j));
          records.push_back({clamp(obj.width * obj.height / s.nominal_area(), 1e-12,
                                   1.0 - 1e-12),
                             loss});
          oracle_sum += loss;
          ++oracle_count;
        }
        scene_objects.push_back(std::move(objs));
        area_refs.push_back(s.nominal_area());
      }
      const double oracle_mean = oracle_sum / static_cast<double>(oracle_count);
      const boundaries bounds = boundaries_from_beta(bp, 1.0).bounds;
      const std::uint64_t tie_seed = mix_seed(seed, p, 7);

      // Reject draws where a Wasserstein CDF difference sits on the |.| kink
      // or the xi gate nearly closes. Last bin excluded (both CDFs are 1).
      {
        const histogram bh = beta_pdf_histogram(bp, edges);
        const histogram target = smoothed_target(records, bp, edges, 0.9,
                                                 target_form::likelihood, tie_seed);
        bool ok =
            smoothing_gate(records, 0.9, target_form::likelihood, tie_seed) >= 0.05;
        double cp = 0.0, cq = 0.0;
        for (std::size_t i = 0; i + 1 < bh.masses.size(); ++i) {
          cp += bh.masses[i];
          cq += target.masses[i];
          if (std::fabs(cp - cq) < 3e-5) ok = false;
        }
        if (!ok) continue;
      }
      ++evaluated;

      loss_lambdas lam;
      const std::vector<object_loss_record> fixed = records;
      const tape_function f = [=, &scenes](tape& t, std::span<const var> xs) -> var {
        (void)t;
        std::vector<scale_loss_image<var>> images;
        for (std::size_t si = 0; si < scenes.size(); ++si) {
          scale_loss_image<var> img;
          img.objects = scene_objects[si];
          img.area_ref = area_refs[si];
          img.phi = predict_scale(xs.subspan(0, n), scenes[si].features, pc, sc).phi;
          images.push_back(std::move(img));
        }
        var scale_l =
            scale_loss_batch<var>(images, bounds, sc, default_steepness, eps);
        var dist_l = distribution_loss<var>(fixed, exp(xs[n]), exp(xs[n + 1]), edges,
                                            0.9, target_form::likelihood, tie_seed);
        return weighted_total_loss(oracle_mean, oracle_mean, scale_l, dist_l, lam)
            .total;
      };
      auto r = check_gradients(f, point, h, tol);
      if (oc.name == inject_fault) detail::inject_gradient_fault(r, tol);
      worst = std::max(worst, r.max_rel_error);
      if (!r.pass) {
        oc.pass = false;
        break;
      }
    }
    if (evaluated < points) oc.pass = false;
    oc.detail = "max rel err " + detail::format_g(worst) + " over " +
                std::to_string(evaluated) + "/" + std::to_string(points) +
                " points, " + std::to_string(n + 2) + " coords each";
    outcomes.push_back(oc);
  }

  return outcomes;
}

/// Wasserstein equivalence with the exact monotone-coupling transport cost on
/// uniform bins, plus the metric axioms on random triples.
inline std::vector<check_outcome> wasserstein_checks(std::size_t pairs,
                                                     std::size_t triples,
                                                     std::uint64_t seed,
                                                     double oracle_tol = 1e-9) {
  std::vector<check_outcome> outcomes;
  const auto edges = uniform_edges(16);
  rng g(mix_seed(seed, 10));

  {
    check_outcome oc;
    oc.name = "wasserstein.monotone_coupling_equivalence";
    oc.pass = true;
    double worst = 0.0;
    for (std::size_t i = 0; i < pairs; ++i) {
      const histogram p = verify::random_histogram(edges, g);
      const histogram q = verify::random_histogram(edges, g);
      const double got = wasserstein_1d(p, q);
      const double want = verify::wasserstein_monotone_coupling(p, q);
      worst = std::max(worst, std::fabs(got - want));
      if (std::fabs(got - want) > oracle_tol) {
        oc.pass = false;
        break;
      }
    }
    oc.detail = "max |diff| " + detail::format_g(worst) + " over " +
                std::to_string(pairs) + " pairs";
    outcomes.push_back(oc);
  }

  {
    check_outcome oc;
    oc.name = "wasserstein.metric_axioms";
    oc.pass = true;
    for (std::size_t i = 0; i < triples; ++i) {
      const histogram p = verify::random_histogram(edges, g);
      const histogram q = verify::random_histogram(edges, g);
      const histogram r = verify::random_histogram(edges, g);
      const double pq = wasserstein_1d(p, q);
      const double qp = wasserstein_1d(q, p);
      const double qr = wasserstein_1d(q, r);
      const double pr = wasserstein_1d(p, r);
      const bool ok = pq >= 0.0 && std::fabs(pq - qp) < 1e-15 &&
                      pr <= pq + qr + 1e-12 && wasserstein_1d(p, p) == 0.0 &&
                      (pq > 0.0);  // distinct random histograms
      if (!ok) {
        oc.pass = false;
        oc.detail = "axiom violated at triple " + std::to_string(i);
        break;
      }
    }
    if (oc.pass) {
      oc.detail = "non-negativity, symmetry, triangle, identity on " +
                  std::to_string(triples) + " triples";
    }
    outcomes.push_back(oc);
  }

  return outcomes;
}

/// Chatterjee xi: exact closed form on strictly monotone inputs and
/// brute-force agreement on random tied/untied samples.
inline std::vector<check_outcome> xi_checks(std::size_t samples, std::uint64_t seed,
                                            double agreement_tol = 1e-12) {
  std::vector<check_outcome> outcomes;
  rng g(mix_seed(seed, 20));

  {
    check_outcome oc;
    oc.name = "xi.monotone_exactness";
    oc.pass = true;
    for (std::size_t n = 3; n <= 50; ++n) {
      std::vector<double> x(n), y_up(n), y_down(n);
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = g.uniform(0.0, 1.0) + static_cast<double>(i) * 2.0;  // strictly inc
        y_up[i] = static_cast<double>(i) * 1.5 + 0.25;
        y_down[i] = -y_up[i];
      }
      const double want =
          (static_cast<double>(n) - 2.0) / (static_cast<double>(n) + 1.0);
      if (xi_correlation(x, y_up, 1) != want || xi_correlation(x, y_down, 1) != want) {
        oc.pass = false;
        oc.detail = "mismatch at n=" + std::to_string(n);
        break;
      }
    }
    if (oc.pass) oc.detail = "exactly (n-2)/(n+1) for n in [3, 50], both directions";
    outcomes.push_back(oc);
  }

  {
    check_outcome oc;
    oc.name = "xi.brute_force_agreement";
    oc.pass = true;
    double worst = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
      const std::size_t n = 2 + static_cast<std::size_t>(g.uniform_int(0, 40));
      std::vector<double> x(n), y(n);
      const bool tie_x = s % 2 == 0;
      const bool tie_y = s % 3 == 0;
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = tie_x ? static_cast<double>(g.uniform_int(0, 5)) : g.uniform(0.0, 1.0);
        y[i] = tie_y ? static_cast<double>(g.uniform_int(0, 4)) : g.uniform(0.0, 1.0);
      }
      const std::uint64_t tie_seed = g.next_u64();
      const double got = xi_correlation(x, y, tie_seed);
      const double want = verify::xi_brute_force(x, y, tie_seed);
      worst = std::max(worst, std::fabs(got - want));
      if (std::fabs(got - want) > agreement_tol) {
        oc.pass = false;
        break;
      }
    }
    oc.detail = "max |diff| " + detail::format_g(worst) + " over " +
                std::to_string(samples) + " samples";
    outcomes.push_back(oc);
  }

  return outcomes;
}

/// Closed-form Beta moments against fine-grained histogram quadrature, and
/// the boundary ordering invariant.
inline std::vector<check_outcome> beta_checks(std::size_t count, std::uint64_t seed,
                                              double tol = 1e-4) {
  std::vector<check_outcome> outcomes;
  rng g(mix_seed(seed, 40));

  {
    check_outcome oc;
    oc.name = "beta.moments_vs_quadrature";
    oc.pass = true;
    double worst = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      const beta_params p{g.uniform(1.0, 10.0), g.uniform(1.0, 10.0)};
      const auto closed = beta_moments(p);
      const auto quad = verify::beta_moments_from_histogram(p, 10000);
      const double err = std::max(std::fabs(closed.mean - quad.mean),
                                  std::fabs(closed.std_dev - quad.std_dev));
      worst = std::max(worst, err);
      if (err > tol) {
        oc.pass = false;
        break;
      }
    }
    oc.detail = "max |diff| " + detail::format_g(worst) + " over " +
                std::to_string(count) + " draws (K=10000)";
    outcomes.push_back(oc);
  }

  {
    check_outcome oc;
    oc.name = "beta.boundary_ordering";
    oc.pass = true;
    for (std::size_t i = 0; i < count; ++i) {
      const beta_params p{g.uniform(0.05, 20.0), g.uniform(0.05, 20.0)};
      const boundaries b = boundaries_from_beta(p, 1.0).bounds;
      if (!(b.lower >= 0.0 && b.lower < b.upper)) {
        oc.pass = false;
        oc.detail = "ordering violated at draw " + std::to_string(i);
        break;
      }
    }
    if (oc.pass) {
      oc.detail = "0 <= lower < upper on " + std::to_string(count) + " draws";
    }
    outcomes.push_back(oc);
  }

  return outcomes;
}

}  // namespace resopt::checks
