// Acceptance suite: exercises every verification target end to end and
// prints one PASS/FAIL line per criterion. Criterion 9 drives the real CLI
// binary, whose path arrives as argv[1]; scratch files go under argv[2].
//
// usage: acceptance [cli-binary] [work-dir]

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "resopt/checks.hpp"
#include "resopt/config.hpp"
#include "resopt/dataset.hpp"
#include "resopt/train.hpp"

namespace fs = std::filesystem;
using namespace resopt;

namespace {

struct criterion_result {
  std::string name;
  bool pass = false;
  std::string detail;
};

std::vector<criterion_result> g_results;

void record(const std::string& name, bool pass, const std::string& detail) {
  g_results.push_back({name, pass, detail});
  std::printf("%s %s - %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

// --- criterion 1: gradient fidelity -----------------------------------------

void criterion_gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto outcomes = checks::gradient_checks(100, 1e-5, 1e-4, 2026);
  const double secs = seconds_since(t0);
  bool pass = secs < 60.0;
  std::string worst;
  for (const auto& oc : outcomes) {
    pass = pass && oc.pass;
    if (!oc.pass) worst += " " + oc.name;
  }
  record("criterion-01 gradient-fidelity", pass,
         fmt("scale/dist/total tape grads vs central differences (h=1e-5, "
             "rel<1e-4, 100 pts each) in %.1fs%s",
             secs, worst.empty() ? "" : (" failing:" + worst).c_str()));
}

// --- criterion 2: loss shape --------------------------------------------------

void criterion_loss_shape() {
  scale_config cfg{0.2, 1.5};
  boundaries b{0.05, 0.45};
  const double area_ref = 600.0 * 1000.0;
  const std::size_t grid_n = 1000;
  const double phi_hi = cfg.tau_max * (1.0 - 1e-5);
  std::size_t violations = 0;

  const auto phi_at = [&](std::size_t i) {
    return cfg.tau_min +
           (phi_hi - cfg.tau_min) * static_cast<double>(i) /
               static_cast<double>(grid_n - 1);
  };

  // saturated targets: strict monotonicity
  double prev_small = 0.0, prev_large = 0.0;
  for (std::size_t i = 0; i < grid_n; ++i) {
    const double phi = phi_at(i);
    const double small_obj =
        scale_loss_object(3.0, 3.0, phi, b, cfg, area_ref, default_steepness);
    const double large_obj =
        scale_loss_object(600.0, 800.0, phi, b, cfg, area_ref, default_steepness);
    if (i > 0) {
      if (!(small_obj < prev_small)) ++violations;
      if (!(large_obj > prev_large)) ++violations;
    }
    prev_small = small_obj;
    prev_large = large_obj;
  }

  // interior targets: unique interior minimum at phi = y_up * tau_max
  double worst_offset = 0.0;
  for (double target : {0.25, 0.5, 0.75}) {
    const double mid = 0.5 * (b.lower + b.upper);
    const double half = 0.5 * (b.upper - b.lower);
    const double z = -std::log(target / (1.0 - target)) / default_steepness;
    const double side = std::sqrt((mid + z * half) * area_ref);

    std::vector<double> loss(grid_n);
    std::size_t argmin = 0;
    for (std::size_t i = 0; i < grid_n; ++i) {
      loss[i] =
          scale_loss_object(side, side, phi_at(i), b, cfg, area_ref, default_steepness);
      if (loss[i] < loss[argmin]) argmin = i;
    }
    for (std::size_t i = 0; i + 1 < grid_n; ++i) {
      if (i < argmin && !(loss[i + 1] < loss[i])) ++violations;
      if (i >= argmin && !(loss[i + 1] > loss[i])) ++violations;
    }
    const double spacing = (phi_hi - cfg.tau_min) / static_cast<double>(grid_n - 1);
    const double offset = std::fabs(phi_at(argmin) - target * cfg.tau_max);
    worst_offset = std::max(worst_offset, offset);
    if (offset > spacing) ++violations;
  }

  record("criterion-02 loss-shape", violations == 0,
         fmt("monotone arms + unique interior minima on a %zu-point grid, "
             "%zu violations, worst argmin offset %.2e",
             grid_n, violations, worst_offset));
}

// --- criteria 3-5: delegated suites -------------------------------------------

void criterion_wasserstein() {
  const auto outcomes = checks::wasserstein_checks(500, 500, 2027);
  const bool pass = outcomes[0].pass && outcomes[1].pass;
  record("criterion-03 wasserstein-oracle", pass,
         outcomes[0].detail + "; " + outcomes[1].detail);
}

void criterion_xi() {
  const auto outcomes = checks::xi_checks(200, 2028);
  const bool pass = outcomes[0].pass && outcomes[1].pass;
  record("criterion-04 xi-exactness", pass,
         outcomes[0].detail + "; " + outcomes[1].detail);
}

void criterion_beta() {
  const auto outcomes = checks::beta_checks(50, 2029);
  const bool pass = outcomes[0].pass && outcomes[1].pass;
  record("criterion-05 beta-moments", pass,
         outcomes[0].detail + "; " + outcomes[1].detail);
}

// --- criterion 6: correlation/std directions -----------------------------------

void criterion_table7(const std::vector<scene>& scenes) {
  predictor_config pc;
  scale_config sc;
  oracle_config oc;
  train_hyperparams hp;  // defaults: 3000 iters, both losses on
  const double range = sc.range();

  const auto t0 = std::chrono::steady_clock::now();
  const auto with_losses = train(scenes, pc, sc, oc, hp);
  const double secs_with = seconds_since(t0);
  const auto mw = evaluate(scenes, with_losses.params, sc, oc);

  train_hyperparams hp_off = hp;
  hp_off.lambdas.scale = 0.0;
  hp_off.lambdas.dist = 0.0;
  const auto t1 = std::chrono::steady_clock::now();
  const auto without = train(scenes, pc, sc, oc, hp_off);
  const double secs_without = seconds_since(t1);
  const auto mo = evaluate(scenes, without.params, sc, oc);

  // bucket-mean scale factor must fall with object size (one adjacent
  // inversion tolerated on saturated plateaus)
  std::size_t inversions = 0;
  for (std::size_t i = 0; i + 1 < mw.buckets.size(); ++i) {
    if (mw.buckets[i + 1].mean_phi > mw.buckets[i].mean_phi) ++inversions;
  }

  const bool pass = mw.pearson <= -0.5 && mw.phi_std >= 0.10 * range &&
                    std::fabs(mo.pearson) <= 0.25 && mo.phi_std <= 0.05 * range &&
                    inversions <= 1 && secs_with < 300.0 && secs_without < 300.0 &&
                    !with_losses.report.diverged && !without.report.diverged;
  record("criterion-06 ablation-directions", pass,
         fmt("with losses: corr %.3f (<= -0.5), phi-std/range %.3f (>= 0.10), "
             "%zu bucket inversions (<= 1); without: corr %.3f (|.| <= 0.25), "
             "phi-std/range %.4f (<= 0.05); %.0fs + %.0fs",
             mw.pearson, mw.phi_std / range, inversions, mo.pearson,
             mo.phi_std / range, secs_with, secs_without));
}

// --- criterion 7: smoothing reduces boundary total variation --------------------

void criterion_lpf(const std::vector<scene>& scenes) {
  predictor_config pc;
  scale_config sc;
  oracle_config oc;
  bool pass = true;
  std::string detail;
  for (std::uint64_t seed : {101ull, 202ull, 303ull}) {
    train_hyperparams smooth;
    smooth.iters = 5000;
    smooth.seed = seed;
    train_hyperparams raw = smooth;
    raw.use_lpf = false;
    const double tv_smooth =
        train(scenes, pc, sc, oc, smooth).report.boundary_total_variation();
    const double tv_raw =
        train(scenes, pc, sc, oc, raw).report.boundary_total_variation();
    pass = pass && tv_smooth < tv_raw;
    detail += fmt("seed %llu: %.4f vs %.4f; ", (unsigned long long)seed, tv_smooth,
                  tv_raw);
  }
  record("criterion-07 lpf-convergence", pass,
         "boundary TV over 5000 iters, gated LPF vs raw target: " + detail);
}

// --- criterion 8: weighted-sum arithmetic ---------------------------------------

void criterion_weighted_sum() {
  rng g(2030);
  bool pass = true;
  for (int i = 0; i < 20; ++i) {
    const loss_lambdas lam{g.uniform(0.0, 2.0), g.uniform(0.0, 2.0),
                           g.uniform(0.0, 2.0), g.uniform(0.0, 2.0)};
    const double cls = g.uniform(0.0, 4.0), loc = g.uniform(0.0, 4.0);
    const double ls = g.uniform(0.0, 4.0), ld = g.uniform(0.0, 4.0);
    const auto r = weighted_total_loss(cls, loc, ls, ld, lam);
    const double eff_scale = (cls + loc) * lam.scale;
    const double eff_dist = (cls + loc) * lam.dist;
    const double expected =
        eff_scale * ls + eff_dist * ld + (lam.cls * cls + lam.loc * loc);
    if (std::fabs(r.total - expected) > 1e-15 * std::max(1.0, std::fabs(expected))) {
      pass = false;
    }
    if (r.lambda_scale_eff != eff_scale || r.lambda_dist_eff != eff_dist) pass = false;

    // zero coupling removes the elastic terms entirely
    const auto z1 = weighted_total_loss(0.0, 0.0, ls, ld, lam);
    const auto z2 = weighted_total_loss(0.0, 0.0, 100.0 * ls + 1.0, -ld, lam);
    if (z1.total != 0.0 || z2.total != 0.0) pass = false;
  }
  record("criterion-08 weighted-sum", pass,
         "20 random tuples vs hand composition; zero coupling removes "
         "scale/dist terms");
}

// --- criterion 9: CLI determinism -----------------------------------------------

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void criterion_cli_determinism(const std::string& cli, const std::string& work) {
  if (cli.empty()) {
    record("criterion-09 cli-determinism", false, "no CLI binary path supplied");
    return;
  }
  fs::create_directories(work);
  const std::string config_path = work + "/accept_config.json";
  {
    nlohmann::json j;
    j["seed"] = 7;
    j["out_dir"] = work + "/run_a";
    j["dataset_path"] = work + "/dataset.txt";
    j["dataset"] = {{"n_scenes", 120}};
    j["train"] = {{"iters", 60}, {"batch", 8}};
    std::ofstream os(config_path);
    os << j.dump(2);
  }
  const auto run = [&](const std::string& args) {
    const std::string cmd = cli + " " + args + " >/dev/null 2>&1";
    return std::system(cmd.c_str());
  };

  bool pass = run("generate --config " + config_path) == 0;
  pass = pass && run("train --config " + config_path) == 0;
  pass = pass &&
         run("train --config " + config_path + " --out " + work + "/run_b") == 0;

  const std::string report_a = slurp(work + "/run_a/report.csv");
  const std::string report_b = slurp(work + "/run_b/report.csv");
  pass = pass && !report_a.empty() && report_a == report_b;
  pass = pass && slurp(work + "/run_a/boundaries.csv") ==
                     slurp(work + "/run_b/boundaries.csv");

  // preset flag lands in the echoed config
  bool preset_ok =
      run("train --config " + config_path + " --out " + work + "/run_m --preset M") ==
      0;
  if (preset_ok) {
    const auto echoed =
        nlohmann::json::parse(slurp(work + "/run_m/config_resolved.json"));
    preset_ok = echoed.at("scale").at("tau_max").get<double>() == 1.5;
  }
  pass = pass && preset_ok;

  record("criterion-09 cli-determinism", pass,
         fmt("two identical `train` runs: report.csv byte-identical (%zu bytes); "
             "preset M echoes tau_max=1.5",
             report_a.size()));
}

// --- criterion 10: resolution rounding -------------------------------------------

void criterion_rounding() {
  rng g(2031);
  std::size_t violations = 0;
  for (int i = 0; i < 10000; ++i) {
    const resolution res{static_cast<int>(g.uniform_int(1, 2400)),
                         static_cast<int>(g.uniform_int(1, 2400))};
    const double phi = g.uniform(0.05, 2.5);
    const resolution out = scale_resolution(res, phi);
    const int short_side = std::min(out.width, out.height);
    if (short_side % 8 != 0 || short_side < 8) ++violations;
  }
  record("criterion-10 resolution-rounding", violations == 0,
         fmt("shorter side = 0 (mod 8) on 10000 random (resolution, phi) pairs, "
             "%zu violations",
             violations));
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  const std::string work = argc > 2 ? argv[2] : "acceptance_work";

  std::printf("building the shared 2000-scene dataset (seed 42)...\n");
  dataset_config dc;  // defaults: 2000 scenes
  const auto scenes = generate_dataset(dc, 42);

  criterion_gradients();
  criterion_loss_shape();
  criterion_wasserstein();
  criterion_xi();
  criterion_beta();
  criterion_table7(scenes);
  criterion_lpf(scenes);
  criterion_weighted_sum();
  criterion_cli_determinism(cli, work);
  criterion_rounding();

  std::size_t passed = 0;
  for (const auto& r : g_results) passed += r.pass ? 1 : 0;
  std::printf("\n%zu/%zu criteria passed\n", passed, g_results.size());
  return passed == g_results.size() ? 0 : 1;
}
