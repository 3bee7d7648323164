// Command-line driver: dataset generation, training, evaluation, runtime
// verification, and the tau_max preset sweep. One declarative JSON config
// drives every command; flags override a few fields and the resolved config
// is echoed into the output directory so any run can be reproduced from its
// artifacts alone.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "resopt/checkpoint.hpp"
#include "resopt/checks.hpp"
#include "resopt/config.hpp"
#include "resopt/dataset.hpp"
#include "resopt/train.hpp"

namespace fs = std::filesystem;

namespace {

enum class log_level { quiet = 0, info = 1, debug = 2 };

log_level verbosity() {
  const char* env = std::getenv("RESOPT_LOG");
  if (env == nullptr) return log_level::info;
  const std::string v(env);
  if (v == "quiet") return log_level::quiet;
  if (v == "debug") return log_level::debug;
  return log_level::info;
}

const log_level g_log = verbosity();

template <class... Args>
void info(const char* fmt, Args... args) {
  if (g_log >= log_level::info) std::printf(fmt, args...);
}

struct common_flags {
  std::string config_path;
  std::string out_override;
  std::uint64_t seed_override = 0;
  bool seed_set = false;
  bool no_elastic_losses = false;
  bool no_lpf = false;
  std::string form_override;
  std::string preset;
};

void add_common_flags(CLI::App* cmd, common_flags& f) {
  cmd->add_option("--config", f.config_path, "experiment config file (JSON)")
      ->required();
  cmd->add_option("--out", f.out_override, "override the output directory");
  cmd->add_option("--seed", f.seed_override,
                  "override the master seed (rederives component seeds)")
      ->each([&f](const std::string&) { f.seed_set = true; });
  cmd->add_flag("--no-elastic-losses", f.no_elastic_losses,
                "zero the scale/distribution loss weights (ablation arm)");
  cmd->add_flag("--no-lpf", f.no_lpf,
                "disable target smoothing; train against the raw measured target");
  cmd->add_option("--form", f.form_override,
                  "distribution-loss target form: likelihood or plain")
      ->check(CLI::IsMember({"likelihood", "plain"}));
  cmd->add_option("--preset", f.preset, "tau_max preset: S, M, B, L or H")
      ->check(CLI::IsMember({"S", "M", "B", "L", "H"}));
}

resopt::experiment_config resolve_config(const common_flags& f) {
  resopt::experiment_config cfg = resopt::load_experiment_config(f.config_path);
  if (!f.out_override.empty()) cfg.out_dir = f.out_override;
  if (f.seed_set) resopt::reseed(cfg, f.seed_override);
  if (!f.preset.empty()) cfg.scale.tau_max = resopt::preset_tau_max(f.preset[0]);
  if (f.no_elastic_losses) {
    cfg.train.lambdas.scale = 0.0;
    cfg.train.lambdas.dist = 0.0;
  }
  if (f.no_lpf) cfg.train.use_lpf = false;
  if (!f.form_override.empty()) {
    cfg.train.form = resopt::target_form_from_string(f.form_override);
  }
  cfg.validate();
  return cfg;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw resopt::io_error("cannot open " + path);
  os << text;
  if (!os) throw resopt::io_error("write failed for " + path);
}

void echo_config(const resopt::experiment_config& cfg) {
  fs::create_directories(cfg.out_dir);
  write_text(cfg.out_dir + "/config_resolved.json", resopt::to_json(cfg).dump(2) + "\n");
}

nlohmann::json metrics_to_json(const resopt::evaluate_metrics& m,
                               const resopt::scale_config& sc) {
  nlohmann::json j;
  j["tau_min"] = sc.tau_min;
  j["tau_max"] = sc.tau_max;
  j["phi_mean"] = m.phi_mean;
  j["phi_std"] = m.phi_std;
  j["pearson_size_phi"] = m.pearson;
  j["mean_oracle_loss"] = m.mean_oracle_loss;
  j["phi_histogram"] = {{"edges", m.phi_hist.edges}, {"counts", m.phi_hist.counts}};
  nlohmann::json buckets = nlohmann::json::array();
  for (const auto& b : m.buckets) {
    buckets.push_back({{"size_lo", b.size_lo},
                       {"size_hi", b.size_hi},
                       {"mean_phi", b.mean_phi},
                       {"count", b.count}});
  }
  j["size_buckets"] = buckets;
  return j;
}

int cmd_generate(const resopt::experiment_config& cfg) {
  echo_config(cfg);
  const std::string path = cfg.resolved_dataset_path();
  fs::create_directories(fs::path(path).parent_path().empty()
                             ? fs::path(".")
                             : fs::path(path).parent_path());
  const auto scenes = resopt::generate_dataset(cfg.dataset, cfg.seed);
  resopt::write_dataset(path, scenes);

  std::size_t objects = 0;
  double area_sum = 0.0;
  for (const auto& s : scenes) {
    objects += s.objects.size();
    for (const auto& o : s.objects) {
      area_sum += o.width * o.height / s.nominal_area();
    }
  }
  info("wrote %zu scenes (%zu objects, mean normalized area %.4f) to %s\n",
       scenes.size(), objects, objects ? area_sum / double(objects) : 0.0,
       path.c_str());
  return 0;
}

int cmd_train(const resopt::experiment_config& cfg) {
  echo_config(cfg);
  const auto scenes =
      resopt::read_dataset(cfg.resolved_dataset_path(), cfg.predictor.input_dim);
  info("training: %zu iterations, batch %zu, %zu scenes, tau in [%g, %g]\n",
       cfg.train.iters, cfg.train.batch, scenes.size(), cfg.scale.tau_min,
       cfg.scale.tau_max);

  const auto result =
      resopt::train(scenes, cfg.predictor, cfg.scale, cfg.oracle, cfg.train);

  {
    std::ofstream os(cfg.out_dir + "/report.csv", std::ios::binary);
    result.report.write_csv(os);
  }
  {
    std::ofstream os(cfg.out_dir + "/boundaries.csv", std::ios::binary);
    result.report.write_boundaries_csv(os);
  }
  {
    resopt::checkpoint ck{result.params, result.log_alpha, result.log_beta};
    resopt::save_checkpoint(cfg.out_dir + "/checkpoint.bin", ck);
  }

  if (result.report.diverged) {
    std::fprintf(stderr, "training diverged: %s (partial report flushed)\n",
                 result.report.divergence_note.c_str());
    return 1;
  }

  const auto metrics = resopt::evaluate(scenes, result.params, cfg.scale, cfg.oracle);
  write_text(cfg.out_dir + "/phi_hist.json",
             metrics_to_json(metrics, cfg.scale).dump(2) + "\n");

  const auto& last = result.report.records.back();
  info("done: total %.4f  scale %.4f  dist %.4f  boundaries [%.4f, %.4f]\n",
       last.total_loss, last.scale_loss, last.dist_loss, last.boundary_lower,
       last.boundary_upper);
  info("dataset-level: phi %.3f +- %.3f  corr(size, phi) %.3f\n", metrics.phi_mean,
       metrics.phi_std, metrics.pearson);
  info("artifacts in %s: report.csv boundaries.csv phi_hist.json checkpoint.bin\n",
       cfg.out_dir.c_str());
  return 0;
}

int cmd_evaluate(const resopt::experiment_config& cfg, std::string checkpoint_path) {
  echo_config(cfg);
  if (checkpoint_path.empty()) checkpoint_path = cfg.out_dir + "/checkpoint.bin";
  const auto scenes =
      resopt::read_dataset(cfg.resolved_dataset_path(), cfg.predictor.input_dim);
  const resopt::checkpoint ck = resopt::load_checkpoint(checkpoint_path);
  const auto metrics = resopt::evaluate(scenes, ck.params, cfg.scale, cfg.oracle);
  write_text(cfg.out_dir + "/metrics.json",
             metrics_to_json(metrics, cfg.scale).dump(2) + "\n");
  info("phi %.3f +- %.3f  corr(size, phi) %.3f  mean oracle loss %.4f\n",
       metrics.phi_mean, metrics.phi_std, metrics.pearson, metrics.mean_oracle_loss);
  for (const auto& b : metrics.buckets) {
    info("  size [%.4f, %.4f]  mean phi %.3f  (%zu scenes)\n", b.size_lo, b.size_hi,
         b.mean_phi, b.count);
  }
  info("wrote %s/metrics.json\n", cfg.out_dir.c_str());
  return 0;
}

int cmd_check(const resopt::experiment_config& cfg, double tol_override,
              const std::string& inject_fault) {
  const double tol = tol_override > 0.0 ? tol_override : cfg.check.tol;
  std::printf("verification: %zu points, h %g, tolerance %g\n", cfg.check.points,
              cfg.check.h, tol);

  std::vector<resopt::checks::check_outcome> outcomes;
  const auto grad = resopt::checks::gradient_checks(cfg.check.points, cfg.check.h, tol,
                                                    cfg.check.seed, inject_fault);
  outcomes.insert(outcomes.end(), grad.begin(), grad.end());
  const auto wass = resopt::checks::wasserstein_checks(500, 500, cfg.check.seed);
  outcomes.insert(outcomes.end(), wass.begin(), wass.end());
  const auto xi = resopt::checks::xi_checks(200, cfg.check.seed);
  outcomes.insert(outcomes.end(), xi.begin(), xi.end());
  const auto beta = resopt::checks::beta_checks(50, cfg.check.seed);
  outcomes.insert(outcomes.end(), beta.begin(), beta.end());

  bool all_pass = true;
  for (const auto& oc : outcomes) {
    std::printf("%s %s - %s\n", oc.pass ? "PASS" : "FAIL", oc.name.c_str(),
                oc.detail.c_str());
    all_pass = all_pass && oc.pass;
  }
  std::printf("%s\n", all_pass ? "all checks passed" : "CHECKS FAILED");
  return all_pass ? 0 : 1;
}

int cmd_sweep(const resopt::experiment_config& base_cfg) {
  echo_config(base_cfg);
  const std::string dataset_path = base_cfg.resolved_dataset_path();
  if (!fs::exists(dataset_path)) {
    info("dataset missing, generating %s\n", dataset_path.c_str());
    resopt::write_dataset(dataset_path,
                          resopt::generate_dataset(base_cfg.dataset, base_cfg.seed));
  }
  const auto scenes = resopt::read_dataset(dataset_path, base_cfg.predictor.input_dim);

  std::string summary = "preset,tau_max,phi_mean,phi_std,pearson,mean_oracle_loss\n";
  for (char preset : resopt::preset_names) {
    resopt::experiment_config cfg = base_cfg;
    cfg.scale.tau_max = resopt::preset_tau_max(preset);
    cfg.out_dir = base_cfg.out_dir + "/preset_" + preset;
    echo_config(cfg);
    info("preset %c: tau_max %.2f -> %s\n", preset, cfg.scale.tau_max,
         cfg.out_dir.c_str());

    const auto result =
        resopt::train(scenes, cfg.predictor, cfg.scale, cfg.oracle, cfg.train);
    {
      std::ofstream os(cfg.out_dir + "/report.csv", std::ios::binary);
      result.report.write_csv(os);
    }
    {
      std::ofstream os(cfg.out_dir + "/boundaries.csv", std::ios::binary);
      result.report.write_boundaries_csv(os);
    }
    resopt::save_checkpoint(cfg.out_dir + "/checkpoint.bin",
                            {result.params, result.log_alpha, result.log_beta});
    if (result.report.diverged) {
      std::fprintf(stderr, "preset %c diverged: %s\n", preset,
                   result.report.divergence_note.c_str());
      return 1;
    }
    const auto metrics = resopt::evaluate(scenes, result.params, cfg.scale, cfg.oracle);
    write_text(cfg.out_dir + "/phi_hist.json",
               metrics_to_json(metrics, cfg.scale).dump(2) + "\n");

    char row[256];
    std::snprintf(row, sizeof row, "%c,%.17g,%.17g,%.17g,%.17g,%.17g\n", preset,
                  cfg.scale.tau_max, metrics.phi_mean, metrics.phi_std, metrics.pearson,
                  metrics.mean_oracle_loss);
    summary += row;
  }
  write_text(base_cfg.out_dir + "/sweep.csv", summary);
  info("sweep summary:\n%s", summary.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"learnable image-resolution simulator"};
  app.require_subcommand(1);

  common_flags generate_flags, train_flags, evaluate_flags, check_flags, sweep_flags;

  CLI::App* generate = app.add_subcommand("generate", "write a synthetic dataset");
  add_common_flags(generate, generate_flags);

  CLI::App* train = app.add_subcommand("train", "run the joint training loop");
  add_common_flags(train, train_flags);

  CLI::App* evaluate = app.add_subcommand("evaluate", "inference metrics for a checkpoint");
  add_common_flags(evaluate, evaluate_flags);
  std::string checkpoint_path;
  evaluate->add_option("--checkpoint", checkpoint_path,
                       "checkpoint file (default: <out_dir>/checkpoint.bin)");

  CLI::App* check = app.add_subcommand("check", "gradient/metric/correlation verification");
  add_common_flags(check, check_flags);
  double tol_override = 0.0;
  check->add_option("--tol", tol_override, "gradient tolerance override");
  std::string inject_fault;
  check->add_option("--inject-bad-gradient", inject_fault,
                    "corrupt the named check's analytic gradient (negative control)")
      ->group("");  // hidden

  CLI::App* sweep = app.add_subcommand("sweep", "train the tau_max preset ladder S..H");
  add_common_flags(sweep, sweep_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) return cmd_generate(resolve_config(generate_flags));
    if (train->parsed()) return cmd_train(resolve_config(train_flags));
    if (evaluate->parsed())
      return cmd_evaluate(resolve_config(evaluate_flags), checkpoint_path);
    if (check->parsed())
      return cmd_check(resolve_config(check_flags), tol_override, inject_fault);
    if (sweep->parsed()) return cmd_sweep(resolve_config(sweep_flags));
  } catch (const resopt::error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
