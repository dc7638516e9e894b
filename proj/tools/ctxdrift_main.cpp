// ctxdrift: context-conditional drift detection on CSV batches, plus the
// synthetic calibration/power harness.

#include "ctxdrift/baselines.hpp"
#include "ctxdrift/csv.hpp"
#include "ctxdrift/harness.hpp"
#include "ctxdrift/report_io.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

namespace {

using namespace ctxdrift;
using nlohmann::ordered_json;

std::uint64_t seed_fallback() {
  if (const char* env = std::getenv("CTXDRIFT_SEED")) {
    return std::strtoull(env, nullptr, 10);
  }
  return 0;
}

struct CommonOptions {
  std::string method = "aditt";
  int n_perm = 100;
  double holdout_frac = 0.25;
  double lambda0 = 1e-3;
  double lambda1 = 1e-3;
  bool tune_lambda = false;
  double propensity_reg = 1e-3;
  bool smoothed_pvalue = false;
  std::uint64_t seed = seed_fallback();
  int threads = static_cast<int>(std::thread::hardware_concurrency());
  std::string out;
};

void add_common_flags(CLI::App* cmd, CommonOptions* opt) {
  cmd->add_option("--method", opt->method, "aditt|adite|mmd|mmd_sub")
      ->check(CLI::IsMember({"aditt", "adite", "mmd", "mmd_sub"}));
  cmd->add_option("--n-perm", opt->n_perm, "permutations per test");
  cmd->add_option("--holdout-frac", opt->holdout_frac,
                  "deployment fraction held out for conditioning");
  cmd->add_option("--lambda0", opt->lambda0, "reference ridge parameter");
  cmd->add_option("--lambda1", opt->lambda1, "deployment ridge parameter");
  cmd->add_flag("--tune-lambda", opt->tune_lambda,
                "cross-validate the ridge parameters per domain");
  cmd->add_option("--propensity-reg", opt->propensity_reg,
                  "propensity classifier regularization");
  cmd->add_flag("--smoothed-pvalue", opt->smoothed_pvalue,
                "use the (1+#{>=})/(1+n_perm) p-value estimate");
  cmd->add_option("--seed", opt->seed,
                  "random seed (env CTXDRIFT_SEED is the fallback)");
  cmd->add_option("--threads", opt->threads, "worker threads");
  cmd->add_option("--out", opt->out, "output JSON path (default: stdout)");
}

DetectConfig to_detect_config(const CommonOptions& opt) {
  DetectConfig cfg;
  cfg.method = method_from_name(opt.method);
  cfg.n_perm = opt.n_perm;
  cfg.holdout_fraction = opt.holdout_frac;
  cfg.lambda0 = opt.lambda0;
  cfg.lambda1 = opt.lambda1;
  cfg.tune_lambda = opt.tune_lambda;
  cfg.propensity_reg = opt.propensity_reg;
  cfg.smoothed_pvalue = opt.smoothed_pvalue;
  cfg.seed = opt.seed;
  cfg.threads = std::max(1, opt.threads);
  return cfg;
}

ordered_json config_echo(const CommonOptions& opt, const std::string& command) {
  ordered_json j;
  j["command"] = command;
  j["method"] = opt.method;
  j["n_perm"] = opt.n_perm;
  j["holdout_fraction"] = opt.holdout_frac;
  j["lambda0"] = opt.lambda0;
  j["lambda1"] = opt.lambda1;
  j["tune_lambda"] = opt.tune_lambda;
  j["propensity_reg"] = opt.propensity_reg;
  j["smoothed_pvalue"] = opt.smoothed_pvalue;
  j["seed"] = opt.seed;
  j["threads"] = opt.threads;
  return j;
}

void emit(const ordered_json& j, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    write_text_file(out_path, j.dump(2));
  }
}

int run_detect(const CommonOptions& opt, const std::string& ref_path,
               const std::string& deploy_path,
               const std::vector<std::string>& stat_cols,
               const std::vector<std::string>& ctx_cols,
               std::optional<double> fail_on_drift,
               const std::string& weights_csv) {
  DetectConfig cfg = to_detect_config(opt);
  if (ctx_cols.empty() && cfg.method != Method::Mmd) {
    throw InputError("context columns are required for method '" +
                     opt.method + "'");
  }
  SampleBatch batch = load_batch(ref_path, deploy_path, stat_cols, ctx_cols);
  DetectionReport report = run_detector(batch, cfg);

  if (!weights_csv.empty()) {
    if (cfg.method != Method::Aditt) {
      throw ConfigError("--weights-csv requires --method aditt");
    }
    KernelSpec l_spec(median_heuristic_bandwidth(batch.contexts));
    HoldoutSplit split =
        split_holdout(batch, cfg.holdout_fraction, Rng(cfg.seed).derive(0));
    WeightMatrices w =
        weight_matrices(batch, split, cfg.lambda0, cfg.lambda1, l_spec);
    write_text_file(weights_csv, weight_marginals_csv(w));
  }

  ordered_json j = report_to_json(report);
  ordered_json cfg_json = config_echo(opt, "detect");
  cfg_json["ref"] = ref_path;
  cfg_json["deploy"] = deploy_path;
  cfg_json["stat_cols"] = stat_cols;
  cfg_json["ctx_cols"] = ctx_cols;
  if (fail_on_drift.has_value()) cfg_json["fail_on_drift"] = *fail_on_drift;
  j["config"] = cfg_json;
  emit(j, opt.out);

  if (fail_on_drift.has_value() && report.p_value < *fail_on_drift) return 1;
  return 0;
}

int run_experiment_command(const CommonOptions& opt, bool drift_on,
                           const std::string& scenario, Index n, int runs,
                           double sigma, int k_modes, double epsilon,
                           double omega, const std::string& csv_path) {
  ScenarioConfig cfg;
  cfg.scenario = scenario_from_name(scenario);
  cfg.n0 = n;
  cfg.n1 = n;
  cfg.sigma = sigma;
  cfg.k_modes = k_modes;
  cfg.epsilon = epsilon;
  cfg.omega = omega;
  cfg.drift_on = drift_on;
  cfg.seed = opt.seed;

  DetectConfig detect_cfg = to_detect_config(opt);
  ExperimentResult result = run_experiment(cfg, detect_cfg, runs, Rng(opt.seed),
                                           std::max(1, opt.threads));

  ordered_json j;
  j["scenario"] = scenario_name(cfg.scenario);
  j["method"] = opt.method;
  j.update(experiment_to_json(result));
  ordered_json cfg_json = config_echo(opt, drift_on ? "power" : "calibrate");
  cfg_json["scenario"] = scenario_name(cfg.scenario);
  cfg_json["n"] = n;
  cfg_json["runs"] = runs;
  cfg_json["sigma"] = sigma;
  cfg_json["k_modes"] = k_modes;
  cfg_json["epsilon"] = epsilon;
  cfg_json["omega"] = omega;
  j["config"] = cfg_json;
  emit(j, opt.out);

  if (!csv_path.empty()) {
    write_text_file(csv_path, experiment_csv(opt.method, cfg, result));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Context-aware drift detection"};
  app.require_subcommand(1);

  CommonOptions detect_opt, calib_opt, power_opt;

  // detect
  auto* detect = app.add_subcommand(
      "detect", "test a deployment CSV against a reference CSV");
  std::string ref_path, deploy_path, weights_csv;
  std::vector<std::string> stat_cols, ctx_cols;
  std::optional<double> fail_on_drift;
  add_common_flags(detect, &detect_opt);
  detect->add_option("--ref", ref_path, "reference CSV")->required();
  detect->add_option("--deploy", deploy_path, "deployment CSV")->required();
  detect->add_option("--stat-cols", stat_cols, "statistic column names")
      ->required()
      ->delimiter(',');
  detect->add_option("--ctx-cols", ctx_cols, "context column names")
      ->delimiter(',');
  detect->add_option("--fail-on-drift", fail_on_drift,
                     "exit 1 when p-value < alpha");
  detect->add_option("--weights-csv", weights_csv,
                     "write weight-matrix marginals to this CSV");

  // calibrate / power
  std::string scenario = "time_context";
  Index n = 256;
  int runs = 100;
  double sigma = 1.0, epsilon = 0.0, omega = 1.0;
  int k_modes = 0;
  std::string csv_path;
  auto add_scenario_flags = [&](CLI::App* cmd, CommonOptions* opt) {
    add_common_flags(cmd, opt);
    cmd->add_option("--scenario", scenario, "time_context|subpopulation");
    cmd->add_option("--n", n, "per-domain sample count");
    cmd->add_option("--runs", runs, "number of runs");
    cmd->add_option("--sigma", sigma, "context narrowing scale");
    cmd->add_option("--k-modes", k_modes,
                    "deployment context mixture modes (0 = narrowing)");
    cmd->add_option("--epsilon", epsilon, "conditional mean shift");
    cmd->add_option("--omega", omega, "conditional scale factor");
    cmd->add_option("--csv", csv_path, "also write a one-row CSV summary");
  };
  auto* calibrate = app.add_subcommand(
      "calibrate", "p-value calibration under context change only");
  add_scenario_flags(calibrate, &calib_opt);
  auto* power = app.add_subcommand(
      "power", "power (AUC) under conditional drift plus context change");
  add_scenario_flags(power, &power_opt);

  CLI11_PARSE(app, argc, argv);

  try {
    if (detect->parsed()) {
      return run_detect(detect_opt, ref_path, deploy_path, stat_cols, ctx_cols,
                        fail_on_drift, weights_csv);
    }
    if (calibrate->parsed()) {
      return run_experiment_command(calib_opt, false, scenario, n, runs, sigma,
                                    k_modes, epsilon, omega, csv_path);
    }
    return run_experiment_command(power_opt, true, scenario, n, runs, sigma,
                                  k_modes, epsilon, omega, csv_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
