#pragma once

#include "ctxdrift/aditt.hpp"
#include "ctxdrift/common.hpp"
#include "ctxdrift/gmm.hpp"
#include "ctxdrift/permutation.hpp"
#include "ctxdrift/rng.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ctxdrift {

enum class Scenario { TimeContext, Subpopulation };

std::string scenario_name(Scenario s);
Scenario scenario_from_name(const std::string& name);

/// Synthetic-scenario parameters.
///
/// time_context: reference S ~ N(C,1) with C ~ N(0,1). Deployment contexts
/// either narrow to N(0, sigma^2) (k_modes == 0) or change to an equally
/// weighted K-mode Gaussian mixture with mode centers drawn fresh per run
/// and mode scale 0.2 (k_modes >= 1). Drift changes the conditional of one
/// uniformly chosen deployment mode to N(C + epsilon, omega^2).
///
/// subpopulation: 2-D two-component Gaussian mixture; reference prevalence
/// ~ Beta(2,2), deployment prevalence ~ Beta(1,1); component means ~ N(0,I)
/// and variances ~ InvGamma(3,1). Drift shifts one component's mean by
/// epsilon standard deviations in a random direction and scales its
/// standard deviation by omega. Context is the first GMM posterior column,
/// with the GMM fit on a held-out quarter of the reference rows.
struct ScenarioConfig {
  Scenario scenario = Scenario::TimeContext;
  Index n0 = 256;
  Index n1 = 256;
  double sigma = 1.0;  // narrowing scale, active when k_modes == 0
  int k_modes = 0;     // deployment context mixture modes, 0 = narrowing
  double epsilon = 0.0;
  double omega = 1.0;
  bool drift_on = false;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SubpopulationSample {
  SampleBatch batch;
  GmmModel gmm;
};

SampleBatch gen_time_context(const ScenarioConfig& cfg, Rng rng);
SubpopulationSample gen_subpopulation(const ScenarioConfig& cfg, Rng rng);

/// Generate a batch for either scenario (drops the GMM diagnostics).
SampleBatch gen_scenario(const ScenarioConfig& cfg, Rng rng);

/// Kolmogorov-Smirnov distance between the empirical CDF of the p-values
/// and the uniform CDF on [0,1].
double ks_to_uniform(const std::vector<double>& p_values);

/// Rank-based ROC AUC: P(p_drift < p_null) + 0.5 P(tie). Equals the area
/// under the step ROC traced by sweeping the significance level.
double pvalue_auc(const std::vector<double>& null_p,
                  const std::vector<double>& drift_p);

struct ExperimentResult {
  std::vector<double> p_values_null;
  std::vector<double> p_values_drift;  // empty for calibration-only
  double ks = 1.0;
  std::optional<double> auc;
  int runs = 0;
  int skipped = 0;
  std::vector<std::uint64_t> run_seeds;
};

/// Repeated-run protocol: per run, fresh data and one detection p-value
/// under the no-drift configuration; when cfg.drift_on, a second detection
/// on freshly drifted data. KS summarizes the null p-values, AUC the
/// (null, drift) pairs. Failed runs are skipped and counted; more than 10%
/// skips aborts the experiment. Runs execute in parallel but aggregate in
/// run order.
ExperimentResult run_experiment(const ScenarioConfig& cfg,
                                const DetectConfig& detect_cfg, int runs,
                                Rng rng, int threads = 1);

/// One detection with the configured method on an in-memory batch.
DetectionReport run_detector(const SampleBatch& batch,
                             const DetectConfig& config);

}  // namespace ctxdrift
