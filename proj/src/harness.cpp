#include "ctxdrift/harness.hpp"

#include "ctxdrift/baselines.hpp"
#include "ctxdrift/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace ctxdrift {

std::string scenario_name(Scenario s) {
  return s == Scenario::TimeContext ? "time_context" : "subpopulation";
}

Scenario scenario_from_name(const std::string& name) {
  if (name == "time_context" || name == "time") return Scenario::TimeContext;
  if (name == "subpopulation" || name == "subpop") {
    return Scenario::Subpopulation;
  }
  throw ConfigError("unknown scenario '" + name + "'");
}

void ScenarioConfig::validate() const {
  require(n0 >= 2 && n1 >= 2, "ScenarioConfig: need at least 2 rows per domain");
  require(epsilon >= 0.0, "ScenarioConfig: epsilon must be >= 0");
  require(omega > 0.0, "ScenarioConfig: omega must be > 0");
  require(k_modes >= 0, "ScenarioConfig: k_modes must be >= 0");
  if (scenario == Scenario::TimeContext) {
    if (k_modes == 0) {
      require(sigma > 0.0, "ScenarioConfig: narrowing sigma must be > 0");
    }
  }
}

SampleBatch gen_time_context(const ScenarioConfig& cfg, Rng rng) {
  cfg.validate();
  require(cfg.scenario == Scenario::TimeContext,
          "gen_time_context: wrong scenario tag");

  const Index n0 = cfg.n0;
  const Index n1 = cfg.n1;
  SampleBatch batch;
  batch.statistics.resize(n0 + n1, 1);
  batch.contexts.resize(n0 + n1, 1);
  batch.domains.assign(static_cast<std::size_t>(n0 + n1), 0);

  for (Index i = 0; i < n0; ++i) {
    const double c = rng.normal();
    batch.contexts(i, 0) = c;
    batch.statistics(i, 0) = rng.normal(c, 1.0);
  }

  // deployment context distribution
  std::vector<double> mode_centers;
  int drifted_mode = -1;
  if (cfg.k_modes >= 1) {
    for (int k = 0; k < cfg.k_modes; ++k) mode_centers.push_back(rng.normal());
    if (cfg.drift_on) {
      drifted_mode = static_cast<int>(
          rng.uniform_index(static_cast<std::uint64_t>(cfg.k_modes)));
    }
  }

  for (Index i = 0; i < n1; ++i) {
    const Index row = n0 + i;
    batch.domains[static_cast<std::size_t>(row)] = 1;
    double c = 0.0;
    bool drifted = false;
    if (cfg.k_modes >= 1) {
      const int mode = static_cast<int>(
          rng.uniform_index(static_cast<std::uint64_t>(cfg.k_modes)));
      c = rng.normal(mode_centers[static_cast<std::size_t>(mode)], 0.2);
      drifted = cfg.drift_on && mode == drifted_mode;
    } else {
      c = rng.normal(0.0, cfg.sigma);
      drifted = cfg.drift_on;
    }
    batch.contexts(row, 0) = c;
    batch.statistics(row, 0) = drifted
                                   ? rng.normal(c + cfg.epsilon, cfg.omega)
                                   : rng.normal(c, 1.0);
  }
  return batch;
}

SubpopulationSample gen_subpopulation(const ScenarioConfig& cfg, Rng rng) {
  cfg.validate();
  require(cfg.scenario == Scenario::Subpopulation,
          "gen_subpopulation: wrong scenario tag");
  require(cfg.n0 >= 16, "gen_subpopulation: n0 too small to hold out a "
                        "clustering portion");

  const double prev_ref = rng.beta(2.0, 2.0);
  const double prev_dep = rng.beta(1.0, 1.0);
  Matrix means(2, 2);
  for (Index i = 0; i < 2; ++i) {
    for (Index j = 0; j < 2; ++j) means(i, j) = rng.normal();
  }
  Vector stddev(2);
  for (Index i = 0; i < 2; ++i) {
    stddev[i] = std::sqrt(rng.inverse_gamma(3.0, 1.0));
  }

  int drifted_comp = -1;
  Vector shift = Vector::Zero(2);
  double scale = 1.0;
  if (cfg.drift_on) {
    drifted_comp = static_cast<int>(rng.uniform_index(2));
    const double angle = rng.uniform(0.0, 2.0 * M_PI);
    shift << std::cos(angle), std::sin(angle);
    shift *= cfg.epsilon * stddev[drifted_comp];
    scale = cfg.omega;
  }

  auto draw = [&](double prevalence, bool allow_drift) {
    const int comp = rng.bernoulli(prevalence) ? 1 : 0;
    Vector x(2);
    double sd = stddev[comp];
    Vector mu = means.row(comp).transpose();
    if (allow_drift && comp == drifted_comp) {
      mu += shift;
      sd *= scale;
    }
    x[0] = rng.normal(mu[0], sd);
    x[1] = rng.normal(mu[1], sd);
    return x;
  };

  // quarter of the reference rows goes to the clustering fit and stays out
  // of the batch
  const Index n_fit = static_cast<Index>(
      std::ceil(0.25 * static_cast<double>(cfg.n0)));
  const Index n_ref = cfg.n0 - n_fit;

  Matrix fit_rows(n_fit, 2);
  for (Index i = 0; i < n_fit; ++i) {
    fit_rows.row(i) = draw(prev_ref, false).transpose();
  }

  SubpopulationSample out;
  out.gmm = fit_gmm_em(fit_rows, 2, rng.derive(1));

  SampleBatch& batch = out.batch;
  batch.statistics.resize(n_ref + cfg.n1, 2);
  batch.domains.assign(static_cast<std::size_t>(n_ref + cfg.n1), 0);
  for (Index i = 0; i < n_ref; ++i) {
    batch.statistics.row(i) = draw(prev_ref, false).transpose();
  }
  for (Index i = 0; i < cfg.n1; ++i) {
    batch.statistics.row(n_ref + i) = draw(prev_dep, true).transpose();
    batch.domains[static_cast<std::size_t>(n_ref + i)] = 1;
  }

  batch.contexts = gmm_posterior(out.gmm, batch.statistics).col(0);
  return out;
}

SampleBatch gen_scenario(const ScenarioConfig& cfg, Rng rng) {
  if (cfg.scenario == Scenario::TimeContext) {
    return gen_time_context(cfg, rng);
  }
  return gen_subpopulation(cfg, rng).batch;
}

double ks_to_uniform(const std::vector<double>& p_values) {
  require(!p_values.empty(), "ks_to_uniform: empty input");
  std::vector<double> p = p_values;
  for (double v : p) {
    require(v >= 0.0 && v <= 1.0, "ks_to_uniform: p-value outside [0,1]");
  }
  std::sort(p.begin(), p.end());
  const double n = static_cast<double>(p.size());
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double hi = (static_cast<double>(i) + 1.0) / n - p[i];
    const double lo = p[i] - static_cast<double>(i) / n;
    d = std::max({d, std::abs(hi), std::abs(lo)});
  }
  return d;
}

double pvalue_auc(const std::vector<double>& null_p,
                  const std::vector<double>& drift_p) {
  require(!null_p.empty() && !drift_p.empty(), "pvalue_auc: empty input");
  double score = 0.0;
  for (double d : drift_p) {
    for (double n : null_p) {
      if (d < n) {
        score += 1.0;
      } else if (d == n) {
        score += 0.5;
      }
    }
  }
  return score /
         (static_cast<double>(null_p.size()) * static_cast<double>(drift_p.size()));
}

DetectionReport run_detector(const SampleBatch& batch,
                             const DetectConfig& config) {
  switch (config.method) {
    case Method::Aditt:
    case Method::Adite:
      return conditional_permutation_test(batch, config);
    case Method::MmdSub:
      return mmd_sub_test(batch, config);
    case Method::Mmd: {
      IndexList ref = batch.domain_indices(0);
      IndexList dep = batch.domain_indices(1);
      KernelSpec k_spec(median_heuristic_bandwidth(batch.statistics));
      DetectionReport report = mmd_two_sample_test(
          batch.statistics(ref, Eigen::all), batch.statistics(dep, Eigen::all),
          k_spec, config.n_perm, Rng(config.seed));
      report.seed = config.seed;
      return report;
    }
  }
  throw ConfigError("run_detector: unhandled method");
}

ExperimentResult run_experiment(const ScenarioConfig& cfg,
                                const DetectConfig& detect_cfg, int runs,
                                Rng rng, int threads) {
  require(runs >= 10, "run_experiment: need at least 10 runs");
  cfg.validate();

  struct RunOutcome {
    double p = -1.0;  // -1 marks a skipped run
    std::uint64_t seed = 0;
  };
  const bool with_drift = cfg.drift_on;
  const int total = with_drift ? 2 * runs : runs;
  std::vector<RunOutcome> outcomes(static_cast<std::size_t>(total));

  parallel_for(total, threads, [&](int idx) {
    const bool drift_run = idx >= runs;
    const int r = drift_run ? idx - runs : idx;
    Rng run_rng = rng.derive(2 * static_cast<std::uint64_t>(r) +
                             (drift_run ? 1 : 0));
    auto& slot = outcomes[static_cast<std::size_t>(idx)];
    slot.seed = run_rng.seed();
    try {
      ScenarioConfig run_cfg = cfg;
      run_cfg.drift_on = drift_run;
      SampleBatch batch = gen_scenario(run_cfg, run_rng.derive(0));
      DetectConfig det = detect_cfg;
      det.seed = run_rng.derive(1).seed();
      det.threads = 1;  // parallelism lives at the run level here
      slot.p = run_detector(batch, det).p_value;
    } catch (const std::exception&) {
      slot.p = -1.0;
    }
  });

  ExperimentResult result;
  result.runs = runs;
  for (int idx = 0; idx < total; ++idx) {
    const auto& slot = outcomes[static_cast<std::size_t>(idx)];
    result.run_seeds.push_back(slot.seed);
    if (slot.p < 0.0) {
      ++result.skipped;
      continue;
    }
    (idx < runs ? result.p_values_null : result.p_values_drift)
        .push_back(slot.p);
  }

  if (result.skipped * 10 > total) {
    throw NumericalError("run_experiment: more than 10% of runs failed (" +
                         std::to_string(result.skipped) + "/" +
                         std::to_string(total) + ")");
  }
  require(!result.p_values_null.empty(),
          "run_experiment: no null p-values collected");
  result.ks = ks_to_uniform(result.p_values_null);
  if (with_drift && !result.p_values_drift.empty()) {
    result.auc = pvalue_auc(result.p_values_null, result.p_values_drift);
  }
  return result;
}

}  // namespace ctxdrift
