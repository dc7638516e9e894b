#include "ctxdrift/permutation.hpp"

#include "ctxdrift/parallel.hpp"
#include "ctxdrift/propensity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ctxdrift {

std::string method_name(Method m) {
  switch (m) {
    case Method::Aditt: return "aditt";
    case Method::Adite: return "adite";
    case Method::Mmd: return "mmd";
    case Method::MmdSub: return "mmd_sub";
  }
  return "unknown";
}

Method method_from_name(const std::string& name) {
  if (name == "aditt") return Method::Aditt;
  if (name == "adite") return Method::Adite;
  if (name == "mmd") return Method::Mmd;
  if (name == "mmd_sub") return Method::MmdSub;
  throw ConfigError("unknown method '" + name + "'");
}

double p_value_from(double statistic, const std::vector<double>& permuted,
                    bool smoothed) {
  if (smoothed) {
    std::size_t ge = 0;
    for (double t : permuted) ge += (t >= statistic) ? 1 : 0;
    return static_cast<double>(1 + ge) /
           static_cast<double>(1 + permuted.size());
  }
  std::size_t gt = 0;
  for (double t : permuted) gt += (t > statistic) ? 1 : 0;
  return static_cast<double>(gt) / static_cast<double>(permuted.size());
}

namespace {

std::vector<int> draw_labels(const Vector& probs, Rng& rng) {
  std::vector<int> z(static_cast<std::size_t>(probs.size()));
  for (Index i = 0; i < probs.size(); ++i) {
    z[static_cast<std::size_t>(i)] = rng.bernoulli(probs[i]) ? 1 : 0;
  }
  return z;
}

// Smallest deployment count whose conditioning remainder after the holdout
// still has >= 2 rows.
std::size_t min_deployment_rows(double fraction) {
  for (std::size_t k = 3;; ++k) {
    const auto n_h =
        static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(k)));
    if (k - n_h >= 2 && n_h >= 1) return k;
  }
}

struct PermutationContext {
  const SampleBatch* batch;
  const DetectConfig* config;
  Matrix k_pool;
  Matrix l_pool;
  Vector propensity;
  double lambda0;
  double lambda1;
};

// One reassignment + statistic evaluation. Draws are retried (fresh
// substream per attempt) until the statistic is computable: a label vector
// leaving a domain without enough rows to fit or condition on is rejected,
// which subsumes the all-0/all-1 rule.
double permuted_statistic(const PermutationContext& ctx, Rng rng,
                          int* redraws) {
  const auto& cfg = *ctx.config;
  const std::size_t need1 = (cfg.method == Method::Aditt)
                                ? min_deployment_rows(cfg.holdout_fraction)
                                : 2;
  for (int attempt = 0; attempt < 100; ++attempt) {
    Rng sub = rng.derive(static_cast<std::uint64_t>(attempt));
    Rng label_rng = sub.derive(0);
    std::vector<int> z = draw_labels(ctx.propensity, label_rng);
    const auto n1 = static_cast<std::size_t>(
        std::count(z.begin(), z.end(), 1));
    const auto n0 = z.size() - n1;

    if (cfg.method == Method::Aditt) {
      if (n0 < 2 || n1 < need1) { ++*redraws; continue; }
      IndexList deploy, ref;
      for (std::size_t i = 0; i < z.size(); ++i) {
        (z[i] == 1 ? deploy : ref).push_back(static_cast<Index>(i));
      }
      Rng split_rng = sub.derive(1);
      split_rng.shuffle(deploy.begin(), deploy.end());
      const auto n_h = static_cast<std::size_t>(
          std::ceil(cfg.holdout_fraction * static_cast<double>(deploy.size())));
      IndexList hold(deploy.begin(), deploy.begin() + n_h);
      IndexList cond(deploy.begin() + n_h, deploy.end());
      return detail::statistic_from_pooled(ctx.k_pool, ctx.l_pool, ref, cond,
                                           hold, ctx.lambda0, ctx.lambda1);
    }

    // Adite: pooled holdout, fits on the unheld rows of each domain
    if (n0 < 2 || n1 < 2) { ++*redraws; continue; }
    Rng split_rng = sub.derive(1);
    IndexList all(z.size());
    std::iota(all.begin(), all.end(), Index{0});
    split_rng.shuffle(all.begin(), all.end());
    const auto n_h = static_cast<std::size_t>(
        std::ceil(cfg.holdout_fraction * static_cast<double>(all.size())));
    IndexList hold(all.begin(), all.begin() + n_h);
    std::vector<bool> held(z.size(), false);
    for (Index i : hold) held[static_cast<std::size_t>(i)] = true;
    IndexList ref, cond;
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (held[i]) continue;
      (z[i] == 1 ? cond : ref).push_back(static_cast<Index>(i));
    }
    if (ref.size() < 2 || cond.size() < 2) { ++*redraws; continue; }
    return detail::statistic_from_pooled(ctx.k_pool, ctx.l_pool, ref, cond,
                                         hold, ctx.lambda0, ctx.lambda1);
  }
  throw DegenerateDataError(
      "conditional permutation: 100 consecutive degenerate reassignments");
}

}  // namespace

DetectionReport conditional_permutation_test(const SampleBatch& batch,
                                             const DetectConfig& config) {
  require(config.method == Method::Aditt || config.method == Method::Adite,
          "conditional_permutation_test: method must be aditt or adite");
  require(config.n_perm >= 1, "conditional_permutation_test: n_perm >= 1");
  batch.validate();

  Rng root(config.seed);

  // Bandwidths from the pooled batch, held fixed across permutations.
  const double sigma_k = median_heuristic_bandwidth(batch.statistics);
  const double sigma_l = median_heuristic_bandwidth(batch.contexts);
  KernelSpec k_spec(sigma_k), l_spec(sigma_l);

  PermutationContext ctx;
  ctx.batch = &batch;
  ctx.config = &config;
  ctx.k_pool =
      rbf_gram_matrix(batch.statistics, batch.statistics, sigma_k);
  ctx.l_pool = rbf_gram_matrix(batch.contexts, batch.contexts, sigma_l);

  IndexList ref_idx = batch.domain_indices(0);
  IndexList deploy_idx = batch.domain_indices(1);

  ctx.lambda0 = config.lambda0;
  ctx.lambda1 = config.lambda1;
  if (config.tune_lambda) {
    ctx.lambda0 = tune_lambda_cv(batch.statistics(ref_idx, Eigen::all),
                                 batch.contexts(ref_idx, Eigen::all),
                                 config.cv_grid, config.cv_folds,
                                 root.derive(1), k_spec, l_spec);
    ctx.lambda1 = tune_lambda_cv(batch.statistics(deploy_idx, Eigen::all),
                                 batch.contexts(deploy_idx, Eigen::all),
                                 config.cv_grid, config.cv_folds,
                                 root.derive(2), k_spec, l_spec);
  }

  // Observed statistic on the original labels.
  double observed = 0.0;
  std::size_t holdout_size = 0;
  if (config.method == Method::Aditt) {
    HoldoutSplit split =
        split_holdout(batch, config.holdout_fraction, root.derive(0));
    require(split.conditioning_idx.size() >= 2,
            "conditional_permutation_test: deployment set too small to "
            "condition on after the holdout");
    holdout_size = split.holdout_idx.size();
    observed = detail::statistic_from_pooled(ctx.k_pool, ctx.l_pool, ref_idx,
                                             split.conditioning_idx,
                                             split.holdout_idx, ctx.lambda0,
                                             ctx.lambda1);
  } else {
    PooledHoldoutSplit split =
        split_holdout_pooled(batch, config.holdout_fraction, root.derive(0));
    std::vector<bool> held(static_cast<std::size_t>(batch.size()), false);
    for (Index i : split.holdout_idx) held[static_cast<std::size_t>(i)] = true;
    IndexList ref, cond;
    for (Index i = 0; i < batch.size(); ++i) {
      if (held[static_cast<std::size_t>(i)]) continue;
      (batch.domains[static_cast<std::size_t>(i)] == 1 ? cond : ref).push_back(i);
    }
    holdout_size = split.holdout_idx.size();
    observed = detail::statistic_from_pooled(ctx.k_pool, ctx.l_pool, ref, cond,
                                             split.holdout_idx, ctx.lambda0,
                                             ctx.lambda1);
  }

  PropensityModel propensity = fit_propensity(
      batch.contexts, batch.domains, config.propensity_reg, l_spec);
  ctx.propensity = predict_propensity(propensity, batch.contexts);

  std::vector<double> permuted(static_cast<std::size_t>(config.n_perm));
  std::vector<int> redraw_counts(static_cast<std::size_t>(config.n_perm), 0);
  parallel_for(config.n_perm, config.threads, [&](int i) {
    permuted[static_cast<std::size_t>(i)] =
        permuted_statistic(ctx, root.derive(3 + static_cast<std::uint64_t>(i)),
                           &redraw_counts[static_cast<std::size_t>(i)]);
  });

  DetectionReport report;
  report.method = method_name(config.method);
  report.statistic = observed;
  report.permuted_statistics = std::move(permuted);
  report.p_value = p_value_from(observed, report.permuted_statistics,
                                config.smoothed_pvalue);
  report.n_perm = config.n_perm;
  report.seed = config.seed;
  report.diagnostics["bandwidth_stat"] = sigma_k;
  report.diagnostics["bandwidth_context"] = sigma_l;
  report.diagnostics["lambda0"] = ctx.lambda0;
  report.diagnostics["lambda1"] = ctx.lambda1;
  report.diagnostics["holdout_size"] = static_cast<double>(holdout_size);
  report.diagnostics["degenerate_redraws"] = static_cast<double>(
      std::accumulate(redraw_counts.begin(), redraw_counts.end(), 0));
  report.diagnostics["n0"] = static_cast<double>(ref_idx.size());
  report.diagnostics["n1"] = static_cast<double>(deploy_idx.size());
  report.diagnostics["propensity_converged"] = propensity.converged ? 1.0 : 0.0;
  return report;
}

DetectionReport unconditional_permutation_test(
    const Matrix& x0, const Matrix& x1, const TwoSampleStatistic& statistic,
    int n_perm, Rng rng) {
  require(x0.rows() >= 2 && x1.rows() >= 2,
          "unconditional_permutation_test: need >= 2 rows per sample");
  require(x0.cols() == x1.cols(),
          "unconditional_permutation_test: column mismatch");
  require(n_perm >= 1, "unconditional_permutation_test: n_perm >= 1");

  const Index n0 = x0.rows();
  const Index n1 = x1.rows();
  Matrix pooled(n0 + n1, x0.cols());
  pooled.topRows(n0) = x0;
  pooled.bottomRows(n1) = x1;

  const double observed = statistic(x0, x1);

  std::vector<double> permuted(static_cast<std::size_t>(n_perm));
  for (int i = 0; i < n_perm; ++i) {
    Rng sub = rng.derive(1 + static_cast<std::uint64_t>(i));
    IndexList order(static_cast<std::size_t>(n0 + n1));
    std::iota(order.begin(), order.end(), Index{0});
    sub.shuffle(order.begin(), order.end());
    IndexList g0(order.begin(), order.begin() + n0);
    IndexList g1(order.begin() + n0, order.end());
    permuted[static_cast<std::size_t>(i)] =
        statistic(pooled(g0, Eigen::all), pooled(g1, Eigen::all));
  }

  DetectionReport report;
  report.method = "permutation";
  report.statistic = observed;
  report.permuted_statistics = std::move(permuted);
  report.p_value = p_value_from(observed, report.permuted_statistics, false);
  report.n_perm = n_perm;
  report.seed = rng.seed();
  report.diagnostics["n0"] = static_cast<double>(n0);
  report.diagnostics["n1"] = static_cast<double>(n1);
  return report;
}

}  // namespace ctxdrift
