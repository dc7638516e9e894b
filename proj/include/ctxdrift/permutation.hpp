#pragma once

#include "ctxdrift/aditt.hpp"
#include "ctxdrift/common.hpp"
#include "ctxdrift/rng.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace ctxdrift {

enum class Method { Aditt, Adite, Mmd, MmdSub };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

struct DetectConfig {
  Method method = Method::Aditt;
  int n_perm = 100;
  double holdout_fraction = 0.25;
  double lambda0 = 1e-3;
  double lambda1 = 1e-3;
  bool tune_lambda = false;
  int cv_folds = 5;
  std::vector<double> cv_grid = {1e-4, 1e-3, 1e-2, 1e-1};
  double propensity_reg = 1e-3;
  /// Use (1 + #{t_i >= t}) / (1 + n_perm) instead of #{t_i > t} / n_perm.
  bool smoothed_pvalue = false;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct DetectionReport {
  std::string method;
  double statistic = 0.0;
  double p_value = 1.0;
  int n_perm = 0;
  std::uint64_t seed = 0;
  std::vector<double> permuted_statistics;
  std::map<std::string, double> diagnostics;
};

double p_value_from(double statistic, const std::vector<double>& permuted,
                    bool smoothed);

/// Conditional permutation test: the statistic is computed once on the
/// observed domain labels, then against n_perm label reassignments drawn
/// per-instance from the fitted propensity. Bandwidths, lambdas and the
/// propensity fit are computed once, before the permutation loop.
DetectionReport conditional_permutation_test(const SampleBatch& batch,
                                             const DetectConfig& config);

using TwoSampleStatistic =
    std::function<double(const Matrix&, const Matrix&)>;

/// Classical permutation test: pooled rows are reshuffled uniformly into
/// groups of the original sizes. Each permutation index uses its own
/// derived substream, so reports do not depend on evaluation order.
DetectionReport unconditional_permutation_test(const Matrix& x0,
                                               const Matrix& x1,
                                               const TwoSampleStatistic& statistic,
                                               int n_perm, Rng rng);

}  // namespace ctxdrift
