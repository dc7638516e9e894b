#pragma once

#include "ctxdrift/common.hpp"
#include "ctxdrift/kernel.hpp"
#include "ctxdrift/rng.hpp"

#include <vector>

namespace ctxdrift {

/// Kernel logistic regression model for the propensity e(c) = P(Z=1 | C=c),
/// in representer form f(c) = sum_i alpha_i l(c, c_i) + b.
struct PropensityModel {
  Matrix train_contexts;
  Vector coefficients;
  double intercept = 0.0;
  KernelSpec context_kernel{1.0};
  double regularization = 1e-3;
  bool converged = true;  // warning flag only; a non-converged fit is usable
};

/// Fit by Newton iteration with backtracking on the penalized logistic loss
///   nll(alpha, b) + reg * alpha' L alpha.
/// Stops at gradient norm <= 1e-6 or 100 iterations (sets converged=false).
PropensityModel fit_propensity(const Matrix& contexts,
                               const std::vector<int>& domains, double reg,
                               const KernelSpec& context_kernel);

/// Logistic predictions, clamped into (0,1) strictly.
Vector predict_propensity(const PropensityModel& model, const Matrix& contexts);

/// Penalized objective at given parameters (exposed for verification).
double propensity_objective(const Matrix& contexts,
                            const std::vector<int>& domains, double reg,
                            const KernelSpec& context_kernel,
                            const Vector& coefficients, double intercept);

/// Draw z'_i ~ Bernoulli(p_i) per row. A draw leaving either domain with
/// fewer than `min_per_domain` rows is rejected and redrawn from the next
/// substream; after 100 attempts a DegenerateDataError is thrown.
std::vector<int> reassign_from_probabilities(const Vector& probabilities,
                                             const Rng& rng,
                                             int min_per_domain = 1);

/// Bernoulli domain reassignment driven by the fitted propensity.
/// Contexts and statistics are untouched; only the labels are redrawn.
std::vector<int> conditional_reassign(const PropensityModel& model,
                                      const Matrix& contexts, const Rng& rng,
                                      int min_per_domain = 1);

}  // namespace ctxdrift
