#pragma once

#include "ctxdrift/aditt.hpp"
#include "ctxdrift/common.hpp"
#include "ctxdrift/kernel.hpp"
#include "ctxdrift/permutation.hpp"
#include "ctxdrift/rng.hpp"

namespace ctxdrift {

/// Gaussian kernel density estimate with a single isotropic bandwidth.
struct KdeModel {
  Matrix points;     // m x q
  double bandwidth;  // h > 0
};

/// Biased squared-MMD estimator:
///   (1/n0^2) sum K00 + (1/n1^2) sum K11 - (2/n0 n1) sum K01.
double mmd_squared_biased(const Matrix& x0, const Matrix& x1,
                          const KernelSpec& stat_kernel);

/// MMD two-sample test with an unconditional permutation null. The pooled
/// Gram matrix is computed once and permutations only re-slice it.
DetectionReport mmd_two_sample_test(const Matrix& x0, const Matrix& x1,
                                    const KernelSpec& stat_kernel, int n_perm,
                                    Rng rng);

/// Bandwidth h = m^{-1/(q+4)} * s, with s the mean per-dimension sample
/// standard deviation.
KdeModel kde_fit(const Matrix& points);

double kde_log_density(const KdeModel& model, const Vector& c);
double kde_density(const KdeModel& model, const Vector& c);

/// Keep reference row i with probability r_i / max_j r_j where
/// r_i = p1(c_i) / p0(c_i); the maximizing row is always retained.
IndexList rejection_subsample(const Matrix& ref_contexts, const KdeModel& p0,
                              const KdeModel& p1, Rng rng);

/// Context-matching baseline: fit the two context densities on held-out
/// 25% portions, rejection-subsample the remaining reference rows toward
/// the deployment context distribution, then run the plain MMD test of the
/// subsampled reference statistics against the unheld deployment statistics.
DetectionReport mmd_sub_test(const SampleBatch& batch,
                             const DetectConfig& config);

}  // namespace ctxdrift
