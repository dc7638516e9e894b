#pragma once

#include "ctxdrift/common.hpp"
#include "ctxdrift/rng.hpp"

#include <vector>

namespace ctxdrift {

/// Diagonal-covariance Gaussian mixture fitted by EM. Used as an
/// unsupervised context provider: posterior membership probabilities serve
/// as a proxy for subpopulation labels.
struct GmmModel {
  Vector weights;    // K, sums to 1
  Matrix means;      // K x d
  Matrix variances;  // K x d, all > 0
  std::vector<double> log_likelihood_trace;

  int components() const { return static_cast<int>(weights.size()); }
};

/// EM with seeded farthest-point initialization and 5 restarts; the restart
/// with the best final log-likelihood wins. A restart whose components
/// collapse (variance < 1e-8) is discarded; if every restart collapses a
/// DegenerateDataError is thrown.
GmmModel fit_gmm_em(const Matrix& data, int k, Rng rng, double tol = 1e-6,
                    int max_iter = 200);

/// Posterior responsibilities, one row per query point, rows on the simplex.
Matrix gmm_posterior(const GmmModel& model, const Matrix& x);

}  // namespace ctxdrift
