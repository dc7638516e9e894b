#pragma once

#include "ctxdrift/common.hpp"
#include "ctxdrift/kernel.hpp"
#include "ctxdrift/rng.hpp"

#include <vector>

namespace ctxdrift {

/// Fitted conditional-mean-embedding regression for one domain.
///
/// Regressing the statistic feature maps on contexts with ridge penalty
/// lambda reduces every downstream evaluation to solves against
/// (L_zz + n_z * lambda * I), whose Cholesky factor is kept here. The fit
/// is immutable and shareable across threads.
class CmeFit {
 public:
  CmeFit(int domain, Matrix contexts, double lambda, KernelSpec context_kernel);

  int domain() const { return domain_; }
  const Matrix& contexts() const { return contexts_; }
  double lambda() const { return lambda_; }
  const KernelSpec& context_kernel() const { return context_kernel_; }
  Index sample_count() const { return contexts_.rows(); }

  /// (L_zz + n_z lambda I)^{-1} rhs, reusing the stored factorization.
  /// Accepts one right-hand side per column.
  Matrix solve(const Matrix& rhs) const;

  /// l_z(c): context-kernel evaluations between the stored contexts and c.
  Vector context_vector(const Vector& c) const;

  /// The regularized matrix itself (for verification).
  Matrix regularized_matrix() const;

 private:
  int domain_;
  Matrix contexts_;
  double lambda_;
  KernelSpec context_kernel_;
  Eigen::LLT<Matrix> factor_;
};

CmeFit fit_cme(const Matrix& contexts, double lambda,
               const KernelSpec& context_kernel, int domain);

/// Squared RKHS distance between the two domains' estimated conditional
/// mean embeddings at context c:
///
///   l0(c)' Lr0^{-1} K00 Lr0^{-1} l0(c) + l1(c)' Lr1^{-1} K11 Lr1^{-1} l1(c)
///   - 2 l0(c)' Lr0^{-1} K01 Lr1^{-1} l1(c)
///
/// with Lrz = L_zz + n_z lambda_z I. The result is a squared norm; values
/// below zero are floating-point noise and are left unclamped here so
/// callers can decide (aggregators clamp at 0).
double codite_mmd(const CmeFit& fit0, const CmeFit& fit1, const GramMatrix& K00,
                  const GramMatrix& K11, const GramMatrix& K01,
                  const Vector& c);

/// Per-instance squared regression error on out-of-fold data:
///   k(s,s) + l0(c)' Lr^{-1} K_tt Lr^{-1} l0(c) - 2 l0(c)' Lr^{-1} k_t(s)
/// Shapes: K_train_train is n_t x n_t, k_train_out n_t x m,
/// k_out_diag m, l_out n_t x m (one column per held-out instance).
Vector cme_holdout_error(const CmeFit& fit, const GramMatrix& K_train_train,
                         const GramMatrix& k_train_out,
                         const Vector& k_out_diag, const GramMatrix& l_out);

/// k-fold cross-validation of the ridge parameter over a candidate grid.
/// Fold assignment is contiguous after a seeded shuffle; ties in total
/// out-of-fold error break toward the larger (more regularized) value.
double tune_lambda_cv(const Matrix& statistics, const Matrix& contexts,
                      const std::vector<double>& grid, int folds, Rng rng,
                      const KernelSpec& stat_kernel,
                      const KernelSpec& context_kernel);

}  // namespace ctxdrift
