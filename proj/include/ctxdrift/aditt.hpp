#pragma once

#include "ctxdrift/cme.hpp"
#include "ctxdrift/common.hpp"
#include "ctxdrift/kernel.hpp"
#include "ctxdrift/rng.hpp"

namespace ctxdrift {

/// Paired statistics and contexts with a binary domain label per row
/// (0 = reference, 1 = deployment).
struct SampleBatch {
  Matrix statistics;         // n x d
  Matrix contexts;           // n x q
  std::vector<int> domains;  // n entries in {0, 1}

  Index size() const { return statistics.rows(); }
  Index domain_count(int z) const;
  IndexList domain_indices(int z) const;

  /// Throws ConfigError unless both domains have >= 2 rows, shapes agree
  /// and all values are finite.
  void validate() const;
};

/// Partition of the deployment rows: contexts to condition on vs. contexts
/// held out for averaging. Indices are batch row indices.
struct HoldoutSplit {
  IndexList conditioning_idx;
  IndexList holdout_idx;
  double holdout_fraction = 0.25;
};

/// Holdout drawn from the pooled rows of both domains (ablation variant).
struct PooledHoldoutSplit {
  IndexList holdout_idx;
  double holdout_fraction = 0.25;
};

/// Weight matrices W00 (n0 x n0), W11 (n_c x n_c), W01 (n0 x n_c) such that
///   <K00,W00> + <K11,W11> - 2<K01,W01>
/// reproduces the test statistic. The 1/n_h averaging factor is folded in.
struct WeightMatrices {
  Matrix w00;
  Matrix w11;
  Matrix w01;
};

/// Uniformly random disjoint partition of the deployment rows; the holdout
/// gets ceil(fraction * n1) rows and the conditioning set keeps the rest.
/// Deterministic given the rng seed.
HoldoutSplit split_holdout(const SampleBatch& batch, double fraction, Rng rng);

PooledHoldoutSplit split_holdout_pooled(const SampleBatch& batch,
                                        double fraction, Rng rng);

/// Test statistic: conditional mean embeddings are fit per domain (reference
/// rows and conditioning deployment rows), and the squared embedding
/// distances evaluated at the held-out deployment contexts are averaged,
/// each clamped at zero first.
double aditt_statistic(const SampleBatch& batch, const HoldoutSplit& split,
                       double lambda0, double lambda1,
                       const KernelSpec& stat_kernel,
                       const KernelSpec& context_kernel);

/// Ablation variant: held-out contexts are drawn from the pooled rows of
/// both domains; fits use the remaining rows of each domain.
double adite_statistic(const SampleBatch& batch,
                       const PooledHoldoutSplit& split, double lambda0,
                       double lambda1, const KernelSpec& stat_kernel,
                       const KernelSpec& context_kernel);

WeightMatrices weight_matrices(const SampleBatch& batch,
                               const HoldoutSplit& split, double lambda0,
                               double lambda1,
                               const KernelSpec& context_kernel);

namespace detail {

Matrix slice(const Matrix& m, const IndexList& rows, const IndexList& cols);

/// Statistic evaluation against precomputed pooled Gram matrices.
/// `ref_idx` fits the domain-0 embedding, `cond_idx` the domain-1 embedding,
/// `hold_idx` supplies the contexts averaged over. `per_context`, when
/// non-null, receives the raw (unclamped) value per held-out context.
double statistic_from_pooled(const Matrix& k_pool, const Matrix& l_pool,
                             const IndexList& ref_idx,
                             const IndexList& cond_idx,
                             const IndexList& hold_idx, double lambda0,
                             double lambda1, Vector* per_context = nullptr);

/// Solve coefficients A_z = (L_zz + n_z lambda_z I)^{-1} L_{z,hold} for one
/// domain; columns correspond to held-out contexts.
Matrix holdout_coefficients(const Matrix& l_pool, const IndexList& fit_idx,
                            const IndexList& hold_idx, double lambda);

}  // namespace detail

}  // namespace ctxdrift
