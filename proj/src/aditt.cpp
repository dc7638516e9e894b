#include "ctxdrift/aditt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ctxdrift {

Index SampleBatch::domain_count(int z) const {
  return static_cast<Index>(std::count(domains.begin(), domains.end(), z));
}

IndexList SampleBatch::domain_indices(int z) const {
  IndexList idx;
  for (std::size_t i = 0; i < domains.size(); ++i) {
    if (domains[i] == z) idx.push_back(static_cast<Index>(i));
  }
  return idx;
}

void SampleBatch::validate() const {
  const Index n = statistics.rows();
  require(contexts.rows() == n,
          "SampleBatch: statistics and contexts row counts differ");
  require(static_cast<Index>(domains.size()) == n,
          "SampleBatch: domain labels must match row count");
  require(statistics.cols() >= 1 && contexts.cols() >= 1,
          "SampleBatch: statistics and contexts need at least one column");
  for (int v : domains) {
    require(v == 0 || v == 1, "SampleBatch: domain labels must be 0 or 1");
  }
  require(domain_count(0) >= 2, "SampleBatch: fewer than 2 reference rows");
  require(domain_count(1) >= 2, "SampleBatch: fewer than 2 deployment rows");
  require(statistics.allFinite() && contexts.allFinite(),
          "SampleBatch: non-finite values present");
}

namespace detail {

Matrix slice(const Matrix& m, const IndexList& rows, const IndexList& cols) {
  return m(rows, cols);
}

Matrix holdout_coefficients(const Matrix& l_pool, const IndexList& fit_idx,
                            const IndexList& hold_idx, double lambda) {
  const Index n = static_cast<Index>(fit_idx.size());
  Matrix reg = l_pool(fit_idx, fit_idx);
  reg.diagonal().array() += static_cast<double>(n) * lambda;
  Eigen::LLT<Matrix> llt(reg);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("holdout_coefficients: factorization failed (n=" +
                         std::to_string(n) +
                         ", lambda=" + std::to_string(lambda) + ")");
  }
  return llt.solve(l_pool(fit_idx, hold_idx));
}

double statistic_from_pooled(const Matrix& k_pool, const Matrix& l_pool,
                             const IndexList& ref_idx,
                             const IndexList& cond_idx,
                             const IndexList& hold_idx, double lambda0,
                             double lambda1, Vector* per_context) {
  require(ref_idx.size() >= 2, "statistic: fewer than 2 reference rows");
  require(cond_idx.size() >= 2, "statistic: fewer than 2 conditioning rows");
  require(!hold_idx.empty(), "statistic: empty holdout set");

  Matrix a0 = holdout_coefficients(l_pool, ref_idx, hold_idx, lambda0);
  Matrix a1 = holdout_coefficients(l_pool, cond_idx, hold_idx, lambda1);

  Matrix k00 = k_pool(ref_idx, ref_idx);
  Matrix k11 = k_pool(cond_idx, cond_idx);
  Matrix k01 = k_pool(ref_idx, cond_idx);

  Vector t00 = (a0.array() * (k00 * a0).array()).colwise().sum().matrix().transpose();
  Vector t11 = (a1.array() * (k11 * a1).array()).colwise().sum().matrix().transpose();
  Vector t01 = (a0.array() * (k01 * a1).array()).colwise().sum().matrix().transpose();

  Vector u = t00 + t11 - 2.0 * t01;
  if (per_context != nullptr) *per_context = u;
  return u.cwiseMax(0.0).mean();
}

}  // namespace detail

HoldoutSplit split_holdout(const SampleBatch& batch, double fraction, Rng rng) {
  require(fraction > 0.0 && fraction < 1.0,
          "split_holdout: fraction must lie in (0,1)");
  IndexList deploy = batch.domain_indices(1);
  const auto n1 = deploy.size();
  require(n1 >= 2, "split_holdout: deployment set too small");

  const auto n_h = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(n1)));
  require(n_h >= 1 && n_h < n1,
          "split_holdout: holdout would leave no conditioning rows");

  rng.shuffle(deploy.begin(), deploy.end());
  HoldoutSplit split;
  split.holdout_fraction = fraction;
  split.holdout_idx.assign(deploy.begin(), deploy.begin() + n_h);
  split.conditioning_idx.assign(deploy.begin() + n_h, deploy.end());
  return split;
}

PooledHoldoutSplit split_holdout_pooled(const SampleBatch& batch,
                                        double fraction, Rng rng) {
  require(fraction > 0.0 && fraction < 1.0,
          "split_holdout_pooled: fraction must lie in (0,1)");
  const auto n = static_cast<std::size_t>(batch.size());
  require(n >= 4, "split_holdout_pooled: batch too small");

  IndexList all(n);
  std::iota(all.begin(), all.end(), Index{0});
  const auto n_h = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(n)));
  require(n_h >= 1 && n_h < n, "split_holdout_pooled: invalid holdout size");

  rng.shuffle(all.begin(), all.end());
  PooledHoldoutSplit split;
  split.holdout_fraction = fraction;
  split.holdout_idx.assign(all.begin(), all.begin() + n_h);
  return split;
}

double aditt_statistic(const SampleBatch& batch, const HoldoutSplit& split,
                       double lambda0, double lambda1,
                       const KernelSpec& stat_kernel,
                       const KernelSpec& context_kernel) {
  batch.validate();
  Matrix k_pool =
      rbf_gram_matrix(batch.statistics, batch.statistics, stat_kernel.bandwidth);
  Matrix l_pool =
      rbf_gram_matrix(batch.contexts, batch.contexts, context_kernel.bandwidth);
  return detail::statistic_from_pooled(k_pool, l_pool, batch.domain_indices(0),
                                       split.conditioning_idx,
                                       split.holdout_idx, lambda0, lambda1);
}

double adite_statistic(const SampleBatch& batch,
                       const PooledHoldoutSplit& split, double lambda0,
                       double lambda1, const KernelSpec& stat_kernel,
                       const KernelSpec& context_kernel) {
  batch.validate();
  std::vector<bool> held(static_cast<std::size_t>(batch.size()), false);
  for (Index i : split.holdout_idx) held[static_cast<std::size_t>(i)] = true;

  IndexList ref_idx, cond_idx;
  for (Index i = 0; i < batch.size(); ++i) {
    if (held[static_cast<std::size_t>(i)]) continue;
    (batch.domains[static_cast<std::size_t>(i)] == 0 ? ref_idx : cond_idx)
        .push_back(i);
  }

  Matrix k_pool =
      rbf_gram_matrix(batch.statistics, batch.statistics, stat_kernel.bandwidth);
  Matrix l_pool =
      rbf_gram_matrix(batch.contexts, batch.contexts, context_kernel.bandwidth);
  return detail::statistic_from_pooled(k_pool, l_pool, ref_idx, cond_idx,
                                       split.holdout_idx, lambda0, lambda1);
}

WeightMatrices weight_matrices(const SampleBatch& batch,
                               const HoldoutSplit& split, double lambda0,
                               double lambda1,
                               const KernelSpec& context_kernel) {
  batch.validate();
  Matrix l_pool =
      rbf_gram_matrix(batch.contexts, batch.contexts, context_kernel.bandwidth);
  IndexList ref_idx = batch.domain_indices(0);

  Matrix a0 = detail::holdout_coefficients(l_pool, ref_idx, split.holdout_idx,
                                           lambda0);
  Matrix a1 = detail::holdout_coefficients(l_pool, split.conditioning_idx,
                                           split.holdout_idx, lambda1);

  const double inv_nh = 1.0 / static_cast<double>(split.holdout_idx.size());
  WeightMatrices w;
  w.w00 = inv_nh * (a0 * a0.transpose());
  w.w11 = inv_nh * (a1 * a1.transpose());
  w.w01 = inv_nh * (a0 * a1.transpose());
  return w;
}

}  // namespace ctxdrift
