#include "ctxdrift/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ctxdrift {

double mmd_squared_biased(const Matrix& x0, const Matrix& x1,
                          const KernelSpec& stat_kernel) {
  require(x0.rows() >= 1 && x1.rows() >= 1,
          "mmd_squared_biased: empty sample");
  const double n0 = static_cast<double>(x0.rows());
  const double n1 = static_cast<double>(x1.rows());
  const double s00 = rbf_gram_matrix(x0, x0, stat_kernel.bandwidth).sum();
  const double s11 = rbf_gram_matrix(x1, x1, stat_kernel.bandwidth).sum();
  const double s01 = rbf_gram_matrix(x0, x1, stat_kernel.bandwidth).sum();
  return s00 / (n0 * n0) + s11 / (n1 * n1) - 2.0 * s01 / (n0 * n1);
}

DetectionReport mmd_two_sample_test(const Matrix& x0, const Matrix& x1,
                                    const KernelSpec& stat_kernel, int n_perm,
                                    Rng rng) {
  require(x0.rows() >= 2 && x1.rows() >= 2,
          "mmd_two_sample_test: need >= 2 rows per sample");
  require(x0.cols() == x1.cols(), "mmd_two_sample_test: column mismatch");
  require(n_perm >= 1, "mmd_two_sample_test: n_perm >= 1");

  const Index n0 = x0.rows();
  const Index n1 = x1.rows();
  Matrix pooled(n0 + n1, x0.cols());
  pooled.topRows(n0) = x0;
  pooled.bottomRows(n1) = x1;
  const Matrix k = rbf_gram_matrix(pooled, pooled, stat_kernel.bandwidth);
  const double k_total = k.sum();

  const double d_n0 = static_cast<double>(n0);
  const double d_n1 = static_cast<double>(n1);
  auto statistic_for = [&](const IndexList& g0, const IndexList& g1) {
    const double s00 = k(g0, g0).sum();
    const double s11 = k(g1, g1).sum();
    const double s01 = 0.5 * (k_total - s00 - s11);
    return s00 / (d_n0 * d_n0) + s11 / (d_n1 * d_n1) -
           2.0 * s01 / (d_n0 * d_n1);
  };

  IndexList base0(static_cast<std::size_t>(n0));
  IndexList base1(static_cast<std::size_t>(n1));
  std::iota(base0.begin(), base0.end(), Index{0});
  std::iota(base1.begin(), base1.end(), n0);
  const double observed = statistic_for(base0, base1);

  std::vector<double> permuted(static_cast<std::size_t>(n_perm));
  for (int i = 0; i < n_perm; ++i) {
    Rng sub = rng.derive(1 + static_cast<std::uint64_t>(i));
    IndexList order(static_cast<std::size_t>(n0 + n1));
    std::iota(order.begin(), order.end(), Index{0});
    sub.shuffle(order.begin(), order.end());
    IndexList g0(order.begin(), order.begin() + n0);
    IndexList g1(order.begin() + n0, order.end());
    permuted[static_cast<std::size_t>(i)] = statistic_for(g0, g1);
  }

  DetectionReport report;
  report.method = "mmd";
  report.statistic = observed;
  report.permuted_statistics = std::move(permuted);
  report.p_value = p_value_from(observed, report.permuted_statistics, false);
  report.n_perm = n_perm;
  report.seed = rng.seed();
  report.diagnostics["bandwidth_stat"] = stat_kernel.bandwidth;
  report.diagnostics["n0"] = d_n0;
  report.diagnostics["n1"] = d_n1;
  return report;
}

KdeModel kde_fit(const Matrix& points) {
  const Index m = points.rows();
  const Index q = points.cols();
  require(m >= 2, "kde_fit: need at least two points");

  double mean_sd = 0.0;
  for (Index j = 0; j < q; ++j) {
    const double mu = points.col(j).mean();
    const double var =
        (points.col(j).array() - mu).square().sum() / static_cast<double>(m - 1);
    mean_sd += std::sqrt(var);
  }
  mean_sd /= static_cast<double>(q);
  if (mean_sd <= 0.0) {
    throw DegenerateDataError("kde_fit: zero-variance data");
  }
  const double h =
      std::pow(static_cast<double>(m), -1.0 / (static_cast<double>(q) + 4.0)) *
      mean_sd;
  return KdeModel{points, h};
}

double kde_log_density(const KdeModel& model, const Vector& c) {
  require(c.size() == model.points.cols(),
          "kde_density: dimension mismatch");
  const Index m = model.points.rows();
  const Index q = model.points.cols();
  const double h2 = model.bandwidth * model.bandwidth;

  // log-sum-exp over the component log densities
  double max_term = -std::numeric_limits<double>::infinity();
  Vector terms(m);
  for (Index i = 0; i < m; ++i) {
    const double d2 = (model.points.row(i).transpose() - c).squaredNorm();
    terms[i] = -0.5 * d2 / h2;
    max_term = std::max(max_term, terms[i]);
  }
  double acc = 0.0;
  for (Index i = 0; i < m; ++i) acc += std::exp(terms[i] - max_term);
  const double log_norm =
      -0.5 * static_cast<double>(q) * std::log(2.0 * M_PI * h2);
  return max_term + std::log(acc / static_cast<double>(m)) + log_norm;
}

double kde_density(const KdeModel& model, const Vector& c) {
  return std::exp(kde_log_density(model, c));
}

IndexList rejection_subsample(const Matrix& ref_contexts, const KdeModel& p0,
                              const KdeModel& p1, Rng rng) {
  const Index n = ref_contexts.rows();
  require(n >= 1, "rejection_subsample: empty reference set");

  Vector log_ratio(n);
  for (Index i = 0; i < n; ++i) {
    const Vector c = ref_contexts.row(i).transpose();
    log_ratio[i] = kde_log_density(p1, c) - kde_log_density(p0, c);
  }
  const double log_max = log_ratio.maxCoeff();

  IndexList retained;
  for (Index i = 0; i < n; ++i) {
    const double accept = std::min(1.0, std::exp(log_ratio[i] - log_max));
    if (rng.uniform() < accept) retained.push_back(i);
  }
  if (retained.empty()) {
    throw ResampleFailureError("rejection_subsample: no rows retained");
  }
  return retained;
}

DetectionReport mmd_sub_test(const SampleBatch& batch,
                             const DetectConfig& config) {
  batch.validate();
  require(config.n_perm >= 1, "mmd_sub_test: n_perm >= 1");
  Rng root(config.seed);

  IndexList ref_idx = batch.domain_indices(0);
  IndexList deploy_idx = batch.domain_indices(1);
  const double frac = config.holdout_fraction;

  auto hold_split = [&](IndexList idx, Rng r) {
    r.shuffle(idx.begin(), idx.end());
    const auto n_h = static_cast<std::size_t>(
        std::ceil(frac * static_cast<double>(idx.size())));
    require(n_h >= 2 && idx.size() - n_h >= 2,
            "mmd_sub_test: domain too small to hold out a density-fitting "
            "portion");
    return std::pair<IndexList, IndexList>(
        IndexList(idx.begin(), idx.begin() + n_h),
        IndexList(idx.begin() + n_h, idx.end()));
  };

  auto [ref_held, ref_rest] = hold_split(ref_idx, root.derive(0));
  auto [dep_held, dep_rest] = hold_split(deploy_idx, root.derive(1));

  KdeModel p0 = kde_fit(batch.contexts(ref_held, Eigen::all));
  KdeModel p1 = kde_fit(batch.contexts(dep_held, Eigen::all));

  IndexList kept = rejection_subsample(batch.contexts(ref_rest, Eigen::all),
                                       p0, p1, root.derive(2));
  IndexList kept_rows;
  kept_rows.reserve(kept.size());
  for (Index i : kept) kept_rows.push_back(ref_rest[static_cast<std::size_t>(i)]);
  if (kept_rows.size() < 2) {
    throw ResampleFailureError(
        "mmd_sub_test: fewer than 2 reference rows retained");
  }

  Matrix x0 = batch.statistics(kept_rows, Eigen::all);
  Matrix x1 = batch.statistics(dep_rest, Eigen::all);
  Matrix pooled(x0.rows() + x1.rows(), x0.cols());
  pooled.topRows(x0.rows()) = x0;
  pooled.bottomRows(x1.rows()) = x1;
  KernelSpec k_spec(median_heuristic_bandwidth(pooled));

  DetectionReport report =
      mmd_two_sample_test(x0, x1, k_spec, config.n_perm, root.derive(3));
  report.method = "mmd_sub";
  report.seed = config.seed;
  report.diagnostics["kde_bandwidth_ref"] = p0.bandwidth;
  report.diagnostics["kde_bandwidth_deploy"] = p1.bandwidth;
  report.diagnostics["retained_ref"] = static_cast<double>(kept_rows.size());
  report.diagnostics["candidate_ref"] = static_cast<double>(ref_rest.size());
  return report;
}

}  // namespace ctxdrift
