#include "ctxdrift/cme.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ctxdrift {

CmeFit::CmeFit(int domain, Matrix contexts, double lambda,
               KernelSpec context_kernel)
    : domain_(domain),
      contexts_(std::move(contexts)),
      lambda_(lambda),
      context_kernel_(context_kernel) {
  require(domain_ == 0 || domain_ == 1, "CmeFit: domain must be 0 or 1");
  require(lambda_ > 0.0, "CmeFit: lambda must be positive");
  const Index n = contexts_.rows();
  require(n >= 1, "CmeFit: need at least one context row");

  Matrix reg = rbf_gram_matrix(contexts_, contexts_, context_kernel_.bandwidth);
  reg.diagonal().array() += static_cast<double>(n) * lambda_;
  factor_ = reg.llt();
  if (factor_.info() != Eigen::Success) {
    throw NumericalError(
        "CmeFit: Cholesky factorization failed (n=" + std::to_string(n) +
        ", lambda=" + std::to_string(lambda_) +
        ", diag shift=" + std::to_string(n * lambda_) + ")");
  }
}

Matrix CmeFit::solve(const Matrix& rhs) const {
  require(rhs.rows() == contexts_.rows(), "CmeFit::solve: row count mismatch");
  return factor_.solve(rhs);
}

Vector CmeFit::context_vector(const Vector& c) const {
  require(c.size() == contexts_.cols(),
          "CmeFit::context_vector: context dimension mismatch");
  return rbf_gram_matrix(contexts_, c.transpose(), context_kernel_.bandwidth);
}

Matrix CmeFit::regularized_matrix() const {
  Matrix reg = rbf_gram_matrix(contexts_, contexts_, context_kernel_.bandwidth);
  reg.diagonal().array() += static_cast<double>(contexts_.rows()) * lambda_;
  return reg;
}

double codite_mmd(const CmeFit& fit0, const CmeFit& fit1, const GramMatrix& K00,
                  const GramMatrix& K11, const GramMatrix& K01,
                  const Vector& c) {
  const Index n0 = fit0.sample_count();
  const Index n1 = fit1.sample_count();
  require(K00.entries.rows() == n0 && K00.entries.cols() == n0,
          "codite_mmd: K00 shape mismatch");
  require(K11.entries.rows() == n1 && K11.entries.cols() == n1,
          "codite_mmd: K11 shape mismatch");
  require(K01.entries.rows() == n0 && K01.entries.cols() == n1,
          "codite_mmd: K01 shape mismatch");

  Vector a = fit0.solve(fit0.context_vector(c));
  Vector b = fit1.solve(fit1.context_vector(c));
  return a.dot(K00.entries * a) + b.dot(K11.entries * b) -
         2.0 * a.dot(K01.entries * b);
}

Vector cme_holdout_error(const CmeFit& fit, const GramMatrix& K_train_train,
                         const GramMatrix& k_train_out,
                         const Vector& k_out_diag, const GramMatrix& l_out) {
  const Index n = fit.sample_count();
  const Index m = k_out_diag.size();
  require(K_train_train.entries.rows() == n && K_train_train.entries.cols() == n,
          "cme_holdout_error: K_train_train shape mismatch");
  require(k_train_out.entries.rows() == n && k_train_out.entries.cols() == m,
          "cme_holdout_error: k_train_out shape mismatch");
  require(l_out.entries.rows() == n && l_out.entries.cols() == m,
          "cme_holdout_error: l_out shape mismatch");

  Matrix a = fit.solve(l_out.entries);    // n x m
  Matrix ka = K_train_train.entries * a;  // n x m
  Vector quad =
      (a.array() * ka.array()).colwise().sum().matrix().transpose();
  Vector cross = (a.array() * k_train_out.entries.array())
                     .colwise()
                     .sum()
                     .matrix()
                     .transpose();
  return k_out_diag + quad - 2.0 * cross;
}

double tune_lambda_cv(const Matrix& statistics, const Matrix& contexts,
                      const std::vector<double>& grid, int folds, Rng rng,
                      const KernelSpec& stat_kernel,
                      const KernelSpec& context_kernel) {
  const Index n = contexts.rows();
  require(statistics.rows() == n, "tune_lambda_cv: row count mismatch");
  require(folds >= 2, "tune_lambda_cv: need at least 2 folds");
  require(n >= folds, "tune_lambda_cv: fewer samples than folds");
  require(!grid.empty(), "tune_lambda_cv: empty grid");

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  rng.shuffle(order.begin(), order.end());

  // contiguous fold boundaries over the shuffled order
  std::vector<std::pair<std::size_t, std::size_t>> bounds;
  std::size_t start = 0;
  for (int f = 0; f < folds; ++f) {
    std::size_t len = static_cast<std::size_t>(n) / folds +
                      (f < static_cast<int>(static_cast<std::size_t>(n) % folds) ? 1 : 0);
    bounds.emplace_back(start, start + len);
    start += len;
  }

  std::vector<double> ascending = grid;
  std::sort(ascending.begin(), ascending.end());

  double best_lambda = ascending.front();
  double best_err = std::numeric_limits<double>::infinity();
  for (double lambda : ascending) {
    require(lambda > 0.0, "tune_lambda_cv: grid values must be positive");
    double total = 0.0;
    for (const auto& [lo, hi] : bounds) {
      const Index m = static_cast<Index>(hi - lo);
      const Index nt = n - m;
      if (nt < 2) continue;  // fold too large to leave a trainable set
      Matrix train_c(nt, contexts.cols()), out_c(m, contexts.cols());
      Matrix train_s(nt, statistics.cols()), out_s(m, statistics.cols());
      Index ti = 0, oi = 0;
      for (std::size_t p = 0; p < order.size(); ++p) {
        const Index row = order[p];
        if (p >= lo && p < hi) {
          out_c.row(oi) = contexts.row(row);
          out_s.row(oi) = statistics.row(row);
          ++oi;
        } else {
          train_c.row(ti) = contexts.row(row);
          train_s.row(ti) = statistics.row(row);
          ++ti;
        }
      }
      CmeFit fit(0, train_c, lambda, context_kernel);
      GramMatrix k_tt = rbf_gram(train_s, train_s, stat_kernel);
      GramMatrix k_to = rbf_gram(train_s, out_s, stat_kernel);
      GramMatrix l_to = rbf_gram(train_c, out_c, context_kernel);
      // RBF kernel has k(s,s) = 1
      Vector k_diag = Vector::Ones(m);
      total += cme_holdout_error(fit, k_tt, k_to, k_diag, l_to).sum();
    }
    if (total <= best_err) {  // ascending scan, so ties keep the larger lambda
      best_err = total;
      best_lambda = lambda;
    }
  }
  return best_lambda;
}

}  // namespace ctxdrift
