#include "ctxdrift/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ctxdrift {

namespace {

constexpr double kCollapseVariance = 1e-8;
constexpr int kRestarts = 5;

struct ComponentCollapse {};

// log N(x | mu, diag(var)) per point and component
Matrix log_component_densities(const GmmModel& m, const Matrix& x) {
  const Index n = x.rows();
  const int k = m.components();
  Matrix out(n, k);
  for (int c = 0; c < k; ++c) {
    const auto mu = m.means.row(c).array();
    const auto var = m.variances.row(c).array();
    const double log_norm =
        -0.5 * (var.log() + std::log(2.0 * M_PI)).sum() +
        std::log(m.weights[c]);
    out.col(c) =
        (-0.5 * ((x.array().rowwise() - mu).square().rowwise() / var)
                    .rowwise()
                    .sum() +
         log_norm)
            .matrix();
  }
  return out;
}

// row-wise log-sum-exp
Vector row_lse(const Matrix& log_p) {
  Vector max = log_p.rowwise().maxCoeff();
  Vector out(log_p.rows());
  for (Index i = 0; i < log_p.rows(); ++i) {
    out[i] = max[i] +
             std::log((log_p.row(i).array() - max[i]).exp().sum());
  }
  return out;
}

Matrix farthest_point_means(const Matrix& data, int k, Rng& rng) {
  const Index n = data.rows();
  Matrix means(k, data.cols());
  Index first = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
  means.row(0) = data.row(first);
  Vector min_d2 =
      (data.rowwise() - data.row(first)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    Index best = 0;
    min_d2.maxCoeff(&best);
    means.row(c) = data.row(best);
    Vector d2 = (data.rowwise() - data.row(best)).rowwise().squaredNorm();
    min_d2 = min_d2.cwiseMin(d2);
  }
  return means;
}

GmmModel run_em(const Matrix& data, int k, Rng rng, double tol, int max_iter) {
  const Index n = data.rows();
  const Index d = data.cols();

  GmmModel m;
  m.weights = Vector::Constant(k, 1.0 / k);
  m.means = farthest_point_means(data, k, rng);
  Vector data_var(d);
  for (Index j = 0; j < d; ++j) {
    const double mu = data.col(j).mean();
    data_var[j] = std::max(
        (data.col(j).array() - mu).square().sum() / static_cast<double>(n),
        kCollapseVariance * 10.0);
  }
  m.variances = data_var.transpose().replicate(k, 1);

  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < max_iter; ++iter) {
    Matrix log_p = log_component_densities(m, data);
    Vector lse = row_lse(log_p);
    const double ll = lse.sum();
    m.log_likelihood_trace.push_back(ll);

    Matrix resp = (log_p.colwise() - lse).array().exp();

    Vector nk = resp.colwise().sum();
    for (int c = 0; c < k; ++c) {
      if (nk[c] < 1e-10) throw ComponentCollapse{};
      m.weights[c] = nk[c] / static_cast<double>(n);
      Vector mu = (resp.col(c).transpose() * data).transpose() / nk[c];
      m.means.row(c) = mu.transpose();
      Matrix centered = data.rowwise() - mu.transpose();
      Vector var = (centered.array().square().colwise() *
                    resp.col(c).array())
                       .colwise()
                       .sum()
                       .transpose() /
                   nk[c];
      if (var.minCoeff() < kCollapseVariance) throw ComponentCollapse{};
      m.variances.row(c) = var.transpose();
    }

    if (std::isfinite(prev_ll)) {
      const double improvement = ll - prev_ll;
      if (improvement / (std::abs(prev_ll) + 1e-300) < tol) break;
    }
    prev_ll = ll;
  }
  return m;
}

}  // namespace

GmmModel fit_gmm_em(const Matrix& data, int k, Rng rng, double tol,
                    int max_iter) {
  require(k >= 2, "fit_gmm_em: need at least 2 components");
  require(data.rows() >= 2 * k, "fit_gmm_em: need at least 2k samples");
  require(max_iter >= 1 && tol > 0.0, "fit_gmm_em: invalid tol/max_iter");

  GmmModel best;
  double best_ll = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (int r = 0; r < kRestarts; ++r) {
    try {
      GmmModel m = run_em(data, k, rng.derive(static_cast<std::uint64_t>(r)),
                          tol, max_iter);
      const double ll = m.log_likelihood_trace.back();
      if (!any || ll > best_ll) {
        best = std::move(m);
        best_ll = ll;
        any = true;
      }
    } catch (const ComponentCollapse&) {
      // restart with a different initialization
    }
  }
  if (!any) {
    throw DegenerateDataError(
        "fit_gmm_em: every restart collapsed a component");
  }
  return best;
}

Matrix gmm_posterior(const GmmModel& model, const Matrix& x) {
  require(x.cols() == model.means.cols(),
          "gmm_posterior: dimension mismatch");
  Matrix log_p = log_component_densities(model, x);
  Vector lse = row_lse(log_p);
  return (log_p.colwise() - lse).array().exp();
}

}  // namespace ctxdrift
