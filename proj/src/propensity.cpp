#include "ctxdrift/propensity.hpp"

#include <algorithm>
#include <cmath>

namespace ctxdrift {

namespace {

constexpr double kProbClamp = 1e-12;
constexpr double kGradTol = 1e-6;
constexpr int kMaxNewtonIters = 100;

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(f)) - z*f, stable for large |f|
double logistic_nll_term(double f, double z) {
  return std::max(f, 0.0) + std::log1p(std::exp(-std::abs(f))) - z * f;
}

double objective(const Matrix& l, const Vector& z, double reg,
                 const Vector& alpha, double b) {
  Vector f = l * alpha;
  f.array() += b;
  double nll = 0.0;
  for (Index i = 0; i < f.size(); ++i) nll += logistic_nll_term(f[i], z[i]);
  return nll + reg * alpha.dot(l * alpha);
}

}  // namespace

PropensityModel fit_propensity(const Matrix& contexts,
                               const std::vector<int>& domains, double reg,
                               const KernelSpec& context_kernel) {
  const Index n = contexts.rows();
  require(static_cast<Index>(domains.size()) == n,
          "fit_propensity: label count mismatch");
  require(n >= 4, "fit_propensity: need at least 4 samples");
  require(reg > 0.0, "fit_propensity: regularization must be positive");

  Index n1 = 0;
  for (int v : domains) {
    require(v == 0 || v == 1, "fit_propensity: labels must be 0 or 1");
    n1 += v;
  }
  require(n1 > 0 && n1 < n, "fit_propensity: both classes must be present");

  Matrix l = rbf_gram_matrix(contexts, contexts, context_kernel.bandwidth);
  Vector z(n);
  for (Index i = 0; i < n; ++i) z[i] = domains[static_cast<std::size_t>(i)];

  Vector alpha = Vector::Zero(n);
  const double base_rate = static_cast<double>(n1) / static_cast<double>(n);
  double b = std::log(base_rate / (1.0 - base_rate));

  double obj = objective(l, z, reg, alpha, b);
  bool converged = false;

  for (int iter = 0; iter < kMaxNewtonIters; ++iter) {
    Vector f = l * alpha;
    f.array() += b;
    Vector p(n), w(n);
    for (Index i = 0; i < n; ++i) {
      p[i] = sigmoid(f[i]);
      w[i] = std::max(p[i] * (1.0 - p[i]), 1e-12);
    }

    Vector resid = p - z;
    Vector g_alpha = l * (resid + 2.0 * reg * alpha);
    double g_b = resid.sum();
    double grad_norm = std::max(g_alpha.lpNorm<Eigen::Infinity>(), std::abs(g_b));
    if (grad_norm <= kGradTol) {
      converged = true;
      break;
    }

    // Full Newton system over (alpha, b)
    Matrix h(n + 1, n + 1);
    Matrix lw = l * w.asDiagonal();
    h.topLeftCorner(n, n) = lw * l + 2.0 * reg * l;
    h.topLeftCorner(n, n).diagonal().array() += 1e-10;
    h.block(0, n, n, 1) = l * w;
    h.block(n, 0, 1, n) = (l * w).transpose();
    h(n, n) = w.sum() + 1e-10;

    Vector g(n + 1);
    g.head(n) = g_alpha;
    g[n] = g_b;
    Vector step = h.ldlt().solve(-g);

    // backtracking keeps the objective monotone
    double t = 1.0;
    const double slope = g.dot(step);
    double new_obj = obj;
    Vector new_alpha = alpha;
    double new_b = b;
    for (int ls = 0; ls < 40; ++ls) {
      new_alpha = alpha + t * step.head(n);
      new_b = b + t * step[n];
      new_obj = objective(l, z, reg, new_alpha, new_b);
      if (new_obj <= obj + 1e-4 * t * slope) break;
      t *= 0.5;
    }
    if (new_obj > obj) break;  // no progress possible
    alpha = new_alpha;
    b = new_b;
    obj = new_obj;
  }

  PropensityModel model;
  model.train_contexts = contexts;
  model.coefficients = alpha;
  model.intercept = b;
  model.context_kernel = context_kernel;
  model.regularization = reg;
  model.converged = converged;
  return model;
}

Vector predict_propensity(const PropensityModel& model,
                          const Matrix& contexts) {
  require(contexts.cols() == model.train_contexts.cols(),
          "predict_propensity: context dimension mismatch");
  Matrix l = rbf_gram_matrix(contexts, model.train_contexts,
                             model.context_kernel.bandwidth);
  Vector f = l * model.coefficients;
  f.array() += model.intercept;
  Vector p(f.size());
  for (Index i = 0; i < f.size(); ++i) {
    p[i] = std::clamp(sigmoid(f[i]), kProbClamp, 1.0 - kProbClamp);
  }
  return p;
}

double propensity_objective(const Matrix& contexts,
                            const std::vector<int>& domains, double reg,
                            const KernelSpec& context_kernel,
                            const Vector& coefficients, double intercept) {
  Matrix l = rbf_gram_matrix(contexts, contexts, context_kernel.bandwidth);
  Vector z(contexts.rows());
  for (Index i = 0; i < z.size(); ++i) z[i] = domains[static_cast<std::size_t>(i)];
  return objective(l, z, reg, coefficients, intercept);
}

std::vector<int> reassign_from_probabilities(const Vector& probabilities,
                                             const Rng& rng,
                                             int min_per_domain) {
  const Index n = probabilities.size();
  require(n >= 2 * min_per_domain, "reassign: too few rows");
  std::vector<int> z(static_cast<std::size_t>(n));
  for (int attempt = 0; attempt < 100; ++attempt) {
    Rng sub = rng.derive(static_cast<std::uint64_t>(attempt));
    int c0 = 0, c1 = 0;
    for (Index i = 0; i < n; ++i) {
      const int v = sub.bernoulli(probabilities[i]) ? 1 : 0;
      z[static_cast<std::size_t>(i)] = v;
      (v == 1 ? c1 : c0) += 1;
    }
    if (c0 >= min_per_domain && c1 >= min_per_domain) return z;
  }
  throw DegenerateDataError(
      "conditional_reassign: 100 consecutive degenerate reassignments; "
      "propensity is too extreme");
}

std::vector<int> conditional_reassign(const PropensityModel& model,
                                      const Matrix& contexts, const Rng& rng,
                                      int min_per_domain) {
  return reassign_from_probabilities(predict_propensity(model, contexts), rng,
                                     min_per_domain);
}

}  // namespace ctxdrift
