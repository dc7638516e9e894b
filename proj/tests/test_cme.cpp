#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ctxdrift/cme.hpp"
#include "ctxdrift/rng.hpp"
#include "oracle_helpers.hpp"

#include <cmath>
#include <numeric>

using namespace ctxdrift;

namespace {

Matrix single(double v) {
  Matrix m(1, 1);
  m << v;
  return m;
}

}  // namespace

TEST_CASE("fit_cme 1x1 ridge system") {
  CmeFit fit(0, single(0.0), 0.5, KernelSpec(1.0));
  // regularized matrix is [1 + 1*0.5] = [1.5]; solve([3]) = [2]
  CHECK(fit.regularized_matrix()(0, 0) == doctest::Approx(1.5));
  Vector rhs(1);
  rhs << 3;
  CHECK(fit.solve(rhs)(0, 0) == doctest::Approx(2.0));
}

TEST_CASE("fit_cme duplicate contexts stay positive definite") {
  Matrix c(2, 1);
  c << 0, 0;
  const double lambda = 0.5;
  CmeFit fit(0, c, lambda, KernelSpec(1.0));
  // L = ones(2,2); regularized matrix [[1+2*0.5, 1], [1, 1+2*0.5]]
  Matrix expected(2, 2);
  expected << 2, 1, 1, 2;
  CHECK((fit.regularized_matrix() - expected).cwiseAbs().maxCoeff() <= 1e-12);

  Vector rhs(2);
  rhs << 3, 3;
  Vector x = fit.solve(rhs);
  CHECK((expected * x - rhs).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("fit_cme rejects invalid parameters") {
  Matrix c(2, 1);
  c << 0, 1;
  CHECK_THROWS_AS(CmeFit(0, c, 0.0, KernelSpec(1.0)), ConfigError);
  CHECK_THROWS_AS(CmeFit(0, c, -1.0, KernelSpec(1.0)), ConfigError);
  CHECK_THROWS_AS(CmeFit(2, c, 0.1, KernelSpec(1.0)), ConfigError);
}

TEST_CASE("fit_cme factor reconstructs the regularized matrix") {
  Rng rng(5);
  Matrix c = oracle::random_matrix(20, 2, rng);
  CmeFit fit(1, c, 0.01, KernelSpec(0.8));
  // solve against the identity gives the inverse; multiply back
  Matrix inv = fit.solve(Matrix::Identity(20, 20));
  Matrix reg = fit.regularized_matrix();
  const double rel =
      (reg * inv - Matrix::Identity(20, 20)).norm() / std::sqrt(20.0);
  CHECK(rel <= 1e-8);
}

TEST_CASE("fit_cme solve matches dense inverse") {
  Rng rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    const Index n = 5 + static_cast<Index>(rng.uniform_index(16));
    Matrix c = oracle::random_matrix(n, 2, rng);
    const double lambda = 0.05;
    CmeFit fit(0, c, lambda, KernelSpec(1.1));

    Matrix inv = oracle::ridge_inverse(c, lambda, 1.1);
    Matrix l = oracle::gram(c, c, 1.1);
    for (Index col = 0; col < std::min<Index>(3, n); ++col) {
      Vector direct = inv * l.col(col);
      Vector solved = fit.solve(l.col(col));
      CHECK((direct - solved).cwiseAbs().maxCoeff() <= 1e-9);
    }
  }
}

TEST_CASE("codite_mmd 1x1 closed form") {
  // one reference point, one deployment point, identical contexts:
  // U(c) = [k(s0,s0) + k(s1,s1) - 2 k(s0,s1)] / (1 + lambda)^2
  const double lambda = 0.3;
  Matrix ctx = single(0.7);
  Matrix s0 = single(0.0), s1 = single(1.4);
  const double sigma_k = 0.9;

  CmeFit fit0(0, ctx, lambda, KernelSpec(1.0));
  CmeFit fit1(1, ctx, lambda, KernelSpec(1.0));
  GramMatrix k00 = rbf_gram(s0, s0, KernelSpec(sigma_k));
  GramMatrix k11 = rbf_gram(s1, s1, KernelSpec(sigma_k));
  GramMatrix k01 = rbf_gram(s0, s1, KernelSpec(sigma_k));
  const double got =
      codite_mmd(fit0, fit1, k00, k11, k01, ctx.row(0).transpose());

  const double k01v = std::exp(-(1.4 * 1.4) / (2.0 * sigma_k * sigma_k));
  const double expected = (1.0 + 1.0 - 2.0 * k01v) / ((1.0 + lambda) * (1.0 + lambda));
  CHECK(got == doctest::Approx(expected).epsilon(1e-12));

  const double want = oracle::codite(s0, ctx, s1, ctx, lambda, lambda,
                                     sigma_k, 1.0, ctx.row(0));
  CHECK(got == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("codite_mmd is zero for identical domains") {
  Rng rng(8);
  Matrix s = oracle::random_matrix(4, 1, rng);
  Matrix c = oracle::random_matrix(4, 1, rng);
  CmeFit fit0(0, c, 1e-3, KernelSpec(1.0));
  CmeFit fit1(1, c, 1e-3, KernelSpec(1.0));
  KernelSpec k_spec(1.0);
  GramMatrix k = rbf_gram(s, s, k_spec);
  Vector query(1);
  query << 0.2;
  CHECK(std::abs(codite_mmd(fit0, fit1, k, k, k, query)) <= 1e-10);
}

TEST_CASE("codite_mmd matches the brute-force expansion") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const Index n0 = 2 + static_cast<Index>(rng.uniform_index(9));
    const Index n1 = 2 + static_cast<Index>(rng.uniform_index(9));
    Matrix s0 = oracle::random_matrix(n0, 2, rng);
    Matrix c0 = oracle::random_matrix(n0, 1, rng);
    Matrix s1 = oracle::random_matrix(n1, 2, rng);
    Matrix c1 = oracle::random_matrix(n1, 1, rng);
    const double l0 = 0.01, l1 = 0.05, sigma_k = 1.2, sigma_l = 0.8;

    CmeFit fit0(0, c0, l0, KernelSpec(sigma_l));
    CmeFit fit1(1, c1, l1, KernelSpec(sigma_l));
    GramMatrix k00 = rbf_gram(s0, s0, KernelSpec(sigma_k));
    GramMatrix k11 = rbf_gram(s1, s1, KernelSpec(sigma_k));
    GramMatrix k01 = rbf_gram(s0, s1, KernelSpec(sigma_k));

    Vector query(1);
    query << rng.normal();
    const double got = codite_mmd(fit0, fit1, k00, k11, k01, query);
    const double want = oracle::codite(s0, c0, s1, c1, l0, l1, sigma_k,
                                       sigma_l, query.transpose());
    CHECK(got == doctest::Approx(want).epsilon(1e-8));
    CHECK(got >= -1e-8);

    // symmetry under swapping domains (transpose the cross Gram)
    GramMatrix k10{k01.entries.transpose(), 1, 0};
    const double swapped = codite_mmd(fit1, fit0, k11, k00, k10, query);
    CHECK(swapped == doctest::Approx(got).epsilon(1e-10));
  }
}

TEST_CASE("cme_holdout_error closed forms") {
  const double sigma_k = 1.0, sigma_l = 1.0;

  SUBCASE("interpolation limit") {
    Matrix c(2, 1), s(2, 1);
    c << 0.5, 0.5;
    s << -0.3, -0.3;
    CmeFit fit(0, c, 1e-12, KernelSpec(sigma_l));
    GramMatrix k_tt = rbf_gram(s, s, KernelSpec(sigma_k));
    GramMatrix k_to = rbf_gram(s, s.topRows(1), KernelSpec(sigma_k));
    GramMatrix l_to = rbf_gram(c, c.topRows(1), KernelSpec(sigma_l));
    Vector diag = Vector::Ones(1);
    Vector err = cme_holdout_error(fit, k_tt, k_to, diag, l_to);
    CHECK(err[0] <= 1e-8);
    CHECK(err[0] >= -1e-8);
  }

  SUBCASE("single train, single held-out, lambda = 1") {
    // scalar algebra: err = k(s,s) + l^2 k00 / (1+l)^2 - 2 l k0s / (1+l)
    const double lambda = 1.0;
    Matrix c0 = single(0.0), s0 = single(0.0);
    Matrix c = single(0.8), s = single(1.1);
    Vector got = oracle::holdout_errors(s0, c0, s, c, lambda, sigma_k, sigma_l);
    const double l = std::exp(-0.32);            // l(c, c0)
    const double k0s = std::exp(-1.1 * 1.1 / 2); // k(s0, s)
    const double expected = 1.0 + l * l * 1.0 / 4.0 - 2.0 * l * k0s / 2.0;
    CHECK(got[0] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("cme_holdout_error matches the brute-force expansion") {
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    Rng rng(seed);
    Matrix train_s = oracle::random_matrix(6, 1, rng);
    Matrix train_c = oracle::random_matrix(6, 1, rng);
    Matrix out_s = oracle::random_matrix(2, 1, rng);
    Matrix out_c = oracle::random_matrix(2, 1, rng);
    const double lambda = 0.02, sigma_k = 1.0, sigma_l = 0.7;

    CmeFit fit(0, train_c, lambda, KernelSpec(sigma_l));
    GramMatrix k_tt = rbf_gram(train_s, train_s, KernelSpec(sigma_k));
    GramMatrix k_to = rbf_gram(train_s, out_s, KernelSpec(sigma_k));
    GramMatrix l_to = rbf_gram(train_c, out_c, KernelSpec(sigma_l));
    Vector diag = Vector::Ones(2);

    Vector got = cme_holdout_error(fit, k_tt, k_to, diag, l_to);
    Vector want = oracle::holdout_errors(train_s, train_c, out_s, out_c,
                                         lambda, sigma_k, sigma_l);
    CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(got.minCoeff() >= -1e-8);
  }
}

namespace {

// mirror of the tuner's fold assignment (same shuffle, same boundaries)
std::vector<IndexList> fold_assignment(Index n, int folds, Rng rng) {
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  rng.shuffle(order.begin(), order.end());
  std::vector<IndexList> out;
  std::size_t start = 0;
  for (int f = 0; f < folds; ++f) {
    std::size_t len = static_cast<std::size_t>(n) / folds +
                      (f < static_cast<int>(static_cast<std::size_t>(n) % folds) ? 1 : 0);
    out.emplace_back(order.begin() + start, order.begin() + start + len);
    start += len;
  }
  return out;
}

}  // namespace

TEST_CASE("tune_lambda_cv singleton grid is forced") {
  Rng rng(9);
  Matrix s = oracle::random_matrix(12, 1, rng);
  Matrix c = oracle::random_matrix(12, 1, rng);
  CHECK(tune_lambda_cv(s, c, {0.037}, 3, Rng(1), KernelSpec(1.0),
                       KernelSpec(1.0)) == doctest::Approx(0.037));
}

TEST_CASE("tune_lambda_cv matches a naive oracle sweep") {
  for (std::uint64_t seed = 40; seed < 44; ++seed) {
    Rng rng(seed);
    const Index n = 18;
    Matrix c = oracle::random_matrix(n, 1, rng);
    Matrix s = c + 0.3 * oracle::random_matrix(n, 1, rng);
    const std::vector<double> grid = {1e-4, 1e-3, 1e-2, 1e-1};
    const int folds = 3;
    const double sigma_k = 1.0, sigma_l = 0.9;

    const double chosen = tune_lambda_cv(s, c, grid, folds, Rng(seed + 1),
                                         KernelSpec(sigma_k), KernelSpec(sigma_l));

    auto folds_idx = fold_assignment(n, folds, Rng(seed + 1));
    double best_err = std::numeric_limits<double>::infinity();
    double best_lambda = grid.front();
    for (double lambda : grid) {
      double total = 0.0;
      for (const auto& fold : folds_idx) {
        std::vector<bool> held(static_cast<std::size_t>(n), false);
        for (Index i : fold) held[static_cast<std::size_t>(i)] = true;
        IndexList train;
        for (Index i = 0; i < n; ++i) {
          if (!held[static_cast<std::size_t>(i)]) train.push_back(i);
        }
        total += oracle::holdout_errors(s(train, Eigen::all), c(train, Eigen::all),
                                        s(fold, Eigen::all), c(fold, Eigen::all),
                                        lambda, sigma_k, sigma_l)
                     .sum();
      }
      if (total <= best_err) {
        best_err = total;
        best_lambda = lambda;
      }
    }
    CHECK(chosen == doctest::Approx(best_lambda));
  }
}

TEST_CASE("tune_lambda_cv prefers heavy smoothing on pure noise") {
  const std::vector<double> grid = {1e-4, 1e-3, 1e-2, 1e-1};
  int max_selected = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed * 11 + 1);
    Matrix c = oracle::random_matrix(24, 1, rng);
    Matrix s = oracle::random_matrix(24, 1, rng);  // independent of c
    const double chosen = tune_lambda_cv(s, c, grid, 4, Rng(seed),
                                         KernelSpec(1.0), KernelSpec(1.0));
    if (chosen == grid.back()) ++max_selected;
  }
  CHECK(max_selected >= 16);  // >= 80% of 20 trials
}

TEST_CASE("tune_lambda_cv deterministic per seed") {
  Rng rng(77);
  Matrix c = oracle::random_matrix(15, 1, rng);
  Matrix s = c + 0.5 * oracle::random_matrix(15, 1, rng);
  const std::vector<double> grid = {1e-4, 1e-3, 1e-2};
  const double a = tune_lambda_cv(s, c, grid, 5, Rng(3), KernelSpec(1.0),
                                  KernelSpec(1.0));
  const double b = tune_lambda_cv(s, c, grid, 5, Rng(3), KernelSpec(1.0),
                                  KernelSpec(1.0));
  CHECK(a == b);
}

TEST_CASE("tune_lambda_cv rejects too few samples") {
  Rng rng(1);
  Matrix c = oracle::random_matrix(3, 1, rng);
  Matrix s = oracle::random_matrix(3, 1, rng);
  CHECK_THROWS_AS(tune_lambda_cv(s, c, {1e-3}, 4, Rng(0), KernelSpec(1.0),
                                 KernelSpec(1.0)),
                  ConfigError);
}
