#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ctxdrift/gmm.hpp"
#include "ctxdrift/rng.hpp"
#include "oracle_helpers.hpp"

#include <cmath>

using namespace ctxdrift;

namespace {

Matrix two_cluster_data(Index per_cluster, double center, Rng& rng) {
  Matrix data(2 * per_cluster, 1);
  for (Index i = 0; i < per_cluster; ++i) {
    data(i, 0) = rng.normal(-center, 1.0);
    data(per_cluster + i, 0) = rng.normal(center, 1.0);
  }
  return data;
}

}  // namespace

TEST_CASE("fit_gmm_em recovers separated clusters") {
  int recovered = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    Matrix data = two_cluster_data(30, 10.0, rng);
    GmmModel m = fit_gmm_em(data, 2, rng.derive(1));
    const double lo = std::min(m.means(0, 0), m.means(1, 0));
    const double hi = std::max(m.means(0, 0), m.means(1, 0));
    if (std::abs(lo + 10.0) <= 0.5 && std::abs(hi - 10.0) <= 0.5) ++recovered;
  }
  CHECK(recovered >= 95);
}

TEST_CASE("fit_gmm_em rejects k=1 and tiny samples") {
  Rng rng(1);
  Matrix data = oracle::random_matrix(10, 1, rng);
  CHECK_THROWS_AS(fit_gmm_em(data, 1, Rng(0)), ConfigError);
  Matrix tiny = oracle::random_matrix(3, 1, rng);
  CHECK_THROWS_AS(fit_gmm_em(tiny, 2, Rng(0)), ConfigError);
}

TEST_CASE("log-likelihood trace is monotone") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    Matrix data = two_cluster_data(20, 3.0, rng);
    GmmModel m = fit_gmm_em(data, 2, rng.derive(7));
    REQUIRE(m.log_likelihood_trace.size() >= 1);
    for (std::size_t i = 1; i < m.log_likelihood_trace.size(); ++i) {
      CHECK(m.log_likelihood_trace[i] >=
            m.log_likelihood_trace[i - 1] - 1e-9);
    }
  }
}

TEST_CASE("model invariants: weights on the simplex, variances positive") {
  Rng rng(5);
  Matrix data = two_cluster_data(25, 4.0, rng);
  GmmModel m = fit_gmm_em(data, 2, rng.derive(1));
  CHECK(std::abs(m.weights.sum() - 1.0) <= 1e-10);
  CHECK(m.weights.minCoeff() > 0.0);
  CHECK(m.variances.minCoeff() > 0.0);
}

TEST_CASE("gmm_posterior at a well-separated component mean is confident") {
  Rng rng(6);
  Matrix data = two_cluster_data(40, 8.0, rng);
  GmmModel m = fit_gmm_em(data, 2, rng.derive(1));
  Matrix query = m.means;
  Matrix post = gmm_posterior(m, query);
  CHECK(post(0, 0) + post(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(post.row(0).maxCoeff() > 0.99);
  CHECK(post.row(1).maxCoeff() > 0.99);
}

TEST_CASE("gmm_posterior equidistant point splits evenly") {
  GmmModel m;
  m.weights = Vector::Constant(2, 0.5);
  m.means = Matrix(2, 1);
  m.means << -1.0, 1.0;
  m.variances = Matrix::Constant(2, 1, 0.5);
  Matrix mid = Matrix::Zero(1, 1);
  Matrix post = gmm_posterior(m, mid);
  CHECK(post(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(post(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("gmm_posterior rows sum to one") {
  Rng rng(7);
  Matrix data = two_cluster_data(20, 2.0, rng);
  GmmModel m = fit_gmm_em(data, 2, rng.derive(1));
  Matrix queries = oracle::random_matrix(30, 1, rng);
  Matrix post = gmm_posterior(m, queries);
  for (Index i = 0; i < post.rows(); ++i) {
    CHECK(std::abs(post.row(i).sum() - 1.0) <= 1e-12);
    CHECK(post.row(i).minCoeff() >= 0.0);
  }
}

TEST_CASE("responsibilities invariant under component relabeling") {
  Rng rng(8);
  Matrix data = two_cluster_data(20, 3.0, rng);
  GmmModel m = fit_gmm_em(data, 2, rng.derive(1));

  GmmModel swapped = m;
  swapped.weights.reverseInPlace();
  swapped.means = m.means.colwise().reverse().eval();
  swapped.variances = m.variances.colwise().reverse().eval();

  Matrix queries = oracle::random_matrix(10, 1, rng);
  Matrix post = gmm_posterior(m, queries);
  Matrix post_swapped = gmm_posterior(swapped, queries);
  CHECK((post.col(0) - post_swapped.col(1)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((post.col(1) - post_swapped.col(0)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("fitting translated data translates the means only") {
  Rng rng(9);
  Matrix data = two_cluster_data(25, 3.0, rng);
  Matrix shifted = data;
  shifted.array() += 11.0;

  GmmModel base = fit_gmm_em(data, 2, Rng(55));
  GmmModel moved = fit_gmm_em(shifted, 2, Rng(55));

  CHECK((moved.means.array() - base.means.array() - 11.0).abs().maxCoeff() <=
        1e-8);
  CHECK((moved.variances - base.variances).cwiseAbs().maxCoeff() <= 1e-8);

  Matrix queries = oracle::random_matrix(10, 1, rng);
  Matrix shifted_queries = queries;
  shifted_queries.array() += 11.0;
  Matrix post_base = gmm_posterior(base, queries);
  Matrix post_moved = gmm_posterior(moved, shifted_queries);
  CHECK((post_base - post_moved).cwiseAbs().maxCoeff() <= 1e-8);
}
