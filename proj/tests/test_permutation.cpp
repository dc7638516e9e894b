#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ctxdrift/baselines.hpp"
#include "ctxdrift/harness.hpp"
#include "ctxdrift/permutation.hpp"
#include "ctxdrift/rng.hpp"
#include "oracle_helpers.hpp"

#include <cmath>

using namespace ctxdrift;

TEST_CASE("p-value formula edges") {
  // observed smaller than every permuted statistic
  CHECK(p_value_from(0.1, {0.2, 0.3, 0.4}, false) == doctest::Approx(1.0));
  // observed larger than every permuted statistic
  CHECK(p_value_from(0.5, {0.2, 0.3, 0.4}, false) == doctest::Approx(0.0));
  // strict inequality: ties do not count
  CHECK(p_value_from(0.3, {0.2, 0.3, 0.4}, false) ==
        doctest::Approx(1.0 / 3.0));
  // smoothed variant counts ties and adds one
  CHECK(p_value_from(0.3, {0.2, 0.3, 0.4}, true) == doctest::Approx(3.0 / 4.0));
}

TEST_CASE("unconditional test on identical multisets rarely rejects") {
  Rng data_rng(3);
  Matrix x = oracle::random_matrix(12, 1, data_rng);
  auto statistic = [](const Matrix& a, const Matrix& b) {
    return mmd_squared_biased(a, b, KernelSpec(1.0));
  };
  double mean_p = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    DetectionReport r = unconditional_permutation_test(x, x, statistic, 50,
                                                       Rng(seed));
    mean_p += r.p_value;
  }
  mean_p /= 20.0;
  CHECK(mean_p >= 0.4);
}

TEST_CASE("unconditional test detects a gross shift") {
  Rng data_rng(5);
  Matrix x0 = oracle::random_matrix(50, 1, data_rng);
  Matrix x1 = oracle::random_matrix(50, 1, data_rng);
  x1.array() += 10.0;
  auto statistic = [](const Matrix& a, const Matrix& b) {
    return mmd_squared_biased(a, b, KernelSpec(1.0));
  };
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    DetectionReport r = unconditional_permutation_test(x0, x1, statistic, 100,
                                                       Rng(seed));
    CHECK(r.p_value == doctest::Approx(0.0));
  }
}

TEST_CASE("unconditional test deterministic per seed") {
  Rng data_rng(6);
  Matrix x0 = oracle::random_matrix(15, 1, data_rng);
  Matrix x1 = oracle::random_matrix(15, 1, data_rng);
  auto statistic = [](const Matrix& a, const Matrix& b) {
    return mmd_squared_biased(a, b, KernelSpec(1.0));
  };
  DetectionReport a = unconditional_permutation_test(x0, x1, statistic, 30,
                                                     Rng(11));
  DetectionReport b = unconditional_permutation_test(x0, x1, statistic, 30,
                                                     Rng(11));
  CHECK(a.p_value == b.p_value);
  CHECK(a.permuted_statistics == b.permuted_statistics);
}

TEST_CASE("unconditional null p-values are calibrated") {
  // i.i.d. null data over 200 seeded runs; the p-value ECDF should pass a
  // KS test against U[0,1] at the 1% level, allowing the discreteness bias
  // of 1/(n_perm+1)
  auto statistic = [](const Matrix& a, const Matrix& b) {
    return mmd_squared_biased(a, b, KernelSpec(1.0));
  };
  std::vector<double> p_values;
  for (std::uint64_t run = 0; run < 200; ++run) {
    Rng rng(9000 + run);
    Matrix x0 = oracle::random_matrix(30, 1, rng);
    Matrix x1 = oracle::random_matrix(30, 1, rng);
    p_values.push_back(
        unconditional_permutation_test(x0, x1, statistic, 100, rng.derive(1))
            .p_value);
  }
  const double ks = ks_to_uniform(p_values);
  const double critical = 1.628 / std::sqrt(200.0) + 1.0 / 101.0;
  CHECK(ks <= critical);
}

TEST_CASE("fast MMD permutation path matches the generic route") {
  Rng data_rng(8);
  Matrix x0 = oracle::random_matrix(14, 2, data_rng);
  Matrix x1 = oracle::random_matrix(10, 2, data_rng);
  const KernelSpec spec(1.3);

  DetectionReport fast = mmd_two_sample_test(x0, x1, spec, 40, Rng(21));
  auto statistic = [&](const Matrix& a, const Matrix& b) {
    return mmd_squared_biased(a, b, spec);
  };
  DetectionReport generic =
      unconditional_permutation_test(x0, x1, statistic, 40, Rng(21));

  CHECK(fast.statistic == doctest::Approx(generic.statistic).epsilon(1e-12));
  REQUIRE(fast.permuted_statistics.size() == generic.permuted_statistics.size());
  for (std::size_t i = 0; i < fast.permuted_statistics.size(); ++i) {
    CHECK(fast.permuted_statistics[i] ==
          doctest::Approx(generic.permuted_statistics[i]).epsilon(1e-10));
  }
  CHECK(fast.p_value == doctest::Approx(generic.p_value));
}

namespace {

SampleBatch small_null_batch(std::uint64_t seed, Index n = 24) {
  ScenarioConfig cfg;
  cfg.scenario = Scenario::TimeContext;
  cfg.n0 = n;
  cfg.n1 = n;
  cfg.sigma = 0.5;
  return gen_time_context(cfg, Rng(seed));
}

}  // namespace

TEST_CASE("conditional test is reproducible bit for bit") {
  SampleBatch batch = small_null_batch(42);
  DetectConfig cfg;
  cfg.method = Method::Aditt;
  cfg.n_perm = 25;
  cfg.seed = 7;

  DetectionReport a = conditional_permutation_test(batch, cfg);
  DetectionReport b = conditional_permutation_test(batch, cfg);
  CHECK(a.statistic == b.statistic);
  CHECK(a.p_value == b.p_value);
  CHECK(a.permuted_statistics == b.permuted_statistics);
}

TEST_CASE("conditional test is schedule-independent") {
  SampleBatch batch = small_null_batch(43);
  DetectConfig cfg;
  cfg.method = Method::Aditt;
  cfg.n_perm = 16;
  cfg.seed = 3;
  cfg.threads = 1;
  DetectionReport serial = conditional_permutation_test(batch, cfg);
  cfg.threads = 4;
  DetectionReport parallel = conditional_permutation_test(batch, cfg);
  CHECK(serial.permuted_statistics == parallel.permuted_statistics);
  CHECK(serial.p_value == parallel.p_value);
}

TEST_CASE("conditional test report carries the configured diagnostics") {
  SampleBatch batch = small_null_batch(44);
  DetectConfig cfg;
  cfg.method = Method::Aditt;
  cfg.n_perm = 10;
  cfg.seed = 5;
  DetectionReport r = conditional_permutation_test(batch, cfg);

  CHECK(r.method == "aditt");
  CHECK(r.n_perm == 10);
  CHECK(r.permuted_statistics.size() == 10);
  CHECK(r.p_value >= 0.0);
  CHECK(r.p_value <= 1.0);
  CHECK(r.diagnostics.count("bandwidth_stat") == 1);
  CHECK(r.diagnostics.count("bandwidth_context") == 1);
  CHECK(r.diagnostics.count("lambda0") == 1);
  CHECK(r.diagnostics.count("lambda1") == 1);
  CHECK(r.diagnostics.count("holdout_size") == 1);
  CHECK(r.diagnostics.at("lambda0") == doctest::Approx(1e-3));
  CHECK(r.diagnostics.at("holdout_size") ==
        doctest::Approx(std::ceil(0.25 * 24)));
}

TEST_CASE("conditional test with adite method runs and is deterministic") {
  SampleBatch batch = small_null_batch(45);
  DetectConfig cfg;
  cfg.method = Method::Adite;
  cfg.n_perm = 12;
  cfg.seed = 2;
  DetectionReport a = conditional_permutation_test(batch, cfg);
  DetectionReport b = conditional_permutation_test(batch, cfg);
  CHECK(a.method == "adite");
  CHECK(a.p_value == b.p_value);
  CHECK(a.permuted_statistics.size() == 12);
}

TEST_CASE("conditional test rejects invalid configuration") {
  SampleBatch batch = small_null_batch(46);
  DetectConfig cfg;
  cfg.method = Method::Mmd;
  CHECK_THROWS_AS(conditional_permutation_test(batch, cfg), ConfigError);
  cfg.method = Method::Aditt;
  cfg.n_perm = 0;
  CHECK_THROWS_AS(conditional_permutation_test(batch, cfg), ConfigError);
}

TEST_CASE("tuned lambdas appear in diagnostics") {
  SampleBatch batch = small_null_batch(47, 30);
  DetectConfig cfg;
  cfg.method = Method::Aditt;
  cfg.n_perm = 5;
  cfg.tune_lambda = true;
  cfg.cv_grid = {1e-3, 1e-1};
  cfg.seed = 4;
  DetectionReport r = conditional_permutation_test(batch, cfg);
  const double l0 = r.diagnostics.at("lambda0");
  const double l1 = r.diagnostics.at("lambda1");
  CHECK((l0 == doctest::Approx(1e-3) || l0 == doctest::Approx(1e-1)));
  CHECK((l1 == doctest::Approx(1e-3) || l1 == doctest::Approx(1e-1)));
}
