#include "ctxdrift/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace ctxdrift {

Matrix pairwise_sq_distances(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(),
          "pairwise_sq_distances: column counts differ (" +
              std::to_string(a.cols()) + " vs " + std::to_string(b.cols()) +
              ")");
  require(a.cols() >= 1, "pairwise_sq_distances: need at least one column");

  Vector a_sq = a.rowwise().squaredNorm();
  Vector b_sq = b.rowwise().squaredNorm();
  Matrix d2 = (-2.0 * a * b.transpose()).colwise() + a_sq;
  d2.rowwise() += b_sq.transpose();
  return d2.cwiseMax(0.0);
}

double median_heuristic_bandwidth(const Matrix& points) {
  const Index n = points.rows();
  require(n >= 2, "median_heuristic_bandwidth: need at least two points");

  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      dists.push_back((points.row(i) - points.row(j)).norm());
    }
  }
  // lower median: element (m-1)/2 of the sorted distances
  const std::size_t mid = (dists.size() - 1) / 2;
  std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid),
                   dists.end());
  const double med = dists[mid];
  if (med <= 0.0) {
    throw DegenerateDataError(
        "median pairwise distance is zero; bandwidth undefined");
  }
  return med;
}

Matrix rbf_gram_matrix(const Matrix& a, const Matrix& b, double bandwidth) {
  require(bandwidth > 0.0, "rbf_gram: bandwidth must be positive");
  Matrix d2 = pairwise_sq_distances(a, b);
  const double inv_two_sigma_sq = 1.0 / (2.0 * bandwidth * bandwidth);
  return (-inv_two_sigma_sq * d2.array()).exp().matrix();
}

GramMatrix rbf_gram(const Matrix& a, const Matrix& b, const KernelSpec& spec,
                    int row_domain, int col_domain) {
  return GramMatrix{rbf_gram_matrix(a, b, spec.bandwidth), row_domain,
                    col_domain};
}

}  // namespace ctxdrift
