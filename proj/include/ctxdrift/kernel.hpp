#pragma once

#include "ctxdrift/common.hpp"

namespace ctxdrift {

/// Gaussian RBF kernel f(x,x') = exp(-||x-x'||^2 / (2 sigma^2)).
struct KernelSpec {
  double bandwidth = 1.0;

  explicit KernelSpec(double sigma) : bandwidth(sigma) {
    require(sigma > 0.0, "kernel bandwidth must be positive");
  }
};

/// Dense kernel matrix between two point sets, tagged with the domain
/// (0 = reference, 1 = deployment, -1 = pooled/untagged) of rows and columns.
struct GramMatrix {
  Matrix entries;
  int row_domain = -1;
  int col_domain = -1;
};

/// Squared Euclidean distances between rows of `a` and rows of `b`.
/// Uses the ||a||^2 + ||b||^2 - 2 a.b expansion; tiny negatives from
/// cancellation are clamped to zero.
Matrix pairwise_sq_distances(const Matrix& a, const Matrix& b);

/// Median of the n(n-1)/2 off-diagonal pairwise Euclidean distances.
/// Even counts take the lower of the two middle order statistics.
/// Throws DegenerateDataError when the median is zero (all rows identical,
/// or duplicates dominate).
double median_heuristic_bandwidth(const Matrix& points);

GramMatrix rbf_gram(const Matrix& a, const Matrix& b, const KernelSpec& spec,
                    int row_domain = -1, int col_domain = -1);

/// Plain-matrix variant used by inner loops.
Matrix rbf_gram_matrix(const Matrix& a, const Matrix& b, double bandwidth);

}  // namespace ctxdrift
