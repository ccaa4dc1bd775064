#pragma once

#include <cstdint>

#include "rprec/data_matrix.hpp"

namespace rprec {

struct ProjectionConfig {
  Index target_dim = 0;
  int power_iterations = 0;
  std::uint64_t seed = 0;
};

/// Y = X W with W (T x t) orthonormal. Y keeps X's sample count so that
/// covariance(Y) approximates covariance(X).
struct Projection {
  DataMatrix projected;
  DenseMatrix basis;
};

/// Randomized range finder over the sample dimension.
///
/// The Gaussian test matrix G is N x t (stream 0 of `seed`); the basis lives in
/// sample space: W = orth((X^T X)^q X^T G). Each power step multiplies by X
/// then X^T and re-orthonormalizes after both products, so (X^T X)^q is never
/// formed. Power steps are skipped when t >= N, where X^T G already spans the
/// row space of X.
///
/// Columns that collapse during orthonormalization (X of rank < t) are
/// replaced with fresh Gaussian vectors from stream 1 of `seed`; after eight
/// failed refills of one column the call throws kRankDeficient.
Projection random_project(const DataMatrix& x, const ProjectionConfig& config);

/// Deterministic alternative: W = top-t right singular vectors of X.
Projection truncate_svd(const DataMatrix& x, Index target_dim);

/// ||Y||_F^2 / ||X||_F^2.
double retained_energy(const DataMatrix& x, const DataMatrix& y);

}  // namespace rprec
