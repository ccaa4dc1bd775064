#pragma once

#include <optional>

#include "rprec/data_matrix.hpp"

namespace rprec {

enum class SvdMode { kFull, kThin };

/// A = left * diag(singular_values) * right^T.
///
/// Singular values are non-increasing. Each left vector is sign-normalized so
/// its first nonzero entry is positive; the matching right vector is flipped
/// with it.
struct SvdResult {
  DenseMatrix left;
  Vector singular_values;
  DenseMatrix right;
};

/// QR-preconditioned one-sided Jacobi SVD.
///
/// Thin mode returns min(rows, cols) triples. Full mode returns square left
/// and right factors. Singular values below rows*eps*s_max are reported as
/// exact zeros and their vectors completed to an orthonormal set.
SvdResult svd(const DenseMatrix& a, SvdMode mode = SvdMode::kThin);

/// Eigenvalues in descending order with orthonormal eigenvectors
/// (sign-normalized like svd).
struct SymEigResult {
  Vector values;
  DenseMatrix vectors;
};

SymEigResult sym_eig(const DenseMatrix& a);

/// Modified Gram-Schmidt with one re-orthogonalization pass.
/// Throws kRankDeficient carrying the first dependent column.
DenseMatrix gram_schmidt(const DenseMatrix& u);

/// C = (1/T) X X^T with T = x.sample_count(). Exactly symmetric.
DenseMatrix covariance(const DataMatrix& x);

bool all_finite(const DenseMatrix& a);

/// Flips columns (and the matching columns of `partner`, when given) so the
/// first entry above 1e-12 in magnitude is positive.
void normalize_column_signs(DenseMatrix& vectors, DenseMatrix* partner = nullptr);

namespace detail {

/// In-place Gram-Schmidt from column `start` on. Returns the first column whose
/// residual collapsed (left unmodified) or nullopt when all columns are done.
std::optional<Index> orthonormalize_from(DenseMatrix& u, Index start);

}  // namespace detail

}  // namespace rprec
