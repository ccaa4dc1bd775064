#pragma once

#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "rprec/riccati.hpp"

namespace rprec {

/// Nodes of a network of interest, zero-based and strictly increasing.
class NetworkSelection {
 public:
  /// Sorts the indices; throws kInvalidInput on duplicates, an empty list, or
  /// an index outside [0, n).
  NetworkSelection(std::vector<Index> nodes, Index n);

  /// Every node of an n-node graph.
  static NetworkSelection all(Index n);

  std::span<const Index> nodes() const noexcept { return nodes_; }
  Index size() const noexcept { return static_cast<Index>(nodes_.size()); }

 private:
  std::vector<Index> nodes_;
};

/// One-based node indices, one per line, '#' comments.
NetworkSelection parse_network(std::string_view text, Index n);
NetworkSelection load_network(const std::filesystem::path& path, Index n);

/// Rows of `x` belonging to the network.
DataMatrix select_signals(const DataMatrix& x, const NetworkSelection& net);

/// Gaussian entropy of a network: (1/2) log det of the restricted precision,
/// through a dense eigendecomposition.
double tsee_direct(const DenseMatrix& q_sub);

/// Same quantity from the factors, for penalties that are constant on the
/// network ([V]_net = alpha I, so the restricted baseline is c' I).
///
/// The restricted low-rank block [W]_net diag(omega) [W]_net^T is written as
/// A S A^T with A = [W]_net |omega|^{1/2} and S = sign(omega). With the thin
/// SVD A = U Sigma Z^T its nonzero eigenvalues are those of the small
/// symmetric matrix Sigma Z^T S Z Sigma, so the eigenvalues of [Q]_net are
/// c' + mu_j plus c' repeated n - rank times. One SVD of an n x m block and
/// one eigendecomposition of at most m x m; omega may have either sign.
///
/// Throws kUnsupportedPenalty when the baseline is not constant on the
/// network and kNumericalError when the restriction is not positive definite.
double tsee_fast(const FactoredPrecision& q, const NetworkSelection& net);

/// out_ij = -q_ij / sqrt(q_ii q_jj), unit diagonal.
DenseMatrix partial_correlations(const DenseMatrix& q_sub);

/// sqrt((a - b)^T Q (a - b)) from the factors.
double mahalanobis(const Vector& a, const Vector& b, const FactoredPrecision& q);

}  // namespace rprec
