#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rprec/riccati.hpp"

namespace rprec {

/// How each input's block is scaled inside the joint SVD.
///  - kPerMatrix: 1/sqrt(T_k); every matrix (scan) counts once.
///  - kPerGroup: 1/sqrt(T_k * scans in its group); every group (subject)
///    counts once regardless of how many scans it has.
///  - kPooled: 1/sqrt(sum T); every sample counts once, so long scans dominate.
enum class SharedWeighting { kPerMatrix, kPerGroup, kPooled };

struct SharedOptions {
  SharedWeighting weighting = SharedWeighting::kPerMatrix;
  /// Group id per input; required for kPerGroup.
  std::vector<int> groups;
  /// Random projection of each input to this many columns before
  /// concatenation (0 keeps all columns).
  Index projection_dim = 0;
  int power_iterations = 0;
  std::uint64_t seed = 0;
  int jobs = 1;
};

/// One orthonormal basis (in the whitened space V^{-T} X) shared by K inputs,
/// with each input's energy along every basis vector.
class SharedBasisModel {
 public:
  SharedBasisModel(DenseMatrix basis, std::vector<Vector> spectra, PenaltyShape penalty,
                   std::vector<Index> sample_counts);

  const DenseMatrix& basis() const noexcept { return basis_; }
  const std::vector<Vector>& spectra() const noexcept { return spectra_; }
  const PenaltyShape& penalty() const noexcept { return penalty_; }
  const std::vector<Index>& sample_counts() const noexcept { return sample_counts_; }
  Index dimension() const noexcept { return basis_.rows(); }
  Index rank() const noexcept { return basis_.cols(); }
  Index subjects() const noexcept { return static_cast<Index>(spectra_.size()); }

 private:
  DenseMatrix basis_;
  std::vector<Vector> spectra_;
  PenaltyShape penalty_;
  std::vector<Index> sample_counts_;
};

/// Joint SVD: the top-m left singular vectors of the column-concatenated,
/// whitened and weighted inputs. Input k's spectrum is
/// d_{k,i} = w_i^T V^{-T} C_k V^{-1} w_i, computed from the unprojected data.
SharedBasisModel fit_shared(std::span<const DataMatrix> xs, Index m, const PenaltyShape& penalty,
                            const SharedOptions& options = {});

/// Riccati precision of input k on the shared basis:
/// omega_{k,i} = p(d_{k,i}) - 1/sqrt(rho), basis V^{-1} W_shared. All m
/// columns are kept so every subject carries the same basis.
FactoredPrecision subject_precision(const SharedBasisModel& model, Index k);

}  // namespace rprec
