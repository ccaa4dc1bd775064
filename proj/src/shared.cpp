#include "rprec/shared.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "rprec/error.hpp"
#include "rprec/matcore.hpp"
#include "rprec/parallel.hpp"
#include "rprec/randproj.hpp"
#include "rprec/rng.hpp"

namespace rprec {
namespace {

constexpr double kSpectrumTolerance = 1e-12;
constexpr double kOrthonormalTolerance = 1e-10;

std::vector<double> block_weights(std::span<const DataMatrix> xs, const SharedOptions& options) {
  const std::size_t k = xs.size();
  std::vector<double> weights(k);
  switch (options.weighting) {
    case SharedWeighting::kPerMatrix:
      for (std::size_t i = 0; i < k; ++i) {
        weights[i] = 1.0 / std::sqrt(static_cast<double>(xs[i].sample_count()));
      }
      break;
    case SharedWeighting::kPerGroup: {
      require(options.groups.size() == k, ErrorCode::kInvalidInput,
              "per-group weighting needs one group id per input");
      std::map<int, int> sizes;
      for (int g : options.groups) ++sizes[g];
      for (std::size_t i = 0; i < k; ++i) {
        const double scans = static_cast<double>(sizes[options.groups[i]]);
        weights[i] = 1.0 / std::sqrt(static_cast<double>(xs[i].sample_count()) * scans);
      }
      break;
    }
    case SharedWeighting::kPooled: {
      double total = 0.0;
      for (const auto& x : xs) total += static_cast<double>(x.sample_count());
      for (std::size_t i = 0; i < k; ++i) weights[i] = 1.0 / std::sqrt(total);
      break;
    }
  }
  return weights;
}

}  // namespace

SharedBasisModel::SharedBasisModel(DenseMatrix basis, std::vector<Vector> spectra,
                                   PenaltyShape penalty, std::vector<Index> sample_counts)
    : basis_(std::move(basis)),
      spectra_(std::move(spectra)),
      penalty_(std::move(penalty)),
      sample_counts_(std::move(sample_counts)) {
  const Index m = basis_.cols();
  require(basis_.rows() >= 1 && m >= 1 && m <= basis_.rows(), ErrorCode::kInvalidInput,
          "shared basis must be N x m with 1 <= m <= N");
  require(!spectra_.empty(), ErrorCode::kInvalidInput, "shared model needs at least one subject");
  require(sample_counts_.size() == spectra_.size(), ErrorCode::kInvalidInput,
          "one sample count per subject is required");
  penalty_.check_dimension(basis_.rows());
  const double drift =
      (basis_.transpose() * basis_ - DenseMatrix::Identity(m, m)).cwiseAbs().maxCoeff();
  require(drift <= kOrthonormalTolerance, ErrorCode::kInvalidInput,
          "shared basis is not orthonormal");
  for (std::size_t k = 0; k < spectra_.size(); ++k) {
    Vector& d = spectra_[k];
    require(d.size() == m, ErrorCode::kInvalidInput, "subject spectrum length differs from m");
    require(sample_counts_[k] >= 1, ErrorCode::kInvalidInput, "sample counts must be positive");
    for (Index i = 0; i < m; ++i) {
      require(std::isfinite(d(i)) && d(i) >= -kSpectrumTolerance, ErrorCode::kInvalidInput,
              "subject spectrum entries must be non-negative");
      d(i) = std::max(d(i), 0.0);
    }
  }
}

SharedBasisModel fit_shared(std::span<const DataMatrix> xs, Index m, const PenaltyShape& penalty,
                            const SharedOptions& options) {
  require(!xs.empty(), ErrorCode::kInvalidInput, "joint SVD needs at least one input");
  const Index n = xs[0].signals();
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (xs[k].signals() != n) {
      fail(ErrorCode::kInvalidInput,
           "input " + std::to_string(k) + " has " + std::to_string(xs[k].signals()) +
               " signals, expected " + std::to_string(n),
           static_cast<Index>(k));
    }
    detail::require_normalized(xs[k]);
  }
  penalty.check_dimension(n);
  require(options.projection_dim >= 0, ErrorCode::kInvalidInput,
          "projection dimension must be non-negative");

  Index narrowest = n;
  for (const auto& x : xs) {
    const Index cols = options.projection_dim > 0 ? std::min(options.projection_dim, x.samples())
                                                  : x.samples();
    narrowest = std::min(narrowest, cols);
  }
  if (m < 1 || m > narrowest) {
    fail(ErrorCode::kInvalidInput, "shared rank m = " + std::to_string(m) +
                                       " must lie in [1, " + std::to_string(narrowest) + "]");
  }

  const std::vector<double> weights = block_weights(xs, options);
  const Index count = static_cast<Index>(xs.size());
  std::vector<DenseMatrix> whitened(xs.size());
  std::vector<DenseMatrix> blocks(xs.size());
  parallel_for(count, options.jobs, [&](Index k) {
    const auto slot = static_cast<std::size_t>(k);
    whitened[slot] = penalty.inverse_transpose_times(xs[slot].values());
    if (options.projection_dim > 0 && options.projection_dim < xs[slot].samples()) {
      const ProjectionConfig config{options.projection_dim, options.power_iterations,
                                    mix64(options.seed ^ mix64(static_cast<std::uint64_t>(k)))};
      const DataMatrix white(whitened[slot], SignalState::kProjected, xs[slot].sample_count());
      blocks[slot] = random_project(white, config).projected.values() * weights[slot];
    } else {
      blocks[slot] = whitened[slot] * weights[slot];
    }
  });

  Index total_cols = 0;
  for (const auto& b : blocks) total_cols += b.cols();
  DenseMatrix joint(n, total_cols);
  Index offset = 0;
  for (auto& b : blocks) {
    joint.middleCols(offset, b.cols()) = b;
    offset += b.cols();
    b = DenseMatrix();
  }
  DenseMatrix basis = svd(joint, SvdMode::kThin).left.leftCols(m);

  std::vector<Vector> spectra(xs.size());
  std::vector<Index> sample_counts(xs.size());
  parallel_for(count, options.jobs, [&](Index k) {
    const auto slot = static_cast<std::size_t>(k);
    const double t = static_cast<double>(xs[slot].sample_count());
    const DenseMatrix loadings = basis.transpose() * whitened[slot];
    spectra[slot] = loadings.rowwise().squaredNorm() / t;
    sample_counts[slot] = xs[slot].sample_count();
  });
  return SharedBasisModel(std::move(basis), std::move(spectra), penalty, std::move(sample_counts));
}

FactoredPrecision subject_precision(const SharedBasisModel& model, Index k) {
  require(k >= 0 && k < model.subjects(), ErrorCode::kInvalidInput, "subject index out of range");
  const auto slot = static_cast<std::size_t>(k);
  const Vector& d = model.spectra()[slot];
  const double rho = model.penalty().rho();
  Vector omega(d.size());
  for (Index i = 0; i < d.size(); ++i) omega(i) = riccati_omega(d(i), rho);
  return FactoredPrecision(model.penalty().inverse_times(model.basis()), std::move(omega),
                           1.0 / std::sqrt(rho), model.penalty(), Estimator::kRiccati,
                           model.sample_counts()[slot]);
}

}  // namespace rprec
