#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rprec {

using DenseMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// How the rows of a DataMatrix were prepared.
///  - kRaw: as loaded.
///  - kNormalized: every row zero-mean, unit variance (1/T convention).
///  - kProjected: columns are a random or truncated-SVD compression of a
///    normalized matrix; `sample_count()` still reports the original T.
enum class SignalState { kRaw, kNormalized, kProjected };

/// N signals (rows) by T samples (columns).
///
/// `sample_count()` is the T of the covariance C = (1/T) X X^T. It equals
/// `cols()` except for projected data, where X W keeps the energy of the
/// original T samples in fewer columns.
class DataMatrix {
 public:
  explicit DataMatrix(DenseMatrix values, SignalState state = SignalState::kRaw,
                      std::optional<Index> sample_count = std::nullopt);

  const DenseMatrix& values() const noexcept { return values_; }
  Index signals() const noexcept { return values_.rows(); }
  Index samples() const noexcept { return values_.cols(); }
  Index sample_count() const noexcept { return sample_count_; }
  SignalState state() const noexcept { return state_; }

  const std::vector<std::string>& row_labels() const noexcept { return row_labels_; }
  void set_row_labels(std::vector<std::string> labels);

 private:
  DenseMatrix values_;
  SignalState state_;
  Index sample_count_;
  std::vector<std::string> row_labels_;
};

}  // namespace rprec
