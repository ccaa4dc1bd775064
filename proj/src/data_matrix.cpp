#include "rprec/data_matrix.hpp"

#include <cmath>
#include <string>

#include "rprec/error.hpp"

namespace rprec {

DataMatrix::DataMatrix(DenseMatrix values, SignalState state,
                       std::optional<Index> sample_count)
    : values_(std::move(values)), state_(state), sample_count_(0) {
  require(values_.rows() >= 1 && values_.cols() >= 1, ErrorCode::kInvalidInput,
          "data matrix must have at least one row and one column");
  for (Index j = 0; j < values_.cols(); ++j) {
    for (Index i = 0; i < values_.rows(); ++i) {
      if (!std::isfinite(values_(i, j))) {
        fail(ErrorCode::kNonFinite,
             "non-finite entry at row " + std::to_string(i) + ", column " +
                 std::to_string(j),
             i);
      }
    }
  }
  sample_count_ = sample_count.value_or(values_.cols());
  require(sample_count_ >= 1, ErrorCode::kInvalidInput, "sample count must be positive");
}

void DataMatrix::set_row_labels(std::vector<std::string> labels) {
  require(labels.empty() || static_cast<Index>(labels.size()) == signals(),
          ErrorCode::kInvalidInput, "row label count must match the number of signals");
  row_labels_ = std::move(labels);
}

}  // namespace rprec
