#pragma once

#include <filesystem>
#include <vector>

#include "rprec/data_matrix.hpp"

namespace rprec {

/// Robust counterpart of a three-sigma Gaussian cut.
inline constexpr double kMadThreshold = 4.4478;

/// Row-major real-64 little-endian matrix with a 24-byte header:
/// 8 magic bytes "RPMATF64", then rows and cols as little-endian uint64.
inline constexpr char kRaw64Magic[8] = {'R', 'P', 'M', 'A', 'T', 'F', '6', '4'};

enum class MatrixFormat { kCsv, kRaw64 };

/// ".csv"/".txt" -> CSV, anything else -> raw64.
MatrixFormat format_from_path(const std::filesystem::path& path);

/// Errors: kIoError (unreadable), kParseError (malformed cell or ragged row),
/// kNonFinite (NaN/Inf, with row and column in the message), kTruncated
/// (raw64 payload shorter than the header promises).
DataMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format);
DataMatrix load_matrix(const std::filesystem::path& path);

DataMatrix parse_csv_matrix(std::string_view text);
DataMatrix parse_raw64_matrix(std::string_view bytes);
std::string to_csv(const DenseMatrix& m);
std::string to_raw64(const DenseMatrix& m);

/// Atomic write in the given format.
void save_matrix(const DenseMatrix& m, const std::filesystem::path& path, MatrixFormat format);

/// Zero mean, unit variance per row (variance uses 1/T). Constant rows throw
/// kConstantSignal with the row index.
DataMatrix normalize(const DataMatrix& x);

/// Drops the first `count` samples (columns).
DataMatrix trim_samples(const DataMatrix& x, Index count);

struct MadClampResult {
  Vector values;
  double median = 0.0;
  double mad = 0.0;
  Index clamped = 0;
  /// MAD was zero; values passed through unchanged.
  bool degenerate = false;
};

/// Clips entries to median +/- k * MAD, MAD = median(|x - median(x)|).
MadClampResult mad_clamp(const Vector& x, double k = kMadThreshold);

double median(std::vector<double> values);

/// One label per input node, labels in 1..parcel_count, no empty parcel.
class ParcellationMap {
 public:
  explicit ParcellationMap(std::vector<int> labels);

  const std::vector<int>& labels() const noexcept { return labels_; }
  int parcel_count() const noexcept { return parcel_count_; }

 private:
  std::vector<int> labels_;
  int parcel_count_ = 0;
};

/// One integer label per line; '#' starts a comment.
ParcellationMap load_parcellation(const std::filesystem::path& path);
ParcellationMap parse_parcellation(std::string_view text);

/// Unweighted mean of the rows in each parcel, before renormalization.
DataMatrix parcel_means(const DataMatrix& x, const ParcellationMap& map);

/// parcel_means followed by normalize.
DataMatrix parcel_average(const DataMatrix& x, const ParcellationMap& map);

}  // namespace rprec
