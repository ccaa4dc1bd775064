#include "rprec/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "rprec/error.hpp"
#include "rprec/io_util.hpp"
#include "text_util.hpp"

namespace rprec {

MatrixFormat format_from_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return (ext == ".csv" || ext == ".txt") ? MatrixFormat::kCsv : MatrixFormat::kRaw64;
}

DataMatrix parse_csv_matrix(std::string_view text) {
  std::vector<double> values;
  Index cols = -1;
  Index rows = 0;
  std::size_t line_number = 0;
  while (!text.empty()) {
    const std::size_t end = text.find('\n');
    std::string_view line = text.substr(0, end);
    text = end == std::string_view::npos ? std::string_view{} : text.substr(end + 1);
    ++line_number;
    if (text::trim(line).empty()) continue;

    Index col = 0;
    while (true) {
      const std::size_t comma = line.find(',');
      const std::string_view cell = line.substr(0, comma);
      const auto parsed = text::parse_number<double>(cell);
      if (!parsed) {
        fail(ErrorCode::kParseError, "cannot parse cell '" + std::string(text::trim(cell)) +
                                         "' at line " + std::to_string(line_number) +
                                         ", column " + std::to_string(col + 1));
      }
      if (!std::isfinite(*parsed)) {
        fail(ErrorCode::kNonFinite, "non-finite cell at row " + std::to_string(rows + 1) +
                                        ", column " + std::to_string(col + 1),
             rows);
      }
      values.push_back(*parsed);
      ++col;
      if (comma == std::string_view::npos) break;
      line = line.substr(comma + 1);
    }
    if (cols < 0) cols = col;
    if (col != cols) {
      fail(ErrorCode::kParseError, "line " + std::to_string(line_number) + " has " +
                                       std::to_string(col) + " cells, expected " +
                                       std::to_string(cols));
    }
    ++rows;
  }
  if (rows == 0) fail(ErrorCode::kParseError, "CSV matrix is empty");
  DenseMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = values[static_cast<std::size_t>(i * cols + j)];
  }
  return DataMatrix(std::move(m));
}

DataMatrix parse_raw64_matrix(std::string_view bytes) {
  binary::Reader reader(bytes);
  if (reader.remaining() < 8 ||
      std::memcmp(reader.take(8).data(), kRaw64Magic, sizeof(kRaw64Magic)) != 0) {
    fail(ErrorCode::kParseError, "raw64 magic mismatch");
  }
  const std::uint64_t rows = reader.u64();
  const std::uint64_t cols = reader.u64();
  if (rows == 0 || cols == 0 || rows > (1ULL << 40) / cols) {
    fail(ErrorCode::kParseError, "raw64 header has invalid dimensions");
  }
  if (reader.remaining() < rows * cols * 8) {
    fail(ErrorCode::kTruncated, "raw64 payload holds fewer values than rows * cols");
  }
  if (reader.remaining() > rows * cols * 8) {
    fail(ErrorCode::kParseError, "raw64 payload has trailing bytes");
  }
  DenseMatrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      const double v = reader.f64();
      if (!std::isfinite(v)) {
        fail(ErrorCode::kNonFinite, "non-finite value at row " + std::to_string(i + 1) +
                                        ", column " + std::to_string(j + 1),
             i);
      }
      m(i, j) = v;
    }
  }
  return DataMatrix(std::move(m));
}

DataMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format) {
  const std::string bytes = read_file(path);
  return format == MatrixFormat::kCsv ? parse_csv_matrix(bytes) : parse_raw64_matrix(bytes);
}

DataMatrix load_matrix(const std::filesystem::path& path) {
  return load_matrix(path, format_from_path(path));
}

std::string to_csv(const DenseMatrix& m) {
  std::string out;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out.push_back(',');
      out += format_real(m(i, j));
    }
    out.push_back('\n');
  }
  return out;
}

std::string to_raw64(const DenseMatrix& m) {
  std::string out(kRaw64Magic, sizeof(kRaw64Magic));
  out.reserve(24 + static_cast<std::size_t>(m.size()) * 8);
  binary::put_u64(out, static_cast<std::uint64_t>(m.rows()));
  binary::put_u64(out, static_cast<std::uint64_t>(m.cols()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) binary::put_f64(out, m(i, j));
  }
  return out;
}

void save_matrix(const DenseMatrix& m, const std::filesystem::path& path, MatrixFormat format) {
  write_file_atomic(path, format == MatrixFormat::kCsv ? to_csv(m) : to_raw64(m));
}

DataMatrix normalize(const DataMatrix& x) {
  const Index t = x.samples();
  require(t >= 2, ErrorCode::kInvalidInput, "normalization needs at least two samples");
  DenseMatrix out = x.values();
  for (Index i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    const double scale = row.cwiseAbs().maxCoeff();
    const double mean = row.mean();
    row.array() -= mean;
    // Second pass removes the rounding left by the first.
    row.array() -= row.mean();
    const double variance = row.squaredNorm() / static_cast<double>(t);
    if (variance == 0.0 || std::sqrt(variance) <= 1e-12 * scale) {
      fail(ErrorCode::kConstantSignal, "row " + std::to_string(i) + " is constant", i);
    }
    row /= std::sqrt(variance);
  }
  DataMatrix result(std::move(out), SignalState::kNormalized);
  result.set_row_labels(x.row_labels());
  return result;
}

DataMatrix trim_samples(const DataMatrix& x, Index count) {
  require(count >= 0 && count < x.samples(), ErrorCode::kInvalidInput,
          "trim count must leave at least one sample");
  if (count == 0) return x;
  DataMatrix out(x.values().rightCols(x.samples() - count), SignalState::kRaw);
  out.set_row_labels(x.row_labels());
  return out;
}

double median(std::vector<double> values) {
  require(!values.empty(), ErrorCode::kInvalidInput, "median of an empty vector");
  const std::size_t n = values.size();
  const std::size_t mid = n / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

MadClampResult mad_clamp(const Vector& x, double k) {
  require(x.size() > 0, ErrorCode::kInvalidInput, "mad_clamp of an empty vector");
  require(k > 0.0 && std::isfinite(k), ErrorCode::kInvalidInput, "MAD multiplier must be positive");
  require(x.allFinite(), ErrorCode::kNonFinite, "mad_clamp input has non-finite entries");

  MadClampResult out;
  out.values = x;
  out.median = median(std::vector<double>(x.begin(), x.end()));
  std::vector<double> deviations(static_cast<std::size_t>(x.size()));
  for (Index i = 0; i < x.size(); ++i) deviations[static_cast<std::size_t>(i)] = std::abs(x(i) - out.median);
  out.mad = median(std::move(deviations));
  if (out.mad == 0.0) {
    out.degenerate = true;
    return out;
  }
  const double lo = out.median - k * out.mad;
  const double hi = out.median + k * out.mad;
  for (Index i = 0; i < x.size(); ++i) {
    const double clipped = std::clamp(x(i), lo, hi);
    if (clipped != x(i)) ++out.clamped;
    out.values(i) = clipped;
  }
  return out;
}

ParcellationMap::ParcellationMap(std::vector<int> labels) : labels_(std::move(labels)) {
  require(!labels_.empty(), ErrorCode::kInvalidInput, "parcellation has no labels");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] < 1) {
      fail(ErrorCode::kInvalidInput,
           "parcel label at node " + std::to_string(i + 1) + " must be >= 1",
           static_cast<std::int64_t>(i));
    }
  }
  parcel_count_ = *std::max_element(labels_.begin(), labels_.end());
  std::vector<bool> seen(static_cast<std::size_t>(parcel_count_) + 1, false);
  for (int label : labels_) seen[static_cast<std::size_t>(label)] = true;
  for (int p = 1; p <= parcel_count_; ++p) {
    if (!seen[static_cast<std::size_t>(p)]) {
      fail(ErrorCode::kInvalidInput, "parcel " + std::to_string(p) + " is empty", p);
    }
  }
}

ParcellationMap parse_parcellation(std::string_view text) {
  std::vector<int> labels;
  for (const auto& line : text::content_lines(text)) {
    const auto label = text::parse_number<int>(line.content);
    if (!label) {
      fail(ErrorCode::kParseError,
           "parcellation line " + std::to_string(line.number) + " is not an integer");
    }
    labels.push_back(*label);
  }
  return ParcellationMap(std::move(labels));
}

ParcellationMap load_parcellation(const std::filesystem::path& path) {
  return parse_parcellation(read_file(path));
}

DataMatrix parcel_means(const DataMatrix& x, const ParcellationMap& map) {
  require(static_cast<Index>(map.labels().size()) == x.signals(), ErrorCode::kInvalidInput,
          "parcellation label count differs from the number of signals");
  const Index parcels = map.parcel_count();
  DenseMatrix sums = DenseMatrix::Zero(parcels, x.samples());
  Vector counts = Vector::Zero(parcels);
  for (Index i = 0; i < x.signals(); ++i) {
    const Index p = map.labels()[static_cast<std::size_t>(i)] - 1;
    sums.row(p) += x.values().row(i);
    counts(p) += 1.0;
  }
  for (Index p = 0; p < parcels; ++p) sums.row(p) /= counts(p);
  DataMatrix out(std::move(sums), SignalState::kRaw);
  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(parcels));
  for (Index p = 1; p <= parcels; ++p) labels.push_back("parcel_" + std::to_string(p));
  out.set_row_labels(std::move(labels));
  return out;
}

DataMatrix parcel_average(const DataMatrix& x, const ParcellationMap& map) {
  return normalize(parcel_means(x, map));
}

}  // namespace rprec
