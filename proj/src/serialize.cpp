#include "rprec/serialize.hpp"

#include <cmath>
#include <cstring>
#include <limits>

#include "rprec/error.hpp"
#include "rprec/io_util.hpp"

namespace rprec {
namespace {

constexpr std::string_view kPrecisionMagic = "RPPREC01";
constexpr std::string_view kModelMagic = "RPJSVD01";
// Bound on any stored dimension; larger values mean a corrupt header.
constexpr std::uint64_t kMaxDimension = std::uint64_t{1} << 31;

enum : std::uint64_t { kScaledKind = 0, kDiagonalKind = 1, kGeneralKind = 2 };

std::uint64_t penalty_kind(const PenaltyShape& p) {
  if (std::holds_alternative<ScaledIdentityPenalty>(p.kind())) return kScaledKind;
  if (std::holds_alternative<DiagonalPenalty>(p.kind())) return kDiagonalKind;
  return kGeneralKind;
}

void put_matrix(std::string& out, const DenseMatrix& m) {
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) binary::put_f64(out, m(i, j));
  }
}

void put_penalty_payload(std::string& out, const PenaltyShape& p) {
  if (const auto* s = std::get_if<ScaledIdentityPenalty>(&p.kind())) {
    binary::put_f64(out, s->alpha);
  } else if (const auto* d = std::get_if<DiagonalPenalty>(&p.kind())) {
    for (Index i = 0; i < d->v.size(); ++i) binary::put_f64(out, d->v(i));
  } else {
    put_matrix(out, std::get<GeneralPenalty>(p.kind()).v);
  }
}

Index read_dimension(binary::Reader& in, const char* what, bool allow_zero) {
  const std::uint64_t value = in.u64();
  if (value > kMaxDimension || (!allow_zero && value == 0)) {
    fail(ErrorCode::kParseError, std::string("invalid ") + what + " in header");
  }
  return static_cast<Index>(value);
}

void check_magic(binary::Reader& in, std::string_view magic, const char* what) {
  if (in.remaining() < magic.size() || in.take(magic.size()) != magic) {
    fail(ErrorCode::kParseError, std::string("not a ") + what + " file");
  }
}

// Checks the payload is large enough before allocating.
void reserve(const binary::Reader& in, Index rows, Index cols) {
  const auto needed = static_cast<unsigned __int128>(rows) * static_cast<unsigned __int128>(cols) * 8;
  if (needed > in.remaining()) fail(ErrorCode::kTruncated, "unexpected end of binary payload");
}

DenseMatrix read_matrix(binary::Reader& in, Index rows, Index cols) {
  reserve(in, rows, cols);
  DenseMatrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = in.f64();
  }
  require(m.allFinite(), ErrorCode::kNonFinite, "stored matrix has non-finite entries");
  return m;
}

Vector read_vector(binary::Reader& in, Index length) { return read_matrix(in, length, 1).col(0); }

PenaltyShape read_penalty(binary::Reader& in, std::uint64_t kind, Index n, double rho) {
  switch (kind) {
    case kScaledKind:
      return PenaltyShape::scaled_identity(read_vector(in, 1)(0), rho);
    case kDiagonalKind:
      return PenaltyShape::diagonal(read_vector(in, n), rho);
    case kGeneralKind:
      return PenaltyShape::general(read_matrix(in, n, n), rho);
    default:
      fail(ErrorCode::kParseError, "unknown penalty kind in header");
  }
}

void expect_end(const binary::Reader& in) {
  require(in.remaining() == 0, ErrorCode::kParseError, "trailing bytes after payload");
}

}  // namespace

std::string precision_to_bytes(const FactoredPrecision& q) {
  std::string out(kPrecisionMagic);
  binary::put_u64(out, static_cast<std::uint64_t>(q.dimension()));
  binary::put_u64(out, static_cast<std::uint64_t>(q.rank()));
  binary::put_u64(out, penalty_kind(q.penalty()));
  binary::put_u64(out, q.estimator() == Estimator::kRiccati ? 0 : 1);
  binary::put_u64(out, static_cast<std::uint64_t>(q.source_samples()));
  binary::put_f64(out, q.penalty().rho());
  binary::put_f64(out, q.baseline_scale());
  put_matrix(out, q.basis());
  for (Index i = 0; i < q.rank(); ++i) binary::put_f64(out, q.omega()(i));
  put_penalty_payload(out, q.penalty());
  return out;
}

FactoredPrecision precision_from_bytes(std::string_view bytes) {
  binary::Reader in(bytes);
  check_magic(in, kPrecisionMagic, "precision");
  const Index n = read_dimension(in, "dimension", false);
  const Index m = read_dimension(in, "rank", true);
  const std::uint64_t kind = in.u64();
  const std::uint64_t estimator = in.u64();
  require(estimator <= 1, ErrorCode::kParseError, "unknown estimator in header");
  const Index samples = read_dimension(in, "sample count", false);
  const double rho = in.f64();
  const double scale = in.f64();
  DenseMatrix basis = read_matrix(in, n, m);
  Vector omega = read_vector(in, m);
  PenaltyShape penalty = read_penalty(in, kind, n, rho);
  expect_end(in);
  return FactoredPrecision(std::move(basis), std::move(omega), scale, std::move(penalty),
                           estimator == 0 ? Estimator::kRiccati : Estimator::kTikhonov, samples);
}

void save_precision(const FactoredPrecision& q, const std::filesystem::path& path) {
  write_file_atomic(path, precision_to_bytes(q));
}

FactoredPrecision load_precision(const std::filesystem::path& path) {
  return precision_from_bytes(read_file(path));
}

std::string model_to_bytes(const SharedBasisModel& model) {
  std::string out(kModelMagic);
  binary::put_u64(out, static_cast<std::uint64_t>(model.dimension()));
  binary::put_u64(out, static_cast<std::uint64_t>(model.rank()));
  binary::put_u64(out, static_cast<std::uint64_t>(model.subjects()));
  binary::put_f64(out, model.penalty().rho());
  binary::put_u64(out, penalty_kind(model.penalty()));
  put_matrix(out, model.basis());
  for (const auto& d : model.spectra()) {
    for (Index i = 0; i < d.size(); ++i) binary::put_f64(out, d(i));
  }
  for (Index t : model.sample_counts()) binary::put_u64(out, static_cast<std::uint64_t>(t));
  put_penalty_payload(out, model.penalty());
  return out;
}

SharedBasisModel model_from_bytes(std::string_view bytes) {
  binary::Reader in(bytes);
  check_magic(in, kModelMagic, "shared-basis model");
  const Index n = read_dimension(in, "dimension", false);
  const Index m = read_dimension(in, "rank", false);
  const Index k = read_dimension(in, "subject count", false);
  const double rho = in.f64();
  const std::uint64_t kind = in.u64();
  DenseMatrix basis = read_matrix(in, n, m);
  reserve(in, k, m);
  std::vector<Vector> spectra;
  spectra.reserve(static_cast<std::size_t>(k));
  for (Index s = 0; s < k; ++s) spectra.push_back(read_vector(in, m));
  reserve(in, k, 1);
  std::vector<Index> counts;
  counts.reserve(static_cast<std::size_t>(k));
  for (Index s = 0; s < k; ++s) {
    const std::uint64_t t = in.u64();
    require(t >= 1 && t <= kMaxDimension, ErrorCode::kParseError, "invalid sample count");
    counts.push_back(static_cast<Index>(t));
  }
  PenaltyShape penalty = read_penalty(in, kind, n, rho);
  expect_end(in);
  return SharedBasisModel(std::move(basis), std::move(spectra), std::move(penalty),
                          std::move(counts));
}

void save_model(const SharedBasisModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, model_to_bytes(model));
}

SharedBasisModel load_model(const std::filesystem::path& path) {
  return model_from_bytes(read_file(path));
}

}  // namespace rprec
