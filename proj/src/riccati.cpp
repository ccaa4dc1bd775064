#include "rprec/riccati.hpp"

#include <cmath>
#include <string>

#include "rprec/error.hpp"
#include "rprec/matcore.hpp"

namespace rprec {
namespace {

constexpr double kOmegaDropThreshold = 1e-14;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_rho(double rho) {
  require(std::isfinite(rho) && rho > 0.0, ErrorCode::kInvalidInput,
          "penalty rho must be positive and finite");
}

}  // namespace

void detail::require_normalized(const DataMatrix& x) {
  if (x.state() != SignalState::kRaw) return;
  const double t = static_cast<double>(x.samples());
  for (Index i = 0; i < x.signals(); ++i) {
    const auto row = x.values().row(i);
    if (row.cwiseAbs().maxCoeff() == 0.0) continue;
    const double mean = row.mean();
    const double variance = (row.array() - mean).square().sum() / t;
    if (std::abs(mean) > 1e-6 || std::abs(variance - 1.0) > 1e-6) {
      fail(ErrorCode::kInvalidInput,
           "row " + std::to_string(i) + " is not normalized to zero mean and unit variance", i);
    }
  }
}

namespace {

// Mirrors the lower triangle into the upper one.
void make_symmetric(DenseMatrix& m) { m.triangularView<Eigen::StrictlyUpper>() = m.transpose(); }

struct Spectrum {
  DenseMatrix left;
  Vector squared;  // d_i = s_i^2
};

Spectrum whitened_spectrum(const DataMatrix& x, const PenaltyShape& penalty) {
  penalty.check_dimension(x.signals());
  const double scale = 1.0 / std::sqrt(static_cast<double>(x.sample_count()));
  const DenseMatrix whitened = penalty.inverse_transpose_times(x.values()) * scale;
  SvdResult decomposition = svd(whitened, SvdMode::kThin);
  return Spectrum{std::move(decomposition.left),
                  decomposition.singular_values.array().square().matrix()};
}

FactoredPrecision assemble(const Spectrum& spectrum, const Vector& omega, double baseline,
                           const PenaltyShape& penalty, Estimator estimator, Index samples) {
  std::vector<Index> kept;
  for (Index i = 0; i < omega.size(); ++i) {
    if (std::abs(omega(i)) >= kOmegaDropThreshold) kept.push_back(i);
  }
  const Index n = spectrum.left.rows();
  DenseMatrix u(n, static_cast<Index>(kept.size()));
  Vector w(static_cast<Index>(kept.size()));
  for (std::size_t k = 0; k < kept.size(); ++k) {
    u.col(static_cast<Index>(k)) = spectrum.left.col(kept[k]);
    w(static_cast<Index>(k)) = omega(kept[k]);
  }
  return FactoredPrecision(penalty.inverse_times(u), std::move(w), baseline, penalty, estimator,
                           samples);
}

}  // namespace

// ---------------------------------------------------------------------------
// PenaltyShape

PenaltyShape::PenaltyShape(Kind kind, double rho) : kind_(std::move(kind)), rho_(rho) {
  check_rho(rho);
}

PenaltyShape PenaltyShape::scaled_identity(double alpha, double rho) {
  require(std::isfinite(alpha) && alpha > 0.0, ErrorCode::kInvalidInput,
          "penalty scale alpha must be positive");
  return PenaltyShape(ScaledIdentityPenalty{alpha}, rho);
}

PenaltyShape PenaltyShape::diagonal(Vector v, double rho) {
  require(v.size() >= 1, ErrorCode::kInvalidInput, "diagonal penalty needs at least one weight");
  for (Index i = 0; i < v.size(); ++i) {
    if (!(std::isfinite(v(i)) && v(i) > 0.0)) {
      fail(ErrorCode::kInvalidInput,
           "diagonal penalty weight " + std::to_string(i) + " must be positive", i);
    }
  }
  return PenaltyShape(DiagonalPenalty{std::move(v)}, rho);
}

PenaltyShape PenaltyShape::general(DenseMatrix v, double rho) {
  require(v.rows() == v.cols() && v.rows() >= 1, ErrorCode::kInvalidInput,
          "general penalty matrix must be square");
  require(v.allFinite(), ErrorCode::kInvalidInput, "general penalty matrix has non-finite entries");
  const Vector s = svd(v).singular_values;
  if (!(s(s.size() - 1) > 1e-10 * s(0))) {
    fail(ErrorCode::kRankDeficient, "general penalty matrix is not invertible");
  }
  PenaltyShape shape(GeneralPenalty{v}, rho);
  shape.lu_ = std::make_shared<const Eigen::PartialPivLU<DenseMatrix>>(v);
  return shape;
}

PenaltyShape PenaltyShape::roi(Index n, std::span<const Index> network, double alpha, double rho) {
  require(n >= 1, ErrorCode::kInvalidInput, "ROI penalty needs at least one node");
  require(std::isfinite(alpha) && alpha > 0.0, ErrorCode::kInvalidInput,
          "ROI suppression alpha must be positive");
  Vector v = Vector::Constant(n, alpha);
  for (Index node : network) {
    require(node >= 0 && node < n, ErrorCode::kInvalidInput, "ROI node index out of range");
    v(node) = 1.0;
  }
  return diagonal(std::move(v), rho);
}

void PenaltyShape::check_dimension(Index n) const {
  std::visit(Overloaded{
                 [](const ScaledIdentityPenalty&) {},
                 [n](const DiagonalPenalty& p) {
                   require(p.v.size() == n, ErrorCode::kInvalidInput,
                           "diagonal penalty length differs from the number of signals");
                 },
                 [n](const GeneralPenalty& p) {
                   require(p.v.rows() == n, ErrorCode::kInvalidInput,
                           "general penalty size differs from the number of signals");
                 },
             },
             kind_);
}

std::optional<Vector> PenaltyShape::diagonal_values(Index n) const {
  check_dimension(n);
  return std::visit(Overloaded{
                        [n](const ScaledIdentityPenalty& p) -> std::optional<Vector> {
                          return Vector::Constant(n, p.alpha);
                        },
                        [](const DiagonalPenalty& p) -> std::optional<Vector> { return p.v; },
                        [](const GeneralPenalty&) -> std::optional<Vector> { return std::nullopt; },
                    },
                    kind_);
}

DenseMatrix PenaltyShape::inverse_transpose_times(const DenseMatrix& x) const {
  check_dimension(x.rows());
  return std::visit(Overloaded{
                        [&](const ScaledIdentityPenalty& p) -> DenseMatrix { return x / p.alpha; },
                        [&](const DiagonalPenalty& p) -> DenseMatrix {
                          return p.v.cwiseInverse().asDiagonal() * x;
                        },
                        [&](const GeneralPenalty&) -> DenseMatrix {
                          return lu_->transpose().solve(x);
                        },
                    },
                    kind_);
}

DenseMatrix PenaltyShape::inverse_times(const DenseMatrix& u) const {
  check_dimension(u.rows());
  return std::visit(Overloaded{
                        [&](const ScaledIdentityPenalty& p) -> DenseMatrix { return u / p.alpha; },
                        [&](const DiagonalPenalty& p) -> DenseMatrix {
                          return p.v.cwiseInverse().asDiagonal() * u;
                        },
                        [&](const GeneralPenalty&) -> DenseMatrix { return lu_->solve(u); },
                    },
                    kind_);
}

DenseMatrix PenaltyShape::dense(Index n) const {
  check_dimension(n);
  return std::visit(Overloaded{
                        [n](const ScaledIdentityPenalty& p) -> DenseMatrix {
                          return p.alpha * DenseMatrix::Identity(n, n);
                        },
                        [](const DiagonalPenalty& p) -> DenseMatrix { return p.v.asDiagonal(); },
                        [](const GeneralPenalty& p) -> DenseMatrix { return p.v; },
                    },
                    kind_);
}

// ---------------------------------------------------------------------------
// FactoredPrecision

FactoredPrecision::FactoredPrecision(DenseMatrix basis, Vector omega, double baseline_scale,
                                     PenaltyShape penalty, Estimator estimator,
                                     Index source_samples)
    : basis_(std::move(basis)),
      omega_(std::move(omega)),
      baseline_scale_(baseline_scale),
      penalty_(std::move(penalty)),
      estimator_(estimator),
      source_samples_(source_samples) {
  require(basis_.rows() >= 1, ErrorCode::kInvalidInput, "precision dimension must be positive");
  require(basis_.cols() == omega_.size(), ErrorCode::kInvalidInput,
          "basis column count differs from omega length");
  require(basis_.allFinite() && omega_.allFinite(), ErrorCode::kInvalidInput,
          "precision factors have non-finite entries");
  require(std::isfinite(baseline_scale_) && baseline_scale_ > 0.0, ErrorCode::kInvalidInput,
          "baseline scale must be positive");
  penalty_.check_dimension(basis_.rows());
}

std::optional<Vector> FactoredPrecision::baseline_diagonal() const {
  auto v = penalty_.diagonal_values(dimension());
  if (!v) return std::nullopt;
  return Vector(baseline_scale_ * v->array().square().inverse());
}

DenseMatrix FactoredPrecision::baseline_block(std::span<const Index> nodes) const {
  const Index n = static_cast<Index>(nodes.size());
  for (Index node : nodes) {
    require(node >= 0 && node < dimension(), ErrorCode::kInvalidInput, "node index out of range");
  }
  if (auto diag = baseline_diagonal()) {
    DenseMatrix block = DenseMatrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) block(i, i) = (*diag)(nodes[static_cast<std::size_t>(i)]);
    return block;
  }
  // [V^{-1} V^{-T}]_{ij} = (V^{-T} e_i) . (V^{-T} e_j).
  DenseMatrix selector = DenseMatrix::Zero(dimension(), n);
  for (Index j = 0; j < n; ++j) selector(nodes[static_cast<std::size_t>(j)], j) = 1.0;
  const DenseMatrix columns = penalty_.inverse_transpose_times(selector);
  DenseMatrix block = baseline_scale_ * (columns.transpose() * columns);
  make_symmetric(block);
  return block;
}

// ---------------------------------------------------------------------------
// Estimation

double riccati_eigenvalue_map(double d, double rho) {
  check_rho(rho);
  require(std::isfinite(d) && d >= 0.0, ErrorCode::kInvalidInput,
          "covariance eigenvalue must be non-negative");
  return 2.0 / (d + std::sqrt(d * d + 4.0 * rho));
}

double riccati_omega(double d, double rho) {
  check_rho(rho);
  require(std::isfinite(d) && d >= 0.0, ErrorCode::kInvalidInput,
          "covariance eigenvalue must be non-negative");
  const double root = std::sqrt(d * d + 4.0 * rho);
  const double sqrt_rho = std::sqrt(rho);
  return -(d + d * d / (root + 2.0 * sqrt_rho)) / (sqrt_rho * (d + root));
}

double tikhonov_omega(double d, double rho) {
  check_rho(rho);
  require(std::isfinite(d) && d >= 0.0, ErrorCode::kInvalidInput,
          "covariance eigenvalue must be non-negative");
  return -d / (rho * (d + rho));
}

FactoredPrecision estimate(const DataMatrix& x, const PenaltyShape& penalty) {
  detail::require_normalized(x);
  const Spectrum spectrum = whitened_spectrum(x, penalty);
  Vector omega(spectrum.squared.size());
  for (Index i = 0; i < omega.size(); ++i) omega(i) = riccati_omega(spectrum.squared(i), penalty.rho());
  return assemble(spectrum, omega, 1.0 / std::sqrt(penalty.rho()), penalty, Estimator::kRiccati,
                  x.sample_count());
}

FactoredPrecision estimate_tikhonov(const DataMatrix& x, double rho) {
  check_rho(rho);
  detail::require_normalized(x);
  const PenaltyShape penalty = PenaltyShape::identity(rho);
  const Spectrum spectrum = whitened_spectrum(x, penalty);
  Vector omega(spectrum.squared.size());
  for (Index i = 0; i < omega.size(); ++i) omega(i) = tikhonov_omega(spectrum.squared(i), rho);
  return assemble(spectrum, omega, 1.0 / rho, penalty, Estimator::kTikhonov, x.sample_count());
}

// ---------------------------------------------------------------------------
// Consumers

DenseMatrix densify(const FactoredPrecision& q, Index cap) {
  const Index n = q.dimension();
  if (n > cap) {
    fail(ErrorCode::kTooLarge, "refusing to densify a " + std::to_string(n) + " x " +
                                   std::to_string(n) + " precision (cap " + std::to_string(cap) +
                                   ")");
  }
  DenseMatrix dense = (q.basis() * q.omega().asDiagonal()) * q.basis().transpose();
  if (auto diag = q.baseline_diagonal()) {
    dense.diagonal() += *diag;
  } else {
    const DenseMatrix inv_t = q.penalty().inverse_transpose_times(DenseMatrix::Identity(n, n));
    dense += q.baseline_scale() * (inv_t.transpose() * inv_t);
  }
  make_symmetric(dense);
  return dense;
}

DenseMatrix restrict(const FactoredPrecision& q, std::span<const Index> nodes) {
  DenseMatrix block = q.baseline_block(nodes);
  const Index n = static_cast<Index>(nodes.size());
  DenseMatrix rows(n, q.rank());
  for (Index i = 0; i < n; ++i) rows.row(i) = q.basis().row(nodes[static_cast<std::size_t>(i)]);
  block += (rows * q.omega().asDiagonal()) * rows.transpose();
  make_symmetric(block);
  return block;
}

double logdet(const FactoredPrecision& q, Index cap) {
  const auto diag = q.baseline_diagonal();
  if (!diag) {
    const DenseMatrix dense = densify(q, cap);
    Eigen::LLT<DenseMatrix> llt(dense);
    require(llt.info() == Eigen::Success, ErrorCode::kNumericalError,
            "precision matrix is not positive definite");
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  }

  double result = diag->array().log().sum();
  const Index m = q.rank();
  if (m == 0) return result;

  // det(B + W O W^T) = det(B) det(I + O W^T B^{-1} W).
  const DenseMatrix scaled = diag->cwiseInverse().cwiseSqrt().asDiagonal() * q.basis();
  const DenseMatrix gram = scaled.transpose() * scaled;
  const DenseMatrix core = DenseMatrix::Identity(m, m) + q.omega().asDiagonal() * gram;
  Eigen::PartialPivLU<DenseMatrix> lu(core);
  double sign = lu.permutationP().determinant();
  const auto& packed = lu.matrixLU();
  for (Index i = 0; i < m; ++i) {
    const double u = packed(i, i);
    if (!(u != 0.0) || !std::isfinite(u)) {
      fail(ErrorCode::kNumericalError, "precision matrix is singular");
    }
    if (u < 0.0) sign = -sign;
    result += std::log(std::abs(u));
  }
  require(sign > 0.0, ErrorCode::kNumericalError, "precision matrix is not positive definite");
  return result;
}

double trace_product(const FactoredPrecision& q, const DenseMatrix& c) {
  const Index n = q.dimension();
  require(c.rows() == n && c.cols() == n, ErrorCode::kInvalidInput,
          "covariance dimensions differ from the precision");
  double total = 0.0;
  for (Index i = 0; i < q.rank(); ++i) {
    const auto w = q.basis().col(i);
    total += q.omega()(i) * w.dot(c * w);
  }
  if (auto diag = q.baseline_diagonal()) {
    total += c.diagonal().dot(*diag);
  } else {
    const DenseMatrix inv_t = q.penalty().inverse_transpose_times(DenseMatrix::Identity(n, n));
    const DenseMatrix gram = inv_t.transpose() * inv_t;
    total += q.baseline_scale() * c.cwiseProduct(gram.transpose()).sum();
  }
  return total;
}

double trace_product(const FactoredPrecision& q, const DataMatrix& x) {
  require(x.signals() == q.dimension(), ErrorCode::kInvalidInput,
          "data dimension differs from the precision");
  const double t = static_cast<double>(x.sample_count());
  const DenseMatrix projected = q.basis().transpose() * x.values();
  double total = 0.0;
  for (Index i = 0; i < q.rank(); ++i) total += q.omega()(i) * projected.row(i).squaredNorm();
  if (auto diag = q.baseline_diagonal()) {
    total += x.values().rowwise().squaredNorm().dot(*diag);
  } else {
    total += q.baseline_scale() * q.penalty().inverse_transpose_times(x.values()).squaredNorm();
  }
  return total / t;
}

}  // namespace rprec
