#pragma once

#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "rprec/data_matrix.hpp"

namespace rprec {

/// Largest N for which a dense N x N precision may be materialized.
inline constexpr Index kDefaultDensifyCap = 2000;

struct ScaledIdentityPenalty {
  double alpha = 1.0;
};

struct DiagonalPenalty {
  Vector v;
};

struct GeneralPenalty {
  DenseMatrix v;
};

/// The weighting matrix V of the penalty (rho / 2) ||V Q V^T||_F^2 together
/// with rho.
///
/// A diagonal V makes the penalty an entrywise weighted Frobenius norm with
/// weights B = v v^T. Equivalent encodings (alpha*I, diag(alpha...), a dense
/// alpha*I) produce identical estimates up to rounding.
class PenaltyShape {
 public:
  using Kind = std::variant<ScaledIdentityPenalty, DiagonalPenalty, GeneralPenalty>;

  static PenaltyShape identity(double rho) { return scaled_identity(1.0, rho); }
  static PenaltyShape scaled_identity(double alpha, double rho);
  static PenaltyShape diagonal(Vector v, double rho);
  /// Throws kRankDeficient when the smallest singular value of V is below
  /// 1e-10 times the largest.
  static PenaltyShape general(DenseMatrix v, double rho);

  /// Network-of-interest penalty: 1 on `network` (zero-based node indices),
  /// `alpha` on every other node.
  static PenaltyShape roi(Index n, std::span<const Index> network, double alpha, double rho);

  double rho() const noexcept { return rho_; }
  const Kind& kind() const noexcept { return kind_; }
  bool is_general() const noexcept { return std::holds_alternative<GeneralPenalty>(kind_); }

  /// Throws kInvalidInput if the shape cannot act on N-dimensional data.
  void check_dimension(Index n) const;

  /// v for scaled-identity and diagonal shapes; nullopt for general V.
  std::optional<Vector> diagonal_values(Index n) const;

  /// V^{-T} x, computed by row scaling or an LU solve (never an inverse).
  DenseMatrix inverse_transpose_times(const DenseMatrix& x) const;
  /// V^{-1} u.
  DenseMatrix inverse_times(const DenseMatrix& u) const;

  DenseMatrix dense(Index n) const;

 private:
  PenaltyShape(Kind kind, double rho);

  Kind kind_;
  double rho_;
  std::shared_ptr<const Eigen::PartialPivLU<DenseMatrix>> lu_;
};

enum class Estimator { kRiccati, kTikhonov };

/// Q = W diag(omega) W^T + c V^{-1} V^{-T}, with c the baseline scale
/// (1/sqrt(rho) for Riccati, 1/rho for Tikhonov).
///
/// omega is sign-indefinite in general; the Riccati and Tikhonov maps both
/// produce omega <= 0. Immutable once built.
class FactoredPrecision {
 public:
  FactoredPrecision(DenseMatrix basis, Vector omega, double baseline_scale, PenaltyShape penalty,
                    Estimator estimator, Index source_samples);

  Index dimension() const noexcept { return basis_.rows(); }
  Index rank() const noexcept { return basis_.cols(); }
  const DenseMatrix& basis() const noexcept { return basis_; }
  const Vector& omega() const noexcept { return omega_; }
  double baseline_scale() const noexcept { return baseline_scale_; }
  const PenaltyShape& penalty() const noexcept { return penalty_; }
  Estimator estimator() const noexcept { return estimator_; }
  Index source_samples() const noexcept { return source_samples_; }

  /// Diagonal of c V^{-1} V^{-T} when V is diagonal; nullopt for general V.
  std::optional<Vector> baseline_diagonal() const;

  /// [c V^{-1} V^{-T}] restricted to `nodes` (zero-based), exactly symmetric.
  DenseMatrix baseline_block(std::span<const Index> nodes) const;

 private:
  DenseMatrix basis_;
  Vector omega_;
  double baseline_scale_;
  PenaltyShape penalty_;
  Estimator estimator_;
  Index source_samples_;
};

/// Positive root of rho p^2 + d p - 1 = 0, i.e. the precision eigenvalue
/// paired with covariance eigenvalue d. p(0) = 1/sqrt(rho).
double riccati_eigenvalue_map(double d, double rho);

/// p(d) - 1/sqrt(rho) without cancellation. Note d = s^2 for singular values s
/// of V^{-T} X / sqrt(T).
double riccati_omega(double d, double rho);

/// 1/(d + rho) - 1/rho.
double tikhonov_omega(double d, double rho);

/// Closed-form maximizer of log det Q - <C, Q> - (rho/2) ||V Q V^T||_F^2.
///
/// X must be normalized (or projected from normalized data); all-zero rows
/// are accepted and an all-zero X returns the baseline-only precision.
/// Components with |omega| < 1e-14 are dropped.
FactoredPrecision estimate(const DataMatrix& x, const PenaltyShape& penalty);

/// Q = (C + rho I)^{-1}, stored through the same SVD.
FactoredPrecision estimate_tikhonov(const DataMatrix& x, double rho);

/// Dense Q. Throws kTooLarge when N exceeds `cap`.
DenseMatrix densify(const FactoredPrecision& q, Index cap = kDefaultDensifyCap);

/// [Q] restricted to `nodes` without forming Q.
DenseMatrix restrict(const FactoredPrecision& q, std::span<const Index> nodes);

/// log det Q via the determinant lemma for diagonal V; general V falls back
/// to a dense Cholesky under `cap`. Throws kNumericalError when Q is not
/// positive definite.
double logdet(const FactoredPrecision& q, Index cap = kDefaultDensifyCap);

/// trace(C Q) from the factors.
double trace_product(const FactoredPrecision& q, const DenseMatrix& c);

/// trace(C Q) with C = (1/T) X X^T, never forming C.
double trace_product(const FactoredPrecision& q, const DataMatrix& x);

namespace detail {

/// Raw matrices must have zero-mean, unit-variance (or all-zero) rows within
/// 1e-6; normalized and projected matrices pass.
void require_normalized(const DataMatrix& x);

}  // namespace detail

}  // namespace rprec
