#include "rprec/matcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "rprec/error.hpp"

namespace rprec {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kMaxJacobiSweeps = 80;

// One-sided (Hestenes) Jacobi on the columns of g. On return the columns of g
// are mutually orthogonal and g_in * v = g_out.
void one_sided_jacobi(DenseMatrix& g, DenseMatrix& v) {
  const Index rows = g.rows();
  const Index cols = g.cols();
  v.setIdentity(cols, cols);
  if (cols < 2) return;

  const double tol = kEps * static_cast<double>(std::max<Index>(rows, 32));
  const double floor = std::pow(4.0 * kEps * g.norm(), 2);

  Vector norms(cols);
  for (Index j = 0; j < cols; ++j) norms(j) = g.col(j).squaredNorm();

  for (int sweep = 0; sweep < kMaxJacobiSweeps; ++sweep) {
    bool rotated = false;
    for (Index p = 0; p + 1 < cols; ++p) {
      for (Index q = p + 1; q < cols; ++q) {
        const double alpha = norms(p);
        const double beta = norms(q);
        if (alpha <= floor || beta <= floor) continue;
        const double gamma = g.col(p).dot(g.col(q));
        if (std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;

        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;

        double* gp = g.col(p).data();
        double* gq = g.col(q).data();
        for (Index i = 0; i < rows; ++i) {
          const double x = gp[i];
          const double y = gq[i];
          gp[i] = c * x - s * y;
          gq[i] = s * x + c * y;
        }
        double* vp = v.col(p).data();
        double* vq = v.col(q).data();
        for (Index i = 0; i < cols; ++i) {
          const double x = vp[i];
          const double y = vq[i];
          vp[i] = c * x - s * y;
          vq[i] = s * x + c * y;
        }
        norms(p) = g.col(p).squaredNorm();
        norms(q) = g.col(q).squaredNorm();
      }
    }
    if (!rotated) return;
  }
  fail(ErrorCode::kNumericalError, "Jacobi SVD did not converge");
}

// Replaces the columns flagged in `missing` by unit vectors orthogonal to every
// other column. Each one is the standard basis vector with the largest
// residual against the columns already placed; some residual has squared norm
// at least (free dimensions) / n, so the choice never degenerates.
void complete_orthonormal(DenseMatrix& u, const std::vector<bool>& missing) {
  const Index n = u.rows();
  std::vector<Index> kept;
  for (Index j = 0; j < u.cols(); ++j) {
    if (!missing[j]) kept.push_back(j);
  }
  for (Index j = 0; j < u.cols(); ++j) {
    if (!missing[j]) continue;
    Vector best;
    double best_norm = 0.0;
    for (Index candidate = 0; candidate < n; ++candidate) {
      Vector x = Vector::Unit(n, candidate);
      for (int pass = 0; pass < 2; ++pass) {
        for (Index k : kept) x -= u.col(k).dot(x) * u.col(k);
      }
      const double norm = x.norm();
      if (norm > best_norm + 1e-12) {
        best = std::move(x);
        best_norm = norm;
      }
    }
    require(best_norm > 1e-8, ErrorCode::kNumericalError, "cannot complete orthonormal basis");
    best /= best_norm;
    for (Index k : kept) best -= u.col(k).dot(best) * u.col(k);
    u.col(j) = best.normalized();
    kept.push_back(j);
  }
}

// SVD of a matrix with rows >= cols.
SvdResult tall_svd(const DenseMatrix& a, SvdMode mode) {
  const Index n = a.rows();
  const Index m = a.cols();

  DenseMatrix g;
  Eigen::HouseholderQR<DenseMatrix> qr;
  const bool preconditioned = n > m;
  if (preconditioned) {
    qr.compute(a);
    g = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
  } else {
    g = a;
  }

  DenseMatrix v;
  one_sided_jacobi(g, v);

  Vector sigma(m);
  for (Index j = 0; j < m; ++j) sigma(j) = g.col(j).norm();
  const double sigma_max = m > 0 ? sigma.maxCoeff() : 0.0;
  const double zero_threshold = sigma_max * kEps * static_cast<double>(std::max(n, m));

  std::vector<Index> order(m);
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index i, Index j) { return sigma(i) > sigma(j); });

  SvdResult out;
  out.singular_values.resize(m);
  DenseMatrix small_left(m, m);
  out.right.resize(m, m);
  std::vector<bool> missing(m, false);
  for (Index k = 0; k < m; ++k) {
    const Index j = order[k];
    out.right.col(k) = v.col(j);
    if (sigma(j) <= zero_threshold || sigma(j) == 0.0) {
      out.singular_values(k) = 0.0;
      small_left.col(k).setZero();
      missing[k] = true;
    } else {
      out.singular_values(k) = sigma(j);
      small_left.col(k) = g.col(j) / sigma(j);
    }
  }
  complete_orthonormal(small_left, missing);

  if (!preconditioned) {
    out.left = std::move(small_left);
  } else if (mode == SvdMode::kThin) {
    DenseMatrix q_thin = qr.householderQ() * DenseMatrix::Identity(n, m);
    out.left = q_thin * small_left;
  } else {
    DenseMatrix q_full = qr.householderQ();
    out.left.resize(n, n);
    out.left.leftCols(m) = q_full.leftCols(m) * small_left;
    out.left.rightCols(n - m) = q_full.rightCols(n - m);
  }
  normalize_column_signs(out.left, &out.right);
  return out;
}

}  // namespace

bool all_finite(const DenseMatrix& a) { return a.allFinite(); }

void normalize_column_signs(DenseMatrix& vectors, DenseMatrix* partner) {
  const Index shared = partner ? std::min(vectors.cols(), partner->cols()) : 0;
  for (Index j = 0; j < vectors.cols(); ++j) {
    for (Index i = 0; i < vectors.rows(); ++i) {
      const double x = vectors(i, j);
      if (std::abs(x) > 1e-12) {
        if (x < 0.0) {
          vectors.col(j) *= -1.0;
          if (j < shared) partner->col(j) *= -1.0;
        }
        break;
      }
    }
  }
}

SvdResult svd(const DenseMatrix& a, SvdMode mode) {
  require(a.rows() >= 1 && a.cols() >= 1, ErrorCode::kInvalidInput,
          "svd of an empty matrix");
  require(a.allFinite(), ErrorCode::kInvalidInput, "svd input has non-finite entries");
  if (a.rows() >= a.cols()) return tall_svd(a, mode);

  // A = B^T with B tall: B = U S V^T, so A = V S U^T.
  SvdResult b = tall_svd(a.transpose(), mode);
  SvdResult out{std::move(b.right), std::move(b.singular_values), std::move(b.left)};
  normalize_column_signs(out.left, &out.right);
  return out;
}

SymEigResult sym_eig(const DenseMatrix& a) {
  require(a.rows() == a.cols() && a.rows() >= 1, ErrorCode::kInvalidInput,
          "sym_eig requires a non-empty square matrix");
  require(a.allFinite(), ErrorCode::kInvalidInput, "sym_eig input has non-finite entries");
  const double scale = a.cwiseAbs().maxCoeff();
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  require(asym <= 1e-8 * scale, ErrorCode::kInvalidInput, "sym_eig input is not symmetric");

  const DenseMatrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<DenseMatrix> solver(sym);
  require(solver.info() == Eigen::Success, ErrorCode::kNumericalError,
          "symmetric eigensolver failed");
  SymEigResult out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  normalize_column_signs(out.vectors);
  return out;
}

namespace detail {

std::optional<Index> orthonormalize_from(DenseMatrix& u, Index start) {
  for (Index k = start; k < u.cols(); ++k) {
    if (k >= u.rows()) return k;
    Vector x = u.col(k);
    const double original = x.norm();
    if (original == 0.0) return k;
    for (int pass = 0; pass < 2; ++pass) {
      for (Index j = 0; j < k; ++j) x -= u.col(j).dot(x) * u.col(j);
    }
    const double residual = x.norm();
    if (residual <= 1e-12 * original) return k;
    u.col(k) = x / residual;
  }
  return std::nullopt;
}

}  // namespace detail

DenseMatrix gram_schmidt(const DenseMatrix& u) {
  require(u.allFinite(), ErrorCode::kInvalidInput, "gram_schmidt input has non-finite entries");
  DenseMatrix q = u;
  if (auto bad = detail::orthonormalize_from(q, 0)) {
    fail(ErrorCode::kRankDeficient,
         "column " + std::to_string(*bad) + " is linearly dependent on earlier columns",
         *bad);
  }
  return q;
}

DenseMatrix covariance(const DataMatrix& x) {
  const Index t = x.sample_count();
  require(t >= 2, ErrorCode::kInvalidInput, "covariance needs at least two samples");
  const Index n = x.signals();
  DenseMatrix c = DenseMatrix::Zero(n, n);
  c.selfadjointView<Eigen::Lower>().rankUpdate(x.values(), 1.0 / static_cast<double>(t));
  c.triangularView<Eigen::StrictlyUpper>() = c.transpose();
  return c;
}

}  // namespace rprec
