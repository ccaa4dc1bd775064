#include "rprec/randproj.hpp"

#include <algorithm>
#include <string>

#include "rprec/error.hpp"
#include "rprec/matcore.hpp"
#include "rprec/rng.hpp"

namespace rprec {
namespace {

constexpr int kMaxRefills = 8;

void orthonormalize_with_refill(DenseMatrix& m, CounterRng& refill) {
  Index start = 0;
  Index last_bad = -1;
  int attempts = 0;
  while (auto bad = detail::orthonormalize_from(m, start)) {
    attempts = (*bad == last_bad) ? attempts + 1 : 1;
    if (attempts > kMaxRefills || *bad >= m.rows()) {
      fail(ErrorCode::kRankDeficient,
           "projection basis collapsed at column " + std::to_string(*bad), *bad);
    }
    last_bad = *bad;
    for (Index i = 0; i < m.rows(); ++i) m(i, *bad) = refill.next_gaussian();
    start = *bad;
  }
}

Projection make_projection(const DataMatrix& x, DenseMatrix basis) {
  DataMatrix y(x.values() * basis, SignalState::kProjected, x.sample_count());
  y.set_row_labels(x.row_labels());
  return Projection{std::move(y), std::move(basis)};
}

}  // namespace

Projection random_project(const DataMatrix& x, const ProjectionConfig& config) {
  const Index n = x.signals();
  const Index t = config.target_dim;
  require(t >= 1 && t <= x.samples(), ErrorCode::kInvalidInput,
          "projection dimension must be in [1, T]");
  require(config.power_iterations >= 0, ErrorCode::kInvalidInput,
          "power iteration count must be non-negative");

  const DenseMatrix& values = x.values();
  CounterRng test_stream(config.seed, 0);
  CounterRng refill_stream(config.seed, 1);

  const DenseMatrix g = gaussian_matrix(n, t, test_stream);
  DenseMatrix u = values.transpose() * g;
  orthonormalize_with_refill(u, refill_stream);

  if (t < n) {
    for (int step = 0; step < config.power_iterations; ++step) {
      DenseMatrix z = values * u;
      orthonormalize_with_refill(z, refill_stream);
      u = values.transpose() * z;
      orthonormalize_with_refill(u, refill_stream);
    }
  }
  return make_projection(x, std::move(u));
}

Projection truncate_svd(const DataMatrix& x, Index target_dim) {
  require(target_dim >= 1 && target_dim <= x.samples(), ErrorCode::kInvalidInput,
          "truncation dimension must be in [1, T]");
  const bool thin = target_dim <= std::min(x.signals(), x.samples());
  SvdResult decomposition = svd(x.values(), thin ? SvdMode::kThin : SvdMode::kFull);
  return make_projection(x, decomposition.right.leftCols(target_dim));
}

double retained_energy(const DataMatrix& x, const DataMatrix& y) {
  require(x.signals() == y.signals(), ErrorCode::kInvalidInput,
          "projected matrix has a different number of signals");
  const double total = x.values().squaredNorm();
  require(total > 0.0, ErrorCode::kInvalidInput, "retained energy of a zero matrix");
  return y.values().squaredNorm() / total;
}

}  // namespace rprec
