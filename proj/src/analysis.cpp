#include "rprec/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rprec/error.hpp"
#include "rprec/io_util.hpp"
#include "rprec/matcore.hpp"
#include "text_util.hpp"

namespace rprec {

NetworkSelection::NetworkSelection(std::vector<Index> nodes, Index n) : nodes_(std::move(nodes)) {
  require(!nodes_.empty(), ErrorCode::kInvalidInput, "network selection is empty");
  std::sort(nodes_.begin(), nodes_.end());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i] < 0 || nodes_[i] >= n) {
      fail(ErrorCode::kInvalidInput,
           "network node " + std::to_string(nodes_[i] + 1) + " is outside 1.." + std::to_string(n),
           nodes_[i]);
    }
    if (i > 0 && nodes_[i] == nodes_[i - 1]) {
      fail(ErrorCode::kInvalidInput,
           "network node " + std::to_string(nodes_[i] + 1) + " is listed twice", nodes_[i]);
    }
  }
}

NetworkSelection NetworkSelection::all(Index n) {
  std::vector<Index> nodes(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) nodes[static_cast<std::size_t>(i)] = i;
  return NetworkSelection(std::move(nodes), n);
}

NetworkSelection parse_network(std::string_view text, Index n) {
  std::vector<Index> nodes;
  for (const auto& line : text::content_lines(text)) {
    const auto value = text::parse_number<long long>(line.content);
    if (!value) {
      fail(ErrorCode::kParseError,
           "network line " + std::to_string(line.number) + " is not an integer");
    }
    nodes.push_back(static_cast<Index>(*value) - 1);
  }
  return NetworkSelection(std::move(nodes), n);
}

NetworkSelection load_network(const std::filesystem::path& path, Index n) {
  return parse_network(read_file(path), n);
}

DataMatrix select_signals(const DataMatrix& x, const NetworkSelection& net) {
  require(net.nodes().back() < x.signals(), ErrorCode::kInvalidInput,
          "network references a node outside the data");
  DenseMatrix rows(net.size(), x.samples());
  std::vector<std::string> labels;
  for (Index i = 0; i < net.size(); ++i) {
    const Index node = net.nodes()[static_cast<std::size_t>(i)];
    rows.row(i) = x.values().row(node);
    if (!x.row_labels().empty()) labels.push_back(x.row_labels()[static_cast<std::size_t>(node)]);
  }
  DataMatrix out(std::move(rows), x.state(), x.sample_count());
  out.set_row_labels(std::move(labels));
  return out;
}

double tsee_direct(const DenseMatrix& q_sub) {
  const SymEigResult eig = sym_eig(q_sub);
  if (!(eig.values.minCoeff() > 0.0)) {
    fail(ErrorCode::kNumericalError, "restricted precision is not positive definite");
  }
  return 0.5 * eig.values.array().log().sum();
}

double tsee_fast(const FactoredPrecision& q, const NetworkSelection& net) {
  const std::span<const Index> nodes = net.nodes();
  require(nodes.back() < q.dimension(), ErrorCode::kInvalidInput,
          "network references a node outside the precision");
  const Index n = net.size();

  double floor_value = 0.0;
  if (auto diag = q.baseline_diagonal()) {
    floor_value = (*diag)(nodes[0]);
    for (Index node : nodes) {
      if (std::abs((*diag)(node) - floor_value) > 1e-12 * floor_value) {
        fail(ErrorCode::kUnsupportedPenalty, "penalty is not constant on the network");
      }
    }
  } else {
    const DenseMatrix block = q.baseline_block(nodes);
    floor_value = block(0, 0);
    const DenseMatrix deviation = block - floor_value * DenseMatrix::Identity(n, n);
    if (deviation.cwiseAbs().maxCoeff() > 1e-10 * floor_value) {
      fail(ErrorCode::kUnsupportedPenalty, "penalty is not constant on the network");
    }
  }

  const Index m = q.rank();
  if (m == 0) return 0.5 * static_cast<double>(n) * std::log(floor_value);

  DenseMatrix a(n, m);
  for (Index i = 0; i < n; ++i) a.row(i) = q.basis().row(nodes[static_cast<std::size_t>(i)]);
  const Vector magnitude = q.omega().cwiseAbs().cwiseSqrt();
  a = a * magnitude.asDiagonal();

  const bool all_non_positive = (q.omega().array() <= 0.0).all();
  const bool all_non_negative = (q.omega().array() >= 0.0).all();

  const SvdResult decomposition = svd(a, SvdMode::kThin);
  const Index k = decomposition.singular_values.size();
  Vector updates(k);
  if (all_non_positive || all_non_negative) {
    const double sign = all_non_positive ? -1.0 : 1.0;
    updates = sign * decomposition.singular_values.array().square().matrix();
  } else {
    const Vector signs = q.omega().unaryExpr([](double w) { return w < 0.0 ? -1.0 : 1.0; });
    const DenseMatrix zs = decomposition.right * decomposition.singular_values.asDiagonal();
    DenseMatrix core = zs.transpose() * signs.asDiagonal() * zs;
    core = 0.5 * (core + core.transpose());
    updates = sym_eig(core).values;
  }

  double half_logdet = 0.0;
  for (Index j = 0; j < k; ++j) {
    const double lambda = floor_value + updates(j);
    if (!(lambda > 0.0)) {
      fail(ErrorCode::kNumericalError, "restricted precision is not positive definite");
    }
    half_logdet += std::log(lambda);
  }
  half_logdet += static_cast<double>(n - k) * std::log(floor_value);
  return 0.5 * half_logdet;
}

DenseMatrix partial_correlations(const DenseMatrix& q_sub) {
  require(q_sub.rows() == q_sub.cols() && q_sub.rows() >= 1, ErrorCode::kInvalidInput,
          "partial correlations need a square matrix");
  const Index n = q_sub.rows();
  Vector scale(n);
  for (Index i = 0; i < n; ++i) {
    if (!(q_sub(i, i) > 0.0)) {
      fail(ErrorCode::kNumericalError,
           "precision diagonal entry " + std::to_string(i) + " is not positive", i);
    }
    scale(i) = std::sqrt(q_sub(i, i));
  }
  DenseMatrix out = DenseMatrix::Identity(n, n);
  for (Index j = 1; j < n; ++j) {
    for (Index i = 0; i < j; ++i) {
      out(i, j) = -q_sub(i, j) / (scale(i) * scale(j));
      out(j, i) = out(i, j);
    }
  }
  return out;
}

double mahalanobis(const Vector& a, const Vector& b, const FactoredPrecision& q) {
  require(a.size() == q.dimension() && b.size() == q.dimension(), ErrorCode::kInvalidInput,
          "map length differs from the precision dimension");
  const Vector delta = a - b;
  const Vector coords = q.basis().transpose() * delta;
  const double low_rank = coords.dot(q.omega().cwiseProduct(coords));
  double baseline = 0.0;
  if (auto diag = q.baseline_diagonal()) {
    baseline = delta.array().square().matrix().dot(*diag);
  } else {
    baseline = q.baseline_scale() * q.penalty().inverse_transpose_times(delta).squaredNorm();
  }
  const double radicand = low_rank + baseline;
  if (radicand < -1e-12 * std::max(1.0, baseline)) {
    fail(ErrorCode::kNumericalError, "negative squared distance: precision is not positive definite");
  }
  return std::sqrt(std::max(radicand, 0.0));
}

}  // namespace rprec
