#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rprec/analysis.hpp"
#include "rprec/riccati.hpp"
#include "rprec/shared.hpp"

namespace rprec {

/// <C, Q> - log det Q; lower is better.
double nll(const FactoredPrecision& q, const DenseMatrix& c_heldout);
/// Same with C = (1/T) X X^T, never formed.
double nll(const FactoredPrecision& q, const DataMatrix& x_heldout);

/// ICC(C,1): two-way mixed, consistency, single measure, from the ANOVA of an
/// n x k table (rows subjects, columns repetitions):
///   (MS_R - MS_E) / (MS_R + (k - 1) MS_E).
/// Throws kDegenerateInput when every entry is equal or the mean squares
/// vanish together.
double icc_c1(const DenseMatrix& ratings);

struct EdgeIcc {
  double mean = 0.0;
  Index edges_used = 0;
  /// Edges skipped because their ratings table had no variance.
  Index edges_degenerate = 0;
};

/// Mean icc_c1 over the strict upper triangle. `partials[s][r]` is subject
/// s, repetition r; all matrices share one size.
EdgeIcc edge_icc(const std::vector<std::vector<DenseMatrix>>& partials);

struct SplitPlan {
  Index repetitions = 100;
  Index group_size = 50;
  std::uint64_t seed = 0;
};

enum class Method { kRp, kTsvd, kJsvd };
enum class Metric { kNll, kEdgeIcc, kTseeIcc };

std::string_view to_string(Method method);
std::string_view to_string(Metric metric);
/// "rp", "tsvd", "jsvd"; throws kInvalidInput otherwise.
Method parse_method(std::string_view text);

struct GridAxes {
  /// Projection dimensions; 0 means the full data (no projection).
  std::vector<Index> dimensions{0};
  std::vector<double> rhos{1.0};
  /// Penalty scale: with a network, 1 on the network and alpha elsewhere;
  /// without one, V = alpha I.
  std::vector<double> alphas{1.0};
  std::vector<Method> methods{Method::kRp};
  int power_iterations = 3;
  std::optional<NetworkSelection> network;
  SharedWeighting jsvd_weighting = SharedWeighting::kPerMatrix;
  int jobs = 1;
};

struct CellKey {
  Index dimension = 0;
  double rho = 1.0;
  double alpha = 1.0;
  Method method = Method::kRp;
  Metric metric = Metric::kNll;
};

struct ReportCell {
  CellKey key;
  /// One slot per repetition; nullopt marks a failed repetition.
  std::vector<std::optional<double>> values;
  /// Error text per failed repetition (empty for successes).
  std::vector<std::string> failures;

  Index repetitions() const noexcept { return static_cast<Index>(values.size()); }
  Index succeeded() const;
  /// Mean and sample standard deviation (n - 1) of the successful values;
  /// nullopt when none succeeded. The deviation is 0 for a single value.
  std::optional<double> mean() const;
  std::optional<double> stddev() const;
};

struct ValidationReport {
  std::vector<ReportCell> cells;

  /// dimension,rho,alpha,method,metric,value,repetition,status - one row per
  /// cell and repetition; dimension 0 is written "full", failed values empty.
  std::string to_csv() const;
  /// Per-cell means and deviations.
  std::string to_json() const;
};

/// One subject: its repetitions (scans or maps) in acquisition order.
struct CohortSubject {
  std::string id;
  std::vector<DataMatrix> repetitions;
};
using Cohort = std::vector<CohortSubject>;

/// Manifest lines "subject_id path"; '#' comments, blank lines ignored. Paths
/// are relative to the manifest's directory. Repeated ids append repetitions
/// in file order; subjects keep first-appearance order.
Cohort load_cohort(const std::filesystem::path& manifest);

/// Precision for one cell: normalizes `x` if raw, projects (rp with
/// `seed`, or tsvd) to `dimension` unless it is 0, then estimates.
FactoredPrecision cell_precision(const DataMatrix& x, const CellKey& key, const GridAxes& grid,
                                 std::uint64_t seed);

/// Group data of a split: every repetition of the listed subjects,
/// concatenated along samples, then normalized.
DataMatrix pool_subjects(const Cohort& cohort, std::span<const Index> subjects);

/// Subject order of split r: a Fisher-Yates shuffle driven by stream r of the
/// plan seed. The first group_size subjects train, the next group_size test.
std::vector<Index> split_order(Index subjects, const SplitPlan& plan, Index r);

/// Split-sample NLL over the grid (methods rp and tsvd).
ValidationReport split_sample_sweep(const Cohort& cohort, const SplitPlan& plan,
                                    const GridAxes& grid);

/// Test-retest reliability: one precision per repetition of every subject,
/// then the edge ICC of partial correlations (restricted to the network when
/// given) and, with a network, the ICC of its entropy. Each cell has a single
/// repetition. Every subject needs the same number (>= 2) of repetitions.
ValidationReport test_retest_sweep(const Cohort& cohort, const GridAxes& grid, std::uint64_t seed);

}  // namespace rprec
