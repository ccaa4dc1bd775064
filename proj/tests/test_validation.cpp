#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>

#include <json.hpp>

#include "oracles.hpp"
#include "rprec/error.hpp"
#include "rprec/ingest.hpp"
#include "rprec/validation.hpp"

namespace rprec {
namespace {

namespace fs = std::filesystem;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no rprec::Error thrown";
  return ErrorCode::kInvalidInput;
}

DataMatrix normalized(const DenseMatrix& x) {
  return DataMatrix(oracle::normalize_rows(x), SignalState::kNormalized);
}

Cohort random_cohort(int subjects, int reps, int n, int t, oracle::TestRng& rng) {
  Cohort cohort;
  for (int s = 0; s < subjects; ++s) {
    CohortSubject subject{"s" + std::to_string(s), {}};
    const DenseMatrix mix = DenseMatrix::Identity(n, n) + 0.5 * rng.gaussian(n, n);
    for (int r = 0; r < reps; ++r) subject.repetitions.emplace_back(mix * rng.gaussian(n, t));
    cohort.push_back(std::move(subject));
  }
  return cohort;
}

TEST(Nll, BaselineIdentityExample) {
  const FactoredPrecision eye(DenseMatrix::Zero(4, 0), Vector(0), 1.0, PenaltyShape::identity(1.0),
                              Estimator::kRiccati, 10);
  EXPECT_NEAR(nll(eye, DenseMatrix::Identity(4, 4)), 4.0, 1e-15);
  const FactoredPrecision half(DenseMatrix::Zero(3, 0), Vector(0), 0.5, PenaltyShape::identity(4.0),
                               Estimator::kRiccati, 10);
  EXPECT_NEAR(nll(half, DenseMatrix::Identity(3, 3)), 1.5 - 3.0 * std::log(0.5), 1e-14);
}

TEST(Nll, MatchesDenseOracleInBothForms) {
  oracle::TestRng rng(1);
  const DataMatrix train = normalized(rng.gaussian(12, 20));
  const DataMatrix test = normalized(rng.gaussian(12, 30));
  const FactoredPrecision q = estimate(train, PenaltyShape::scaled_identity(1.3, 0.4));
  const DenseMatrix dense = densify(q);
  const DenseMatrix c = oracle::loop_covariance(test.values());
  const double expected = (c * dense).trace() - oracle::log_det(dense).log_abs;
  EXPECT_NEAR(nll(q, c), expected, 1e-9);
  EXPECT_NEAR(nll(q, test), expected, 1e-9);
}

TEST(Icc, HandComputedTables) {
  DenseMatrix perfect(3, 2);
  perfect << 1, 2, 3, 4, 5, 6;
  EXPECT_NEAR(icc_c1(perfect), 1.0, 1e-15);

  // Rows share a mean, so MS_R = 0 and MS_E = 1.
  DenseMatrix crossed(2, 2);
  crossed << 1, 2, 2, 1;
  EXPECT_NEAR(icc_c1(crossed), -1.0, 1e-15);

  // Classic 6-target, 4-judge table; the consistency ICC is 0.7148.
  DenseMatrix judges(6, 4);
  judges << 9, 2, 5, 8, 6, 1, 3, 2, 8, 4, 6, 8, 7, 1, 2, 6, 10, 5, 6, 9, 6, 2, 4, 7;
  // SS_rows = 56.2083, SS_judges = 97.4583, SS_total = 168.9583.
  const double ms_rows = 56.208333333333333 / 5.0;
  const double ms_error = (168.95833333333333 - 56.208333333333333 - 97.458333333333333) / 15.0;
  const double hand = (ms_rows - ms_error) / (ms_rows + 3.0 * ms_error);
  EXPECT_NEAR(icc_c1(judges), hand, 1e-10);
  EXPECT_NEAR(icc_c1(judges), oracle::anova_icc(judges), 1e-10);
  EXPECT_NEAR(icc_c1(judges), 0.7148, 5e-5);
}

TEST(Icc, DegenerateAndInvalidTables) {
  EXPECT_EQ(code_of([] { icc_c1(DenseMatrix::Constant(4, 3, 2.0)); }), ErrorCode::kDegenerateInput);
  EXPECT_EQ(code_of([] { icc_c1(DenseMatrix::Ones(1, 3)); }), ErrorCode::kInvalidInput);
  DenseMatrix nan = DenseMatrix::Ones(2, 2);
  nan(0, 0) = std::nan("");
  EXPECT_EQ(code_of([&] { icc_c1(nan); }), ErrorCode::kInvalidInput);
}

TEST(Icc, ConsistencyIgnoresColumnShiftsAndScale) {
  oracle::TestRng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const DenseMatrix base = rng.gaussian(15, 1).replicate(1, 3) + 0.5 * rng.gaussian(15, 3);
    const double value = icc_c1(base);
    EXPECT_NEAR(value, oracle::anova_icc(base), 1e-10);
    Eigen::RowVectorXd shift(3);
    shift << 5.0, -2.0, 0.7;
    EXPECT_NEAR(icc_c1(base.rowwise() + shift), value, 1e-10);
    EXPECT_NEAR(icc_c1(3.5 * base), value, 1e-10);
    EXPECT_LE(value, 1.0);
  }
}

TEST(Icc, NullMonteCarloCentresOnZero) {
  double total = 0.0;
  for (int seed = 0; seed < 100; ++seed) {
    oracle::TestRng rng(1000 + seed);
    total += std::abs(icc_c1(rng.gaussian(200, 4)));
  }
  EXPECT_LT(total / 100.0, 0.05);
}

TEST(EdgeIccScore, IdenticalRepetitionsGiveOne) {
  oracle::TestRng rng(3);
  std::vector<std::vector<DenseMatrix>> partials;
  for (int s = 0; s < 5; ++s) {
    const DenseMatrix g = rng.gaussian(4, 4);
    const DenseMatrix p = partial_correlations(g * g.transpose() + DenseMatrix::Identity(4, 4));
    partials.push_back({p, p, p});
  }
  const EdgeIcc result = edge_icc(partials);
  EXPECT_NEAR(result.mean, 1.0, 1e-12);
  EXPECT_EQ(result.edges_used, 6);
  EXPECT_EQ(result.edges_degenerate, 0);
}

TEST(EdgeIccScore, DegenerateEdgesAreExcludedAndCounted) {
  oracle::TestRng rng(4);
  std::vector<std::vector<DenseMatrix>> partials(6, std::vector<DenseMatrix>(2));
  DenseMatrix table(6, 2);
  for (int s = 0; s < 6; ++s) {
    for (int r = 0; r < 2; ++r) {
      DenseMatrix p = DenseMatrix::Identity(3, 3);
      p(0, 1) = p(1, 0) = rng.normal();
      table(s, r) = p(0, 1);
      p(0, 2) = p(2, 0) = 0.25;  // constant everywhere
      p(1, 2) = p(2, 1) = 0.1 * s + 0.01 * r;
      partials[s][r] = p;
    }
  }
  DenseMatrix second(6, 2);
  for (int s = 0; s < 6; ++s) second.row(s) << 0.1 * s, 0.1 * s + 0.01;
  const EdgeIcc result = edge_icc(partials);
  EXPECT_EQ(result.edges_used, 2);
  EXPECT_EQ(result.edges_degenerate, 1);
  EXPECT_NEAR(result.mean, 0.5 * (oracle::anova_icc(table) + oracle::anova_icc(second)), 1e-10);

  std::vector<std::vector<DenseMatrix>> flat(3, std::vector<DenseMatrix>(2, DenseMatrix::Identity(3, 3)));
  EXPECT_EQ(code_of([&] { edge_icc(flat); }), ErrorCode::kDegenerateInput);
}

TEST(SplitOrder, DeterministicPermutationPerRepetition) {
  const SplitPlan plan{10, 3, 42};
  const std::vector<Index> a = split_order(12, plan, 0);
  EXPECT_EQ(a, split_order(12, plan, 0));
  std::vector<Index> sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (Index i = 0; i < 12; ++i) EXPECT_EQ(sorted[i], i);
  EXPECT_NE(a, split_order(12, plan, 1));
  EXPECT_NE(a, split_order(12, SplitPlan{10, 3, 43}, 0));
}

TEST(SplitOrder, EveryPositionIsReachable) {
  const SplitPlan plan{0, 0, 7};
  std::vector<int> first_counts(5, 0);
  for (Index r = 0; r < 2000; ++r) ++first_counts[split_order(5, plan, r)[0]];
  for (int c : first_counts) EXPECT_NEAR(c / 2000.0, 0.2, 0.04);
}

TEST(PoolSubjects, ConcatenatesAndNormalizes) {
  oracle::TestRng rng(5);
  const Cohort cohort = random_cohort(3, 2, 4, 10, rng);
  const std::vector<Index> chosen{2, 0};
  const DataMatrix pooled = pool_subjects(cohort, chosen);
  DenseMatrix joined(4, 40);
  joined << cohort[2].repetitions[0].values(), cohort[2].repetitions[1].values(),
      cohort[0].repetitions[0].values(), cohort[0].repetitions[1].values();
  EXPECT_LE((pooled.values() - oracle::normalize_rows(joined)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SplitSweep, SingleCellMatchesScriptedOracle) {
  oracle::TestRng rng(6);
  const Cohort cohort = random_cohort(8, 1, 6, 15, rng);
  const SplitPlan plan{4, 3, 11};
  GridAxes grid;
  grid.rhos = {0.7};
  const ValidationReport report = split_sample_sweep(cohort, plan, grid);
  ASSERT_EQ(report.cells.size(), 1u);
  const ReportCell& cell = report.cells[0];
  ASSERT_EQ(cell.repetitions(), 4);

  for (Index r = 0; r < 4; ++r) {
    const std::vector<Index> order = split_order(8, plan, r);
    DenseMatrix train(6, 45), test(6, 45);
    for (int i = 0; i < 3; ++i) {
      train.middleCols(15 * i, 15) = cohort[order[i]].repetitions[0].values();
      test.middleCols(15 * i, 15) = cohort[order[3 + i]].repetitions[0].values();
    }
    const DenseMatrix q = densify(estimate(normalized(train), PenaltyShape::identity(0.7)));
    const DenseMatrix c = oracle::loop_covariance(oracle::normalize_rows(test));
    const double expected = (c * q).trace() - oracle::log_det(q).log_abs;
    ASSERT_TRUE(cell.values[r].has_value());
    EXPECT_NEAR(*cell.values[r], expected, 1e-9);
  }
}

TEST(SplitSweep, GridLayoutAndDeterminism) {
  oracle::TestRng rng(7);
  const Cohort cohort = random_cohort(6, 2, 10, 12, rng);
  const SplitPlan plan{3, 2, 5};
  GridAxes grid;
  grid.dimensions = {0, 4, 8};
  grid.rhos = {0.5, 2.0};
  grid.methods = {Method::kRp, Method::kTsvd};
  const ValidationReport a = split_sample_sweep(cohort, plan, grid);
  ASSERT_EQ(a.cells.size(), 12u);
  EXPECT_EQ(a.cells[0].key.dimension, 0);
  EXPECT_EQ(a.cells[1].key.method, Method::kTsvd);
  EXPECT_EQ(a.cells[2].key.rho, 2.0);
  EXPECT_EQ(a.cells[4].key.dimension, 4);
  grid.jobs = 3;
  const ValidationReport b = split_sample_sweep(cohort, plan, grid);
  EXPECT_EQ(a.to_csv(), b.to_csv());
  EXPECT_EQ(a.to_json(), b.to_json());
  for (const auto& cell : a.cells) EXPECT_EQ(cell.succeeded(), 3);
}

TEST(SplitSweep, ImpossibleDimensionIsFlaggedNotFatal) {
  oracle::TestRng rng(8);
  const Cohort cohort = random_cohort(4, 1, 5, 6, rng);
  GridAxes grid;
  grid.dimensions = {3, 50};
  const ValidationReport report = split_sample_sweep(cohort, SplitPlan{2, 2, 1}, grid);
  ASSERT_EQ(report.cells.size(), 2u);
  EXPECT_EQ(report.cells[0].succeeded(), 2);
  EXPECT_EQ(report.cells[1].succeeded(), 0);
  EXPECT_FALSE(report.cells[1].mean().has_value());
  EXPECT_NE(report.cells[1].failures[0].find("InvalidInput"), std::string::npos)
      << report.cells[1].failures[0];
  const std::string csv = report.to_csv();
  EXPECT_NE(csv.find("50,1,1,rp,nll,,0,failed\n"), std::string::npos) << csv;
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "dimension,rho,alpha,method,metric,value,repetition,status");

  const nlohmann::json json = nlohmann::json::parse(report.to_json());
  EXPECT_EQ(json["cells"][1]["succeeded"], 0);
  EXPECT_TRUE(json["cells"][1]["mean"].is_null());
  EXPECT_EQ(json["cells"][1]["failures"].size(), 2u);
  EXPECT_EQ(json["cells"][0]["dimension"], 3);
}

TEST(SplitSweep, RejectsBadPlans) {
  oracle::TestRng rng(9);
  const Cohort cohort = random_cohort(4, 1, 3, 6, rng);
  GridAxes jsvd;
  jsvd.methods = {Method::kJsvd};
  EXPECT_EQ(code_of([&] { split_sample_sweep(cohort, SplitPlan{1, 2, 0}, jsvd); }),
            ErrorCode::kInvalidInput);
  EXPECT_EQ(code_of([&] { split_sample_sweep(cohort, SplitPlan{1, 3, 0}, GridAxes{}); }),
            ErrorCode::kInvalidInput);
  GridAxes bad_rho;
  bad_rho.rhos = {-1.0};
  EXPECT_EQ(code_of([&] { split_sample_sweep(cohort, SplitPlan{1, 2, 0}, bad_rho); }),
            ErrorCode::kInvalidInput);
}

TEST(ReportCellStats, MeanAndSampleDeviation) {
  ReportCell cell;
  cell.values = {1.0, std::nullopt, 3.0, 5.0};
  EXPECT_EQ(cell.succeeded(), 3);
  EXPECT_DOUBLE_EQ(*cell.mean(), 3.0);
  EXPECT_DOUBLE_EQ(*cell.stddev(), 2.0);
  cell.values = {4.0};
  EXPECT_EQ(*cell.stddev(), 0.0);
}

TEST(TestRetest, IdenticalRepetitionsAreFullyReliable) {
  oracle::TestRng rng(10);
  Cohort cohort;
  for (int s = 0; s < 5; ++s) {
    const DataMatrix x(DenseMatrix(DenseMatrix::Identity(6, 6) + 0.5 * rng.gaussian(6, 6)) *
                       rng.gaussian(6, 40));
    cohort.push_back(CohortSubject{"s" + std::to_string(s), {x, x, x}});
  }
  GridAxes grid;
  grid.methods = {Method::kRp, Method::kTsvd, Method::kJsvd};
  grid.dimensions = {0, 4};
  grid.network = NetworkSelection({0, 2, 3}, 6);
  const ValidationReport report = test_retest_sweep(cohort, grid, 3);
  ASSERT_EQ(report.cells.size(), 2u * 3u * 2u);
  for (const auto& cell : report.cells) {
    if (cell.key.method == Method::kRp && cell.key.dimension != 0) continue;  // differs per scan
    ASSERT_EQ(cell.succeeded(), 1) << cell.failures[0];
    EXPECT_NEAR(*cell.values[0], 1.0, 1e-9)
        << to_string(cell.key.method) << " " << to_string(cell.key.metric);
  }
}

TEST(TestRetest, JsvdMatchesManualSharedFit) {
  oracle::TestRng rng(11);
  const Cohort cohort = random_cohort(4, 2, 5, 30, rng);
  GridAxes grid;
  grid.methods = {Method::kJsvd};
  grid.dimensions = {3};
  grid.rhos = {0.5, 1.5};
  const ValidationReport report = test_retest_sweep(cohort, grid, 0);
  ASSERT_EQ(report.cells.size(), 2u);

  std::vector<DataMatrix> data;
  for (const auto& s : cohort) {
    for (const auto& x : s.repetitions) data.push_back(normalized(x.values()));
  }
  for (std::size_t r = 0; r < 2; ++r) {
    const double rho = grid.rhos[r];
    const SharedBasisModel model = fit_shared(data, 3, PenaltyShape::identity(rho));
    std::vector<std::vector<DenseMatrix>> partials(4, std::vector<DenseMatrix>(2));
    for (Index i = 0; i < 8; ++i) {
      partials[i / 2][i % 2] = partial_correlations(densify(subject_precision(model, i)));
    }
    ASSERT_TRUE(report.cells[r].values[0].has_value()) << report.cells[r].failures[0];
    EXPECT_NEAR(*report.cells[r].values[0], edge_icc(partials).mean, 1e-9);
  }
}

TEST(TestRetest, RequiresBalancedRepetitions) {
  oracle::TestRng rng(12);
  Cohort cohort = random_cohort(3, 2, 4, 10, rng);
  cohort[1].repetitions.pop_back();
  EXPECT_EQ(code_of([&] { test_retest_sweep(cohort, GridAxes{}, 0); }), ErrorCode::kInvalidInput);
  EXPECT_EQ(code_of([&] { test_retest_sweep(random_cohort(3, 1, 4, 10, rng), GridAxes{}, 0); }),
            ErrorCode::kInvalidInput);
}

TEST(Manifest, LoadsSubjectsInOrder) {
  const fs::path dir = fs::temp_directory_path() / "rprec_manifest_test";
  fs::create_directories(dir / "data");
  save_matrix(DenseMatrix::Ones(2, 3), dir / "data" / "a1.csv", MatrixFormat::kCsv);
  save_matrix(2 * DenseMatrix::Ones(2, 3), dir / "data" / "b1.csv", MatrixFormat::kCsv);
  save_matrix(3 * DenseMatrix::Ones(2, 3), dir / "data" / "a2.csv", MatrixFormat::kCsv);
  {
    std::ofstream out(dir / "cohort.txt");
    out << "# id path\nsubA data/a1.csv\n\nsubB  data/b1.csv\nsubA data/a2.csv\n";
  }
  const Cohort cohort = load_cohort(dir / "cohort.txt");
  ASSERT_EQ(cohort.size(), 2u);
  EXPECT_EQ(cohort[0].id, "subA");
  ASSERT_EQ(cohort[0].repetitions.size(), 2u);
  EXPECT_EQ(cohort[0].repetitions[1].values()(0, 0), 3.0);
  EXPECT_EQ(cohort[1].repetitions[0].values()(1, 2), 2.0);

  {
    std::ofstream out(dir / "empty.txt");
    out << "# nothing\n";
  }
  EXPECT_EQ(code_of([&] { load_cohort(dir / "empty.txt"); }), ErrorCode::kInvalidInput);
  {
    std::ofstream out(dir / "bad.txt");
    out << "only_an_id\n";
  }
  EXPECT_EQ(code_of([&] { load_cohort(dir / "bad.txt"); }), ErrorCode::kParseError);
  {
    std::ofstream out(dir / "missing.txt");
    out << "x data/none.csv\n";
  }
  EXPECT_EQ(code_of([&] { load_cohort(dir / "missing.txt"); }), ErrorCode::kIoError);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace rprec
