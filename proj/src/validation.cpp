#include "rprec/validation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>

#include <json.hpp>

#include "rprec/error.hpp"
#include "rprec/ingest.hpp"
#include "rprec/io_util.hpp"
#include "rprec/parallel.hpp"
#include "rprec/randproj.hpp"
#include "rprec/rng.hpp"
#include "text_util.hpp"

namespace rprec {
namespace {

std::string describe(const Error& e) {
  return std::string(to_string(e.code())) + ": " + e.what();
}

DataMatrix normalized(const DataMatrix& x) {
  return x.state() == SignalState::kRaw ? normalize(x) : x;
}

PenaltyShape penalty_for(Index n, double rho, double alpha, const GridAxes& grid) {
  if (grid.network) return PenaltyShape::roi(n, grid.network->nodes(), alpha, rho);
  return PenaltyShape::scaled_identity(alpha, rho);
}

DataMatrix reduce(const DataMatrix& x, Index dimension, Method method, int power_iterations,
                  std::uint64_t seed) {
  if (dimension == 0) return x;
  switch (method) {
    case Method::kRp:
      return random_project(x, ProjectionConfig{dimension, power_iterations, seed}).projected;
    case Method::kTsvd:
      return truncate_svd(x, dimension).projected;
    case Method::kJsvd:
      break;
  }
  fail(ErrorCode::kInvalidInput, "jsvd needs a cohort; it has no single-matrix reduction");
}

// Seed of the projection for work item `item` (a split, or a scan) and
// dimension slot `slot`.
std::uint64_t projection_seed(std::uint64_t seed, Index item, std::size_t slot) {
  return CounterRng(seed, static_cast<std::uint64_t>(item))
      .split(static_cast<std::uint64_t>(slot) + 1)
      .next_u64();
}

void check_grid(const GridAxes& grid) {
  require(!grid.dimensions.empty() && !grid.rhos.empty() && !grid.alphas.empty() &&
              !grid.methods.empty(),
          ErrorCode::kInvalidInput, "every grid axis needs at least one value");
  for (Index d : grid.dimensions) {
    require(d >= 0, ErrorCode::kInvalidInput, "grid dimensions must be non-negative");
  }
  for (double rho : grid.rhos) {
    require(std::isfinite(rho) && rho > 0.0, ErrorCode::kInvalidInput,
            "grid rho values must be positive");
  }
  for (double alpha : grid.alphas) {
    require(std::isfinite(alpha) && alpha > 0.0, ErrorCode::kInvalidInput,
            "grid alpha values must be positive");
  }
  require(grid.power_iterations >= 0, ErrorCode::kInvalidInput,
          "power iteration count must be non-negative");
}

Index common_dimension(const Cohort& cohort) {
  require(!cohort.empty(), ErrorCode::kInvalidInput, "cohort has no subjects");
  Index n = -1;
  for (const auto& subject : cohort) {
    require(!subject.repetitions.empty(), ErrorCode::kInvalidInput,
            "subject " + subject.id + " has no repetitions");
    for (const auto& x : subject.repetitions) {
      if (n < 0) n = x.signals();
      require(x.signals() == n, ErrorCode::kInvalidInput,
              "subject " + subject.id + " has a different number of signals");
    }
  }
  return n;
}

std::string dimension_label(Index d) { return d == 0 ? "full" : std::to_string(d); }

// Row-major cell layout: dimension, rho, alpha, method, metric.
struct Layout {
  std::size_t dims, rhos, alphas, methods, metrics;

  std::size_t size() const { return dims * rhos * alphas * methods * metrics; }
  std::size_t at(std::size_t d, std::size_t r, std::size_t a, std::size_t m, std::size_t t) const {
    return (((d * rhos + r) * alphas + a) * methods + m) * metrics + t;
  }
};

ValidationReport empty_report(const GridAxes& grid, const std::vector<Metric>& metrics,
                              Index repetitions) {
  const Layout layout{grid.dimensions.size(), grid.rhos.size(), grid.alphas.size(),
                      grid.methods.size(), metrics.size()};
  ValidationReport report;
  report.cells.resize(layout.size());
  for (std::size_t d = 0; d < layout.dims; ++d) {
    for (std::size_t r = 0; r < layout.rhos; ++r) {
      for (std::size_t a = 0; a < layout.alphas; ++a) {
        for (std::size_t m = 0; m < layout.methods; ++m) {
          for (std::size_t t = 0; t < layout.metrics; ++t) {
            ReportCell& cell = report.cells[layout.at(d, r, a, m, t)];
            cell.key = CellKey{grid.dimensions[d], grid.rhos[r], grid.alphas[a], grid.methods[m],
                               metrics[t]};
            cell.values.assign(static_cast<std::size_t>(repetitions), std::nullopt);
            cell.failures.assign(static_cast<std::size_t>(repetitions), std::string());
          }
        }
      }
    }
  }
  return report;
}

}  // namespace

// ---------------------------------------------------------------------------
// Scores

double nll(const FactoredPrecision& q, const DenseMatrix& c_heldout) {
  return trace_product(q, c_heldout) - logdet(q);
}

double nll(const FactoredPrecision& q, const DataMatrix& x_heldout) {
  return trace_product(q, x_heldout) - logdet(q);
}

double icc_c1(const DenseMatrix& ratings) {
  const Index n = ratings.rows();
  const Index k = ratings.cols();
  require(n >= 2 && k >= 2, ErrorCode::kInvalidInput,
          "ICC needs at least two subjects and two repetitions");
  require(ratings.allFinite(), ErrorCode::kInvalidInput, "ICC ratings have non-finite entries");
  if (ratings.maxCoeff() == ratings.minCoeff()) {
    fail(ErrorCode::kDegenerateInput, "ICC ratings have no variance");
  }

  const double grand = ratings.mean();
  const Vector row_means = ratings.rowwise().mean();
  const Eigen::RowVectorXd col_means = ratings.colwise().mean();
  const double ss_rows = static_cast<double>(k) * (row_means.array() - grand).square().sum();
  double ss_error = 0.0;
  for (Index j = 0; j < k; ++j) {
    for (Index i = 0; i < n; ++i) {
      const double e = ratings(i, j) - row_means(i) - col_means(j) + grand;
      ss_error += e * e;
    }
  }
  const double ms_rows = ss_rows / static_cast<double>(n - 1);
  const double ms_error = ss_error / static_cast<double>((n - 1) * (k - 1));
  const double denominator = ms_rows + static_cast<double>(k - 1) * ms_error;
  if (!(denominator > 0.0)) fail(ErrorCode::kDegenerateInput, "ICC mean squares vanish");
  return (ms_rows - ms_error) / denominator;
}

EdgeIcc edge_icc(const std::vector<std::vector<DenseMatrix>>& partials) {
  const Index subjects = static_cast<Index>(partials.size());
  require(subjects >= 2, ErrorCode::kInvalidInput, "edge ICC needs at least two subjects");
  const Index reps = static_cast<Index>(partials[0].size());
  require(reps >= 2, ErrorCode::kInvalidInput, "edge ICC needs at least two repetitions");
  const Index n = partials[0][0].rows();
  for (const auto& subject : partials) {
    require(static_cast<Index>(subject.size()) == reps, ErrorCode::kInvalidInput,
            "every subject needs the same number of repetitions");
    for (const auto& p : subject) {
      require(p.rows() == n && p.cols() == n, ErrorCode::kInvalidInput,
              "partial correlation matrices differ in size");
    }
  }
  require(n >= 2, ErrorCode::kInvalidInput, "edge ICC needs at least two nodes");

  EdgeIcc out;
  double total = 0.0;
  DenseMatrix table(subjects, reps);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      for (Index s = 0; s < subjects; ++s) {
        for (Index r = 0; r < reps; ++r) {
          table(s, r) = partials[static_cast<std::size_t>(s)][static_cast<std::size_t>(r)](i, j);
        }
      }
      try {
        total += icc_c1(table);
        ++out.edges_used;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kDegenerateInput) throw;
        ++out.edges_degenerate;
      }
    }
  }
  if (out.edges_used == 0) fail(ErrorCode::kDegenerateInput, "every edge is degenerate");
  out.mean = total / static_cast<double>(out.edges_used);
  return out;
}

// ---------------------------------------------------------------------------
// Report

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kRp:
      return "rp";
    case Method::kTsvd:
      return "tsvd";
    case Method::kJsvd:
      return "jsvd";
  }
  return "unknown";
}

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::kNll:
      return "nll";
    case Metric::kEdgeIcc:
      return "edge_icc";
    case Metric::kTseeIcc:
      return "tsee_icc";
  }
  return "unknown";
}

Method parse_method(std::string_view text) {
  for (Method m : {Method::kRp, Method::kTsvd, Method::kJsvd}) {
    if (text == to_string(m)) return m;
  }
  fail(ErrorCode::kInvalidInput, "unknown method '" + std::string(text) + "'");
}

Index ReportCell::succeeded() const {
  return static_cast<Index>(std::count_if(values.begin(), values.end(),
                                          [](const auto& v) { return v.has_value(); }));
}

std::optional<double> ReportCell::mean() const {
  const Index count = succeeded();
  if (count == 0) return std::nullopt;
  double sum = 0.0;
  for (const auto& v : values) {
    if (v) sum += *v;
  }
  return sum / static_cast<double>(count);
}

std::optional<double> ReportCell::stddev() const {
  const auto mu = mean();
  if (!mu) return std::nullopt;
  const Index count = succeeded();
  if (count < 2) return 0.0;
  double sum = 0.0;
  for (const auto& v : values) {
    if (v) sum += (*v - *mu) * (*v - *mu);
  }
  return std::sqrt(sum / static_cast<double>(count - 1));
}

std::string ValidationReport::to_csv() const {
  std::string out = "dimension,rho,alpha,method,metric,value,repetition,status\n";
  for (const auto& cell : cells) {
    const std::string prefix = dimension_label(cell.key.dimension) + "," +
                               format_real(cell.key.rho) + "," + format_real(cell.key.alpha) +
                               "," + std::string(to_string(cell.key.method)) + "," +
                               std::string(to_string(cell.key.metric)) + ",";
    for (std::size_t r = 0; r < cell.values.size(); ++r) {
      const auto& v = cell.values[r];
      out += prefix + (v ? format_real(*v) : std::string()) + "," + std::to_string(r) + "," +
             (v ? "ok" : "failed") + "\n";
    }
  }
  return out;
}

std::string ValidationReport::to_json() const {
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  for (const auto& cell : cells) {
    nlohmann::ordered_json entry;
    if (cell.key.dimension == 0) {
      entry["dimension"] = "full";
    } else {
      entry["dimension"] = cell.key.dimension;
    }
    entry["rho"] = cell.key.rho;
    entry["alpha"] = cell.key.alpha;
    entry["method"] = to_string(cell.key.method);
    entry["metric"] = to_string(cell.key.metric);
    entry["repetitions"] = cell.repetitions();
    entry["succeeded"] = cell.succeeded();
    const auto mu = cell.mean();
    const auto sd = cell.stddev();
    entry["mean"] = mu ? nlohmann::ordered_json(*mu) : nlohmann::ordered_json(nullptr);
    entry["std"] = sd ? nlohmann::ordered_json(*sd) : nlohmann::ordered_json(nullptr);
    nlohmann::ordered_json failures = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < cell.failures.size(); ++r) {
      if (!cell.values[r]) failures.push_back({{"repetition", r}, {"error", cell.failures[r]}});
    }
    entry["failures"] = std::move(failures);
    list.push_back(std::move(entry));
  }
  nlohmann::ordered_json root;
  root["cells"] = std::move(list);
  return root.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Cohorts

Cohort load_cohort(const std::filesystem::path& manifest) {
  const std::string text = read_file(manifest);
  const std::filesystem::path base = manifest.parent_path();
  Cohort cohort;
  std::map<std::string, std::size_t, std::less<>> slots;
  for (const auto& line : text::content_lines(text)) {
    const std::size_t gap = line.content.find_first_of(" \t");
    if (gap == std::string_view::npos) {
      fail(ErrorCode::kParseError, "manifest line " + std::to_string(line.number) +
                                       " needs a subject id and a path");
    }
    const std::string id(line.content.substr(0, gap));
    const std::filesystem::path relative(std::string(text::trim(line.content.substr(gap))));
    const std::filesystem::path path = relative.is_absolute() ? relative : base / relative;
    auto [it, inserted] = slots.try_emplace(id, cohort.size());
    if (inserted) cohort.push_back(CohortSubject{id, {}});
    cohort[it->second].repetitions.push_back(load_matrix(path));
  }
  require(!cohort.empty(), ErrorCode::kInvalidInput, "cohort manifest lists no subjects");
  return cohort;
}

DataMatrix pool_subjects(const Cohort& cohort, std::span<const Index> subjects) {
  require(!subjects.empty(), ErrorCode::kInvalidInput, "cannot pool an empty group");
  Index n = -1;
  Index total = 0;
  for (Index s : subjects) {
    require(s >= 0 && s < static_cast<Index>(cohort.size()), ErrorCode::kInvalidInput,
            "subject index out of range");
    for (const auto& x : cohort[static_cast<std::size_t>(s)].repetitions) {
      if (n < 0) n = x.signals();
      require(x.signals() == n, ErrorCode::kInvalidInput, "pooled subjects differ in size");
      total += x.samples();
    }
  }
  require(n > 0, ErrorCode::kInvalidInput, "pooled subjects have no data");
  DenseMatrix joined(n, total);
  Index offset = 0;
  for (Index s : subjects) {
    for (const auto& x : cohort[static_cast<std::size_t>(s)].repetitions) {
      joined.middleCols(offset, x.samples()) = x.values();
      offset += x.samples();
    }
  }
  return normalize(DataMatrix(std::move(joined)));
}

std::vector<Index> split_order(Index subjects, const SplitPlan& plan, Index r) {
  std::vector<Index> order(static_cast<std::size_t>(subjects));
  for (Index i = 0; i < subjects; ++i) order[static_cast<std::size_t>(i)] = i;
  CounterRng rng(plan.seed, static_cast<std::uint64_t>(r));
  for (Index i = subjects - 1; i > 0; --i) {
    const auto j = static_cast<Index>(rng.next_uniform() * static_cast<double>(i + 1));
    std::swap(order[static_cast<std::size_t>(i)],
              order[static_cast<std::size_t>(std::min(j, i))]);
  }
  return order;
}

FactoredPrecision cell_precision(const DataMatrix& x, const CellKey& key, const GridAxes& grid,
                                 std::uint64_t seed) {
  const DataMatrix reduced =
      reduce(normalized(x), key.dimension, key.method, grid.power_iterations, seed);
  return estimate(reduced, penalty_for(x.signals(), key.rho, key.alpha, grid));
}

// ---------------------------------------------------------------------------
// Sweeps

ValidationReport split_sample_sweep(const Cohort& cohort, const SplitPlan& plan,
                                    const GridAxes& grid) {
  check_grid(grid);
  require(plan.group_size >= 2, ErrorCode::kInvalidInput, "group size must be at least 2");
  require(plan.repetitions >= 1, ErrorCode::kInvalidInput, "need at least one split");
  require(static_cast<Index>(cohort.size()) >= 2 * plan.group_size, ErrorCode::kInvalidInput,
          "cohort has fewer than two groups' worth of subjects");
  for (Method m : grid.methods) {
    require(m != Method::kJsvd, ErrorCode::kInvalidInput,
            "split-sample sweeps support rp and tsvd only");
  }
  const Index n = common_dimension(cohort);
  if (grid.network) {
    require(grid.network->nodes().back() < n, ErrorCode::kInvalidInput,
            "network references a node outside the data");
  }

  const std::vector<Metric> metrics{Metric::kNll};
  ValidationReport report = empty_report(grid, metrics, plan.repetitions);
  const Layout layout{grid.dimensions.size(), grid.rhos.size(), grid.alphas.size(),
                      grid.methods.size(), 1};

  parallel_for(plan.repetitions, grid.jobs, [&](Index rep) {
    const auto slot = static_cast<std::size_t>(rep);
    const std::vector<Index> order = split_order(static_cast<Index>(cohort.size()), plan, rep);
    const std::span<const Index> all(order);
    const DataMatrix train = pool_subjects(cohort, all.subspan(0, plan.group_size));
    const DataMatrix test =
        pool_subjects(cohort, all.subspan(static_cast<std::size_t>(plan.group_size),
                                          static_cast<std::size_t>(plan.group_size)));

    for (std::size_t d = 0; d < layout.dims; ++d) {
      for (std::size_t m = 0; m < layout.methods; ++m) {
        std::optional<DataMatrix> reduced;
        std::string reduce_error;
        try {
          reduced = reduce(train, grid.dimensions[d], grid.methods[m], grid.power_iterations,
                           projection_seed(plan.seed, rep, d));
        } catch (const Error& e) {
          reduce_error = describe(e);
        }
        for (std::size_t r = 0; r < layout.rhos; ++r) {
          for (std::size_t a = 0; a < layout.alphas; ++a) {
            ReportCell& cell = report.cells[layout.at(d, r, a, m, 0)];
            if (!reduced) {
              cell.failures[slot] = reduce_error;
              continue;
            }
            try {
              const FactoredPrecision q =
                  estimate(*reduced, penalty_for(n, grid.rhos[r], grid.alphas[a], grid));
              cell.values[slot] = nll(q, test);
            } catch (const Error& e) {
              cell.failures[slot] = describe(e);
            }
          }
        }
      }
    }
  });
  return report;
}

ValidationReport test_retest_sweep(const Cohort& cohort, const GridAxes& grid, std::uint64_t seed) {
  check_grid(grid);
  const Index n = common_dimension(cohort);
  require(cohort.size() >= 2, ErrorCode::kInvalidInput, "test-retest needs at least two subjects");
  const std::size_t reps = cohort[0].repetitions.size();
  require(reps >= 2, ErrorCode::kInvalidInput, "test-retest needs at least two repetitions");
  for (const auto& subject : cohort) {
    require(subject.repetitions.size() == reps, ErrorCode::kInvalidInput,
            "every subject needs the same number of repetitions");
  }
  if (grid.network) {
    require(grid.network->nodes().back() < n, ErrorCode::kInvalidInput,
            "network references a node outside the data");
  }

  std::vector<Metric> metrics{Metric::kEdgeIcc};
  if (grid.network) metrics.push_back(Metric::kTseeIcc);
  ValidationReport report = empty_report(grid, metrics, 1);
  const Layout layout{grid.dimensions.size(), grid.rhos.size(), grid.alphas.size(),
                      grid.methods.size(), metrics.size()};

  const Index subjects = static_cast<Index>(cohort.size());
  const Index scans = subjects * static_cast<Index>(reps);
  std::vector<DataMatrix> data;
  data.reserve(static_cast<std::size_t>(scans));
  for (const auto& subject : cohort) {
    for (const auto& x : subject.repetitions) data.push_back(normalized(x));
  }
  const NetworkSelection net = grid.network ? *grid.network : NetworkSelection::all(n);

  // Scores one cell from a precision per scan.
  const auto score = [&](std::size_t d, std::size_t r, std::size_t a, std::size_t m,
                         const std::function<FactoredPrecision(Index)>& precision_of) {
    std::vector<std::vector<DenseMatrix>> partials(static_cast<std::size_t>(subjects),
                                                   std::vector<DenseMatrix>(reps));
    DenseMatrix entropy(subjects, static_cast<Index>(reps));
    try {
      parallel_for(scans, grid.jobs, [&](Index i) {
        const FactoredPrecision q = precision_of(i);
        const auto s = static_cast<std::size_t>(i) / reps;
        const auto k = static_cast<std::size_t>(i) % reps;
        partials[s][k] = partial_correlations(restrict(q, net.nodes()));
        if (grid.network) {
          entropy(static_cast<Index>(s), static_cast<Index>(k)) = tsee_fast(q, net);
        }
      });
    } catch (const Error& e) {
      for (std::size_t t = 0; t < metrics.size(); ++t) {
        report.cells[layout.at(d, r, a, m, t)].failures[0] = describe(e);
      }
      return;
    }
    for (std::size_t t = 0; t < metrics.size(); ++t) {
      ReportCell& cell = report.cells[layout.at(d, r, a, m, t)];
      try {
        cell.values[0] = metrics[t] == Metric::kEdgeIcc ? edge_icc(partials).mean
                                                        : icc_c1(entropy);
      } catch (const Error& e) {
        cell.failures[0] = describe(e);
      }
    }
  };

  const auto fail_block = [&](std::size_t d, std::size_t m, const std::string& why) {
    for (std::size_t r = 0; r < layout.rhos; ++r) {
      for (std::size_t a = 0; a < layout.alphas; ++a) {
        for (std::size_t t = 0; t < metrics.size(); ++t) {
          report.cells[layout.at(d, r, a, m, t)].failures[0] = why;
        }
      }
    }
  };

  for (std::size_t d = 0; d < layout.dims; ++d) {
    const Index dimension = grid.dimensions[d];
    for (std::size_t m = 0; m < layout.methods; ++m) {
      const Method method = grid.methods[m];
      if (method == Method::kJsvd) {
        Index rank = dimension;
        if (rank == 0) {
          rank = n;
          for (const auto& x : data) rank = std::min(rank, x.samples());
        }
        for (std::size_t a = 0; a < layout.alphas; ++a) {
          std::optional<SharedBasisModel> model;
          try {
            SharedOptions options;
            options.weighting = grid.jsvd_weighting;
            options.jobs = grid.jobs;
            for (Index s = 0; s < subjects; ++s) {
              options.groups.insert(options.groups.end(), reps, static_cast<int>(s));
            }
            model = fit_shared(data, rank, penalty_for(n, grid.rhos[0], grid.alphas[a], grid),
                               options);
          } catch (const Error& e) {
            for (std::size_t r = 0; r < layout.rhos; ++r) {
              for (std::size_t t = 0; t < metrics.size(); ++t) {
                report.cells[layout.at(d, r, a, m, t)].failures[0] = describe(e);
              }
            }
            continue;
          }
          for (std::size_t r = 0; r < layout.rhos; ++r) {
            const SharedBasisModel at_rho(model->basis(), model->spectra(),
                                          penalty_for(n, grid.rhos[r], grid.alphas[a], grid),
                                          model->sample_counts());
            score(d, r, a, m, [&](Index i) { return subject_precision(at_rho, i); });
          }
        }
        continue;
      }

      std::vector<std::optional<DataMatrix>> reduced(static_cast<std::size_t>(scans));
      try {
        parallel_for(scans, grid.jobs, [&](Index i) {
          reduced[static_cast<std::size_t>(i)] =
              reduce(data[static_cast<std::size_t>(i)], dimension, method, grid.power_iterations,
                     projection_seed(seed, i, d));
        });
      } catch (const Error& e) {
        fail_block(d, m, describe(e));
        continue;
      }
      for (std::size_t r = 0; r < layout.rhos; ++r) {
        for (std::size_t a = 0; a < layout.alphas; ++a) {
          const PenaltyShape penalty = penalty_for(n, grid.rhos[r], grid.alphas[a], grid);
          score(d, r, a, m, [&](Index i) {
            return estimate(*reduced[static_cast<std::size_t>(i)], penalty);
          });
        }
      }
    }
  }
  return report;
}

}  // namespace rprec
