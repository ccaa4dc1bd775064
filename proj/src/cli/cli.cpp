#include "rprec/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "rprec/analysis.hpp"
#include "rprec/error.hpp"
#include "rprec/ingest.hpp"
#include "rprec/io_util.hpp"
#include "rprec/randproj.hpp"
#include "rprec/riccati.hpp"
#include "rprec/serialize.hpp"
#include "rprec/shared.hpp"
#include "rprec/validation.hpp"

namespace rprec::cli {
namespace {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Option sets

struct InputOptions {
  Index trim = 0;
  std::string parcellation;
};

struct PenaltyOptions {
  std::string kind = "identity";
  double alpha = 1.0;
  std::string weights;
  std::string network;
};

struct ProjectOptions {
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  Index t = 0;
  int q = 0;
  std::uint64_t seed = 0;
  std::string method = "rp";
  bool shared_basis = false;
  InputOptions input;
};

struct EstimateOptions {
  std::string input;
  std::string output;
  double rho = 0.0;
  PenaltyOptions penalty;
  Index t = 0;
  int q = 0;
  std::uint64_t seed = 0;
  std::string method = "rp";
  Index source_samples = 0;
  InputOptions prep;
};

struct TseeOptions {
  std::string precision;
  std::string network;
  bool direct = false;
  std::optional<double> alpha;
  std::string output;
};

struct PartialsOptions {
  std::string precision;
  std::string network;
  std::string output;
  Index cap = kDefaultDensifyCap;
};

struct JsvdOptions {
  std::vector<std::string> inputs;
  std::string manifest;
  std::string output_dir;
  Index m = 0;
  double rho = 0.0;
  PenaltyOptions penalty;
  std::string weighting = "per-matrix";
  std::vector<int> groups;
  Index projection_dim = 0;
  int q = 0;
  std::uint64_t seed = 0;
  InputOptions prep;
};

struct ValidateOptions {
  std::string manifest;
  std::string mode = "split";
  std::string output;
  Index repetitions = 100;
  Index group_size = 50;
  std::uint64_t seed = 0;
  std::vector<std::string> dims{"full"};
  std::vector<double> rhos{1.0};
  std::vector<double> alphas{1.0};
  std::vector<std::string> methods{"rp"};
  int q = 3;
  std::string network;
  std::string weighting = "per-matrix";
};

struct IccOptions {
  std::string input;
  std::string output;
};

struct DistanceOptions {
  std::string precision;
  std::string a;
  std::string b;
  std::string output;
};

struct DensifyOptions {
  std::string precision;
  std::string output;
  Index cap = kDefaultDensifyCap;
};

// ---------------------------------------------------------------------------
// Helpers

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIoError:
      return kExitIo;
    case ErrorCode::kNumericalError:
    case ErrorCode::kRankDeficient:
      return kExitNumerical;
    default:
      return kExitValidation;
  }
}

std::string value_line(double value) { return format_real(value) + "\n"; }

DataMatrix load_prepared(const std::string& path, const InputOptions& prep) {
  DataMatrix x = load_matrix(path);
  if (prep.trim > 0) x = trim_samples(x, prep.trim);
  if (!prep.parcellation.empty()) return parcel_average(x, load_parcellation(prep.parcellation));
  return normalize(x);
}

Vector flatten(const DenseMatrix& m) {
  return Eigen::Map<const Vector>(m.data(), m.size());
}

void check_penalty_options(const PenaltyOptions& p) {
  if (p.kind == "diagonal" || p.kind == "general") {
    require(!p.weights.empty(), ErrorCode::kInvalidInput,
            "--weights is required for a " + p.kind + " penalty");
  }
  if (p.kind == "roi") {
    require(!p.network.empty(), ErrorCode::kInvalidInput, "--network is required for roi");
  }
}

PenaltyShape build_penalty(const PenaltyOptions& p, Index n, double rho) {
  if (p.kind == "identity" || p.kind == "tikhonov") return PenaltyShape::scaled_identity(p.alpha, rho);
  if (p.kind == "diagonal") {
    const Vector v = flatten(load_matrix(p.weights).values());
    require(v.size() == n, ErrorCode::kInvalidInput,
            "diagonal weights file must hold one value per signal");
    return PenaltyShape::diagonal(v, rho);
  }
  if (p.kind == "general") return PenaltyShape::general(load_matrix(p.weights).values(), rho);
  const NetworkSelection net = load_network(p.network, n);
  return PenaltyShape::roi(n, net.nodes(), p.alpha, rho);
}

void add_penalty_options(CLI::App* cmd, PenaltyOptions& p, bool allow_tikhonov) {
  std::vector<std::string> kinds{"identity", "diagonal", "roi", "general"};
  if (allow_tikhonov) kinds.emplace_back("tikhonov");
  cmd->add_option("--penalty", p.kind, "Penalty shape")
      ->check(CLI::IsMember(kinds))
      ->capture_default_str();
  cmd->add_option("--alpha", p.alpha, "Scale of V: alpha*I for identity, off-network weight for roi")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--weights", p.weights, "Matrix file: v for diagonal, V for general");
  cmd->add_option("--network", p.network, "Network file (one-based node indices) for roi");
}

void add_input_prep(CLI::App* cmd, InputOptions& prep) {
  cmd->add_option("--trim", prep.trim, "Discard this many leading samples")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--parcellation", prep.parcellation,
                  "Average signals per parcel (label file) before normalizing");
}

SharedWeighting parse_weighting(const std::string& text) {
  if (text == "per-group") return SharedWeighting::kPerGroup;
  if (text == "pooled") return SharedWeighting::kPooled;
  return SharedWeighting::kPerMatrix;
}

const std::vector<std::string> kWeightings{"per-matrix", "per-group", "pooled"};

// ---------------------------------------------------------------------------
// Commands

int cmd_project(const ProjectOptions& o, std::ostream& out) {
  const std::size_t expected = o.shared_basis ? 1 : o.inputs.size();
  require(o.outputs.size() == expected, ErrorCode::kInvalidInput,
          o.shared_basis ? "--shared-basis writes exactly one --output"
                         : "give one --output per --input");

  std::vector<DataMatrix> sources;
  for (const auto& path : o.inputs) sources.push_back(load_prepared(path, o.input));
  if (o.shared_basis) {
    const Index n = sources[0].signals();
    Index total = 0;
    for (const auto& x : sources) {
      require(x.signals() == n, ErrorCode::kInvalidInput, "inputs differ in signal count");
      total += x.samples();
    }
    DenseMatrix joined(n, total);
    Index offset = 0;
    for (const auto& x : sources) {
      joined.middleCols(offset, x.samples()) = x.values();
      offset += x.samples();
    }
    sources.assign(1, DataMatrix(std::move(joined), SignalState::kNormalized));
  }

  for (std::size_t i = 0; i < sources.size(); ++i) {
    const DataMatrix& x = sources[i];
    const Projection p = o.method == "tsvd"
                             ? truncate_svd(x, o.t)
                             : random_project(x, ProjectionConfig{o.t, o.q, o.seed + i});
    const double energy = retained_energy(x, p.projected);
    const fs::path target(o.outputs[i]);
    save_matrix(p.projected.values(), target, format_from_path(target));
    std::string stats = "retained_energy " + format_real(energy) + "\n";
    stats += fmt::format("signals {}\nsample_count {}\ndimension {}\n", x.signals(),
                         x.sample_count(), o.t);
    stats += fmt::format("method {}\npower_iterations {}\nseed {}\n", o.method, o.q, o.seed + i);
    write_file_atomic(target.string() + ".stats", stats);
    out << target.string() << " retained_energy " << format_real(energy) << "\n";
  }
  return kExitOk;
}

int cmd_estimate(const EstimateOptions& o, std::ostream& out) {
  check_penalty_options(o.penalty);
  require(o.penalty.kind != "tikhonov" || o.penalty.alpha == 1.0, ErrorCode::kInvalidInput,
          "tikhonov does not take --alpha");
  const auto start = std::chrono::steady_clock::now();

  DataMatrix x = [&] {
    if (o.source_samples > 0) {
      require(o.prep.trim == 0 && o.prep.parcellation.empty(), ErrorCode::kInvalidInput,
              "--source-samples input is already reduced; --trim/--parcellation do not apply");
      return DataMatrix(load_matrix(o.input).values(), SignalState::kProjected, o.source_samples);
    }
    return load_prepared(o.input, o.prep);
  }();
  if (o.t > 0) {
    x = o.method == "tsvd" ? truncate_svd(x, o.t).projected
                           : random_project(x, ProjectionConfig{o.t, o.q, o.seed}).projected;
  }
  const FactoredPrecision q =
      o.penalty.kind == "tikhonov"
          ? estimate_tikhonov(x, o.rho)
          : estimate(x, build_penalty(o.penalty, x.signals(), o.rho));
  save_precision(q, o.output);

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out << fmt::format("signals {}\nrank {}\nrho {}\nseconds {:.3f}\n", q.dimension(), q.rank(),
                     format_real(o.rho), seconds);
  return kExitOk;
}

void check_roi_alpha(const FactoredPrecision& q, const NetworkSelection& net, double alpha) {
  const auto v = q.penalty().diagonal_values(q.dimension());
  require(v.has_value(), ErrorCode::kInvalidInput,
          "precision was estimated with a general penalty, not an roi penalty");
  Vector expected = Vector::Constant(q.dimension(), alpha);
  for (Index node : net.nodes()) expected(node) = 1.0;
  const double scale = v->cwiseAbs().maxCoeff();
  require((*v - expected).cwiseAbs().maxCoeff() <= 1e-12 * scale, ErrorCode::kInvalidInput,
          "precision penalty does not match the roi penalty for --alpha " + format_real(alpha));
}

int cmd_tsee(const TseeOptions& o, std::ostream& out) {
  const FactoredPrecision q = load_precision(o.precision);
  const NetworkSelection net = load_network(o.network, q.dimension());
  if (o.alpha) check_roi_alpha(q, net, *o.alpha);
  const double value = o.direct ? tsee_direct(restrict(q, net.nodes())) : tsee_fast(q, net);
  if (!o.output.empty()) write_file_atomic(o.output, value_line(value));
  out << value_line(value);
  return kExitOk;
}

int cmd_partials(const PartialsOptions& o, std::ostream& out) {
  const FactoredPrecision q = load_precision(o.precision);
  const NetworkSelection net =
      o.network.empty() ? NetworkSelection::all(q.dimension()) : load_network(o.network, q.dimension());
  if (net.size() > o.cap) {
    fail(ErrorCode::kTooLarge, fmt::format("refusing a {0} x {0} partial correlation matrix (cap {1})",
                                           net.size(), o.cap));
  }
  const DenseMatrix p = partial_correlations(restrict(q, net.nodes()));
  save_matrix(p, o.output, format_from_path(o.output));
  out << fmt::format("nodes {}\n", net.size());
  return kExitOk;
}

int cmd_jsvd(const JsvdOptions& o, int jobs, std::ostream& out) {
  check_penalty_options(o.penalty);
  require(o.inputs.empty() != o.manifest.empty(), ErrorCode::kInvalidInput,
          "give either input files or --manifest");

  std::vector<DataMatrix> xs;
  std::vector<int> groups = o.groups;
  if (!o.manifest.empty()) {
    require(groups.empty(), ErrorCode::kInvalidInput, "--groups comes from the manifest");
    const Cohort cohort = load_cohort(o.manifest);
    for (std::size_t s = 0; s < cohort.size(); ++s) {
      for (const auto& x : cohort[s].repetitions) {
        DataMatrix y = o.prep.trim > 0 ? trim_samples(x, o.prep.trim) : x;
        xs.push_back(o.prep.parcellation.empty()
                         ? normalize(y)
                         : parcel_average(y, load_parcellation(o.prep.parcellation)));
        groups.push_back(static_cast<int>(s));
      }
    }
  } else {
    for (const auto& path : o.inputs) xs.push_back(load_prepared(path, o.prep));
    if (groups.empty()) {
      for (std::size_t i = 0; i < xs.size(); ++i) groups.push_back(static_cast<int>(i));
    }
    require(groups.size() == xs.size(), ErrorCode::kInvalidInput,
            "--groups needs one id per input");
  }

  SharedOptions options;
  options.weighting = parse_weighting(o.weighting);
  options.groups = groups;
  options.projection_dim = o.projection_dim;
  options.power_iterations = o.q;
  options.seed = o.seed;
  options.jobs = jobs;
  const PenaltyShape penalty = build_penalty(o.penalty, xs[0].signals(), o.rho);
  const SharedBasisModel model = fit_shared(xs, o.m, penalty, options);

  std::vector<std::string> blobs;
  for (Index k = 0; k < model.subjects(); ++k) {
    blobs.push_back(precision_to_bytes(subject_precision(model, k)));
  }
  const fs::path dir(o.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIoError, "cannot create " + dir.string() + ": " + ec.message());
  save_model(model, dir / "model.jsvd");
  const int width = static_cast<int>(std::to_string(blobs.size() - 1).size());
  for (std::size_t k = 0; k < blobs.size(); ++k) {
    write_file_atomic(dir / fmt::format("subject_{:0{}}.prec", k, width), blobs[k]);
  }
  out << fmt::format("signals {}\nrank {}\ninputs {}\n", model.dimension(), model.rank(),
                     model.subjects());
  return kExitOk;
}

Index parse_dimension(const std::string& text) {
  if (text == "full") return 0;
  const auto value = [&]() -> std::optional<long long> {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(text, &used);
      if (used == text.size()) return v;
    } catch (const std::exception&) {
    }
    return std::nullopt;
  }();
  if (!value || *value < 1) {
    fail(ErrorCode::kInvalidInput, "dimension '" + text + "' is neither 'full' nor positive");
  }
  return static_cast<Index>(*value);
}

int cmd_validate(const ValidateOptions& o, int jobs, std::ostream& out) {
  GridAxes grid;
  grid.dimensions.clear();
  for (const auto& d : o.dims) grid.dimensions.push_back(parse_dimension(d));
  grid.rhos = o.rhos;
  grid.alphas = o.alphas;
  grid.methods.clear();
  for (const auto& m : o.methods) grid.methods.push_back(parse_method(m));
  grid.power_iterations = o.q;
  grid.jsvd_weighting = parse_weighting(o.weighting);
  grid.jobs = jobs;
  if (o.mode == "split") {
    for (Method m : grid.methods) {
      require(m != Method::kJsvd, ErrorCode::kInvalidInput,
              "split mode supports methods rp and tsvd");
    }
  }

  const Cohort cohort = load_cohort(o.manifest);
  if (!o.network.empty()) {
    grid.network = load_network(o.network, cohort[0].repetitions[0].signals());
  }
  const ValidationReport report =
      o.mode == "split"
          ? split_sample_sweep(cohort, SplitPlan{o.repetitions, o.group_size, o.seed}, grid)
          : test_retest_sweep(cohort, grid, o.seed);
  const std::string csv = report.to_csv();
  const std::string json = report.to_json();
  write_file_atomic(o.output + ".csv", csv);
  write_file_atomic(o.output + ".json", json);

  Index failed = 0;
  for (const auto& cell : report.cells) failed += cell.repetitions() - cell.succeeded();
  out << fmt::format("cells {}\nfailed {}\n", report.cells.size(), failed);
  return kExitOk;
}

int cmd_icc(const IccOptions& o, std::ostream& out) {
  const double value = icc_c1(load_matrix(o.input).values());
  if (!o.output.empty()) write_file_atomic(o.output, value_line(value));
  out << value_line(value);
  return kExitOk;
}

int cmd_distance(const DistanceOptions& o, std::ostream& out) {
  const FactoredPrecision q = load_precision(o.precision);
  const DenseMatrix a = load_matrix(o.a).values();
  const DenseMatrix b = load_matrix(o.b).values();
  require(a.cols() == q.dimension() && b.cols() == q.dimension(), ErrorCode::kInvalidInput,
          "maps must have one column per signal");
  require(b.rows() == 1 || b.rows() == a.rows(), ErrorCode::kInvalidInput,
          "second map file needs one row or as many rows as the first");
  std::string text;
  for (Index i = 0; i < a.rows(); ++i) {
    const Vector u = a.row(i).transpose();
    const Vector v = b.row(b.rows() == 1 ? 0 : i).transpose();
    text += value_line(mahalanobis(u, v, q));
  }
  if (o.output.empty()) {
    out << text;
  } else {
    write_file_atomic(o.output, text);
    out << fmt::format("distances {}\n", a.rows());
  }
  return kExitOk;
}

int cmd_densify(const DensifyOptions& o, std::ostream& out) {
  const FactoredPrecision q = load_precision(o.precision);
  const DenseMatrix dense = densify(q, o.cap);
  save_matrix(dense, o.output, format_from_path(o.output));
  out << fmt::format("signals {}\n", q.dimension());
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Riccati-regularized precision matrices: projection, estimation, biomarkers, "
               "validation",
               "rprec"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI/TOML file; [subcommand] sections, flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);
  int jobs = 1;
  app.add_option("--jobs", jobs, "Worker threads for independent subjects or splits")
      ->check(CLI::Range(1, 1024))
      ->capture_default_str();

  ProjectOptions project;
  auto* c_project = app.add_subcommand("project", "Random projection (or truncated SVD) of samples");
  c_project->add_option("--input", project.inputs, "Input matrix (N x T)")->required();
  c_project->add_option("--output", project.outputs, "Projected matrix (N x t)")->required();
  c_project->add_option("--t", project.t, "Target dimension")->required()->check(CLI::PositiveNumber);
  c_project->add_option("--q", project.q, "Power iterations")->check(CLI::NonNegativeNumber);
  c_project->add_option("--seed", project.seed, "Seed; input i uses seed + i");
  c_project->add_option("--method", project.method)->check(CLI::IsMember({"rp", "tsvd"}));
  c_project->add_flag("--shared-basis", project.shared_basis,
                      "Concatenate all inputs along samples and project them together");
  add_input_prep(c_project, project.input);

  EstimateOptions est;
  auto* c_est = app.add_subcommand("estimate", "Estimate a factored precision matrix");
  c_est->add_option("--input", est.input, "Input matrix (N x T)")->required();
  c_est->add_option("--output", est.output, "Precision file")->required();
  c_est->add_option("--rho", est.rho, "Penalty weight")->required()->check(CLI::PositiveNumber);
  add_penalty_options(c_est, est.penalty, true);
  c_est->add_option("--t", est.t, "Project samples to this dimension first (0: no projection)")
      ->check(CLI::NonNegativeNumber);
  c_est->add_option("--q", est.q, "Power iterations")->check(CLI::NonNegativeNumber);
  c_est->add_option("--seed", est.seed, "Projection seed");
  c_est->add_option("--method", est.method)->check(CLI::IsMember({"rp", "tsvd"}));
  c_est->add_option("--source-samples", est.source_samples,
                    "Input is already projected from this many normalized samples")
      ->check(CLI::NonNegativeNumber);
  add_input_prep(c_est, est.prep);

  TseeOptions tsee;
  auto* c_tsee = app.add_subcommand("tsee", "Network entropy (half log det of the restricted precision)");
  c_tsee->add_option("--precision", tsee.precision)->required();
  c_tsee->add_option("--network", tsee.network, "One-based node indices")->required();
  c_tsee->add_flag("--direct", tsee.direct, "Restrict and eigendecompose instead of the fast path");
  c_tsee->add_option("--alpha", tsee.alpha, "Require the precision's roi penalty to use this alpha")
      ->check(CLI::PositiveNumber);
  c_tsee->add_option("--output", tsee.output, "Also write the value to this file");

  PartialsOptions partials;
  auto* c_partials = app.add_subcommand("partials", "Partial correlations");
  c_partials->add_option("--precision", partials.precision)->required();
  c_partials->add_option("--network", partials.network, "Restrict to these nodes");
  c_partials->add_option("--output", partials.output)->required();
  c_partials->add_option("--cap", partials.cap, "Largest node count materialized")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  JsvdOptions jsvd;
  auto* c_jsvd = app.add_subcommand("jsvd", "Shared basis across inputs, one precision per input");
  c_jsvd->add_option("inputs", jsvd.inputs, "Input matrices");
  c_jsvd->add_option("--manifest", jsvd.manifest, "Cohort manifest instead of input files");
  c_jsvd->add_option("--output-dir", jsvd.output_dir,
                     "Directory for model.jsvd and subject_<k>.prec")->required();
  c_jsvd->add_option("--m", jsvd.m, "Shared rank")->required()->check(CLI::PositiveNumber);
  c_jsvd->add_option("--rho", jsvd.rho)->required()->check(CLI::PositiveNumber);
  add_penalty_options(c_jsvd, jsvd.penalty, false);
  c_jsvd->add_option("--weighting", jsvd.weighting)->check(CLI::IsMember(kWeightings));
  c_jsvd->add_option("--groups", jsvd.groups, "Group id per input (per-group weighting)")
      ->delimiter(',');
  c_jsvd->add_option("--project-dim", jsvd.projection_dim,
                     "Randomly project each input to this many samples first")
      ->check(CLI::NonNegativeNumber);
  c_jsvd->add_option("--q", jsvd.q)->check(CLI::NonNegativeNumber);
  c_jsvd->add_option("--seed", jsvd.seed);
  add_input_prep(c_jsvd, jsvd.prep);

  ValidateOptions val;
  auto* c_val = app.add_subcommand("validate", "Split-sample or test-retest sweep over a grid");
  c_val->add_option("--manifest", val.manifest, "Lines of 'subject_id path'")->required();
  c_val->add_option("--mode", val.mode)->check(CLI::IsMember({"split", "retest"}));
  c_val->add_option("--output", val.output, "Writes <output>.csv and <output>.json")->required();
  c_val->add_option("--repetitions", val.repetitions)->check(CLI::PositiveNumber);
  c_val->add_option("--group-size", val.group_size)->check(CLI::Range(2, 1 << 30));
  c_val->add_option("--seed", val.seed);
  c_val->add_option("--dims", val.dims, "Dimensions, 'full' for none")->delimiter(',');
  c_val->add_option("--rhos", val.rhos)->delimiter(',')->check(CLI::PositiveNumber);
  c_val->add_option("--alphas", val.alphas)->delimiter(',')->check(CLI::PositiveNumber);
  c_val->add_option("--methods", val.methods)
      ->delimiter(',')
      ->check(CLI::IsMember({"rp", "tsvd", "jsvd"}));
  c_val->add_option("--q", val.q)->check(CLI::NonNegativeNumber);
  c_val->add_option("--network", val.network);
  c_val->add_option("--weighting", val.weighting)->check(CLI::IsMember(kWeightings));

  IccOptions icc;
  auto* c_icc = app.add_subcommand("icc", "ICC(C,1) of a subjects x repetitions table");
  c_icc->add_option("--input", icc.input)->required();
  c_icc->add_option("--output", icc.output);

  DistanceOptions dist;
  auto* c_dist = app.add_subcommand("distance", "Mahalanobis distances between maps");
  c_dist->add_option("--precision", dist.precision)->required();
  c_dist->add_option("--a", dist.a, "Maps, one per row")->required();
  c_dist->add_option("--b", dist.b, "One map, or one per row of --a")->required();
  c_dist->add_option("--output", dist.output, "One distance per line");

  DensifyOptions dens;
  auto* c_dens = app.add_subcommand("densify", "Write the dense precision (small N only)");
  c_dens->add_option("--precision", dens.precision)->required();
  c_dens->add_option("--output", dens.output)->required();
  c_dens->add_option("--cap", dens.cap)->check(CLI::PositiveNumber)->capture_default_str();

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (c_project->parsed()) return cmd_project(project, out);
    if (c_est->parsed()) return cmd_estimate(est, out);
    if (c_tsee->parsed()) return cmd_tsee(tsee, out);
    if (c_partials->parsed()) return cmd_partials(partials, out);
    if (c_jsvd->parsed()) return cmd_jsvd(jsvd, jobs, out);
    if (c_val->parsed()) return cmd_validate(val, jobs, out);
    if (c_icc->parsed()) return cmd_icc(icc, out);
    if (c_dist->parsed()) return cmd_distance(dist, out);
    if (c_dens->parsed()) return cmd_densify(dens, out);
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::bad_alloc&) {
    err << "error: out of memory\n";
    return kExitNumerical;
  }
  return kExitUsage;
}

}  // namespace rprec::cli
