// Command-line harness for the Givens coordinate solvers: sparse PCA (batch
// and streaming), orthogonal tensor decomposition, and the spherical-GMM
// moment pipeline. Every run is a pure function of (inputs, flags, seed);
// there are no wall-clock defaults.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "givens/givens.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kU0SeedSalt = 0x9e3779b97f4a7c15ull;
constexpr std::uint64_t kSynthSeedSalt = 0xc2b2ae3d27d4eb4full;

struct StopArgs {
  std::optional<std::uint64_t> max_iters;
  std::optional<std::uint64_t> max_flops;
  std::optional<double> tol;

  givens::StoppingRule rule(std::uint64_t default_iters) const {
    givens::StoppingRule stop;
    stop.max_iterations = max_iters;
    stop.max_flops = max_flops;
    stop.objective_tol = tol;
    if (!stop.max_iterations && !stop.max_flops && !stop.objective_tol) {
      stop.max_iterations = default_iters;
    }
    return stop;
  }
};

void add_stop_flags(CLI::App* cmd, StopArgs& args) {
  cmd->add_option("--max-iters", args.max_iters, "Iteration cap");
  cmd->add_option("--max-flops", args.max_flops, "Flop budget");
  cmd->add_option("--tol", args.tol, "Relative objective change tolerance over a sliding window");
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw givens::data_error("cannot open output file: " + path.string());
  out << j.dump(2) << '\n';
}

json matrix_to_json(const givens::Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<int> read_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw givens::data_error("cannot open input file: " + path);
  std::vector<int> labels;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      labels.push_back(std::stoi(line));
    } catch (const std::exception&) {
      throw givens::data_error("bad label: '" + line + "'", line_no);
    }
  }
  if (labels.empty()) throw givens::data_error("no labels in " + path);
  return labels;
}

struct SpcaArgs {
  std::string input;
  bool transpose = false;
  double gamma = 0.0;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  StopArgs stop;
};

int run_spca(const SpcaArgs& args) {
  givens::Matrix raw = givens::read_csv_matrix(args.input);
  if (args.transpose) raw = raw.transpose().eval();
  givens::DataMatrix data{std::move(raw)};
  const int n = data.samples();

  givens::SpcaOptions opts;
  opts.seed = args.seed;
  opts.stop = args.stop.rule(1000);
  givens::FlopCounter fc;
  auto u0 = givens::random_orthogonal(n, args.seed ^ kU0SeedSalt);
  auto res = spca_full(data, args.gamma, u0, opts, fc);

  fs::create_directories(args.out_dir);
  givens::write_csv_matrix((fs::path(args.out_dir) / "loadings.csv").string(), res.loadings.z);
  givens::write_trace_tsv((fs::path(args.out_dir) / "trace.tsv").string(), res.trace);

  auto av = adjusted_explained_variance(data, res.loadings.z);
  int zero_columns = 0;
  for (bool z : res.loadings.zero_column) zero_columns += z ? 1 : 0;
  json metrics = {
      {"schema_version", 1},
      {"command", "spca"},
      {"seed", args.seed},
      {"gamma", args.gamma},
      {"features", data.features()},
      {"samples", n},
      {"components", n},
      {"iterations", res.iterations},
      {"stop_reason", to_string(res.reason)},
      {"objective", res.objective},
      {"objective_initial", res.trace.records.front().objective},
      {"adjusted_variance_raw", av.raw},
      {"adjusted_variance_normalized", av.normalized},
      {"adjusted_variance_rank", av.effective_rank},
      {"sparsity", givens::sparsity(res.loadings.z)},
      {"zero_columns", zero_columns},
      {"total_flops", fc.count()},
  };
  write_json(fs::path(args.out_dir) / "metrics.json", metrics);
  return 0;
}

struct SpcaStreamArgs {
  std::string input;
  bool transpose = false;
  double gamma = 0.0;
  int components = 0;
  int inner_iters = -1;
  double early_stop_frac = 0.0;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
};

int run_spca_stream(const SpcaStreamArgs& args) {
  std::unique_ptr<givens::SampleStream> stream;
  std::uint64_t total = 0;
  if (args.transpose) {
    // samples as rows: stream the file lazily
    total = givens::count_csv_rows(args.input);
    stream = std::make_unique<givens::CsvRowStream>(args.input);
  } else {
    givens::Matrix m = givens::read_csv_matrix(args.input);
    total = static_cast<std::uint64_t>(m.cols());
    stream = std::make_unique<givens::MatrixColumnStream>(std::move(m));
  }

  givens::StreamingOptions opts;
  opts.components = args.components;
  opts.gamma = args.gamma;
  opts.inner_iterations = args.inner_iters;
  opts.seed = args.seed;
  if (args.early_stop_frac > 0.0) {
    const auto budget = static_cast<std::uint64_t>(args.early_stop_frac * static_cast<double>(total));
    opts.max_samples = std::max<std::uint64_t>(budget, static_cast<std::uint64_t>(args.components));
  }

  givens::FlopCounter fc;
  auto u0 = givens::random_orthogonal(args.components, args.seed ^ kU0SeedSalt);
  auto res = spca_streaming(*stream, u0, opts, fc);

  fs::create_directories(args.out_dir);
  givens::write_csv_matrix((fs::path(args.out_dir) / "loadings.csv").string(), res.loadings.z);
  givens::write_trace_tsv((fs::path(args.out_dir) / "trace.tsv").string(), res.trace);

  int zero_columns = 0;
  for (bool z : res.loadings.zero_column) zero_columns += z ? 1 : 0;
  json metrics = {
      {"schema_version", 1},
      {"command", "spca-stream"},
      {"seed", args.seed},
      {"gamma", args.gamma},
      {"components", args.components},
      {"inner_iters", args.inner_iters < 0 ? args.components : args.inner_iters},
      {"samples_available", total},
      {"samples_consumed", res.samples_consumed},
      {"stream_exhausted", res.stream_exhausted},
      {"objective", res.objective},
      {"sparsity", givens::sparsity(res.loadings.z)},
      {"zero_columns", zero_columns},
      {"total_flops", fc.count()},
  };
  write_json(fs::path(args.out_dir) / "metrics.json", metrics);
  return 0;
}

struct TensorArgs {
  std::string input;
  int synth_dim = 0;
  std::string lambdas_csv;
  std::string mode = "accelerated";
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  StopArgs stop;
};

int run_tensor(const TensorArgs& args) {
  const givens::TensorMode mode =
      args.mode == "naive" ? givens::TensorMode::naive : givens::TensorMode::accelerated;

  std::optional<givens::SymmetricTensor3> tensor;
  bool symmetrized = false;
  fs::create_directories(args.out_dir);

  if (args.synth_dim > 0) {
    const int d = args.synth_dim;
    givens::Vector lambdas(d);
    if (!args.lambdas_csv.empty()) {
      auto fields = givens::detail::parse_numeric_fields(args.lambdas_csv, ',', 0);
      if (static_cast<int>(fields.size()) != d) {
        throw givens::config_error("--lambdas must list exactly d values");
      }
      for (int k = 0; k < d; ++k) lambdas(k) = fields[static_cast<std::size_t>(k)];
    } else {
      std::mt19937_64 rng(args.seed ^ kSynthSeedSalt);
      std::uniform_real_distribution<double> unif(1.0, 2.0);
      for (int k = 0; k < d; ++k) lambdas(k) = unif(rng);
    }
    auto v = givens::random_orthogonal(d, args.seed ^ kSynthSeedSalt ^ 1u);
    tensor = synth_orthogonal_tensor(lambdas, v);
    givens::write_tensor_file((fs::path(args.out_dir) / "tensor.txt").string(), *tensor);
  } else {
    if (args.input.empty()) throw givens::config_error("tensor: need --input or --synth");
    auto file = givens::read_tensor_file(args.input);
    const double violation =
        givens::SymmetricTensor3::raw_symmetry_violation(file.dim, file.values);
    if (violation <= 1e-12) {
      tensor = givens::SymmetricTensor3::from_values(file.dim, std::move(file.values));
    } else {
      // symmetrize small violations silently, flag anything beyond 1e-9
      tensor = givens::SymmetricTensor3::symmetrized(file.dim, file.values);
      symmetrized = violation > 1e-9;
    }
  }

  givens::TensorDecomposeOptions opts;
  opts.mode = mode;
  opts.seed = args.seed;
  if (args.stop.max_iters || args.stop.max_flops || args.stop.tol) {
    givens::StoppingRule stop = args.stop.rule(0);
    stop.gradient_norm_tol = 1e-9;
    opts.stop = stop;
  }
  givens::FlopCounter fc;
  auto u0 = givens::random_orthogonal(tensor->dim(), args.seed ^ kU0SeedSalt);
  auto res = tensor_decompose(*tensor, u0, opts, fc);
  const double residual = decomposition_residual(*tensor, res.decomposition);

  givens::Matrix lambdas_out(tensor->dim(), 1);
  for (int k = 0; k < tensor->dim(); ++k) lambdas_out(k, 0) = res.decomposition.lambdas(k);
  givens::write_csv_matrix((fs::path(args.out_dir) / "lambdas.csv").string(), lambdas_out);
  givens::write_csv_matrix((fs::path(args.out_dir) / "factors.csv").string(), res.decomposition.v);
  givens::write_trace_tsv((fs::path(args.out_dir) / "trace.tsv").string(), res.trace);

  json metrics = {
      {"schema_version", 1},
      {"command", "tensor"},
      {"seed", args.seed},
      {"dim", tensor->dim()},
      {"mode", args.mode},
      {"synth", args.synth_dim > 0},
      {"symmetrized_input", symmetrized},
      {"iterations", res.iterations},
      {"stop_reason", to_string(res.reason)},
      {"objective", res.objective},
      {"residual", residual},
      {"null_directions", res.decomposition.null_directions},
      {"orthogonality_defect", res.orthogonality_defect},
      {"total_flops", fc.count()},
  };
  write_json(fs::path(args.out_dir) / "metrics.json", metrics);
  std::cout << "residual " << givens::format_double(residual) << "\n";
  return 0;
}

struct GmmArgs {
  std::string samples;
  std::string labels;
  std::string preset = "separated";
  int dim = 0;
  int clusters = 0;
  std::uint64_t samples_count = 0;
  double sigma2 = 1.0;
  double spread = 5.0;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
};

int run_gmm(const GmmArgs& args) {
  givens::Matrix points;
  std::vector<int> true_labels;
  bool have_labels = false;
  int k = args.clusters;

  if (!args.samples.empty()) {
    points = givens::read_csv_matrix(args.samples);
    if (k < 1) throw givens::config_error("--clusters is required with --samples");
    if (!args.labels.empty()) {
      true_labels = read_labels(args.labels);
      if (true_labels.size() != static_cast<std::size_t>(points.cols())) {
        throw givens::data_error("label count does not match sample count");
      }
      have_labels = true;
    }
  } else {
    if (args.dim < 1 || args.clusters < 1 || args.samples_count < 1) {
      throw givens::config_error("synthetic mode needs --dim, --clusters and --samples-count");
    }
    givens::GmmModel model;
    if (args.preset == "separated") {
      model = givens::make_separated_model(args.dim, args.clusters, args.seed ^ kSynthSeedSalt,
                                           args.spread, args.sigma2);
    } else if (args.preset == "wishart") {
      model = givens::make_wishart_model(args.dim, args.clusters, args.seed ^ kSynthSeedSalt,
                                         args.sigma2);
    } else {
      throw givens::config_error("unknown preset: " + args.preset);
    }
    auto drawn = sample_gmm(model, static_cast<int>(args.samples_count), args.seed);
    points = std::move(drawn.points);
    true_labels = std::move(drawn.labels);
    have_labels = true;
  }

  givens::FlopCounter fc;
  auto pipe = run_gmm_pipeline(points, k, args.seed, fc);
  auto assigned = cluster_assign(points, pipe.recovered);

  fs::create_directories(args.out_dir);
  json weights = json::array();
  for (int c = 0; c < pipe.recovered.components(); ++c) weights.push_back(pipe.recovered.weights(c));
  json raw_lambdas = json::array();
  for (int c = 0; c < pipe.raw_lambdas.size(); ++c) raw_lambdas.push_back(pipe.raw_lambdas(c));
  json model_json = {
      {"schema_version", 1},
      {"weights", weights},
      {"means", matrix_to_json(pipe.recovered.means)},
      {"sigma2", pipe.recovered.sigma2},
      {"raw_lambdas", raw_lambdas},
  };
  write_json(fs::path(args.out_dir) / "recovered_model.json", model_json);

  {
    std::ofstream out(fs::path(args.out_dir) / "assignments.csv");
    for (int label : assigned) out << label << '\n';
  }

  json metrics = {
      {"schema_version", 1},
      {"command", "gmm"},
      {"seed", args.seed},
      {"dim", static_cast<int>(points.rows())},
      {"clusters", k},
      {"samples", static_cast<std::uint64_t>(points.cols())},
      {"sigma2_hat", pipe.sigma2_hat},
      {"whitened_residual", pipe.whitened_residual},
      {"conditioning_warning", pipe.conditioning_warning},
      {"total_flops", fc.count()},
  };
  if (have_labels) {
    const double score = givens::nmi(true_labels, assigned);
    metrics["nmi"] = score;
    std::cout << "nmi " << givens::format_double(score) << "\n";
  }
  write_json(fs::path(args.out_dir) / "metrics.json", metrics);
  return 0;
}

template <typename F>
int guarded(F&& f) {
  try {
    return f();
  } catch (const givens::numeric_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coordinate minimization on the orthogonal group: sparse PCA, "
               "tensor decomposition, GMM moment pipeline"};
  app.require_subcommand(1);
  int repeat = 1;
  app.add_option("--repeat", repeat, "Run N seeds sequentially (seed, seed+1, ...)")
      ->check(CLI::PositiveNumber);

  SpcaArgs spca;
  auto* spca_cmd = app.add_subcommand("spca", "Batch sparse PCA (components = samples)");
  spca_cmd->add_option("--input", spca.input, "Data CSV, rows = features")->required();
  spca_cmd->add_flag("--transpose", spca.transpose, "Input stores samples as rows");
  spca_cmd->add_option("--gamma", spca.gamma, "Sparsity penalty")->required();
  spca_cmd->add_option("--seed", spca.seed, "RNG seed")->required();
  spca_cmd->add_option("--out-dir", spca.out_dir, "Output directory");
  add_stop_flags(spca_cmd, spca.stop);

  SpcaStreamArgs stream_args;
  auto* stream_cmd = app.add_subcommand("spca-stream", "Streaming sparse PCA (components < samples)");
  stream_cmd->add_option("--input", stream_args.input, "Data CSV, rows = features")->required();
  stream_cmd->add_flag("--transpose", stream_args.transpose,
                       "Input stores samples as rows (streamed lazily)");
  stream_cmd->add_option("--gamma", stream_args.gamma, "Sparsity penalty")->required();
  stream_cmd->add_option("--components", stream_args.components, "Buffer size m")->required();
  stream_cmd->add_option("--inner-iters", stream_args.inner_iters,
                         "Rotations per admitted sample (default m)");
  stream_cmd->add_option("--early-stop-frac", stream_args.early_stop_frac,
                         "Stop after this fraction of the samples (0.14 mirrors the early-stop preset)")
      ->check(CLI::Range(0.0, 1.0));
  stream_cmd->add_option("--seed", stream_args.seed, "RNG seed")->required();
  stream_cmd->add_option("--out-dir", stream_args.out_dir, "Output directory");

  TensorArgs tensor;
  auto* tensor_cmd = app.add_subcommand("tensor", "Orthogonal tensor decomposition");
  auto* tensor_input = tensor_cmd->add_option("--input", tensor.input, "Tensor text file");
  tensor_cmd
      ->add_option("--synth", tensor.synth_dim,
                   "Generate a decomposable tensor of this dimension instead of reading one")
      ->excludes(tensor_input);
  tensor_cmd->add_option("--lambdas", tensor.lambdas_csv,
                         "Comma-separated scales for --synth (default: uniform in [1,2])");
  tensor_cmd->add_option("--mode", tensor.mode, "naive or accelerated")
      ->check(CLI::IsMember({"naive", "accelerated"}));
  tensor_cmd->add_option("--seed", tensor.seed, "RNG seed")->required();
  tensor_cmd->add_option("--out-dir", tensor.out_dir, "Output directory");
  add_stop_flags(tensor_cmd, tensor.stop);

  GmmArgs gmm;
  auto* gmm_cmd = app.add_subcommand("gmm", "Spherical GMM recovery from third moments");
  auto* gmm_samples = gmm_cmd->add_option("--samples", gmm.samples, "Sample CSV, rows = features");
  gmm_cmd->add_option("--labels", gmm.labels, "True labels, one per line (with --samples)")
      ->needs(gmm_samples);
  gmm_cmd->add_option("--preset", gmm.preset, "separated or wishart (synthetic mode)")
      ->check(CLI::IsMember({"separated", "wishart"}))
      ->excludes(gmm_samples);
  gmm_cmd->add_option("--dim", gmm.dim, "Ambient dimension (synthetic mode)");
  gmm_cmd->add_option("--clusters", gmm.clusters, "Component count")->required();
  gmm_cmd->add_option("--samples-count", gmm.samples_count, "Sample count (synthetic mode)");
  gmm_cmd->add_option("--sigma2", gmm.sigma2, "Spherical variance (synthetic mode)");
  gmm_cmd->add_option("--spread", gmm.spread, "Center scale for the separated preset");
  gmm_cmd->add_option("--seed", gmm.seed, "RNG seed")->required();
  gmm_cmd->add_option("--out-dir", gmm.out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  return guarded([&]() {
    int rc = 0;
    for (int r = 0; r < repeat && rc == 0; ++r) {
      const std::string suffix = repeat > 1 ? "/run" + std::to_string(r) : "";
      if (spca_cmd->parsed()) {
        SpcaArgs a = spca;
        a.seed += static_cast<std::uint64_t>(r);
        a.out_dir += suffix;
        rc = run_spca(a);
      } else if (stream_cmd->parsed()) {
        SpcaStreamArgs a = stream_args;
        a.seed += static_cast<std::uint64_t>(r);
        a.out_dir += suffix;
        rc = run_spca_stream(a);
      } else if (tensor_cmd->parsed()) {
        TensorArgs a = tensor;
        a.seed += static_cast<std::uint64_t>(r);
        a.out_dir += suffix;
        rc = run_tensor(a);
      } else if (gmm_cmd->parsed()) {
        GmmArgs a = gmm;
        a.seed += static_cast<std::uint64_t>(r);
        a.out_dir += suffix;
        rc = run_gmm(a);
      }
    }
    return rc;
  });
}
