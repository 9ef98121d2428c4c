// lsdc command-line tool: depth completion, upsampling, evaluation,
// perturbation experiments, and kernel visualization.

#include <CLI11.hpp>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lsdc/completion.hpp"
#include "lsdc/dataio.hpp"
#include "lsdc/metrics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRunFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitSolver = 4;

// Keeps the corruption stream distinct from the sampling stream that uses
// the same run seed.
constexpr std::uint64_t kNoiseSeedSalt = 0xa0761d6478bd642fULL;

int run_cli(const std::vector<std::string>& args, bool nested);

class Stopwatch {
 public:
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct PipelineOptions {
  long long basis_dim = 128;
  long long encode_levels = 5;
  std::vector<long long> scales = {2, 4, 8, 16};
  unsigned long long seed = 0;
  long long hidden_dim = 64;
  bool irls = false;
  double irls_clamp = 1e-4;
  long long irls_max_iter = 20;
  double irls_stop_tol = 1e-6;
  double rank_tol = lsdc::kDefaultRankTolerance;
  std::string features_path;
};

void add_pipeline_flags(CLI::App* cmd, PipelineOptions& opt) {
  cmd->add_option("--basis-dim", opt.basis_dim, "Basis dimension N")->capture_default_str();
  cmd->add_option("--encode-levels", opt.encode_levels, "Positional encoding levels E")
      ->capture_default_str();
  cmd->add_option("--scales", opt.scales, "Pyramid pooling windows")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--seed", opt.seed, "Basis generator seed")->capture_default_str();
  cmd->add_option("--hidden-dim", opt.hidden_dim, "Projection hidden width")
      ->capture_default_str();
  cmd->add_flag("--irls", opt.irls, "Fit with iteratively reweighted least squares");
  cmd->add_option("--irls-clamp", opt.irls_clamp, "Residual clamp for IRLS weights [m]")
      ->capture_default_str();
  cmd->add_option("--irls-max-iter", opt.irls_max_iter, "IRLS iteration cap")
      ->capture_default_str();
  cmd->add_option("--irls-stop-tol", opt.irls_stop_tol, "IRLS stop tolerance on max|dW|")
      ->capture_default_str();
  cmd->add_option("--rank-tol", opt.rank_tol, "Relative singular-value cutoff")
      ->capture_default_str();
  cmd->add_option("--features", opt.features_path,
                  "Feature-map file replacing the built-in extractor");
}

lsdc::CompletionConfig<double> to_config(const PipelineOptions& opt) {
  lsdc::CompletionConfig<double> cfg;
  cfg.generator.basis_dim = static_cast<lsdc::Index>(opt.basis_dim);
  cfg.generator.hidden_dim = static_cast<lsdc::Index>(opt.hidden_dim);
  cfg.generator.seed = opt.seed;
  cfg.generator.pyramid_scales.assign(opt.scales.begin(), opt.scales.end());
  cfg.encode_levels = static_cast<lsdc::Index>(opt.encode_levels);
  cfg.use_irls = opt.irls;
  cfg.irls.residual_clamp = opt.irls_clamp;
  cfg.irls.max_iterations = static_cast<int>(opt.irls_max_iter);
  cfg.irls.stop_tolerance = opt.irls_stop_tol;
  cfg.rank_tolerance = opt.rank_tol;
  return cfg;
}

json config_json(const PipelineOptions& opt) {
  return json{{"basis_dim", opt.basis_dim},
              {"encode_levels", opt.encode_levels},
              {"scales", opt.scales},
              {"seed", opt.seed},
              {"hidden_dim", opt.hidden_dim},
              {"use_irls", opt.irls},
              {"irls_clamp", opt.irls_clamp},
              {"irls_max_iter", opt.irls_max_iter},
              {"irls_stop_tol", opt.irls_stop_tol},
              {"rank_tol", opt.rank_tol},
              {"features", opt.features_path.empty() ? json(nullptr) : json(opt.features_path)}};
}

json report_json(const lsdc::SolveReport<double>& report) {
  return json{{"effective_rank", report.effective_rank},
              {"iterations", report.iterations},
              {"residual_norm", report.residual_norm},
              {"underdetermined", report.underdetermined}};
}

json metrics_json(const lsdc::MetricsReport<double>& m) {
  json j{{"rmse", m.rmse},         {"rel", m.rel},
         {"delta1", m.delta1},     {"delta2", m.delta2},
         {"delta3", m.delta3},     {"valid_pixels", m.valid_pixel_count}};
  if (m.see) j["see"] = *m.see;
  return j;
}

json base_manifest(const std::string& command, const std::vector<std::string>& argv) {
  return json{{"format", "lsdc-run-manifest v1"}, {"command", command}, {"argv", argv}};
}

void write_manifest(const fs::path& out_path, const json& manifest) {
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw lsdc::IoError("cannot write manifest " + out_path.string());
  out << manifest.dump(2) << "\n";
  if (!out) throw lsdc::IoError("failed writing manifest " + out_path.string());
}

fs::path manifest_path_for(const fs::path& out) { return fs::path(out.string() + ".manifest.json"); }

/// Loads the guide and, when requested, a feature-map file that must match
/// the guide's resolution.
std::optional<lsdc::FeatureMap<double>> load_external_features(const PipelineOptions& opt,
                                                               const lsdc::DenseGrid<double>& image) {
  if (opt.features_path.empty()) return std::nullopt;
  lsdc::FeatureMap<double> features = lsdc::load_features(opt.features_path);
  if (features.height() != image.height() || features.width() != image.width())
    throw lsdc::DimensionError("feature map is " + std::to_string(features.height()) + "x" +
                               std::to_string(features.width()) + " but the image is " +
                               std::to_string(image.height()) + "x" +
                               std::to_string(image.width()));
  return features;
}

void print_fit_summary(std::ostream& os, lsdc::Index n, const lsdc::SolveReport<double>& report,
                       lsdc::Index columns) {
  os << "fit: n=" << n << " rank=" << report.effective_rank << "/" << columns
     << " iterations=" << report.iterations << " residual=" << report.residual_norm
     << " underdetermined=" << (report.underdetermined ? "yes" : "no") << "\n";
}

// ---------------------------------------------------------------- complete

struct CompleteArgs {
  std::string image, sparse, out;
  PipelineOptions pipeline;
  long long target_h = 0, target_w = 0;  // upsample only
};

int run_complete(const CompleteArgs& a, const std::vector<std::string>& argv, bool upsample) {
  Stopwatch watch;
  const lsdc::DenseGrid<double> image = lsdc::load_image(a.image);
  const lsdc::SparseDepth<double> sparse = lsdc::load_sparse(a.sparse);
  const lsdc::CompletionConfig<double> cfg = to_config(a.pipeline);
  const auto features = load_external_features(a.pipeline, image);

  lsdc::CompletionResult<double> result;
  if (upsample) {
    const auto th = static_cast<lsdc::Index>(a.target_h);
    const auto tw = static_cast<lsdc::Index>(a.target_w);
    result = features ? lsdc::complete_superres_from_features(*features, sparse, cfg, th, tw)
                      : lsdc::complete_superres(image, sparse, cfg, th, tw);
  } else {
    result = features ? lsdc::complete_from_features(*features, sparse, cfg)
                      : lsdc::complete(image, sparse, cfg);
  }

  lsdc::save_depth(result.depth, a.out);

  json manifest = base_manifest(upsample ? "upsample" : "complete", argv);
  manifest["config"] = config_json(a.pipeline);
  manifest["inputs"] = {{"image", a.image}, {"sparse", a.sparse}};
  manifest["outputs"] = {{"depth", a.out}};
  manifest["seeds"] = {{"basis", a.pipeline.seed}};
  manifest["results"] = report_json(result.report);
  manifest["results"]["basis_hash"] = result.basis_hash;
  if (upsample)
    manifest["results"]["target"] = {{"height", a.target_h}, {"width", a.target_w}};
  manifest["timings"] = {{"total_ms", watch.ms()}};
  write_manifest(manifest_path_for(a.out), manifest);

  print_fit_summary(std::cout, sparse.size(), result.report, cfg.generator.basis_dim + 1);
  std::cout << "wrote " << a.out << " (" << result.depth.height() << "x" << result.depth.width()
            << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string pred, gt, out, format = "text";
  bool see = false;
  double edge_threshold = 0.5;
};

int run_evaluate(const EvaluateArgs& a, const std::vector<std::string>& argv) {
  Stopwatch watch;
  const lsdc::DepthMap<double> pred = lsdc::load_depth(a.pred);
  const lsdc::DepthMap<double> gt = lsdc::load_depth(a.gt);
  const lsdc::Mask mask = lsdc::valid_mask_of(gt);
  const auto report = lsdc::evaluate(pred, gt, mask, a.see, a.edge_threshold);

  std::ostringstream text;
  if (a.format == "json") {
    text << metrics_json(report).dump(2) << "\n";
  } else {
    char buf[64];
    auto line = [&](const char* key, double v) {
      std::snprintf(buf, sizeof(buf), "%s %.17g\n", key, v);
      text << buf;
    };
    line("rmse", report.rmse);
    line("rel", report.rel);
    line("delta1", report.delta1);
    line("delta2", report.delta2);
    line("delta3", report.delta3);
    if (report.see) line("see", *report.see);
    text << "valid_pixels " << report.valid_pixel_count << "\n";
  }
  std::cout << text.str();

  if (!a.out.empty()) {
    std::ofstream out(a.out, std::ios::trunc);
    if (!out) throw lsdc::IoError("cannot write " + a.out);
    out << text.str();
    json manifest = base_manifest("evaluate", argv);
    manifest["inputs"] = {{"pred", a.pred}, {"gt", a.gt}};
    manifest["outputs"] = {{"report", a.out}};
    manifest["results"] = metrics_json(report);
    manifest["timings"] = {{"total_ms", watch.ms()}};
    write_manifest(manifest_path_for(a.out), manifest);
  }
  return kExitOk;
}

// ---------------------------------------------------------------- kernel

struct KernelArgs {
  std::string image, out;
  std::vector<std::string> anchors;
  PipelineOptions pipeline;
};

std::pair<long long, long long> parse_anchor(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos)
    throw lsdc::InvalidValueError("anchor must be 'row,col', got '" + text + "'");
  try {
    return {std::stoll(text.substr(0, comma)), std::stoll(text.substr(comma + 1))};
  } catch (const std::exception&) {
    throw lsdc::InvalidValueError("anchor must be 'row,col', got '" + text + "'");
  }
}

int run_kernel(const KernelArgs& a, const std::vector<std::string>& argv) {
  Stopwatch watch;
  const lsdc::DenseGrid<double> image = lsdc::load_image(a.image);
  const lsdc::CompletionConfig<double> cfg = to_config(a.pipeline);
  const auto features = load_external_features(a.pipeline, image);

  const lsdc::BasisField<double> field =
      features ? lsdc::generate_basis(*features,
                                      lsdc::positional_encoding<double>(
                                          image.height(), image.width(), cfg.encode_levels),
                                      cfg.generator)
               : lsdc::build_basis_field(image, cfg);

  std::vector<std::string> written;
  for (const std::string& text : a.anchors) {
    const auto [row, col] = parse_anchor(text);
    const auto kmap =
        lsdc::kernel_map(field, static_cast<lsdc::Index>(row), static_cast<lsdc::Index>(col));
    const std::string path =
        a.out + "_r" + std::to_string(row) + "_c" + std::to_string(col) + ".dmap";
    lsdc::save_depth(kmap, path);
    written.push_back(path);
    std::cout << "wrote " << path << "\n";
  }

  json manifest = base_manifest("kernel", argv);
  manifest["config"] = config_json(a.pipeline);
  manifest["inputs"] = {{"image", a.image}};
  manifest["outputs"] = {{"kernels", written}};
  manifest["seeds"] = {{"basis", a.pipeline.seed}};
  manifest["timings"] = {{"total_ms", watch.ms()}};
  write_manifest(manifest_path_for(a.out), manifest);
  return kExitOk;
}

// ---------------------------------------------------------------- experiment

struct ExperimentArgs {
  std::string sample_dir, image, depth, out, protocol;
  std::vector<long long> counts = {100, 500, 1000};
  long long count = 1000;
  std::vector<double> factors = {0.5, 1.2, 3.0};
  long long corrupt_count = 300;
  double noise_low = 0.0, noise_high = 1.0;
  std::vector<unsigned long long> seeds = {0};
  bool see = false;
  PipelineOptions pipeline;
};

struct ExperimentRow {
  std::string setting;
  unsigned long long seed = 0;
  lsdc::Index n = 0;
  std::optional<lsdc::MetricsReport<double>> metrics;
  int iterations = 0;
  lsdc::Index rank = 0;
  std::string status = "ok";
};

std::string format_row(const std::string& protocol, const ExperimentRow& row, bool with_see) {
  char buf[512];
  if (row.metrics) {
    const auto& m = *row.metrics;
    char see_text[40] = "-";
    if (with_see && m.see) std::snprintf(see_text, sizeof(see_text), "%.17g", *m.see);
    std::snprintf(buf, sizeof(buf), "%s %s %llu %lld %.17g %.17g %.17g %.17g %.17g %s %d %lld %s",
                  protocol.c_str(), row.setting.c_str(), row.seed,
                  static_cast<long long>(row.n), m.rmse, m.rel, m.delta1, m.delta2, m.delta3,
                  see_text, row.iterations, static_cast<long long>(row.rank),
                  row.status.c_str());
  } else {
    std::snprintf(buf, sizeof(buf), "%s %s %llu %lld - - - - - - %d %lld %s", protocol.c_str(),
                  row.setting.c_str(), row.seed, static_cast<long long>(row.n), row.iterations,
                  static_cast<long long>(row.rank), row.status.c_str());
  }
  return buf;
}

int run_experiment(const ExperimentArgs& a, const std::vector<std::string>& argv) {
  Stopwatch watch;
  fs::path image_path = a.image;
  fs::path depth_path = a.depth;
  if (!a.sample_dir.empty()) {
    if (image_path.empty()) image_path = fs::path(a.sample_dir) / "image.ppm";
    if (depth_path.empty()) {
      depth_path = fs::path(a.sample_dir) / "depth.pgm";
      if (!fs::exists(depth_path)) depth_path = fs::path(a.sample_dir) / "depth.dmap";
    }
  }
  if (image_path.empty() || depth_path.empty())
    throw lsdc::InvalidValueError("experiment needs a sample directory or --image/--depth");

  const lsdc::DatasetSample<double> sample = lsdc::load_sample(image_path, depth_path);
  const lsdc::CompletionConfig<double> base_cfg = to_config(a.pipeline);

  bool any_failed = false;
  std::vector<std::string> lines;
  json rows_json = json::array();

  auto push_row = [&](const ExperimentRow& row) {
    lines.push_back(format_row(a.protocol, row, a.see));
    json j{{"protocol", a.protocol}, {"setting", row.setting},       {"seed", row.seed},
           {"n", row.n},             {"iterations", row.iterations}, {"rank", row.rank},
           {"status", row.status}};
    if (row.metrics) j["metrics"] = metrics_json(*row.metrics);
    rows_json.push_back(std::move(j));
  };

  // A failing setting becomes an error row and the sweep moves on; the
  // builder runs inside the guard so bad parameters (say, a count past the
  // valid-pixel budget) cannot abort the whole table.
  using RunInputs = std::pair<lsdc::SparseDepth<double>, lsdc::DepthMap<double>>;
  auto run_one = [&](const std::string& setting, unsigned long long seed,
                     const std::function<RunInputs()>& build, bool use_irls) {
    ExperimentRow row;
    row.setting = setting;
    row.seed = seed;
    try {
      const RunInputs inputs = build();
      row.n = inputs.first.size();
      lsdc::CompletionConfig<double> cfg = base_cfg;
      cfg.use_irls = use_irls;
      const auto result = lsdc::complete(sample.image, inputs.first, cfg);
      row.metrics = lsdc::evaluate(result.depth, inputs.second, sample.valid_mask, a.see);
      row.iterations = result.report.iterations;
      row.rank = result.report.effective_rank;
    } catch (const std::exception& e) {
      row.status = std::string("error:") + e.what();
      any_failed = true;
    }
    push_row(row);
  };

  for (const unsigned long long seed : a.seeds) {
    const lsdc::RngSpec sample_rng{seed};
    auto sample_n = [&](long long count) {
      return lsdc::sample_sparse(sample.gt_depth, sample.valid_mask,
                                 static_cast<lsdc::Index>(count), sample_rng);
    };
    if (a.protocol == "count-sweep") {
      for (const long long count : a.counts) {
        run_one(
            std::to_string(count), seed,
            [&] { return RunInputs{sample_n(count), sample.gt_depth}; }, a.pipeline.irls);
      }
    } else if (a.protocol == "scale-sweep") {
      for (const double factor : a.factors) {
        // Predictions from scaled measurements are scored against equally
        // scaled ground truth, so a scale-equivariant pipeline shows a
        // constant REL column.
        char label[32];
        std::snprintf(label, sizeof(label), "%g", factor);
        run_one(
            label, seed,
            [&] {
              lsdc::DepthMap<double> scaled_gt = sample.gt_depth;
              scaled_gt.values() *= factor;
              return RunInputs{lsdc::perturb_scale(sample_n(a.count), factor),
                               std::move(scaled_gt)};
            },
            a.pipeline.irls);
      }
    } else if (a.protocol == "noise") {
      auto noisy = [&] {
        return RunInputs{lsdc::inject_noise(sample_n(a.count),
                                            static_cast<lsdc::Index>(a.corrupt_count),
                                            a.noise_low, a.noise_high,
                                            lsdc::RngSpec{seed ^ kNoiseSeedSalt}),
                         sample.gt_depth};
      };
      run_one(
          "clean", seed, [&] { return RunInputs{sample_n(a.count), sample.gt_depth}; }, false);
      run_one("noise", seed, noisy, false);
      run_one("noise+irls", seed, noisy, true);
    } else {
      throw lsdc::InvalidValueError("unknown protocol '" + a.protocol + "'");
    }
  }

  std::ostringstream table;
  table << "# protocol setting seed n rmse rel delta1 delta2 delta3 see iterations rank status\n";
  for (const std::string& line : lines) table << line << "\n";
  std::cout << table.str();

  std::ofstream out(a.out, std::ios::trunc);
  if (!out) throw lsdc::IoError("cannot write " + a.out);
  out << table.str();
  if (!out) throw lsdc::IoError("failed writing " + a.out);

  json manifest = base_manifest("experiment", argv);
  manifest["config"] = config_json(a.pipeline);
  manifest["protocol"] = {{"name", a.protocol},
                          {"counts", a.counts},
                          {"count", a.count},
                          {"factors", a.factors},
                          {"corrupt_count", a.corrupt_count},
                          {"noise_low", a.noise_low},
                          {"noise_high", a.noise_high},
                          {"seeds", a.seeds}};
  manifest["inputs"] = {{"image", image_path.string()}, {"depth", depth_path.string()}};
  manifest["outputs"] = {{"table", a.out}};
  manifest["results"] = rows_json;
  manifest["timings"] = {{"total_ms", watch.ms()}};
  write_manifest(manifest_path_for(a.out), manifest);

  return any_failed ? kExitRunFailure : kExitOk;
}

// ---------------------------------------------------------------- replay

int run_replay(const std::string& manifest_file, const std::string& out_override, bool nested) {
  if (nested) throw lsdc::InvalidValueError("replay of a replay manifest is not supported");
  std::ifstream in(manifest_file);
  if (!in) throw lsdc::IoError("cannot open manifest " + manifest_file);
  json manifest;
  try {
    in >> manifest;
  } catch (const json::parse_error& e) {
    throw lsdc::FormatError("malformed manifest " + manifest_file + ": " + e.what());
  }
  if (!manifest.contains("argv") || !manifest["argv"].is_array())
    throw lsdc::FormatError("manifest " + manifest_file + " carries no argv");

  std::vector<std::string> args = manifest["argv"].get<std::vector<std::string>>();
  if (!args.empty() && args.front() == "replay")
    throw lsdc::InvalidValueError("manifest argv starts another replay");
  if (!out_override.empty()) {
    bool replaced = false;
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
      if (args[i] == "--out" || args[i] == "-o") {
        args[i + 1] = out_override;
        replaced = true;
      }
    }
    if (!replaced) throw lsdc::InvalidValueError("manifest argv has no --out to override");
  }
  return run_cli(args, true);
}

// ---------------------------------------------------------------- driver

int dispatch(const std::vector<std::string>& args, bool nested) {
  CLI::App app{"Sparse depth completion by least-squares fitting of image-derived basis vectors"};
  app.require_subcommand(1);

  CompleteArgs complete_args;
  CLI::App* complete = app.add_subcommand("complete", "Complete a sparse depth map");
  complete->add_option("--image", complete_args.image, "Guide image (PPM/PGM)")->required();
  complete->add_option("--sparse", complete_args.sparse, "Sparse depth file")->required();
  complete->add_option("-o,--out", complete_args.out, "Output depth map")->required();
  add_pipeline_flags(complete, complete_args.pipeline);

  CompleteArgs upsample_args;
  CLI::App* upsample =
      app.add_subcommand("upsample", "Complete onto a higher-resolution grid");
  upsample->add_option("--image", upsample_args.image, "Guide image (PPM/PGM)")->required();
  upsample->add_option("--sparse", upsample_args.sparse, "Sparse depth file")->required();
  upsample->add_option("-o,--out", upsample_args.out, "Output depth map")->required();
  upsample->add_option("--target-height", upsample_args.target_h, "Output rows")->required();
  upsample->add_option("--target-width", upsample_args.target_w, "Output cols")->required();
  add_pipeline_flags(upsample, upsample_args.pipeline);

  EvaluateArgs evaluate_args;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Score a prediction against ground truth");
  evaluate->add_option("--pred", evaluate_args.pred, "Predicted depth map")->required();
  evaluate->add_option("--gt", evaluate_args.gt, "Ground-truth depth map")->required();
  evaluate->add_flag("--see", evaluate_args.see, "Also report the soft edge error");
  evaluate->add_option("--edge-threshold", evaluate_args.edge_threshold,
                       "Gradient magnitude that marks an edge [m/px]")
      ->capture_default_str();
  evaluate->add_option("--format", evaluate_args.format, "Report format")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();
  evaluate->add_option("-o,--out", evaluate_args.out, "Also write the report to a file");

  KernelArgs kernel_args;
  CLI::App* kernel = app.add_subcommand("kernel", "Write basis correlation maps for anchors");
  kernel->add_option("--image", kernel_args.image, "Guide image (PPM/PGM)")->required();
  kernel->add_option("--anchor", kernel_args.anchors, "Anchor pixel as row,col (repeatable)")
      ->required();
  kernel->add_option("-o,--out", kernel_args.out, "Output path prefix")->required();
  add_pipeline_flags(kernel, kernel_args.pipeline);

  ExperimentArgs experiment_args;
  CLI::App* experiment = app.add_subcommand(
      "experiment",
      "Run a perturbation sweep. Table columns, in order: protocol setting seed n "
      "rmse rel delta1 delta2 delta3 see iterations rank status");
  experiment->add_option("dir", experiment_args.sample_dir,
                         "Sample directory holding image.ppm and depth.pgm|depth.dmap");
  experiment->add_option("--image", experiment_args.image, "Guide image override");
  experiment->add_option("--depth", experiment_args.depth, "Ground-truth depth override");
  experiment->add_option("--protocol", experiment_args.protocol, "count-sweep | scale-sweep | noise")
      ->required()
      ->check(CLI::IsMember({"count-sweep", "scale-sweep", "noise"}));
  experiment->add_option("-o,--out", experiment_args.out, "Table output file")->required();
  experiment->add_option("--counts", experiment_args.counts, "Sample counts for count-sweep")
      ->delimiter(',')
      ->capture_default_str();
  experiment->add_option("--count", experiment_args.count,
                         "Sample count for scale-sweep and noise")
      ->capture_default_str();
  experiment->add_option("--factors", experiment_args.factors, "Scale factors for scale-sweep")
      ->delimiter(',')
      ->capture_default_str();
  experiment->add_option("--corrupt-count", experiment_args.corrupt_count,
                         "Corrupted measurements for noise")
      ->capture_default_str();
  experiment->add_option("--noise-low", experiment_args.noise_low, "Noise lower bound [m]")
      ->capture_default_str();
  experiment->add_option("--noise-high", experiment_args.noise_high, "Noise upper bound [m]")
      ->capture_default_str();
  experiment->add_option("--seeds", experiment_args.seeds, "Run seeds")
      ->delimiter(',')
      ->capture_default_str();
  experiment->add_flag("--see", experiment_args.see, "Include the soft edge error column");
  add_pipeline_flags(experiment, experiment_args.pipeline);

  std::string replay_manifest, replay_out;
  CLI::App* replay = app.add_subcommand("replay", "Re-run a command from its manifest");
  replay->add_option("manifest", replay_manifest, "Manifest file of a previous run")->required();
  replay->add_option("-o,--out", replay_out, "Redirect the primary output");

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("lsdc");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (complete->parsed()) return run_complete(complete_args, args, false);
  if (upsample->parsed()) return run_complete(upsample_args, args, true);
  if (evaluate->parsed()) return run_evaluate(evaluate_args, args);
  if (kernel->parsed()) return run_kernel(kernel_args, args);
  if (experiment->parsed()) return run_experiment(experiment_args, args);
  if (replay->parsed()) return run_replay(replay_manifest, replay_out, nested);
  return kExitConfig;
}

int run_cli(const std::vector<std::string>& args, bool nested) {
  try {
    return dispatch(args, nested);
  } catch (const lsdc::SingularMatrixError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const lsdc::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const lsdc::FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitIo;
  } catch (const lsdc::TruncatedError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitIo;
  } catch (const lsdc::DimensionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const lsdc::InvalidValueError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRunFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, false);
}
