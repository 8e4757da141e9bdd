#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "defocus/io.hpp"
#include "defocus/optics.hpp"
#include "defocus/reconstruction.hpp"
#include "defocus/resample.hpp"
#include "defocus/synth.hpp"

namespace defocus::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string format_fixed(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, value);
  return buf;
}

json optional_json(const std::optional<double>& value) {
  return value ? json(*value) : json(nullptr);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

void write_report(const RunConfig& config, const json& report) {
  write_text(config.output_dir / "report.json", report.dump(2) + "\n");
}

void prepare_output_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

json report_header(const char* command, const RunConfig& config) {
  json report;
  report["schema"] = kReportSchema;
  report["command"] = command;
  report["config"] = config_json(config);
  return report;
}

json framework_json(const Framework& fw) {
  json j;
  j["patch_side"] = fw.weights.patch_side();
  j["weight_nonzeros"] = fw.weights.nonzeros();
  j["weights_from_cache"] = fw.from_cache;
  j["cache_file"] = fw.cache_file ? json(fw.cache_file->string()) : json(nullptr);
  return j;
}

// Decimated images may ring slightly outside [0, 1]; the pipeline works on clamped values.
GrayImage prepare_input(const GrayImage& image, int factor, Execution exec) {
  if (factor == 1) return image;
  GrayImage out = decimate(image, factor, exec);
  for (double& v : out.pixels()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

void add_framework_options(CLI::App* app, RunConfig& config) {
  app->add_option("--sigma-count", config.sigma_count, "Number of grid sigma values M");
  app->add_option("--radial-count", config.radial_count, "Number of radial samples N");
  app->add_option("--sigma-min", config.sigma_min, "Smallest grid sigma");
  app->add_option("--sigma-max", config.sigma_max, "Largest grid sigma");
  app->add_option("--tie-tol", config.tie_tol, "Residual tolerance for tied candidates");
  app->add_option("--window", config.disambiguation_window, "Disambiguation window side (odd)");
  app->add_flag("!--no-median", config.median_pass, "Skip the final 3x3 median");
  app->add_option("--factor", config.decimation_factor, "Decimate inputs by this factor first");
}

void add_common_options(CLI::App* app, RunConfig& config) {
  app->add_option("--workers", config.workers, "Worker threads (0 = all available)");
  app->add_option("--out", config.output_dir, "Output directory");
}

struct SynthArgs {
  std::string image;
  std::string range = "1:2";
  std::string axis = "vertical";
};

int run_synth_eval(const SynthArgs& args, const RunConfig& config) {
  config.validate();
  const auto [start, end] = parse_range(args.range);
  const Axis axis = parse_axis(args.axis);
  const GrayImage image =
      prepare_input(io::load_gray(args.image), config.decimation_factor, config.execution());
  const SigmaField field = linear_sigma_field(image.width(), image.height(), start, end, axis);
  const Framework fw = prepare_framework(config, cache_dir_from_env());
  const SyntheticEvaluation eval =
      evaluate_synthetic(image, field, fw.weights, fw.quadrature, config.estimation_options());

  prepare_output_dir(config.output_dir);
  io::save_gray(eval.blurred, config.output_dir / "blurred.png");
  io::save_blur_raster(eval.estimate, config.output_dir / "sigma_hat.dfbm");
  io::save_gray(io::blur_visualization(eval.estimate), config.output_dir / "sigma_hat.pgm");
  BlurMap truth(image.width(), image.height(), eval.estimate.sigma_min, eval.estimate.sigma_max);
  truth.sigma = field.values;
  std::fill(truth.flags.pixels().begin(), truth.flags.pixels().end(), std::uint8_t(kValid));
  io::save_blur_raster(truth, config.output_dir / "sigma_truth.dfbm");
  io::save_gray(io::blur_visualization(truth), config.output_dir / "sigma_truth.pgm");
  io::save_gray(eval.reconstruction.r_hat, config.output_dir / "reconstruction.png");

  json report = report_header("synth-eval", config);
  report["image"] = args.image;
  report["width"] = image.width();
  report["height"] = image.height();
  report["field"] = {{"axis", to_string(axis)}, {"start", start}, {"end", end}};
  report["framework"] = framework_json(fw);
  report["sigma_mae_percent"] = eval.sigma_mae_percent;
  report["recon_mae"] = eval.reconstruction.mae;
  report["recon_max_abs"] = eval.reconstruction.max_abs;
  report["coverage"] = eval.coverage;
  report["blur_map"] = blur_summary_json(eval.estimate);
  write_report(config, report);
  std::cout << report.dump(2) << "\n";
  return kSuccess;
}

struct EstimateArgs {
  std::string left;
  std::string right;
};

int run_estimate(const EstimateArgs& args, const RunConfig& config) {
  config.validate();
  const GrayImage left =
      prepare_input(io::load_gray(args.left), config.decimation_factor, config.execution());
  const GrayImage right =
      prepare_input(io::load_gray(args.right), config.decimation_factor, config.execution());
  require_same_shape(left, right, "estimate");
  const Framework fw = prepare_framework(config, cache_dir_from_env());
  const BlurMap blur =
      estimate_blur_map(left, right, fw.weights, fw.quadrature, nullptr, config.estimation_options());

  prepare_output_dir(config.output_dir);
  io::save_blur_raster(blur, config.output_dir / "blur_map.dfbm");
  io::save_gray(io::blur_visualization(blur), config.output_dir / "blur_map.pgm");

  json report = report_header("estimate", config);
  report["left"] = args.left;
  report["right"] = args.right;
  report["width"] = left.width();
  report["height"] = left.height();
  report["framework"] = framework_json(fw);
  report["blur_map"] = blur_summary_json(blur);
  if (blur.coverage() > 0.0) {
    const ReconstructionReport recon = reconstruct(left, right, blur, config.execution());
    io::save_gray(recon.r_hat, config.output_dir / "reconstruction.png");
    report["recon_mae"] = recon.mae;
    report["recon_max_abs"] = recon.max_abs;
  } else {
    report["recon_mae"] = nullptr;
    report["recon_max_abs"] = nullptr;
  }
  write_report(config, report);
  std::cout << report.dump(2) << "\n";
  return kSuccess;
}

struct PairArgs {
  std::string background;
  std::string foreground;
  std::string manifest;
  std::string dataset_id;
  std::vector<int> factors;
  double eq_tol = kDefaultEqualityTolerance;
};

json subset_json(const std::optional<SubsetEvaluation>& subset) {
  if (!subset) return nullptr;
  return {{"pixels", subset->pixels},
          {"valid_pixels", subset->valid_pixels},
          {"mae", subset->mae},
          {"blur_map", blur_summary_json(subset->blur)}};
}

// Evaluates one pair at every decimation factor; artifacts go to `dir`.
json evaluate_levels(const std::string& id, const GrayImage& background,
                     const GrayImage& foreground, const std::vector<int>& factors,
                     const Framework& fw, const RunConfig& config, const fs::path& dir,
                     std::vector<PairRow>& rows) {
  require_same_shape(background, foreground, "evaluate-pair");
  prepare_output_dir(dir);
  json levels = json::array();
  for (int factor : factors) {
    const GrayImage ib = prepare_input(background, factor, config.execution());
    const GrayImage iff = prepare_input(foreground, factor, config.execution());
    const PairEvaluation eval = evaluate_pair(ib, iff, fw.weights, fw.quadrature, config.pair_options());

    const std::string suffix = "_d" + std::to_string(factor);
    io::save_gray(fusion_visualization(ib, iff, eval.partition), dir / ("fusion" + suffix + ".png"));
    if (eval.from_b) io::save_gray(eval.from_b->reconstruction, dir / ("f_hat" + suffix + ".png"));
    if (eval.from_f) io::save_gray(eval.from_f->reconstruction, dir / ("b_hat" + suffix + ".png"));

    rows.push_back({id, eval.width, eval.height, eval.pct_b_sharper(), eval.pct_f_sharper(),
                    eval.e_b, eval.e_f});
    levels.push_back({{"factor", factor},
                      {"width", eval.width},
                      {"height", eval.height},
                      {"pct_b_sharper", eval.pct_b_sharper()},
                      {"pct_f_sharper", eval.pct_f_sharper()},
                      {"pct_equal", eval.pct_equal()},
                      {"e_b", optional_json(eval.e_b)},
                      {"e_f", optional_json(eval.e_f)},
                      {"b_sharper_subset", subset_json(eval.from_b)},
                      {"f_sharper_subset", subset_json(eval.from_f)}});
  }
  return {{"dataset_id", id}, {"levels", levels}};
}

int run_evaluate_pair(const PairArgs& args, RunConfig config) {
  config.eq_tol = args.eq_tol;
  config.validate();
  const bool manifest_mode = !args.manifest.empty();
  if (manifest_mode == !(args.background.empty() && args.foreground.empty())) {
    throw Error(ErrorCode::InvalidParameter, "give either --manifest or both --ib and --if");
  }
  if (!manifest_mode && (args.background.empty() || args.foreground.empty())) {
    throw Error(ErrorCode::InvalidParameter, "both --ib and --if are required");
  }
  std::vector<int> factors = args.factors;
  if (factors.empty()) factors.push_back(config.decimation_factor);
  for (int f : factors) {
    if (f < 1) throw Error(ErrorCode::InvalidParameter, "decimation factors must be >= 1");
  }

  std::vector<ManifestEntry> entries;
  if (manifest_mode) {
    entries = read_manifest(args.manifest);
  } else {
    const std::string id =
        args.dataset_id.empty() ? fs::path(args.background).stem().string() : args.dataset_id;
    entries.push_back({id, args.background, args.foreground});
  }

  const Framework fw = prepare_framework(config, cache_dir_from_env());
  prepare_output_dir(config.output_dir);
  std::vector<PairRow> rows;
  json pairs = json::array();
  for (const ManifestEntry& e : entries) {
    const fs::path dir = manifest_mode ? config.output_dir / e.dataset_id : config.output_dir;
    pairs.push_back(evaluate_levels(e.dataset_id, io::load_gray(e.background_path),
                                    io::load_gray(e.foreground_path), factors, fw, config, dir,
                                    rows));
  }

  std::string csv = csv_header() + "\n";
  for (const PairRow& row : rows) csv += csv_row(row) + "\n";
  write_text(config.output_dir / "results.csv", csv);

  json report = report_header("evaluate-pair", config);
  report["framework"] = framework_json(fw);
  report["pairs"] = pairs;
  write_report(config, report);
  std::cout << csv;
  return kSuccess;
}

struct OpticsArgs {
  double focal_mm = 0.0;
  double f_number = 0.0;
  double foreground_mm = 0.0;
  std::optional<double> background_mm;
  double pitch_um = 0.0;
  std::optional<double> eta;
};

int run_optics(const OpticsArgs& args) {
  using namespace optics;
  const Distance background =
      args.background_mm ? Distance::finite(*args.background_mm) : Distance::infinity();
  const CMaxForeground c = c_max_foreground(args.foreground_mm, background, args.focal_mm,
                                            args.f_number);
  const double pitches = mm_to_pitches(c.approx_mm, args.pitch_um);
  const DecimationAdvice advice = recommend_decimation(pitches);
  const DecimationAdvice pow2 = recommend_decimation_pow2(pitches);

  json report;
  report["schema"] = kReportSchema;
  report["command"] = "optics";
  report["inputs"] = {{"focal_mm", args.focal_mm},
                      {"f_number", args.f_number},
                      {"foreground_mm", args.foreground_mm},
                      {"background_mm", optional_json(args.background_mm)},
                      {"pixel_pitch_um", args.pitch_um},
                      {"eta", optional_json(args.eta)}};
  const CameraSettings focused =
      CameraSettings::focused_at(args.focal_mm, args.f_number, args.foreground_mm, args.pitch_um);
  report["coc_scale_mm"] = coc_scale(focused);
  report["c_max_mm"] = c.approx_mm;
  report["c_max_pitches"] = pitches;
  report["c_max_exact_mm"] = c.exact_mm;
  report["c_max_exact_pitches"] = mm_to_pitches(c.exact_mm, args.pitch_um);
  report["decimation"] = {{"factor", advice.factor},
                          {"scaled_pitches", advice.scaled_pitches},
                          {"below_range", advice.below_range},
                          {"pow2_factor", pow2.factor},
                          {"pow2_scaled_pitches", pow2.scaled_pitches},
                          {"pow2_below_range", pow2.below_range}};
  if (args.eta) {
    const double bounded = c_max_bounded(focused, *args.eta);
    const double margin = coc_margin(bounded, *args.eta);
    report["bounded"] = {{"c_max_mm", bounded},
                         {"c_max_pitches", mm_to_pitches(bounded, args.pitch_um)},
                         {"c_m_mm", margin},
                         {"focal_solution_mm", solve_focal_length(margin, args.f_number,
                                                                  args.foreground_mm)}};
  }
  if (advice.below_range) {
    std::cerr << "warning: C_max after decimation is below 0.5 pitch and may be undetectable\n";
  }
  std::cout << report.dump(2) << "\n";
  return kSuccess;
}

struct DecimateArgs {
  std::string input;
  std::string output;
  int factor = 2;
  int half_length = kDefaultFilterHalfLength;
  double beta = kDefaultKaiserBeta;
  int workers = 0;
};

int run_decimate(const DecimateArgs& args) {
  const FirFilter filter = kaiser_sinc_taps(args.factor, args.half_length, args.beta);
  const GrayImage input = io::load_gray(args.input);
  const GrayImage out = decimate(input, filter, Execution{args.workers});
  io::save_gray_clamped(out, args.output);

  json report;
  report["schema"] = kReportSchema;
  report["command"] = "decimate";
  report["input"] = args.input;
  report["output"] = args.output;
  report["factor"] = args.factor;
  report["half_length"] = args.half_length;
  report["beta"] = args.beta;
  report["input_size"] = {input.width(), input.height()};
  report["output_size"] = {out.width(), out.height()};
  report["taps"] = filter.taps;
  std::cout << report.dump(2) << "\n";
  return kSuccess;
}

}  // namespace

json config_json(const RunConfig& config) {
  return {{"sigma_count", config.sigma_count},
          {"radial_count", config.radial_count},
          {"sigma_min", config.sigma_min},
          {"sigma_max", config.sigma_max},
          {"tie_tol", config.tie_tol},
          {"eq_tol", config.eq_tol},
          {"disambiguation_window", config.disambiguation_window},
          {"median_pass", config.median_pass},
          {"decimation_factor", config.decimation_factor},
          {"workers", config.workers},
          {"output_dir", config.output_dir.string()}};
}

json blur_summary_json(const BlurMap& blur) {
  std::size_t valid = 0, floor = 0, textureless = 0, inconsistent = 0, skipped = 0;
  double sum = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int y = 0; y < blur.height(); ++y) {
    for (int x = 0; x < blur.width(); ++x) {
      const std::uint8_t f = blur.flags(x, y);
      if (f & kFloor) ++floor;
      if (f & kTextureless) ++textureless;
      if (f & kInconsistent) ++inconsistent;
      if (f & kSkipped) ++skipped;
      if (f & kValid) {
        ++valid;
        sum += blur.sigma(x, y);
        lo = std::min(lo, blur.sigma(x, y));
        hi = std::max(hi, blur.sigma(x, y));
      }
    }
  }
  json j;
  j["coverage"] = blur.coverage();
  j["valid"] = valid;
  j["floor"] = floor;
  j["textureless"] = textureless;
  j["inconsistent"] = inconsistent;
  j["skipped"] = skipped;
  j["sigma_mean"] = valid ? json(sum / double(valid)) : json(nullptr);
  j["sigma_min"] = valid ? json(lo) : json(nullptr);
  j["sigma_max"] = valid ? json(hi) : json(nullptr);
  return j;
}

std::string csv_header() { return "dataset-id,resolution,pct_B_sharper,pct_F_sharper,e_B,e_F"; }

std::string csv_row(const PairRow& row) {
  auto error = [](const std::optional<double>& e) { return e ? format_fixed(*e, 6) : "NA"; };
  std::ostringstream out;
  out << row.dataset_id << ',' << row.width << 'x' << row.height << ','
      << format_fixed(row.pct_b_sharper, 2) << ',' << format_fixed(row.pct_f_sharper, 2) << ','
      << error(row.e_b) << ',' << error(row.e_f);
  return out.str();
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open manifest " + path);
  const fs::path base = fs::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    const fs::path candidate(p);
    return candidate.is_absolute() ? p : (base / candidate).string();
  };
  auto trim = [](std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    const auto last = s.find_last_not_of(" \t\r");
    return first == std::string::npos ? std::string() : s.substr(first, last - first + 1);
  };

  std::vector<ManifestEntry> entries;
  std::string line;
  bool header = true;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(trim(f));
    if (header) {
      header = false;
      if (fields != std::vector<std::string>{"dataset-id", "ib", "if"}) {
        throw Error(ErrorCode::InvalidParameter, "manifest header must be dataset-id,ib,if");
      }
      continue;
    }
    if (fields.size() != 3 || fields[0].empty()) {
      throw Error(ErrorCode::InvalidParameter,
                  "manifest line " + std::to_string(line_no) + " needs three fields");
    }
    entries.push_back({fields[0], resolve(fields[1]), resolve(fields[2])});
  }
  if (entries.empty()) throw Error(ErrorCode::EmptyDomain, "manifest lists no pairs");
  return entries;
}

std::pair<double, double> parse_range(const std::string& text) {
  const auto colon = text.find(':');
  try {
    if (colon == std::string::npos) throw std::invalid_argument("missing colon");
    std::size_t used_a = 0, used_b = 0;
    const std::string a = text.substr(0, colon);
    const std::string b = text.substr(colon + 1);
    const double start = std::stod(a, &used_a);
    const double end = std::stod(b, &used_b);
    if (used_a != a.size() || used_b != b.size()) throw std::invalid_argument("trailing text");
    return {start, end};
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidParameter, "range must look like start:end, got " + text);
  }
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Relative defocus blur estimation from image pairs"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  RunConfig config;

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth-eval", "Blur an image with a known field and recover it");
  synth_cmd->add_option("--image", synth.image, "Source image (PNG/PGM)")->required();
  synth_cmd->add_option("--range", synth.range, "Sigma ramp start:end");
  synth_cmd->add_option("--axis", synth.axis, "vertical or horizontal");
  add_framework_options(synth_cmd, config);
  add_common_options(synth_cmd, config);

  EstimateArgs est;
  auto* est_cmd = app.add_subcommand("estimate", "Estimate the relative blur map of an L/R pair");
  est_cmd->add_option("--left", est.left, "Sharper image")->required();
  est_cmd->add_option("--right", est.right, "More defocused image")->required();
  add_framework_options(est_cmd, config);
  add_common_options(est_cmd, config);

  PairArgs pair;
  auto* pair_cmd = app.add_subcommand("evaluate-pair", "Cross-estimation errors of a generalized pair");
  pair_cmd->add_option("--ib", pair.background, "Background-focused image");
  pair_cmd->add_option("--if", pair.foreground, "Foreground-focused image");
  pair_cmd->add_option("--manifest", pair.manifest, "CSV with columns dataset-id,ib,if");
  pair_cmd->add_option("--dataset-id", pair.dataset_id, "Identifier written to the CSV");
  pair_cmd->add_option("--factors", pair.factors, "Decimation factors to evaluate, e.g. 1,2,4")
      ->delimiter(',');
  pair_cmd->add_option("--eq-tol", pair.eq_tol, "Sharpness equality tolerance");
  add_framework_options(pair_cmd, config);
  add_common_options(pair_cmd, config);

  OpticsArgs opt;
  auto* opt_cmd = app.add_subcommand("optics", "Largest circle of confusion and decimation advice");
  opt_cmd->add_option("--f", opt.focal_mm, "Focal length in mm")->required();
  opt_cmd->add_option("--fn", opt.f_number, "f-number")->required();
  opt_cmd->add_option("--df", opt.foreground_mm, "Nearest scene distance d_F in mm")->required();
  opt_cmd->add_option("--db", opt.background_mm, "Farthest scene distance d_B in mm (default: infinity)");
  opt_cmd->add_option("--pitch", opt.pitch_um, "Pixel pitch in micrometres")->required();
  opt_cmd->add_option("--eta", opt.eta, "Relative depth bound for the bounded-scene figures");

  DecimateArgs dec;
  auto* dec_cmd = app.add_subcommand("decimate", "Anti-aliased decimation of an image");
  dec_cmd->add_option("--input", dec.input, "Input image")->required();
  dec_cmd->add_option("--output", dec.output, "Output .png or .pgm")->required();
  dec_cmd->add_option("--factor", dec.factor, "Decimation factor D");
  dec_cmd->add_option("--half-length", dec.half_length, "Filter half-length L");
  dec_cmd->add_option("--beta", dec.beta, "Kaiser beta");
  dec_cmd->add_option("--workers", dec.workers, "Worker threads (0 = all available)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kSuccess : kValidationFailure;
  }

  try {
    if (*synth_cmd) return run_synth_eval(synth, config);
    if (*est_cmd) return run_estimate(est, config);
    if (*pair_cmd) return run_evaluate_pair(pair, config);
    if (*opt_cmd) return run_optics(opt);
    if (*dec_cmd) return run_decimate(dec);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_validation() ? kValidationFailure : kRuntimeFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return kValidationFailure;
}

}  // namespace defocus::cli
