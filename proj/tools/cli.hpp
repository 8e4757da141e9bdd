#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "defocus/config.hpp"
#include "defocus/estimation.hpp"
#include "defocus/sharpness.hpp"

namespace defocus::cli {

inline constexpr const char* kReportSchema = "v1";

/// Exit codes of the command-line tool.
enum ExitCode : int { kSuccess = 0, kRuntimeFailure = 1, kValidationFailure = 2 };

nlohmann::ordered_json config_json(const RunConfig& config);
nlohmann::ordered_json blur_summary_json(const BlurMap& blur);

/// One Table-1-style CSV record.
struct PairRow {
  std::string dataset_id;
  int width = 0;
  int height = 0;
  double pct_b_sharper = 0.0;
  double pct_f_sharper = 0.0;
  std::optional<double> e_b;
  std::optional<double> e_f;
};

std::string csv_header();
/// Not-applicable errors are written as "NA".
std::string csv_row(const PairRow& row);

struct ManifestEntry {
  std::string dataset_id;
  std::string background_path;
  std::string foreground_path;
};

/// Reads a CSV with header "dataset-id,ib,if". Relative paths resolve against
/// the manifest's directory.
std::vector<ManifestEntry> read_manifest(const std::string& path);

/// Parses "a:b" into (a, b).
std::pair<double, double> parse_range(const std::string& text);

/// Runs the tool; returns the process exit code.
int run(int argc, const char* const* argv);

}  // namespace defocus::cli
