#pragma once

#include "fsdag/geometry.hpp"
#include "fsdag/synth.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace fsdag {

/// Per-landmark Euclidean errors in pixels: sqrt((dx W)^2 + (dy H)^2).
std::vector<double> euclidean_errors(const LandmarkSet& pred, const LandmarkSet& gt, double width_px,
                                     double height_px = 0.0);

struct MetricSummary {
  std::vector<std::vector<double>> errors;  // per image, per landmark (pixels)
  double mean_error = 0;
  double std_error = 0;
  double failure_rate = 0;           // per image: any landmark above threshold
  double landmark_failure_rate = 0;  // per landmark
  double threshold_px = 0;
  std::size_t sample_count = 0;
  bool population_std = true;
};

/// Pools all landmark errors for mean/std; an image fails when any of its
/// landmarks exceeds `failure_fraction * width_px`.
MetricSummary summarize(const std::vector<std::vector<double>>& errors, double width_px, double failure_fraction = 0.05,
                        bool population_std = true);

struct ReportRow {
  std::string method;
  std::uint64_t seed = 0;
  MetricSummary summary;
  bool converged = true;
};

/// Writes `<stem>.json` (full precision) and `<stem>.txt` (method table, rows
/// in first-appearance order, statistics over seeds). Returns the JSON path.
std::filesystem::path emit_report(const std::vector<ReportRow>& rows, const std::filesystem::path& stem);

/// Rows and summaries read back from a report JSON.
std::vector<ReportRow> read_report(const std::filesystem::path& json_path);

/// Table text for the given rows (also written by emit_report).
std::string format_report_table(const std::vector<ReportRow>& rows);

/// SVG overlay: grayscale backdrop, green ground truth, red predictions and
/// white correspondence lines. A normalized coordinate x maps to SVG
/// x (W - 1) + 0.5, i.e. the centre of its pixel.
void emit_overlay(const Sample& sample, const LandmarkSet& pred, const LandmarkSet& gt, const std::filesystem::path& path);

}  // namespace fsdag
