#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adaptoml/common.hpp"

namespace adaptoml {

struct ClassMetrics {
  std::vector<double> precision;  // per class
  std::vector<double> recall;
  std::vector<double> f1;
  std::vector<std::size_t> support;
  std::vector<std::vector<std::size_t>> confusion;  // [true][pred]
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double weighted_precision = 0.0;
  double weighted_recall = 0.0;
  double weighted_f1 = 0.0;
  std::size_t zero_divisions = 0;  // how often 0/0 was mapped to 0

  std::size_t total() const;
};

/// Targets are class indices in [0, n_classes). Throws DataError on length
/// mismatch, empty input or out-of-range entries.
ClassMetrics classification_metrics(std::span<const double> y_true, std::span<const double> y_pred,
                                    std::size_t n_classes);

struct RegMetrics {
  double rmse = 0.0;
  double mae = 0.0;
  double r2 = 0.0;  // NaN when y_true is constant
};

RegMetrics regression_metrics(std::span<const double> y_true, std::span<const double> y_pred);

/// Metric names recorded for every evaluated split, in output order.
const std::vector<std::string>& metric_names(Task task);

/// Named values for `metric_names(task)` computed from predictions.
std::vector<std::pair<std::string, double>> score_predictions(Task task, std::span<const double> y_true,
                                                              std::span<const double> y_pred,
                                                              std::size_t n_classes);

/// Criterion metadata. Classification criteria are maximized; rmse and mae
/// are minimized, r2 maximized. Throws ConfigError for unknown names.
struct Criterion {
  std::string name;
  bool maximize = true;

  static Criterion parse(Task task, std::string_view name);
  static Criterion default_for(Task task);
  /// True when `a` is strictly better than `b`; NaN is never better.
  bool better(double a, double b) const;
};

// ---------------------------------------------------------------------------
// File emission
// ---------------------------------------------------------------------------

struct ResultRow {
  std::string candidate_id;
  std::string family;
  std::string hyperparams;
  std::string split;
  std::string metric;
  double value = 0.0;
};

void write_results_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_results_csv(const std::filesystem::path& path);

void write_classification_report(const std::filesystem::path& path, const ClassMetrics& m,
                                 const std::vector<std::string>& labels);

struct LongRow {
  std::string key;  // user_id or session
  std::string stage;  // stage or checkpoint
  std::string metric;
  double value = 0.0;
};

/// Header row is {key_name, stage_name, "metric", "value"}.
void write_long_csv(const std::filesystem::path& path, std::string_view key_name,
                    std::string_view stage_name, const std::vector<LongRow>& rows);

// ---------------------------------------------------------------------------
// SVG line charts
// ---------------------------------------------------------------------------

struct Series {
  std::string name;
  std::vector<double> y;  // one value per x label; NaN points are skipped
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<std::string> x_ticks;
  std::vector<Series> series;
};

/// Deterministic, self-contained SVG with axes, tick labels, legend and one
/// <polyline> per series.
std::string render_svg(const LineChart& chart);

std::string xml_escape(std::string_view text);

}  // namespace adaptoml
