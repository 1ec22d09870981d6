#include "adaptoml/reporting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace adaptoml {

std::size_t ClassMetrics::total() const {
  std::size_t n = 0;
  for (auto s : support) n += s;
  return n;
}

namespace {

double ratio(double num, double den, std::size_t& zero_divisions) {
  if (den == 0.0) {
    ++zero_divisions;
    return 0.0;
  }
  return num / den;
}

std::size_t class_index(double v, std::size_t n_classes, const char* which) {
  if (!std::isfinite(v) || v < 0 || std::floor(v) != v || v >= static_cast<double>(n_classes))
    throw DataError(std::string(which) + " contains unknown class index " + format_double(v));
  return static_cast<std::size_t>(v);
}

}  // namespace

ClassMetrics classification_metrics(std::span<const double> y_true, std::span<const double> y_pred,
                                    std::size_t n_classes) {
  if (y_true.size() != y_pred.size())
    throw DataError("y_true has " + std::to_string(y_true.size()) + " entries but y_pred has " +
                    std::to_string(y_pred.size()));
  if (y_true.empty()) throw DataError("cannot score an empty evaluation set");
  ClassMetrics m;
  const std::size_t k = n_classes;
  m.confusion.assign(k, std::vector<std::size_t>(k, 0));
  for (std::size_t i = 0; i < y_true.size(); ++i)
    ++m.confusion[class_index(y_true[i], k, "y_true")][class_index(y_pred[i], k, "y_pred")];

  const double n = static_cast<double>(y_true.size());
  std::size_t correct = 0;
  m.precision.assign(k, 0.0);
  m.recall.assign(k, 0.0);
  m.f1.assign(k, 0.0);
  m.support.assign(k, 0);
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t predicted = 0;
    for (std::size_t t = 0; t < k; ++t) predicted += m.confusion[t][c];
    for (std::size_t p = 0; p < k; ++p) m.support[c] += m.confusion[c][p];
    const double tp = static_cast<double>(m.confusion[c][c]);
    correct += m.confusion[c][c];
    m.precision[c] = ratio(tp, static_cast<double>(predicted), m.zero_divisions);
    m.recall[c] = ratio(tp, static_cast<double>(m.support[c]), m.zero_divisions);
    m.f1[c] = ratio(2.0 * m.precision[c] * m.recall[c], m.precision[c] + m.recall[c], m.zero_divisions);
  }
  m.accuracy = static_cast<double>(correct) / n;
  for (std::size_t c = 0; c < k; ++c) {
    m.macro_precision += m.precision[c];
    m.macro_recall += m.recall[c];
    m.macro_f1 += m.f1[c];
    const double w = static_cast<double>(m.support[c]) / n;
    m.weighted_precision += w * m.precision[c];
    m.weighted_recall += w * m.recall[c];
    m.weighted_f1 += w * m.f1[c];
  }
  if (k > 0) {
    m.macro_precision /= static_cast<double>(k);
    m.macro_recall /= static_cast<double>(k);
    m.macro_f1 /= static_cast<double>(k);
  }
  return m;
}

RegMetrics regression_metrics(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.size() != y_pred.size())
    throw DataError("y_true has " + std::to_string(y_true.size()) + " entries but y_pred has " +
                    std::to_string(y_pred.size()));
  if (y_true.empty()) throw DataError("cannot score an empty evaluation set");
  const double n = static_cast<double>(y_true.size());
  double sse = 0.0, sae = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double e = y_true[i] - y_pred[i];
    sse += e * e;
    sae += std::abs(e);
    mean += y_true[i];
  }
  mean /= n;
  double sst = 0.0;
  for (double v : y_true) sst += (v - mean) * (v - mean);
  RegMetrics m;
  m.rmse = std::sqrt(sse / n);
  m.mae = sae / n;
  m.r2 = sst > 0.0 ? 1.0 - sse / sst : std::numeric_limits<double>::quiet_NaN();
  return m;
}

const std::vector<std::string>& metric_names(Task task) {
  static const std::vector<std::string> cls{"accuracy", "macro_precision", "macro_recall", "macro_f1"};
  static const std::vector<std::string> reg{"rmse", "mae", "r2"};
  return task == Task::classification ? cls : reg;
}

std::vector<std::pair<std::string, double>> score_predictions(Task task, std::span<const double> y_true,
                                                              std::span<const double> y_pred,
                                                              std::size_t n_classes) {
  if (task == Task::regression) {
    const auto m = regression_metrics(y_true, y_pred);
    return {{"rmse", m.rmse}, {"mae", m.mae}, {"r2", m.r2}};
  }
  const auto m = classification_metrics(y_true, y_pred, n_classes);
  return {{"accuracy", m.accuracy},
          {"macro_precision", m.macro_precision},
          {"macro_recall", m.macro_recall},
          {"macro_f1", m.macro_f1},
          {"weighted_precision", m.weighted_precision},
          {"weighted_recall", m.weighted_recall},
          {"weighted_f1", m.weighted_f1}};
}

Criterion Criterion::parse(Task task, std::string_view name) {
  static const std::vector<std::string> cls{"accuracy",           "macro_f1",        "macro_precision",
                                            "macro_recall",       "weighted_f1",     "weighted_precision",
                                            "weighted_recall"};
  static const std::vector<std::string> reg{"rmse", "mae", "r2"};
  const auto& known = task == Task::classification ? cls : reg;
  if (std::find(known.begin(), known.end(), name) == known.end())
    throw ConfigError("unknown criterion '" + std::string(name) + "' for " + std::string(to_string(task)) +
                      " (expected one of " + join(known, ", ") + ")");
  return {std::string(name), !(name == "rmse" || name == "mae")};
}

Criterion Criterion::default_for(Task task) {
  return task == Task::classification ? Criterion{"macro_f1", true} : Criterion{"rmse", false};
}

bool Criterion::better(double a, double b) const {
  if (std::isnan(a)) return false;
  if (std::isnan(b)) return true;
  return maximize ? a > b : a < b;
}

// ---------------------------------------------------------------------------
// CSV files
// ---------------------------------------------------------------------------

void write_results_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  write_csv_row(out, {"candidate_id", "family", "hyperparams", "split", "metric", "value"});
  for (const auto& r : rows)
    write_csv_row(out, {r.candidate_id, r.family, r.hyperparams, r.split, r.metric, format_double(r.value)});
  write_file_atomic(path, out.str());
}

std::vector<ResultRow> read_results_csv(const std::filesystem::path& path) {
  const auto records = parse_csv(read_file(path));
  if (records.empty() || records[0].fields.size() != 6 || records[0].fields[0] != "candidate_id")
    throw FormatError(path.string() + ": not a results table");
  std::vector<ResultRow> rows;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& f = records[i].fields;
    if (f.size() != 6) throw FormatError(path.string() + ": ragged row at line " + std::to_string(records[i].line));
    rows.push_back({f[0], f[1], f[2], f[3], f[4], parse_metric_value(f[5])});
  }
  return rows;
}

void write_classification_report(const std::filesystem::path& path, const ClassMetrics& m,
                                 const std::vector<std::string>& labels) {
  std::ostringstream out;
  write_csv_row(out, {"label", "precision", "recall", "f1", "support"});
  for (std::size_t c = 0; c < m.support.size(); ++c)
    write_csv_row(out, {labels.at(c), format_double(m.precision[c]), format_double(m.recall[c]),
                        format_double(m.f1[c]), std::to_string(m.support[c])});
  // Summary rows leave support empty so the column sums to the test size.
  write_csv_row(out, {"macro", format_double(m.macro_precision), format_double(m.macro_recall),
                      format_double(m.macro_f1), ""});
  write_csv_row(out, {"weighted", format_double(m.weighted_precision), format_double(m.weighted_recall),
                      format_double(m.weighted_f1), ""});
  write_csv_row(out, {"accuracy", "", "", format_double(m.accuracy), ""});
  write_file_atomic(path, out.str());
}

void write_long_csv(const std::filesystem::path& path, std::string_view key_name, std::string_view stage_name,
                    const std::vector<LongRow>& rows) {
  std::ostringstream out;
  write_csv_row(out, {std::string(key_name), std::string(stage_name), "metric", "value"});
  for (const auto& r : rows) write_csv_row(out, {r.key, r.stage, r.metric, format_double(r.value)});
  write_file_atomic(path, out.str());
}

// ---------------------------------------------------------------------------
// SVG
// ---------------------------------------------------------------------------

std::string xml_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

namespace {

// Fixed palette; series beyond it cycle.
constexpr const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string fixed(double v) {
  // Two decimals are plenty for pixel coordinates and keep output stable.
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string render_svg(const LineChart& chart) {
  constexpr double width = 640, height = 400;
  constexpr double left = 70, right = 170, top = 40, bottom = 60;
  const double plot_w = width - left - right, plot_h = height - top - bottom;

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : chart.series)
    for (double v : s.y)
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  if (!std::isfinite(lo)) lo = 0, hi = 1;
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const std::size_t nx = chart.x_ticks.size();
  auto px = [&](std::size_t i) { return left + (nx <= 1 ? plot_w / 2 : plot_w * static_cast<double>(i) / static_cast<double>(nx - 1)); };
  auto py = [&](double v) { return top + plot_h * (1.0 - (v - lo) / (hi - lo)); };

  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
    << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n"
    << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
    << xml_escape(chart.title) << "</text>\n";

  // Axes
  o << "<g stroke=\"black\" stroke-width=\"1\">\n"
    << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w << "\" y2=\"" << top + plot_h << "\"/>\n"
    << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h << "\"/>\n"
    << "</g>\n";
  o << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (std::size_t i = 0; i < nx; ++i)
    o << "<text x=\"" << fixed(px(i)) << "\" y=\"" << fixed(top + plot_h + 16) << "\" text-anchor=\"middle\">"
      << xml_escape(chart.x_ticks[i]) << "</text>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = lo + (hi - lo) * t / 4.0;
    o << "<text x=\"" << fixed(left - 6) << "\" y=\"" << fixed(py(v) + 4) << "\" text-anchor=\"end\">"
      << xml_escape(format_double(std::round(v * 1e4) / 1e4)) << "</text>\n";
  }
  o << "</g>\n";
  o << "<text x=\"" << fixed(left + plot_w / 2) << "\" y=\"" << fixed(height - 16)
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(chart.x_label) << "</text>\n";
  o << "<text x=\"16\" y=\"" << fixed(top + plot_h / 2) << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 "
    << fixed(top + plot_h / 2) << ")\">" << xml_escape(chart.y_label) << "</text>\n";

  for (std::size_t s = 0; s < chart.series.size(); ++s) {
    const auto& series = chart.series[s];
    const char* color = kColors[s % std::size(kColors)];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" data-series=\""
      << xml_escape(series.name) << "\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < series.y.size() && i < nx; ++i) {
      if (!std::isfinite(series.y[i])) continue;
      if (!first) o << ' ';
      o << fixed(px(i)) << ',' << fixed(py(series.y[i]));
      first = false;
    }
    o << "\"/>\n";
  }

  // Legend
  o << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (std::size_t s = 0; s < chart.series.size(); ++s) {
    const double y = top + 14.0 * static_cast<double>(s);
    const double x = left + plot_w + 16;
    o << "<rect x=\"" << fixed(x) << "\" y=\"" << fixed(y) << "\" width=\"10\" height=\"10\" fill=\""
      << kColors[s % std::size(kColors)] << "\"/>"
      << "<text x=\"" << fixed(x + 14) << "\" y=\"" << fixed(y + 9) << "\">" << xml_escape(chart.series[s].name)
      << "</text>\n";
  }
  o << "</g>\n</svg>\n";
  return o.str();
}

}  // namespace adaptoml
