#include "adaptoml/features.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace adaptoml {

std::string SelectionPolicy::describe() const {
  if (kind == Kind::variance) return "variance(" + format_double(threshold) + ")";
  return "top_k(" + std::to_string(k) + ")";
}

std::vector<std::size_t> FeatureMask::kept_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < keep.size(); ++j)
    if (keep[j]) out.push_back(j);
  return out;
}

Matrix FeatureMask::apply(const Matrix& x) const {
  if (x.cols() != keep.size())
    throw SignatureError("feature mask expects " + std::to_string(keep.size()) + " columns, got " +
                         std::to_string(x.cols()));
  const auto idx = kept_indices();
  return x.select_cols(idx);
}

std::vector<std::string> FeatureMask::apply_names(const std::vector<std::string>& names) const {
  std::vector<std::string> out;
  for (auto j : kept_indices()) out.push_back(names.at(j));
  return out;
}

std::vector<double> column_variances(const Matrix& x) {
  std::vector<double> out(x.cols(), 0.0);
  if (x.rows() == 0) return out;
  const double n = static_cast<double>(x.rows());
  for (std::size_t j = 0; j < x.cols(); ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) mean += x(i, j);
    mean /= n;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) ss += (x(i, j) - mean) * (x(i, j) - mean);
    out[j] = ss / n;
  }
  return out;
}

namespace {

double anova_f(const Matrix& x, std::size_t j, std::span<const double> y) {
  std::map<double, std::pair<double, std::size_t>> groups;  // class -> (sum, count)
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto& g = groups[y[i]];
    g.first += x(i, j);
    ++g.second;
    total += x(i, j);
  }
  const std::size_t n = x.rows();
  const std::size_t k = groups.size();
  if (k < 2 || n <= k) return 0.0;
  const double grand = total / static_cast<double>(n);
  double ssb = 0.0;
  for (const auto& [cls, g] : groups) {
    const double m = g.first / static_cast<double>(g.second);
    ssb += static_cast<double>(g.second) * (m - grand) * (m - grand);
  }
  double ssw = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& g = groups[y[i]];
    const double m = g.first / static_cast<double>(g.second);
    ssw += (x(i, j) - m) * (x(i, j) - m);
  }
  if (ssw == 0.0) return ssb > 0.0 ? std::numeric_limits<double>::max() : 0.0;
  const double f = (ssb / static_cast<double>(k - 1)) / (ssw / static_cast<double>(n - k));
  return std::isfinite(f) ? f : std::numeric_limits<double>::max();
}

double abs_pearson(const Matrix& x, std::size_t j, std::span<const double> y) {
  const std::size_t n = x.rows();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x(i, j);
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x(i, j) - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return std::min(1.0, std::abs(sxy) / std::sqrt(sxx * syy));
}

}  // namespace

std::vector<double> relevance_scores(const Matrix& x, std::span<const double> y, Task task) {
  if (y.size() != x.rows()) throw DataError("relevance_scores: X and y row counts differ");
  std::vector<double> out(x.cols());
  for (std::size_t j = 0; j < x.cols(); ++j)
    out[j] = task == Task::classification ? anova_f(x, j, y) : abs_pearson(x, j, y);
  return out;
}

FeatureMask select_features(const Matrix& x, std::span<const double> y,
                            const SelectionPolicy& policy, Task task) {
  if (x.rows() == 0 || x.cols() == 0) throw DataError("select_features: empty matrix");
  FeatureMask mask;
  mask.policy = policy.describe();
  mask.keep.assign(x.cols(), false);
  if (policy.kind == SelectionPolicy::Kind::variance) {
    mask.scores = column_variances(x);
    for (std::size_t j = 0; j < x.cols(); ++j) mask.keep[j] = mask.scores[j] > policy.threshold;
    if (std::none_of(mask.keep.begin(), mask.keep.end(), [](bool b) { return b; }))
      throw DataError("feature selection eliminated every column (variance threshold " +
                      format_double(policy.threshold) + ")");
  } else {
    if (policy.k < 1 || policy.k > x.cols())
      throw ConfigError("top_k: k=" + std::to_string(policy.k) + " outside [1, " +
                        std::to_string(x.cols()) + "]");
    mask.scores = relevance_scores(x, y, task);
    std::vector<std::size_t> order(x.cols());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return mask.scores[a] > mask.scores[b]; });
    for (std::size_t i = 0; i < policy.k; ++i) mask.keep[order[i]] = true;
  }
  return mask;
}

// ---------------------------------------------------------------------------
// PCA
// ---------------------------------------------------------------------------

PcaModel pca_fit(const Matrix& x, std::size_t k) {
  const std::size_t n = x.rows(), d = x.cols();
  if (n < 2) throw DataError("PCA needs at least 2 rows");
  if (k < 1 || k > std::min(n, d))
    throw ConfigError("PCA components k=" + std::to_string(k) + " outside [1, " +
                      std::to_string(std::min(n, d)) + "]");

  PcaModel model;
  model.means.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) model.means[j] += x(i, j);
  for (auto& m : model.means) m /= static_cast<double>(n);

  Eigen::MatrixXd centred(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j)
      centred(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x(i, j) - model.means[j];
  const Eigen::MatrixXd cov = (centred.transpose() * centred) / static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw TrainingError("PCA eigendecomposition failed");
  const auto& values = solver.eigenvalues();    // ascending
  const auto& vectors = solver.eigenvectors();  // columns

  model.components = Matrix(k, d);
  model.explained_variance.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    const auto src = static_cast<Eigen::Index>(d - 1 - c);
    model.explained_variance[c] = std::max(0.0, values(src));
    std::size_t arg = 0;
    for (std::size_t j = 1; j < d; ++j)
      if (std::abs(vectors(static_cast<Eigen::Index>(j), src)) >
          std::abs(vectors(static_cast<Eigen::Index>(arg), src)))
        arg = j;
    const double sign = vectors(static_cast<Eigen::Index>(arg), src) < 0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < d; ++j)
      model.components(c, j) = sign * vectors(static_cast<Eigen::Index>(j), src);
  }
  // Clamping can only reorder equal values; keep the sequence monotone.
  for (std::size_t c = 1; c < k; ++c)
    model.explained_variance[c] = std::min(model.explained_variance[c], model.explained_variance[c - 1]);
  return model;
}

Matrix pca_transform(const PcaModel& model, const Matrix& x) {
  if (x.cols() != model.input_dim())
    throw SignatureError("PCA expects " + std::to_string(model.input_dim()) + " columns, got " +
                         std::to_string(x.cols()));
  const std::size_t k = model.output_dim(), d = model.input_dim();
  Matrix out(x.rows(), k);
  std::vector<double> centred(d);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < d; ++j) centred[j] = x(i, j) - model.means[j];
    for (std::size_t c = 0; c < k; ++c) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) acc += centred[j] * model.components(c, j);
      out(i, c) = acc;
    }
  }
  return out;
}

Matrix PcaModel::inverse_transform(const Matrix& z) const {
  if (z.cols() != output_dim()) throw SignatureError("PCA inverse: component count mismatch");
  Matrix out(z.rows(), input_dim());
  for (std::size_t i = 0; i < z.rows(); ++i)
    for (std::size_t j = 0; j < input_dim(); ++j) {
      double acc = means[j];
      for (std::size_t c = 0; c < output_dim(); ++c) acc += z(i, c) * components(c, j);
      out(i, j) = acc;
    }
  return out;
}

std::vector<std::string> PcaModel::output_names() const {
  std::vector<std::string> out;
  for (std::size_t c = 0; c < output_dim(); ++c) out.push_back("pc" + std::to_string(c + 1));
  return out;
}

Matrix apply_feature_stage(const FeatureStage& stage, const Matrix& x) {
  if (const auto* mask = std::get_if<FeatureMask>(&stage)) return mask->apply(x);
  if (const auto* pca = std::get_if<PcaModel>(&stage)) return pca_transform(*pca, x);
  return x;
}

std::vector<std::string> feature_stage_names(const FeatureStage& stage,
                                             const std::vector<std::string>& input_names) {
  if (const auto* mask = std::get_if<FeatureMask>(&stage)) return mask->apply_names(input_names);
  if (const auto* pca = std::get_if<PcaModel>(&stage)) return pca->output_names();
  return input_names;
}

std::string feature_stage_label(const FeatureStage& stage) {
  if (const auto* mask = std::get_if<FeatureMask>(&stage)) return "select:" + mask->policy;
  if (const auto* pca = std::get_if<PcaModel>(&stage))
    return "pca(" + std::to_string(pca->output_dim()) + ")";
  return "none";
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

FeatureFormat parse_feature_format(std::string_view text) {
  if (text == "csv") return FeatureFormat::csv;
  if (text == "bundle") return FeatureFormat::bundle;
  throw ConfigError("unknown feature export format '" + std::string(text) + "' (expected csv or bundle)");
}

namespace {

constexpr char kMagic[4] = {'A', 'M', 'X', 'F'};
constexpr std::uint32_t kBundleVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  Reader(std::string_view data, std::string path) : data_(data), path_(std::move(path)) {}

  std::string_view take(std::size_t n) {
    if (pos_ + n > data_.size()) throw FormatError(path_ + ": truncated feature bundle");
    auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint64_t uint(int bytes) {
    auto b = take(static_cast<std::size_t>(bytes));
    std::uint64_t v = 0;
    for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[static_cast<std::size_t>(i)]);
    return v;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  std::string_view data_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

void export_features(const Matrix& x, const std::vector<std::string>& headers,
                     const std::filesystem::path& path, FeatureFormat format) {
  if (headers.size() != x.cols()) throw DataError("export_features: header count differs from column count");
  std::string out;
  if (format == FeatureFormat::csv) {
    std::ostringstream ss;
    write_csv_row(ss, headers);
    std::vector<std::string> fields(x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
      for (std::size_t j = 0; j < x.cols(); ++j) fields[j] = format_double(x(i, j));
      write_csv_row(ss, fields);
    }
    out = ss.str();
  } else {
    out.append(kMagic, 4);
    put_u32(out, kBundleVersion);
    put_u32(out, static_cast<std::uint32_t>(x.rows()));
    put_u32(out, static_cast<std::uint32_t>(x.cols()));
    for (const auto& h : headers) {
      put_u32(out, static_cast<std::uint32_t>(h.size()));
      out += h;
    }
    for (double v : x.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  write_file_atomic(path, out);
}

FeatureTable load_feature_bundle(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  Reader in(data, path.string());
  if (in.take(4) != std::string_view(kMagic, 4)) throw FormatError(path.string() + ": not a feature bundle (bad magic)");
  const auto version = in.uint(4);
  if (version != kBundleVersion)
    throw FormatError(path.string() + ": unsupported feature bundle version " + std::to_string(version));
  const auto rows = static_cast<std::size_t>(in.uint(4));
  const auto cols = static_cast<std::size_t>(in.uint(4));
  FeatureTable table;
  for (std::size_t j = 0; j < cols; ++j) {
    const auto len = static_cast<std::size_t>(in.uint(4));
    table.headers.emplace_back(in.take(len));
  }
  table.values = Matrix(rows, cols);
  for (std::size_t i = 0; i < rows * cols; ++i) table.values.data()[i] = std::bit_cast<double>(in.uint(8));
  if (!in.done()) throw FormatError(path.string() + ": trailing bytes after feature bundle");
  return table;
}

}  // namespace adaptoml
