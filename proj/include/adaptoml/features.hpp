#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "adaptoml/common.hpp"

namespace adaptoml {

struct SelectionPolicy {
  enum class Kind { variance, top_k };
  Kind kind = Kind::variance;
  double threshold = 0.0;  // variance: drop columns with variance <= threshold
  std::size_t k = 1;       // top_k

  static SelectionPolicy variance(double t) { return {Kind::variance, t, 1}; }
  static SelectionPolicy top_k(std::size_t k) { return {Kind::top_k, 0.0, k}; }

  std::string describe() const;
};

struct FeatureMask {
  std::vector<bool> keep;
  std::vector<double> scores;
  std::string policy;

  std::vector<std::size_t> kept_indices() const;
  Matrix apply(const Matrix& x) const;
  std::vector<std::string> apply_names(const std::vector<std::string>& names) const;

  friend bool operator==(const FeatureMask&, const FeatureMask&) = default;
};

/// Per-column relevance: ANOVA F-statistic against class labels
/// (classification) or |Pearson correlation| with the target (regression).
/// Undefined statistics score 0; a perfectly separating column whose
/// within-class scatter is zero scores the largest finite double.
std::vector<double> relevance_scores(const Matrix& x, std::span<const double> y, Task task);

/// Population variance of each column.
std::vector<double> column_variances(const Matrix& x);

FeatureMask select_features(const Matrix& x, std::span<const double> y,
                            const SelectionPolicy& policy, Task task);

/// Principal axes of the centred data.
struct PcaModel {
  Matrix components;                        // k x d, rows orthonormal
  std::vector<double> explained_variance;   // k, non-increasing
  std::vector<double> means;                // d

  std::size_t input_dim() const noexcept { return means.size(); }
  std::size_t output_dim() const noexcept { return components.rows(); }
  Matrix inverse_transform(const Matrix& z) const;
  std::vector<std::string> output_names() const;

  friend bool operator==(const PcaModel&, const PcaModel&) = default;
};

/// Eigenvectors of the population covariance, descending eigenvalue; each
/// component's largest-magnitude entry is made positive. 1 <= k <= min(N, d), N >= 2.
PcaModel pca_fit(const Matrix& x, std::size_t k);

/// (x - means) * components^T
Matrix pca_transform(const PcaModel& model, const Matrix& x);

/// Optional feature step of a fitted preprocessing chain.
using FeatureStage = std::variant<std::monostate, FeatureMask, PcaModel>;

Matrix apply_feature_stage(const FeatureStage& stage, const Matrix& x);
std::vector<std::string> feature_stage_names(const FeatureStage& stage,
                                             const std::vector<std::string>& input_names);
std::string feature_stage_label(const FeatureStage& stage);

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

enum class FeatureFormat { csv, bundle };

FeatureFormat parse_feature_format(std::string_view text);

struct FeatureTable {
  std::vector<std::string> headers;
  Matrix values;
};

/// csv: header + shortest round-trip decimals. bundle: "AMXF" v1 binary,
/// little-endian f64, bit-exact. Throws FormatError on unwritable paths.
void export_features(const Matrix& x, const std::vector<std::string>& headers,
                     const std::filesystem::path& path, FeatureFormat format);

FeatureTable load_feature_bundle(const std::filesystem::path& path);

}  // namespace adaptoml
