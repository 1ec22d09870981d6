#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "adaptoml/common.hpp"

namespace adaptoml {

enum class Family { gaussian_nb, sgd_classifier, knn_classifier, decision_tree, sgd_regressor, knn_regressor };

std::string_view to_string(Family family) noexcept;
/// Throws ConfigError listing the known families.
Family parse_family(std::string_view text);

/// Canonical enumeration order of the zoo.
const std::vector<Family>& all_families();
Task task_of(Family family) noexcept;
bool incremental_capable(Family family) noexcept;

/// Hyperparameter name -> value; std::map keeps keys sorted, which makes
/// canonical_text() stable.
using Hyperparams = std::map<std::string, double>;

/// "k=3;learning_rate=0.1" (keys sorted, shortest round-trip numbers).
std::string canonical_text(const Hyperparams& params);

struct ModelSpec {
  Family family = Family::gaussian_nb;
  Hyperparams hyperparameters;
  std::uint64_t seed = 42;

  /// Spec with every documented hyperparameter present; `overrides` win.
  static ModelSpec make(Family family, const Hyperparams& overrides = {}, std::uint64_t seed = 42);

  bool incremental_capable() const noexcept { return adaptoml::incremental_capable(family); }
  Task task() const noexcept { return task_of(family); }
  double param(std::string_view name) const;

  /// Throws ConfigError for unknown names or out-of-range values.
  void validate() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

// Family-specific parameter blocks ------------------------------------------

/// Per-class sufficient statistics (count, mean, sum of squared deviations)
/// plus pooled per-feature statistics for the variance-smoothing term.
struct NaiveBayesParams {
  std::vector<double> class_count;   // K
  Matrix mean;                       // K x d
  Matrix m2;                         // K x d
  double total_count = 0.0;
  std::vector<double> feature_mean;  // d
  std::vector<double> feature_m2;    // d

  std::vector<double> priors() const;
  Matrix variances() const;  // without smoothing
  double epsilon(double var_smoothing) const;

  friend bool operator==(const NaiveBayesParams&, const NaiveBayesParams&) = default;
};

/// One weight row per output: a single row for regression and binary
/// classification (positive class = 1), one row per class otherwise.
struct LinearParams {
  Matrix weights;
  std::vector<double> bias;

  friend bool operator==(const LinearParams&, const LinearParams&) = default;
};

struct KnnParams {
  Matrix rows;
  std::vector<double> targets;

  friend bool operator==(const KnnParams&, const KnnParams&) = default;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // class index predicted at a leaf

  bool leaf() const noexcept { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct TreeParams {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  friend bool operator==(const TreeParams&, const TreeParams&) = default;
};

using ModelParams = std::variant<NaiveBayesParams, LinearParams, KnnParams, TreeParams>;

/// Hash of the ordered feature names.
std::uint64_t feature_signature(const std::vector<std::string>& names);

class TrainedModel {
 public:
  /// Fresh, unfitted model. `n_classes` is required (>= 1) for classifiers.
  static TrainedModel untrained(ModelSpec spec, std::vector<std::string> feature_names,
                                std::size_t n_classes = 0);

  /// Rebuild from stored parameters; validates shapes. Used by persistence.
  static TrainedModel restore(ModelSpec spec, std::vector<std::string> feature_names,
                              std::size_t n_classes, ModelParams params);

  const ModelSpec& spec() const noexcept { return spec_; }
  Family family() const noexcept { return spec_.family; }
  Task task() const noexcept { return spec_.task(); }
  std::size_t n_classes() const noexcept { return n_classes_; }
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  std::uint64_t signature() const noexcept { return feature_signature(feature_names_); }
  bool fitted() const noexcept { return fitted_; }
  const ModelParams& params() const noexcept { return params_; }

  friend bool operator==(const TrainedModel&, const TrainedModel&) = default;

 private:
  friend struct ModelAccess;

  ModelSpec spec_;
  std::vector<std::string> feature_names_;
  std::size_t n_classes_ = 0;
  ModelParams params_;
  bool fitted_ = false;
};

/// Batch fit. Classification targets are class indices stored as doubles;
/// the class count defaults to max(y) + 1. Empty `feature_names` default to
/// x0..x{d-1}. Deterministic given spec.seed.
TrainedModel fit(const ModelSpec& spec, const Matrix& x, std::span<const double> y,
                 std::vector<std::string> feature_names = {},
                 std::optional<std::size_t> n_classes = std::nullopt);

/// Incremental update; returns the updated model and leaves `m` untouched.
/// Naive Bayes merges sufficient statistics, SGD makes one pass in row
/// order, kNN appends rows. Throws CapabilityError for decision_tree.
TrainedModel partial_fit(const TrainedModel& m, const Matrix& x, std::span<const double> y,
                         std::optional<std::size_t> n_classes = std::nullopt);

/// Class indices (classification) or values (regression). Ties resolve to
/// the smallest class index.
std::vector<double> predict(const TrainedModel& m, const Matrix& x);

inline TrainedModel clone(const TrainedModel& m) { return m; }

}  // namespace adaptoml
