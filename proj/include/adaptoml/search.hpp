#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "adaptoml/dataset.hpp"
#include "adaptoml/models.hpp"
#include "adaptoml/reporting.hpp"

namespace adaptoml {

/// Encoded, feature-processed matrices for one train/validation/test split.
struct PreparedData {
  Task task = Task::classification;
  std::size_t n_classes = 0;  // 0 for regression
  std::vector<std::string> feature_names;
  Matrix x_train, x_val, x_test;
  std::vector<double> y_train, y_val, y_test;
};

struct Candidate {
  std::size_t id = 0;
  bool normalize = false;
  ModelSpec spec;

  /// "normalize=on;k=3" style text used in results.csv.
  std::string hyperparams_text() const;
};

/// Hyperparameter grid of one family in enumeration order.
std::vector<Hyperparams> default_family_grid(Family family);

/// Families in canonical order, then grid order, normalization variants
/// innermost. Throws ConfigError for an empty or task-incompatible family set.
std::vector<Candidate> default_grid(Task task, const std::vector<Family>& families,
                                    const std::vector<bool>& normalization = {true, false},
                                    std::uint64_t seed = 42);

struct CandidateResult {
  Candidate candidate;
  bool failed = false;
  std::string error;
  std::vector<std::pair<std::string, double>> validation;
  std::vector<std::pair<std::string, double>> test;
  double validation_score = 0.0;
  double test_score = 0.0;
  double wall_seconds = 0.0;

  double metric(std::string_view split, std::string_view name) const;
};

struct SearchResult {
  std::vector<CandidateResult> results;  // index == candidate id
  std::size_t best_id = 0;
  Criterion criterion;

  const CandidateResult& best() const { return results.at(best_id); }
  /// Best non-failed candidate whose family supports partial_fit.
  std::optional<std::size_t> best_incremental() const;
  /// Long-format rows for results.csv.
  std::vector<ResultRow> rows(Task task) const;
};

struct SearchConfig {
  std::vector<Candidate> candidates;
  Criterion criterion;
  std::size_t threads = 1;
  /// Called after each finished candidate with (done, total).
  std::function<void(std::size_t, std::size_t)> progress;
};

/// Preprocessing fitted on train only, model fitted on transformed train,
/// scored on validation and test. Failures are captured, never thrown.
CandidateResult evaluate_candidate(const Candidate& c, const PreparedData& data, const Criterion& criterion);

/// Throws ConfigError when there are no candidates or the validation split is
/// empty, TrainingError when every candidate failed.
SearchResult grid_search(const PreparedData& data, const SearchConfig& config);

/// First index attaining the optimum of `scores` under the criterion; NaN
/// entries and entries flagged in `skip` are ignored.
std::optional<std::size_t> argbest(const std::vector<double>& scores, const std::vector<bool>& skip,
                                   const Criterion& criterion);

struct SelectedModel {
  Candidate candidate;
  std::optional<Normalizer> normalizer;
  TrainedModel model;

  Matrix transform(const Matrix& x) const { return normalizer ? normalizer->transform(x) : x; }
  std::vector<double> predict(const Matrix& x) const { return adaptoml::predict(model, transform(x)); }
};

/// Refit candidate `id` (default: the winner) on train and validation rows.
SelectedModel select_best(const SearchResult& r, const PreparedData& data,
                          std::optional<std::size_t> id = std::nullopt);

}  // namespace adaptoml
