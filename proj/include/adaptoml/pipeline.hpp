#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "adaptoml/adaptation.hpp"
#include "adaptoml/persistence.hpp"
#include "adaptoml/search.hpp"

namespace adaptoml {

/// Everything a run needs. Field names double as the keys of the JSON
/// config document accepted by the service.
struct PipelineConfig {
  // Mandatory
  std::string data_path;
  std::string label_column;
  std::string personalization_column;
  Task task = Task::classification;

  // Data preprocessing
  std::string impute = "mean";  // "none" turns imputation off
  double test_frac = 0.2;
  double val_frac = 0.2;
  bool stratify = false;
  std::string normalization = "grid";  // on | off | grid

  // Feature engineering
  bool feature_extraction = false;
  std::size_t pca_components = 0;  // 0: min(rows, cols)
  bool feature_selection = false;
  std::string selection = "variance:0";  // variance:<t> | top_k:<k>
  std::string export_features;           // "" | csv | bundle

  // Classifiers and regressors
  std::vector<std::string> families;  // empty: every family of the task
  std::string criterion;              // empty: task default
  bool fit = true;
  std::string predict_path;
  std::string partial_fit_path;
  std::size_t sessions = 4;
  bool adapt = false;
  double user_train_frac = 0.5;
  std::vector<std::string> model_paths;

  std::string out_dir;  // empty: ./adaptoml_out/<timestamp>
  std::uint64_t seed = 42;

  bool imputation_enabled() const { return impute != "none"; }
  bool predict_enabled() const { return !predict_path.empty(); }
  bool partial_fit_enabled() const { return !partial_fit_path.empty(); }

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

struct FieldError {
  std::string field;
  std::string message;
};

/// ConfigError carrying one entry per offending field.
class ConfigValidationError : public ConfigError {
 public:
  explicit ConfigValidationError(std::vector<FieldError> errors);
  const std::vector<FieldError>& errors() const noexcept { return errors_; }

 private:
  std::vector<FieldError> errors_;
};

std::vector<FieldError> validation_errors(const PipelineConfig& cfg);
/// Throws ConfigValidationError.
void validate(const PipelineConfig& cfg);

std::string config_to_json(const PipelineConfig& cfg);
/// Unknown keys, wrong types and missing mandatory fields are reported per
/// field (ConfigValidationError). Semantic validation is separate.
PipelineConfig config_from_json(std::string_view text);

SelectionPolicy parse_selection(std::string_view text);
std::vector<Family> resolve_families(const PipelineConfig& cfg);
Criterion resolve_criterion(const PipelineConfig& cfg);

// ---------------------------------------------------------------------------
// Command line
// ---------------------------------------------------------------------------

struct CliParse {
  PipelineConfig config;
  bool exit_now = false;  // --help / --print-config handled
  std::string output;     // text to print when exit_now
  std::size_t threads = 0;
};

/// Throws ConfigError (usage error) for missing mandatory flags, unknown
/// flags or unparseable values.
CliParse parse_cli(int argc, const char* const* argv);

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

struct Progress {
  std::string stage;
  std::size_t done = 0;
  std::size_t total = 0;
};

struct RunOptions {
  std::size_t threads = 1;
  std::function<void(const Progress&)> progress;
  std::function<void(const std::string&)> warn;
};

struct LoadedModelEval {
  std::string path;
  std::vector<std::pair<std::string, double>> test;
};

struct RunOutputs {
  std::vector<std::string> stages;  // executed stages in order
  std::filesystem::path out_dir;
  std::optional<SearchResult> search;
  std::optional<ModelBundle> model;  // the model used by later stages
  std::vector<ModelBundle> loaded;
  std::vector<LoadedModelEval> loaded_eval;
  std::optional<AdaptationResult> adaptation;
  std::optional<SessionReport> sessions;
  std::optional<OmegaMetrics> omega;
  std::size_t predicted_rows = 0;
  std::vector<std::string> warnings;
  std::vector<std::filesystem::path> files;  // every emitted file
};

/// A stage failure; what() is "<stage>: <cause>".
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& cause, std::vector<std::filesystem::path> written);
  const std::string& stage() const noexcept { return stage_; }
  const std::vector<std::filesystem::path>& written() const noexcept { return written_; }

 private:
  std::string stage_;
  std::vector<std::filesystem::path> written_;
};

/// Default output directory: ./adaptoml_out/<UTC timestamp>.
std::filesystem::path default_out_dir();

/// Runs the configured stages. Configuration problems throw
/// ConfigValidationError before any stage starts; later failures throw
/// StageError.
RunOutputs run_pipeline(const PipelineConfig& cfg, const RunOptions& options = {});

struct RoutedModels {
  const ModelBundle* base = nullptr;
  std::vector<std::pair<std::string, const ModelBundle*>> users;  // adapted per user
  std::optional<std::string> personalization_column;
};

/// Writes `out_path` (predictions.csv): the input's original columns, a
/// "prediction" column and, when user routing is active, "model_used".
/// Returns the number of rows.
std::size_t predict_file(const RoutedModels& models, const std::filesystem::path& x_pred_path,
                         const std::filesystem::path& out_path);

}  // namespace adaptoml
