#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "adaptoml/dataset.hpp"
#include "adaptoml/features.hpp"
#include "adaptoml/models.hpp"

namespace adaptoml {

inline constexpr int kBundleFormatVersion = 1;

/// Everything between a raw table and the model's input matrix.
struct Preprocessing {
  std::string label_column;
  std::optional<std::string> personalization_column;
  Imputer imputer;  // policy none: no fills
  FeatureEncoder encoder;
  FeatureStage feature_stage;
  std::optional<Normalizer> normalizer;
};

/// A trained model plus the preprocessing chain it expects.
struct ModelBundle {
  int format_version = kBundleFormatVersion;
  std::string created_utc;
  Task task = Task::classification;
  LabelEncoding labels;  // empty for regression
  Preprocessing preprocessing;
  TrainedModel model;

  /// Raw rows -> model input. Checks the column set against the encoder
  /// before touching any value (SignatureError).
  Matrix transform(const Dataset& raw) const;

  /// Model input after the feature stage but before normalization.
  Matrix features(const Dataset& raw) const;

  /// Class indices (classification) or values (regression).
  std::vector<double> predict(const Dataset& raw) const;

  /// Predictions as output text: class tokens or shortest round-trip numbers.
  std::vector<std::string> predict_text(const Dataset& raw) const;
  std::string decode(double prediction) const;

  /// Encoded targets of `raw`'s label column.
  std::vector<double> targets(const Dataset& raw) const;

  /// Throws FormatError when the chain and model disagree on shapes or names.
  void validate() const;
};

std::string bundle_to_json(const ModelBundle& bundle);
/// `source` names the origin in error messages.
ModelBundle bundle_from_json(std::string_view text, const std::string& source = "<memory>");

/// Atomic write (temp file then rename). Throws FormatError when unwritable.
void save_model(const ModelBundle& bundle, const std::filesystem::path& path);

/// Throws FormatError naming the path for unreadable, malformed,
/// wrong-version or shape-inconsistent files.
ModelBundle load_model(const std::filesystem::path& path);
std::vector<ModelBundle> load_models(const std::vector<std::filesystem::path>& paths);

}  // namespace adaptoml
