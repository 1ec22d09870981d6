#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "adaptoml/common.hpp"

namespace adaptoml {

enum class ColumnKind { numeric, categorical };

std::string_view to_string(ColumnKind kind) noexcept;

struct ColumnInfo {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;

  friend bool operator==(const ColumnInfo&, const ColumnInfo&) = default;
};

/// Column names and kinds, plus the label / personalization roles.
/// `label_column` is empty until roles are assigned with with_roles().
struct Schema {
  std::vector<ColumnInfo> columns;
  std::string label_column;
  std::optional<std::string> personalization_column;

  std::optional<std::size_t> find(std::string_view name) const;
  /// Throws DataError naming the column when absent.
  std::size_t index_of(std::string_view name) const;

  Schema with_roles(std::string label, std::optional<std::string> personalization) const;

  /// Checks name uniqueness and role consistency.
  void validate() const;

  friend bool operator==(const Schema&, const Schema&) = default;
};

/// A cell is missing, a number (numeric columns) or a category token.
using Cell = std::variant<std::monostate, double, std::string>;

inline bool is_missing(const Cell& c) noexcept { return std::holds_alternative<std::monostate>(c); }

/// Text form of a cell: numbers use shortest round-trip formatting,
/// missing cells are empty.
std::string cell_text(const Cell& c);

using Row = std::vector<Cell>;

/// Immutable table of typed cells.
class Dataset {
 public:
  Dataset() = default;
  /// Throws DataError when a row length differs from the column count.
  Dataset(Schema schema, std::vector<Row> rows);

  const Schema& schema() const noexcept { return schema_; }
  const std::vector<Row>& rows() const noexcept { return rows_; }
  std::size_t size() const noexcept { return rows_.size(); }
  std::size_t column_count() const noexcept { return schema_.columns.size(); }
  const Cell& at(std::size_t row, std::size_t col) const { return rows_[row][col]; }

  std::size_t missing_count() const;
  std::size_t missing_count(std::size_t col) const;

  Dataset select_rows(std::span<const std::size_t> indices) const;
  Dataset with_schema(Schema schema) const;
  Dataset drop_column(std::string_view name) const;

  /// Text tokens of a column (see cell_text).
  std::vector<std::string> tokens(std::string_view column) const;
  /// Values of a column; throws DataError on missing or non-numeric cells.
  std::vector<double> numeric_values(std::string_view column) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  Schema schema_;
  std::vector<Row> rows_;
};

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

using MissingMarkers = std::set<std::string, std::less<>>;

/// {"", "NA", "NaN", "nan"}
const MissingMarkers& default_missing_markers();

/// Header plus string cells; std::nullopt marks a missing cell.
struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::optional<std::string>>> rows;
};

RawTable parse_raw_table(std::string_view text, const MissingMarkers& markers,
                         std::string_view source = "<memory>");

/// A column is numeric iff every non-missing cell parses as a decimal number.
Schema infer_schema(const RawTable& table);

Dataset dataset_from_raw(const RawTable& table);

Dataset load_csv(const std::filesystem::path& path,
                 const MissingMarkers& markers = default_missing_markers());

/// Parse CSV text directly (same rules as load_csv).
Dataset parse_dataset(std::string_view text,
                      const MissingMarkers& markers = default_missing_markers());

// ---------------------------------------------------------------------------
// Imputation
// ---------------------------------------------------------------------------

struct ImputePolicy {
  enum class Kind { mean, median, most_frequent, constant, none };
  Kind kind = Kind::mean;
  std::string constant_value;  // used by Kind::constant

  /// "mean", "median", "most_frequent", "constant:<v>", "none".
  static ImputePolicy parse(std::string_view text);
  std::string to_string() const;

  friend bool operator==(const ImputePolicy&, const ImputePolicy&) = default;
};

/// Per-column fill values fitted on one dataset, re-applicable to others.
struct Imputer {
  ImputePolicy policy;
  std::vector<std::pair<std::string, Cell>> fills;

  const Cell* fill_for(std::string_view column) const;

  /// Replace missing cells by the stored fills. Throws DataError when a
  /// column has missing cells but no fill.
  Dataset apply(const Dataset& d) const;
};

/// Statistics per column over non-missing cells. Columns with nothing missing
/// need no statistic; a column that is missing entirely, or mean/median on a
/// categorical column that has gaps, is an error naming the column.
Imputer fit_imputer(const Dataset& d, const ImputePolicy& policy);

Dataset impute(const Dataset& d, const ImputePolicy& policy);

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

struct IndexSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

/// Seeded split of `n = strata.size()` row indices. The test part is carved
/// first, validation from the remainder. With `stratify`, rows are grouped by
/// their stratum token and each group contributes proportionally
/// (largest-remainder apportionment).
IndexSplit split_indices(const std::vector<std::string>& strata, double test_frac,
                         double val_frac, std::uint64_t seed, bool stratify);

struct SplitDataset {
  Dataset train;
  Dataset validation;
  Dataset test;
  std::uint64_t seed = 0;
  double test_frac = 0.0;
  double val_frac = 0.0;
  IndexSplit indices;
};

/// Stratification uses the schema's label column.
SplitDataset split(const Dataset& d, double test_frac, double val_frac, std::uint64_t seed,
                   bool stratify);

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

/// z-score with population statistics; degenerate (stddev 0) columns map to 0.
struct Normalizer {
  std::vector<double> mean;
  std::vector<double> stddev;

  bool degenerate(std::size_t col) const { return stddev[col] == 0.0; }
  Matrix transform(const Matrix& x) const;
};

Normalizer fit_normalizer(const Matrix& train);

/// Fit on `train`; returns the transformed train followed by each of `apply_to`.
std::pair<Normalizer, std::vector<Matrix>> normalize(const Matrix& train,
                                                     const std::vector<Matrix>& apply_to);

// ---------------------------------------------------------------------------
// Encoding
// ---------------------------------------------------------------------------

/// Distinct label tokens in lexicographic order.
class LabelEncoding {
 public:
  LabelEncoding() = default;
  explicit LabelEncoding(std::vector<std::string> sorted_tokens);

  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  std::size_t size() const noexcept { return tokens_.size(); }
  std::optional<std::size_t> index_of(std::string_view token) const;
  /// Throws DataError on an unknown token.
  std::size_t encode(std::string_view token) const;
  const std::string& decode(std::size_t index) const { return tokens_.at(index); }

  friend bool operator==(const LabelEncoding&, const LabelEncoding&) = default;

 private:
  std::vector<std::string> tokens_;
};

std::pair<LabelEncoding, std::vector<std::size_t>> encode_labels(
    const std::vector<std::string>& column);

/// One-hot layout of the feature columns: numeric columns pass through,
/// categorical columns expand to one indicator per known category
/// ("col=category", lexicographic). Unseen categories encode as all zeros.
struct EncodedColumn {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  std::vector<std::string> categories;

  friend bool operator==(const EncodedColumn&, const EncodedColumn&) = default;
};

class FeatureEncoder {
 public:
  FeatureEncoder() = default;
  explicit FeatureEncoder(std::vector<EncodedColumn> columns) : columns_(std::move(columns)) {}

  const std::vector<EncodedColumn>& columns() const noexcept { return columns_; }
  std::vector<std::string> feature_names() const;
  std::size_t width() const;

  /// Columns are looked up by name, so column order in `d` is free. Throws
  /// SignatureError for absent columns, DataError for missing cells.
  Matrix transform(const Dataset& d) const;

 private:
  std::vector<EncodedColumn> columns_;
};

/// Every column except the excluded ones becomes a feature.
FeatureEncoder fit_encoder(const Dataset& train, const std::vector<std::string>& excluded);

}  // namespace adaptoml
