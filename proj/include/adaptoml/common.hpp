#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace adaptoml {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Base for every failure the engine reports to a user.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (CSV, schema, shapes).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid run configuration or command line.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Operation not supported by a model family (e.g. partial_fit on a tree).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

/// Feature set of an input does not match what a model was trained on.
class SignatureError : public Error {
 public:
  using Error::Error;
};

/// Unreadable, malformed or wrong-version file.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Model training failed (divergence, non-finite input, ...).
class TrainingError : public Error {
 public:
  using Error::Error;
};

enum class Task { classification, regression };

std::string_view to_string(Task task) noexcept;
/// Throws ConfigError listing the accepted values.
Task parse_task(std::string_view text);

// ---------------------------------------------------------------------------
// Matrix
// ---------------------------------------------------------------------------

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double> column(std::size_t c) const;

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  const std::vector<double>& values() const noexcept { return data_; }

  void append_row(std::span<const double> values);
  Matrix select_rows(std::span<const std::size_t> indices) const;
  Matrix select_cols(std::span<const std::size_t> indices) const;

  /// Rows of `this` followed by rows of `other`; column counts must agree.
  Matrix vstack(const Matrix& other) const;

  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Random numbers
// ---------------------------------------------------------------------------

/// Seeded generator whose derived draws are bit-identical across standard
/// libraries (the std distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n), n > 0.
  std::size_t uniform_index(std::size_t n);

  /// Uniform double in [0, 1).
  double uniform01();

  double normal();

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// Text helpers
// ---------------------------------------------------------------------------

/// Shortest decimal string that parses back to the same double.
/// NaN prints as "nan", infinities as "inf" / "-inf".
std::string format_double(double value);

/// Strict decimal parse: the whole token must be a finite number.
bool parse_double(std::string_view text, double& out);

/// Parse a value written by format_double (accepts "nan", "inf", "-inf").
double parse_metric_value(std::string_view text);

std::string trim(std::string_view text);
std::vector<std::string> split_string(std::string_view text, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string to_hex(std::uint64_t value);

/// Current UTC time as ISO-8601 ("2024-01-01T00:00:00Z").
std::string utc_timestamp();

// ---------------------------------------------------------------------------
// CSV (RFC 4180)
// ---------------------------------------------------------------------------

struct CsvRecord {
  std::vector<std::string> fields;
  std::size_t line = 0;  // 1-based line where the record starts
};

/// Parse a whole CSV document. Handles quoted fields, doubled quotes,
/// embedded newlines and CRLF line endings. Blank lines are skipped.
std::vector<CsvRecord> parse_csv(std::string_view text);

std::string csv_escape(std::string_view field);
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

std::string read_file(const std::filesystem::path& path);

/// Write to a temporary sibling then rename over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace adaptoml
