#include "adaptoml/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>
#include <unordered_set>

namespace adaptoml {

std::string_view to_string(ColumnKind kind) noexcept {
  return kind == ColumnKind::numeric ? "numeric" : "categorical";
}

// ---------------------------------------------------------------------------
// Schema / Dataset
// ---------------------------------------------------------------------------

std::optional<std::size_t> Schema::find(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i].name == name) return i;
  return std::nullopt;
}

std::size_t Schema::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw DataError("column '" + std::string(name) + "' not found");
}

Schema Schema::with_roles(std::string label, std::optional<std::string> personalization) const {
  Schema out = *this;
  out.label_column = std::move(label);
  out.personalization_column = std::move(personalization);
  out.validate();
  return out;
}

void Schema::validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& c : columns) {
    if (c.name.empty()) throw DataError("empty column name");
    if (!seen.insert(c.name).second) throw DataError("duplicate column name '" + c.name + "'");
  }
  if (!label_column.empty() && !find(label_column))
    throw DataError("label column '" + label_column + "' not found");
  if (personalization_column) {
    if (!find(*personalization_column))
      throw DataError("personalization column '" + *personalization_column + "' not found");
    if (*personalization_column == label_column)
      throw DataError("personalization column must differ from the label column");
  }
}

std::string cell_text(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  return {};
}

Dataset::Dataset(Schema schema, std::vector<Row> rows)
    : schema_(std::move(schema)), rows_(std::move(rows)) {
  for (std::size_t r = 0; r < rows_.size(); ++r)
    if (rows_[r].size() != schema_.columns.size())
      throw DataError("row " + std::to_string(r) + " has " + std::to_string(rows_[r].size()) +
                      " cells, expected " + std::to_string(schema_.columns.size()));
}

std::size_t Dataset::missing_count() const {
  std::size_t n = 0;
  for (std::size_t c = 0; c < column_count(); ++c) n += missing_count(c);
  return n;
}

std::size_t Dataset::missing_count(std::size_t col) const {
  return static_cast<std::size_t>(
      std::count_if(rows_.begin(), rows_.end(), [&](const Row& r) { return is_missing(r[col]); }));
}

Dataset Dataset::select_rows(std::span<const std::size_t> indices) const {
  std::vector<Row> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(rows_.at(i));
  return Dataset(schema_, std::move(out));
}

Dataset Dataset::with_schema(Schema schema) const {
  if (schema.columns.size() != schema_.columns.size())
    throw DataError("with_schema: column count mismatch");
  return Dataset(std::move(schema), rows_);
}

Dataset Dataset::drop_column(std::string_view name) const {
  const std::size_t idx = schema_.index_of(name);
  Schema s = schema_;
  s.columns.erase(s.columns.begin() + static_cast<std::ptrdiff_t>(idx));
  if (s.label_column == name) s.label_column.clear();
  if (s.personalization_column == name) s.personalization_column.reset();
  std::vector<Row> rows = rows_;
  for (auto& r : rows) r.erase(r.begin() + static_cast<std::ptrdiff_t>(idx));
  return Dataset(std::move(s), std::move(rows));
}

std::vector<std::string> Dataset::tokens(std::string_view column) const {
  const std::size_t c = schema_.index_of(column);
  std::vector<std::string> out;
  out.reserve(rows_.size());
  for (const auto& r : rows_) out.push_back(cell_text(r[c]));
  return out;
}

std::vector<double> Dataset::numeric_values(std::string_view column) const {
  const std::size_t c = schema_.index_of(column);
  std::vector<double> out;
  out.reserve(rows_.size());
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    const Cell& cell = rows_[r][c];
    if (const auto* d = std::get_if<double>(&cell)) {
      out.push_back(*d);
      continue;
    }
    double v = 0.0;
    if (const auto* s = std::get_if<std::string>(&cell); s && parse_double(*s, v)) {
      out.push_back(v);
      continue;
    }
    throw DataError("column '" + std::string(column) + "' row " + std::to_string(r) +
                    (is_missing(cell) ? " is missing" : " is not numeric"));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

const MissingMarkers& default_missing_markers() {
  static const MissingMarkers markers{"", "NA", "NaN", "nan"};
  return markers;
}

RawTable parse_raw_table(std::string_view text, const MissingMarkers& markers,
                         std::string_view source) {
  const auto records = parse_csv(text);
  if (records.empty()) throw DataError(std::string(source) + ": file is empty (no header row)");
  RawTable table;
  table.header = records.front().fields;
  for (auto& h : table.header) h = trim(h);
  const std::size_t width = table.header.size();
  table.rows.reserve(records.size() - 1);
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& rec = records[i];
    if (rec.fields.size() != width)
      throw DataError(std::string(source) + ": ragged row at line " + std::to_string(rec.line) +
                      " (" + std::to_string(rec.fields.size()) + " fields, header has " +
                      std::to_string(width) + ")");
    std::vector<std::optional<std::string>> row;
    row.reserve(width);
    for (const auto& f : rec.fields) {
      if (f.empty() || markers.contains(f)) row.emplace_back(std::nullopt);
      else row.emplace_back(f);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

Schema infer_schema(const RawTable& table) {
  Schema schema;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    bool numeric = true;
    for (const auto& row : table.rows) {
      double v = 0.0;
      if (row[c] && !parse_double(*row[c], v)) {
        numeric = false;
        break;
      }
    }
    schema.columns.push_back({table.header[c], numeric ? ColumnKind::numeric : ColumnKind::categorical});
  }
  schema.validate();
  return schema;
}

Dataset dataset_from_raw(const RawTable& table) {
  Schema schema = infer_schema(table);
  std::vector<Row> rows;
  rows.reserve(table.rows.size());
  for (const auto& raw : table.rows) {
    Row row;
    row.reserve(raw.size());
    for (std::size_t c = 0; c < raw.size(); ++c) {
      if (!raw[c]) {
        row.emplace_back(std::monostate{});
      } else if (schema.columns[c].kind == ColumnKind::numeric) {
        double v = 0.0;
        parse_double(*raw[c], v);
        row.emplace_back(v);
      } else {
        row.emplace_back(*raw[c]);
      }
    }
    rows.push_back(std::move(row));
  }
  return Dataset(std::move(schema), std::move(rows));
}

Dataset parse_dataset(std::string_view text, const MissingMarkers& markers) {
  auto table = parse_raw_table(text, markers);
  if (table.rows.empty()) throw DataError("<memory>: no data rows");
  return dataset_from_raw(table);
}

Dataset load_csv(const std::filesystem::path& path, const MissingMarkers& markers) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec))
    throw DataError(path.string() + ": cannot read file (missing or not a regular file)");
  std::string text;
  try {
    text = read_file(path);
  } catch (const FormatError&) {
    throw DataError(path.string() + ": cannot read file");
  }
  if (trim(text).empty()) throw DataError(path.string() + ": file is empty");
  RawTable table;
  try {
    table = parse_raw_table(text, markers, path.string());
  } catch (const FormatError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  if (table.rows.empty()) throw DataError(path.string() + ": header only, no data rows");
  return dataset_from_raw(table);
}

// ---------------------------------------------------------------------------
// Imputation
// ---------------------------------------------------------------------------

ImputePolicy ImputePolicy::parse(std::string_view text) {
  ImputePolicy p;
  if (text == "mean") p.kind = Kind::mean;
  else if (text == "median") p.kind = Kind::median;
  else if (text == "most_frequent") p.kind = Kind::most_frequent;
  else if (text == "none") p.kind = Kind::none;
  else if (text.starts_with("constant:")) {
    p.kind = Kind::constant;
    p.constant_value = std::string(text.substr(9));
  } else {
    throw ConfigError("unknown imputation policy '" + std::string(text) +
                      "' (expected mean, median, most_frequent, constant:<value>, none)");
  }
  return p;
}

std::string ImputePolicy::to_string() const {
  switch (kind) {
    case Kind::mean: return "mean";
    case Kind::median: return "median";
    case Kind::most_frequent: return "most_frequent";
    case Kind::constant: return "constant:" + constant_value;
    case Kind::none: return "none";
  }
  return "none";
}

const Cell* Imputer::fill_for(std::string_view column) const {
  for (const auto& [name, cell] : fills)
    if (name == column) return &cell;
  return nullptr;
}

Dataset Imputer::apply(const Dataset& d) const {
  if (policy.kind == ImputePolicy::Kind::none) return d;
  std::vector<Row> rows = d.rows();
  for (std::size_t c = 0; c < d.column_count(); ++c) {
    if (d.missing_count(c) == 0) continue;
    const auto& col = d.schema().columns[c];
    const Cell* fill = fill_for(col.name);
    if (!fill) throw DataError("column '" + col.name + "' has missing values but no imputation value");
    Cell value = *fill;
    // Keep cell types consistent with the target column kind.
    if (col.kind == ColumnKind::categorical && std::holds_alternative<double>(value))
      value = cell_text(value);
    if (col.kind == ColumnKind::numeric && std::holds_alternative<std::string>(value)) {
      double v = 0.0;
      if (!parse_double(std::get<std::string>(value), v))
        throw DataError("column '" + col.name + "' is numeric but imputation value is '" +
                        std::get<std::string>(value) + "'");
      value = v;
    }
    for (auto& r : rows)
      if (is_missing(r[c])) r[c] = value;
  }
  return Dataset(d.schema(), std::move(rows));
}

namespace {

double mean_of(std::vector<double> v) {
  // Sorted summation makes the statistic independent of row order.
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

Imputer fit_imputer(const Dataset& d, const ImputePolicy& policy) {
  using Kind = ImputePolicy::Kind;
  Imputer imp;
  imp.policy = policy;
  if (policy.kind == Kind::none) return imp;

  for (std::size_t c = 0; c < d.column_count(); ++c) {
    const auto& col = d.schema().columns[c];
    const bool has_missing = d.missing_count(c) > 0;
    std::vector<double> nums;
    std::vector<std::string> toks;
    for (const auto& r : d.rows()) {
      if (is_missing(r[c])) continue;
      if (col.kind == ColumnKind::numeric) nums.push_back(std::get<double>(r[c]));
      else toks.push_back(cell_text(r[c]));
    }
    const std::size_t present = col.kind == ColumnKind::numeric ? nums.size() : toks.size();

    if (policy.kind == Kind::constant) {
      if (col.kind == ColumnKind::numeric) {
        double v = 0.0;
        if (parse_double(policy.constant_value, v)) imp.fills.emplace_back(col.name, v);
        else if (has_missing)
          throw DataError("constant '" + policy.constant_value + "' is not numeric for column '" +
                          col.name + "'");
      } else {
        imp.fills.emplace_back(col.name, policy.constant_value);
      }
      continue;
    }

    if (present == 0) {
      if (has_missing) throw DataError("column '" + col.name + "' is entirely missing; cannot impute");
      continue;
    }

    if (col.kind == ColumnKind::categorical &&
        (policy.kind == Kind::mean || policy.kind == Kind::median)) {
      if (has_missing)
        throw DataError(policy.to_string() + " imputation requested on categorical column '" +
                        col.name + "'");
      continue;
    }

    switch (policy.kind) {
      case Kind::mean: imp.fills.emplace_back(col.name, mean_of(nums)); break;
      case Kind::median: imp.fills.emplace_back(col.name, median_of(nums)); break;
      case Kind::most_frequent: {
        // Mode; ties go to the smallest value (numeric order or lexicographic).
        if (col.kind == ColumnKind::numeric) {
          std::map<double, std::size_t> counts;
          for (double v : nums) ++counts[v];
          auto best = counts.begin();
          for (auto it = counts.begin(); it != counts.end(); ++it)
            if (it->second > best->second) best = it;
          imp.fills.emplace_back(col.name, best->first);
        } else {
          std::map<std::string, std::size_t> counts;
          for (const auto& t : toks) ++counts[t];
          auto best = counts.begin();
          for (auto it = counts.begin(); it != counts.end(); ++it)
            if (it->second > best->second) best = it;
          imp.fills.emplace_back(col.name, best->first);
        }
        break;
      }
      default: break;
    }
  }
  return imp;
}

Dataset impute(const Dataset& d, const ImputePolicy& policy) { return fit_imputer(d, policy).apply(d); }

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

namespace {

std::size_t round_count(double x) { return static_cast<std::size_t>(std::llround(x)); }

/// Largest-remainder apportionment of `total` over groups of the given sizes.
std::vector<std::size_t> apportion(const std::vector<std::size_t>& sizes, std::size_t total) {
  const std::size_t n = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  std::vector<std::size_t> out(sizes.size(), 0);
  if (n == 0 || total == 0) return out;
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t g = 0; g < sizes.size(); ++g) {
    const double quota = static_cast<double>(sizes[g]) * static_cast<double>(total) / static_cast<double>(n);
    out[g] = std::min(sizes[g], static_cast<std::size_t>(std::floor(quota)));
    assigned += out[g];
    remainders.emplace_back(quota - std::floor(quota), g);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total && k < remainders.size() * 2; ++k) {
    const std::size_t g = remainders[k % remainders.size()].second;
    if (out[g] < sizes[g]) {
      ++out[g];
      ++assigned;
    }
  }
  return out;
}

}  // namespace

IndexSplit split_indices(const std::vector<std::string>& strata, double test_frac,
                         double val_frac, std::uint64_t seed, bool stratify) {
  if (!(test_frac >= 0.0 && test_frac < 1.0)) throw ConfigError("test fraction must be in [0, 1)");
  if (!(val_frac >= 0.0 && val_frac < 1.0)) throw ConfigError("validation fraction must be in [0, 1)");
  const std::size_t n = strata.size();
  if (n == 0) throw DataError("cannot split an empty dataset");
  const std::size_t n_test = round_count(static_cast<double>(n) * test_frac);
  const std::size_t n_val = round_count(static_cast<double>(n - n_test) * val_frac);
  if (n_test + n_val >= n)
    throw ConfigError("test/validation fractions leave an empty train set (" + std::to_string(n) +
                      " rows)");

  Rng rng(seed);
  IndexSplit out;
  if (!stratify) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(perm));
    out.test.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
    out.validation.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test),
                          perm.begin() + static_cast<std::ptrdiff_t>(n_test + n_val));
    out.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test + n_val), perm.end());
  } else {
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < n; ++i) groups[strata[i]].push_back(i);
    std::vector<std::vector<std::size_t>> members;
    std::vector<std::size_t> sizes;
    for (auto& [token, idx] : groups) {
      if (idx.size() < 2)
        throw DataError("stratified split: class '" + token + "' has a single member");
      rng.shuffle(std::span<std::size_t>(idx));
      sizes.push_back(idx.size());
      members.push_back(idx);
    }
    const auto test_counts = apportion(sizes, n_test);
    std::vector<std::size_t> rest(sizes.size());
    for (std::size_t g = 0; g < sizes.size(); ++g) rest[g] = sizes[g] - test_counts[g];
    const auto val_counts = apportion(rest, n_val);
    for (std::size_t g = 0; g < members.size(); ++g) {
      const auto& m = members[g];
      std::size_t k = 0;
      for (; k < test_counts[g]; ++k) out.test.push_back(m[k]);
      for (std::size_t v = 0; v < val_counts[g]; ++v, ++k) out.validation.push_back(m[k]);
      for (; k < m.size(); ++k) out.train.push_back(m[k]);
    }
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.validation.begin(), out.validation.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

SplitDataset split(const Dataset& d, double test_frac, double val_frac, std::uint64_t seed,
                   bool stratify) {
  std::vector<std::string> strata;
  if (stratify) {
    if (d.schema().label_column.empty()) throw ConfigError("stratified split needs a label column");
    strata = d.tokens(d.schema().label_column);
  } else {
    strata.assign(d.size(), std::string{});
  }
  SplitDataset out;
  out.indices = split_indices(strata, test_frac, val_frac, seed, stratify);
  out.train = d.select_rows(out.indices.train);
  out.validation = d.select_rows(out.indices.validation);
  out.test = d.select_rows(out.indices.test);
  out.seed = seed;
  out.test_frac = test_frac;
  out.val_frac = val_frac;
  return out;
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

Normalizer fit_normalizer(const Matrix& train) {
  if (train.rows() == 0) throw DataError("normalize: empty train matrix");
  const std::size_t n = train.rows(), d = train.cols();
  Normalizer norm;
  norm.mean.assign(d, 0.0);
  norm.stddev.assign(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    double lo = train(0, j), hi = train(0, j), sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum += train(i, j);
      lo = std::min(lo, train(i, j));
      hi = std::max(hi, train(i, j));
    }
    const double mean = sum / static_cast<double>(n);
    norm.mean[j] = mean;
    if (lo == hi) {
      norm.mean[j] = lo;
      continue;  // degenerate
    }
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dev = train(i, j) - mean;
      ss += dev * dev;
    }
    norm.stddev[j] = std::sqrt(ss / static_cast<double>(n));
  }
  return norm;
}

Matrix Normalizer::transform(const Matrix& x) const {
  if (x.cols() != mean.size())
    throw SignatureError("normalizer expects " + std::to_string(mean.size()) + " columns, got " +
                         std::to_string(x.cols()));
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j)
      out(i, j) = degenerate(j) ? 0.0 : (x(i, j) - mean[j]) / stddev[j];
  return out;
}

std::pair<Normalizer, std::vector<Matrix>> normalize(const Matrix& train,
                                                     const std::vector<Matrix>& apply_to) {
  Normalizer norm = fit_normalizer(train);
  std::vector<Matrix> out;
  out.reserve(apply_to.size() + 1);
  out.push_back(norm.transform(train));
  for (const auto& m : apply_to) out.push_back(norm.transform(m));
  return {std::move(norm), std::move(out)};
}

// ---------------------------------------------------------------------------
// Encoding
// ---------------------------------------------------------------------------

LabelEncoding::LabelEncoding(std::vector<std::string> sorted_tokens) : tokens_(std::move(sorted_tokens)) {
  if (!std::is_sorted(tokens_.begin(), tokens_.end()) ||
      std::adjacent_find(tokens_.begin(), tokens_.end()) != tokens_.end())
    throw DataError("label tokens must be distinct and sorted");
}

std::optional<std::size_t> LabelEncoding::index_of(std::string_view token) const {
  auto it = std::lower_bound(tokens_.begin(), tokens_.end(), token);
  if (it == tokens_.end() || *it != token) return std::nullopt;
  return static_cast<std::size_t>(it - tokens_.begin());
}

std::size_t LabelEncoding::encode(std::string_view token) const {
  if (auto i = index_of(token)) return *i;
  throw DataError("unknown class label '" + std::string(token) + "'");
}

std::pair<LabelEncoding, std::vector<std::size_t>> encode_labels(const std::vector<std::string>& column) {
  if (column.empty()) throw DataError("encode_labels: empty label column");
  std::vector<std::string> tokens = column;
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  LabelEncoding enc(std::move(tokens));
  std::vector<std::size_t> codes;
  codes.reserve(column.size());
  for (const auto& t : column) codes.push_back(enc.encode(t));
  return {std::move(enc), std::move(codes)};
}

std::vector<std::string> FeatureEncoder::feature_names() const {
  std::vector<std::string> out;
  for (const auto& c : columns_) {
    if (c.kind == ColumnKind::numeric) out.push_back(c.name);
    else
      for (const auto& cat : c.categories) out.push_back(c.name + "=" + cat);
  }
  return out;
}

std::size_t FeatureEncoder::width() const {
  std::size_t w = 0;
  for (const auto& c : columns_) w += c.kind == ColumnKind::numeric ? 1 : c.categories.size();
  return w;
}

Matrix FeatureEncoder::transform(const Dataset& d) const {
  std::vector<std::size_t> source;
  for (const auto& c : columns_) {
    auto idx = d.schema().find(c.name);
    if (!idx) throw SignatureError("input is missing feature column '" + c.name + "'");
    source.push_back(*idx);
  }
  Matrix out(d.size(), width());
  for (std::size_t r = 0; r < d.size(); ++r) {
    std::size_t j = 0;
    for (std::size_t k = 0; k < columns_.size(); ++k) {
      const auto& col = columns_[k];
      const Cell& cell = d.at(r, source[k]);
      if (is_missing(cell))
        throw DataError("column '" + col.name + "' row " + std::to_string(r) +
                        " is missing (enable imputation)");
      if (col.kind == ColumnKind::numeric) {
        double v = 0.0;
        if (const auto* x = std::get_if<double>(&cell)) v = *x;
        else if (!parse_double(std::get<std::string>(cell), v))
          throw DataError("column '" + col.name + "' expects numbers, got '" +
                          std::get<std::string>(cell) + "'");
        out(r, j++) = v;
      } else {
        const std::string tok = cell_text(cell);
        auto it = std::lower_bound(col.categories.begin(), col.categories.end(), tok);
        if (it != col.categories.end() && *it == tok)
          out(r, j + static_cast<std::size_t>(it - col.categories.begin())) = 1.0;
        j += col.categories.size();
      }
    }
  }
  return out;
}

FeatureEncoder fit_encoder(const Dataset& train, const std::vector<std::string>& excluded) {
  std::vector<EncodedColumn> cols;
  for (std::size_t c = 0; c < train.column_count(); ++c) {
    const auto& info = train.schema().columns[c];
    if (std::find(excluded.begin(), excluded.end(), info.name) != excluded.end()) continue;
    EncodedColumn ec{info.name, info.kind, {}};
    if (info.kind == ColumnKind::categorical) {
      for (const auto& r : train.rows())
        if (!is_missing(r[c])) ec.categories.push_back(cell_text(r[c]));
      std::sort(ec.categories.begin(), ec.categories.end());
      ec.categories.erase(std::unique(ec.categories.begin(), ec.categories.end()), ec.categories.end());
    }
    cols.push_back(std::move(ec));
  }
  FeatureEncoder enc(std::move(cols));
  if (enc.width() == 0) throw DataError("no feature columns remain after excluding label/personalization");
  return enc;
}

}  // namespace adaptoml
