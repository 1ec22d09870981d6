#include "adaptoml/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace adaptoml {

using nlohmann::json;

namespace {

std::string describe_errors(const std::vector<FieldError>& errors) {
  std::vector<std::string> parts;
  for (const auto& e : errors) parts.push_back(e.field + ": " + e.message);
  return "invalid configuration: " + join(parts, "; ");
}

}  // namespace

ConfigValidationError::ConfigValidationError(std::vector<FieldError> errors)
    : ConfigError(describe_errors(errors)), errors_(std::move(errors)) {}

StageError::StageError(std::string stage, const std::string& cause, std::vector<std::filesystem::path> written)
    : Error(stage + ": " + cause), stage_(std::move(stage)), written_(std::move(written)) {}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

SelectionPolicy parse_selection(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view kind = text.substr(0, colon);
  const std::string_view arg = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  double v = 0.0;
  if (kind == "variance") {
    if (arg.empty()) return SelectionPolicy::variance(0.0);
    if (!parse_double(arg, v) || v < 0) throw ConfigError("variance threshold must be a number >= 0");
    return SelectionPolicy::variance(v);
  }
  if (kind == "top_k") {
    if (!parse_double(arg, v) || v < 1 || std::floor(v) != v) throw ConfigError("top_k needs an integer k >= 1");
    return SelectionPolicy::top_k(static_cast<std::size_t>(v));
  }
  throw ConfigError("unknown selection policy '" + std::string(text) + "' (expected variance:<t> or top_k:<k>)");
}

std::vector<Family> resolve_families(const PipelineConfig& cfg) {
  std::vector<Family> out;
  if (cfg.families.empty()) {
    for (auto f : all_families())
      if (task_of(f) == cfg.task) out.push_back(f);
    return out;
  }
  for (const auto& name : cfg.families) {
    const Family f = parse_family(name);
    if (task_of(f) != cfg.task)
      throw ConfigError(name + " is not a " + std::string(to_string(cfg.task)) + " model");
    if (std::find(out.begin(), out.end(), f) == out.end()) out.push_back(f);
  }
  return out;
}

Criterion resolve_criterion(const PipelineConfig& cfg) {
  return cfg.criterion.empty() ? Criterion::default_for(cfg.task) : Criterion::parse(cfg.task, cfg.criterion);
}

std::vector<FieldError> validation_errors(const PipelineConfig& cfg) {
  std::vector<FieldError> errors;
  auto check = [&](const char* field, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      errors.push_back({field, e.what()});
    }
  };
  if (cfg.data_path.empty()) errors.push_back({"data_path", "required"});
  if (cfg.label_column.empty()) errors.push_back({"label_column", "required"});
  if (cfg.personalization_column.empty()) errors.push_back({"personalization_column", "required"});
  if (!cfg.label_column.empty() && cfg.label_column == cfg.personalization_column)
    errors.push_back({"personalization_column", "must differ from label_column"});
  check("impute", [&] { ImputePolicy::parse(cfg.impute); });
  if (!(cfg.test_frac >= 0.0 && cfg.test_frac < 1.0)) errors.push_back({"test_frac", "must be in [0, 1)"});
  if (!(cfg.val_frac >= 0.0 && cfg.val_frac < 1.0)) errors.push_back({"val_frac", "must be in [0, 1)"});
  if (cfg.stratify && cfg.task == Task::regression)
    errors.push_back({"stratify", "stratified splits need a classification task"});
  if (cfg.normalization != "on" && cfg.normalization != "off" && cfg.normalization != "grid")
    errors.push_back({"normalization", "expected one of {on, off, grid}"});
  check("selection", [&] { parse_selection(cfg.selection); });
  if (!cfg.export_features.empty()) check("export_features", [&] { parse_feature_format(cfg.export_features); });
  check("families", [&] { resolve_families(cfg); });
  check("criterion", [&] { resolve_criterion(cfg); });
  if (cfg.sessions < 1) errors.push_back({"sessions", "must be >= 1"});
  if (!(cfg.user_train_frac >= 0.0 && cfg.user_train_frac <= 1.0))
    errors.push_back({"user_train_frac", "must be in [0, 1]"});
  if (!cfg.fit && cfg.model_paths.empty()) {
    if (cfg.predict_enabled()) errors.push_back({"predict_path", "predict without fit needs model_paths"});
    if (cfg.partial_fit_enabled()) errors.push_back({"partial_fit_path", "partial fit without fit needs model_paths"});
    if (cfg.adapt) errors.push_back({"adapt", "adaptation without fit needs model_paths"});
  }
  return errors;
}

void validate(const PipelineConfig& cfg) {
  auto errors = validation_errors(cfg);
  if (!errors.empty()) throw ConfigValidationError(std::move(errors));
}

// ---------------------------------------------------------------------------
// JSON config documents
// ---------------------------------------------------------------------------

std::string config_to_json(const PipelineConfig& c) {
  json j;
  j["data_path"] = c.data_path;
  j["label_column"] = c.label_column;
  j["personalization_column"] = c.personalization_column;
  j["task"] = std::string(to_string(c.task));
  j["impute"] = c.impute;
  j["test_frac"] = c.test_frac;
  j["val_frac"] = c.val_frac;
  j["stratify"] = c.stratify;
  j["normalization"] = c.normalization;
  j["feature_extraction"] = c.feature_extraction;
  j["pca_components"] = c.pca_components;
  j["feature_selection"] = c.feature_selection;
  j["selection"] = c.selection;
  j["export_features"] = c.export_features;
  j["families"] = c.families;
  j["criterion"] = c.criterion;
  j["fit"] = c.fit;
  j["predict_path"] = c.predict_path;
  j["partial_fit_path"] = c.partial_fit_path;
  j["sessions"] = c.sessions;
  j["adapt"] = c.adapt;
  j["user_train_frac"] = c.user_train_frac;
  j["model_paths"] = c.model_paths;
  j["out_dir"] = c.out_dir;
  j["seed"] = c.seed;
  return j.dump(2);
}

PipelineConfig config_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigValidationError(std::vector<FieldError>{{"(document)", std::string("not valid JSON: ") + e.what()}});
  }
  if (!j.is_object()) throw ConfigValidationError(std::vector<FieldError>{{"(document)", "expected a JSON object"}});

  PipelineConfig c;
  std::vector<FieldError> errors;
  std::set<std::string> seen;

  auto str = [&](const char* key, std::string& out) {
    seen.insert(key);
    if (!j.contains(key)) return;
    if (!j[key].is_string()) errors.push_back({key, "expected a string"});
    else out = j[key].get<std::string>();
  };
  auto boolean = [&](const char* key, bool& out) {
    seen.insert(key);
    if (!j.contains(key)) return;
    if (!j[key].is_boolean()) errors.push_back({key, "expected true or false"});
    else out = j[key].get<bool>();
  };
  auto number = [&](const char* key, double& out) {
    seen.insert(key);
    if (!j.contains(key)) return;
    if (!j[key].is_number()) errors.push_back({key, "expected a number"});
    else out = j[key].get<double>();
  };
  auto count = [&](const char* key, auto& out) {
    seen.insert(key);
    if (!j.contains(key)) return;
    if (!j[key].is_number_unsigned()) errors.push_back({key, "expected a non-negative integer"});
    else out = j[key].get<std::remove_reference_t<decltype(out)>>();
  };
  auto list = [&](const char* key, std::vector<std::string>& out) {
    seen.insert(key);
    if (!j.contains(key)) return;
    const auto& v = j[key];
    if (!v.is_array() || !std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_string(); }))
      errors.push_back({key, "expected a list of strings"});
    else out = v.get<std::vector<std::string>>();
  };

  for (const char* key : {"data_path", "label_column", "personalization_column", "task"})
    if (!j.contains(key) || j[key].is_null() || (j[key].is_string() && j[key].get<std::string>().empty()))
      errors.push_back({key, "required"});
  str("data_path", c.data_path);
  str("label_column", c.label_column);
  str("personalization_column", c.personalization_column);
  seen.insert("task");
  if (j.contains("task") && j["task"].is_string() && !j["task"].get<std::string>().empty()) {
    try {
      c.task = parse_task(j["task"].get<std::string>());
    } catch (const Error& e) {
      errors.push_back({"task", e.what()});
    }
  } else if (j.contains("task") && !j["task"].is_null() && !j["task"].is_string()) {
    errors.push_back({"task", "expected a string"});
  }
  str("impute", c.impute);
  number("test_frac", c.test_frac);
  number("val_frac", c.val_frac);
  boolean("stratify", c.stratify);
  str("normalization", c.normalization);
  boolean("feature_extraction", c.feature_extraction);
  count("pca_components", c.pca_components);
  boolean("feature_selection", c.feature_selection);
  str("selection", c.selection);
  str("export_features", c.export_features);
  list("families", c.families);
  str("criterion", c.criterion);
  boolean("fit", c.fit);
  str("predict_path", c.predict_path);
  str("partial_fit_path", c.partial_fit_path);
  count("sessions", c.sessions);
  boolean("adapt", c.adapt);
  number("user_train_frac", c.user_train_frac);
  list("model_paths", c.model_paths);
  str("out_dir", c.out_dir);
  count("seed", c.seed);
  for (const auto& [key, value] : j.items())
    if (!seen.contains(key)) errors.push_back({key, "unknown field"});
  if (!errors.empty()) throw ConfigValidationError(std::move(errors));
  return c;
}

// ---------------------------------------------------------------------------
// Command line
// ---------------------------------------------------------------------------

CliParse parse_cli(int argc, const char* const* argv) {
  CliParse result;
  PipelineConfig& c = result.config;
  std::string task;
  std::string selection, extraction;
  std::string models;
  bool no_fit = false;
  bool print_config = false;

  CLI::App app{"Adaptive AutoML: imputation, feature engineering, grid search, per-user adaptation and "
               "incremental learning over a CSV dataset.",
               "adaptoml"};
  app.get_formatter()->column_width(36);

  auto* mandatory = "Mandatory";
  app.add_option("--data", c.data_path, "Dataset CSV file (header row required)")->group(mandatory);
  app.add_option("--label-col", c.label_column, "Name of the label column")->group(mandatory);
  app.add_option("--person-col", c.personalization_column, "Name of the personalization (user) column")
      ->group(mandatory);
  app.add_option("--task", task, "classification | regression")->group(mandatory);

  auto* pre = "Data Preprocessing";
  app.add_option("--impute", c.impute, "mean | median | most_frequent | constant:<value> | none")
      ->group(pre)
      ->capture_default_str();
  app.add_option("--test-size", c.test_frac, "Test fraction in [0, 1)")->group(pre)->capture_default_str();
  app.add_option("--val-size", c.val_frac, "Validation fraction in [0, 1)")->group(pre)->capture_default_str();
  app.add_flag("--stratify", c.stratify, "Stratify splits by label")->group(pre);
  app.add_option("--normalize", c.normalization, "z-score normalization: on | off | grid (try both)")
      ->group(pre)
      ->capture_default_str();

  auto* feat = "Feature Engineering";
  auto* sel_opt = app.add_option("--feature-selection", selection,
                                 "Enable selection; policy variance:<t> (default variance:0) or top_k:<k>")
                      ->group(feat)
                      ->expected(0, 1);
  auto* ext_opt = app.add_option("--feature-extraction", extraction,
                                 "Enable PCA extraction; optional component count (default min(rows, cols))")
                      ->group(feat)
                      ->expected(0, 1);
  app.add_option("--export-features", c.export_features, "Store processed features: csv | bundle")->group(feat);

  auto* models_group = "Classifiers and Regressors";
  app.add_option("--models", models, "Comma-separated families (default: every family of the task)")
      ->group(models_group);
  app.add_option("--criterion", c.criterion, "Selection criterion (default macro_f1 / rmse)")->group(models_group);
  app.add_flag("--no-fit", no_fit, "Skip grid search and fitting")->group(models_group);
  app.add_option("--predict", c.predict_path, "CSV to predict with the selected model")->group(models_group);
  app.add_option("--partial-fit", c.partial_fit_path, "CSV used for incremental sessions")->group(models_group);
  app.add_option("--sessions", c.sessions, "Number of incremental sessions")->group(models_group)->capture_default_str();
  app.add_flag("--adapt", c.adapt, "Adapt the model per user of the personalization column")->group(models_group);
  app.add_option("--user-train-frac", c.user_train_frac, "Share of each user's rows used for adaptation")
      ->group(models_group)
      ->capture_default_str();
  app.add_option("--load-model", c.model_paths, "Trained model bundle (repeatable)")
      ->group(models_group)
      ->take_all()
      ->allow_extra_args(false);

  auto* run = "Run";
  app.add_option("--out", c.out_dir, "Output directory (default ./adaptoml_out/<timestamp>)")->group(run);
  app.add_option("--seed", c.seed, "Random seed")->group(run)->capture_default_str();
  app.add_option("--threads", result.threads, "Grid-search worker threads (default: CPU count)")->group(run);
  app.add_flag("--print-config", print_config, "Print the resulting config document and exit")->group(run);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    result.exit_now = true;
    result.output = app.help();
    return result;
  } catch (const CLI::ParseError& e) {
    throw ConfigError(e.what());
  }

  if (c.data_path.empty()) throw ConfigError("data required (--data)");
  if (c.label_column.empty()) throw ConfigError("label-col required (--label-col)");
  if (c.personalization_column.empty()) throw ConfigError("person-col required (--person-col)");
  if (task.empty()) throw ConfigError("task required (--task)");
  c.task = parse_task(task);
  c.fit = !no_fit;
  if (sel_opt->count() > 0) {
    c.feature_selection = true;
    if (!selection.empty()) c.selection = selection;
  }
  if (ext_opt->count() > 0) {
    c.feature_extraction = true;
    if (!extraction.empty()) {
      double k = 0;
      if (!parse_double(extraction, k) || k < 1 || std::floor(k) != k)
        throw ConfigError("--feature-extraction expects a component count >= 1, got '" + extraction + "'");
      c.pca_components = static_cast<std::size_t>(k);
    }
  }
  if (!models.empty())
    for (const auto& m : split_string(models, ','))
      if (auto t = trim(m); !t.empty()) c.families.push_back(t);

  validate(c);
  if (print_config) {
    result.exit_now = true;
    result.output = config_to_json(c) + "\n";
  }
  return result;
}

// ---------------------------------------------------------------------------
// Run
// ---------------------------------------------------------------------------

std::filesystem::path default_out_dir() {
  std::string stamp = utc_timestamp();
  std::erase(stamp, '-');
  std::erase(stamp, ':');
  return std::filesystem::path("adaptoml_out") / stamp;
}

namespace {

std::string sanitize(std::string_view text) {
  std::string out;
  for (char ch : text) out += std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' ? ch : '_';
  return out.empty() ? "_" : out;
}

std::vector<std::string> metric_labels(const ModelBundle& b) {
  if (b.task == Task::classification) return b.labels.tokens();
  return {};
}

class Runner {
 public:
  Runner(const PipelineConfig& cfg, const RunOptions& options) : cfg_(cfg), opt_(options) {}

  RunOutputs run() {
    out_.out_dir = cfg_.out_dir.empty() ? default_out_dir() : std::filesystem::path(cfg_.out_dir);
    stage("load", [&] { load(); });
    if (cfg_.imputation_enabled()) stage("impute", [&] { impute_data(); });
    stage("split", [&] { split_data(); });
    if (cfg_.feature_extraction) stage("feature_extract", [&] { features(); });
    else if (cfg_.feature_selection) stage("feature_select", [&] { features(); });
    else stage_silent([&] { features(); });
    if (!cfg_.export_features.empty()) stage("export_features", [&] { export_features_file(); });
    if (!cfg_.model_paths.empty()) stage("load_models", [&] { load_models_stage(); });
    if (cfg_.fit) stage("fit", [&] { fit_stage(); });
    if (cfg_.adapt) stage("adapt", [&] { adapt_stage(); });
    if (cfg_.predict_enabled()) stage("predict", [&] { predict_stage(); });
    if (cfg_.partial_fit_enabled()) stage("partial_fit", [&] { partial_fit_stage(); });
    stage("report", [&] { report_stage(); });
    return std::move(out_);
  }

 private:
  template <typename F>
  void stage(const std::string& name, F&& fn) {
    out_.stages.push_back(name);
    current_ = name;
    progress(0, 0);
    try {
      fn();
    } catch (const std::exception& e) {
      throw StageError(name, e.what(), out_.files);
    }
  }

  template <typename F>
  void stage_silent(F&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      throw StageError(current_, e.what(), out_.files);
    }
  }

  void progress(std::size_t done, std::size_t total) {
    if (opt_.progress) opt_.progress({current_, done, total});
  }

  void warn(const std::string& message) {
    out_.warnings.push_back(message);
    if (opt_.warn) opt_.warn(message);
  }

  std::filesystem::path file(const std::string& name) {
    std::filesystem::create_directories(out_.out_dir);
    return out_.out_dir / name;
  }

  void emitted(const std::filesystem::path& p) {
    if (std::find(out_.files.begin(), out_.files.end(), p) == out_.files.end()) out_.files.push_back(p);
  }

  // -- stages ---------------------------------------------------------------

  void load() {
    Dataset d = load_csv(cfg_.data_path);
    d = d.with_schema(d.schema().with_roles(cfg_.label_column, cfg_.personalization_column));
    const auto label = d.schema().index_of(cfg_.label_column);
    if (d.missing_count(label) > 0)
      throw DataError("label column '" + cfg_.label_column + "' has " + std::to_string(d.missing_count(label)) +
                      " missing value(s)");
    data_ = std::move(d);
    imputer_.policy = ImputePolicy::parse("none");
  }

  void impute_data() {
    imputer_ = fit_imputer(data_, ImputePolicy::parse(cfg_.impute));
    data_ = imputer_.apply(data_);
  }

  void split_data() {
    split_ = split(data_, cfg_.test_frac, cfg_.val_frac, cfg_.seed, cfg_.stratify);
    encoder_ = fit_encoder(split_.train, {cfg_.label_column, cfg_.personalization_column});
    if (encoder_.width() == 0) throw DataError("no feature columns besides the label and personalization columns");
    prep_.task = cfg_.task;
    if (cfg_.task == Task::classification) {
      labels_ = encode_labels(data_.tokens(cfg_.label_column)).first;
      prep_.n_classes = labels_.size();
    }
    prep_.y_train = targets(split_.train);
    prep_.y_val = targets(split_.validation);
    prep_.y_test = targets(split_.test);
  }

  std::vector<double> targets(const Dataset& d) const {
    if (cfg_.task == Task::regression) {
      if (d.schema().columns[d.schema().index_of(cfg_.label_column)].kind != ColumnKind::numeric && d.size() > 0)
        throw DataError("regression label column '" + cfg_.label_column + "' is not numeric");
      return d.numeric_values(cfg_.label_column);
    }
    std::vector<double> y;
    for (const auto& tok : d.tokens(cfg_.label_column)) y.push_back(static_cast<double>(labels_.encode(tok)));
    return y;
  }

  Matrix encode(const Dataset& d) const {
    if (d.size() == 0) return Matrix(0, encoder_.width());
    return encoder_.transform(d);
  }

  void features() {
    const Matrix x_train = encode(split_.train);
    if (cfg_.feature_extraction) {
      const std::size_t k = cfg_.pca_components ? cfg_.pca_components : std::min(x_train.rows(), x_train.cols());
      stage_ = pca_fit(x_train, k);
    } else if (cfg_.feature_selection) {
      stage_ = select_features(x_train, prep_.y_train, parse_selection(cfg_.selection), cfg_.task);
    }
    prep_.feature_names = feature_stage_names(stage_, encoder_.feature_names());
    auto apply = [&](const Matrix& x) {
      return x.rows() == 0 ? Matrix(0, prep_.feature_names.size()) : apply_feature_stage(stage_, x);
    };
    prep_.x_train = apply(x_train);
    prep_.x_val = apply(encode(split_.validation));
    prep_.x_test = apply(encode(split_.test));
  }

  void export_features_file() {
    const auto format = parse_feature_format(cfg_.export_features);
    Matrix x = apply_feature_stage(stage_, encode(data_));
    const auto y = targets(data_);
    std::vector<std::string> headers = prep_.feature_names;
    headers.push_back(cfg_.label_column);
    Matrix table(x.rows(), x.cols() + 1);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      for (std::size_t j = 0; j < x.cols(); ++j) table(i, j) = x(i, j);
      table(i, x.cols()) = y[i];
    }
    const auto path = file(format == FeatureFormat::csv ? "features.csv" : "features.amxf");
    export_features(table, headers, path, format);
    emitted(path);
  }

  void load_models_stage() {
    std::vector<std::filesystem::path> paths(cfg_.model_paths.begin(), cfg_.model_paths.end());
    out_.loaded = load_models(paths);
    for (std::size_t i = 0; i < out_.loaded.size(); ++i) {
      const auto& b = out_.loaded[i];
      if (b.task != cfg_.task)
        throw DataError(cfg_.model_paths[i] + ": model task " + std::string(to_string(b.task)) +
                        " differs from the configured task");
      LoadedModelEval eval{cfg_.model_paths[i], {}};
      if (split_.test.size() > 0) {
        try {
          eval.test = score_predictions(b.task, b.targets(split_.test), b.predict(split_.test), b.model.n_classes());
        } catch (const Error& e) {
          warn("loaded model " + cfg_.model_paths[i] + " could not be scored on the test split: " + e.what());
        }
      }
      out_.loaded_eval.push_back(std::move(eval));
    }
    if (!cfg_.fit) out_.model = out_.loaded.front();
  }

  ModelBundle make_bundle(const SelectedModel& s) const {
    ModelBundle b;
    b.created_utc = utc_timestamp();
    b.task = cfg_.task;
    b.labels = labels_;
    b.preprocessing = {cfg_.label_column, cfg_.personalization_column, imputer_, encoder_, stage_, s.normalizer};
    b.model = s.model;
    return b;
  }

  void fit_stage() {
    std::vector<bool> norm;
    if (cfg_.normalization == "grid") norm = {true, false};
    else norm = {cfg_.normalization == "on"};
    SearchConfig sc;
    sc.candidates = default_grid(cfg_.task, resolve_families(cfg_), norm, cfg_.seed);
    sc.criterion = resolve_criterion(cfg_);
    sc.threads = opt_.threads;
    sc.progress = [&](std::size_t done, std::size_t total) { progress(done, total); };
    out_.search = grid_search(prep_, sc);
    for (const auto& r : out_.search->results)
      if (r.failed) warn(r.error);
    out_.model = make_bundle(select_best(*out_.search, prep_));
    const auto path = file("best_model.json");
    save_model(*out_.model, path);
    emitted(path);
  }

  /// The primary model, or the best incremental alternative with a warning.
  const ModelBundle& incremental_model(const char* purpose) {
    if (!out_.model) throw Error("no model available for " + std::string(purpose));
    if (out_.model->model.spec().incremental_capable()) return *out_.model;
    if (incremental_) return *incremental_;
    const std::string family(to_string(out_.model->model.family()));
    if (out_.search && out_.search->best_incremental()) {
      const auto id = out_.search->best_incremental();
      incremental_ = make_bundle(select_best(*out_.search, prep_, *id));
      warn("WARNING: best model " + family + " does not support incremental learning; " + purpose +
           " uses candidate " + std::to_string(*id) + " (" +
           std::string(to_string(incremental_->model.family())) + ") instead");
      const auto path = file("incremental_model.json");
      save_model(*incremental_, path);
      emitted(path);
      return *incremental_;
    }
    for (const auto& b : out_.loaded)
      if (b.model.spec().incremental_capable()) {
        incremental_ = b;
        warn("WARNING: loaded model " + family + " does not support incremental learning; " + purpose +
             " uses the first incremental loaded model (" + std::string(to_string(b.model.family())) + ")");
        return *incremental_;
      }
    throw CapabilityError(family + " does not support incremental learning and no incremental candidate or loaded model is available");
  }

  void adapt_stage() {
    const ModelBundle& base = incremental_model("adaptation");
    std::vector<UserData> users;
    for (const auto& [user, rows] : partition_by_user(data_, cfg_.personalization_column))
      users.push_back({user, base.transform(rows), base.targets(rows)});
    out_.adaptation = adapt_models(base.model, users, {cfg_.user_train_frac, cfg_.seed});
    for (const auto& w : out_.adaptation->warnings()) warn(w);

    std::vector<LongRow> rows;
    std::size_t index = 0;
    for (const auto& u : out_.adaptation->users) {
      for (const auto& [metric, value] : u.before) rows.push_back({u.user_id, "base", metric, value});
      for (const auto& [metric, value] : u.after) rows.push_back({u.user_id, "adapted", metric, value});
      if (u.adapted) {
        ModelBundle b = base;
        b.created_utc = utc_timestamp();
        b.model = *u.adapted;
        const auto path = file("adapted_" + std::to_string(index) + "_" + sanitize(u.user_id) + ".json");
        save_model(b, path);
        emitted(path);
        adapted_.emplace_back(u.user_id, std::move(b));
      }
      ++index;
    }
    const auto path = file("adaptation.csv");
    write_long_csv(path, "user_id", "stage", rows);
    emitted(path);
  }

  void predict_stage() {
    RoutedModels routed;
    routed.base = &*out_.model;
    if (!adapted_.empty()) {
      routed.personalization_column = cfg_.personalization_column;
      for (const auto& [user, bundle] : adapted_) routed.users.emplace_back(user, &bundle);
    }
    const auto path = file("predictions.csv");
    out_.predicted_rows = predict_file(routed, cfg_.predict_path, path);
    emitted(path);
  }

  void partial_fit_stage() {
    const ModelBundle& m0 = incremental_model("partial fit");
    if (split_.test.size() == 0) throw DataError("incremental sessions need a non-empty test split");
    const Dataset inc = load_csv(cfg_.partial_fit_path);
    std::vector<SessionBatch> batches;
    const auto ranges = sequential_batches(inc.size(), cfg_.sessions);
    for (std::size_t s = 0; s < ranges.size(); ++s) {
      const auto [begin, end] = ranges[s];
      const std::size_t n = end - begin;
      const auto n_test = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(n) * cfg_.test_frac)));
      if (n_test >= n)
        throw DataError("session " + std::to_string(s + 1) + " has " + std::to_string(n) +
                        " row(s); too few to hold both train and test rows");
      std::vector<std::size_t> order(n);
      for (std::size_t i = 0; i < n; ++i) order[i] = begin + i;
      Rng rng(cfg_.seed + s + 1);
      rng.shuffle(std::span<std::size_t>(order));
      std::vector<std::size_t> test(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
      std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
      std::sort(test.begin(), test.end());
      std::sort(train.begin(), train.end());
      const Dataset tr = inc.select_rows(train), te = inc.select_rows(test);
      batches.push_back({m0.transform(tr), m0.targets(tr), m0.transform(te), m0.targets(te)});
    }
    out_.sessions = run_sessions(m0.model, m0.transform(split_.test), m0.targets(split_.test), batches);
    if (cfg_.task == Task::classification) {
      try {
        out_.omega = kemker_metrics(*out_.sessions);
      } catch (const ConfigError& e) {
        warn(std::string("kemker metrics unavailable: ") + e.what());
      }
    }
    ModelBundle final_bundle = m0;
    final_bundle.created_utc = utc_timestamp();
    final_bundle.model = *out_.sessions->final_model;
    auto path = file("partial_fit_model.json");
    save_model(final_bundle, path);
    emitted(path);
    write_sessions(m0);
  }

  void write_sessions(const ModelBundle& m0) {
    const auto& report = *out_.sessions;
    const bool cls = report.task == Task::classification;
    const double ideal = out_.omega ? out_.omega->alpha_ideal : std::numeric_limits<double>::quiet_NaN();
    const std::vector<std::string> plotted =
        cls ? std::vector<std::string>{"precision", "recall", "f1", "support", "accuracy", "kemker_loss"}
            : std::vector<std::string>{"rmse", "mae", "r2", "support"};
    const auto labels = metric_labels(m0);

    auto value = [&](const Checkpoint& c, const std::string& metric) -> double {
      if (metric == "support") return static_cast<double>(c.y_true.size());
      if (cls) {
        if (metric == "precision") return c.cls->macro_precision;
        if (metric == "recall") return c.cls->macro_recall;
        if (metric == "f1") return c.cls->macro_f1;
        if (metric == "accuracy") return c.cls->accuracy;
        if (metric == "kemker_loss") return 1.0 - c.cls->accuracy / ideal;
      } else {
        if (metric == "rmse") return c.reg->rmse;
        if (metric == "mae") return c.reg->mae;
        if (metric == "r2") return c.reg->r2;
      }
      return std::numeric_limits<double>::quiet_NaN();
    };

    std::vector<LongRow> rows;
    for (const auto& s : report.sessions) {
      const std::string key = "s" + std::to_string(s.index);
      for (const auto& c : s.checkpoints) {
        for (const auto& metric : plotted) {
          if (metric == "kemker_loss" && !out_.omega) continue;
          rows.push_back({key, c.name, metric, value(c, metric)});
        }
        if (cls)
          for (std::size_t k = 0; k < labels.size(); ++k) {
            rows.push_back({key, c.name, "precision:" + labels[k], c.cls->precision[k]});
            rows.push_back({key, c.name, "recall:" + labels[k], c.cls->recall[k]});
            rows.push_back({key, c.name, "f1:" + labels[k], c.cls->f1[k]});
            rows.push_back({key, c.name, "support:" + labels[k], static_cast<double>(c.cls->support[k])});
          }
      }
    }
    if (out_.omega) {
      rows.push_back({"omega", "all", "alpha_ideal", out_.omega->alpha_ideal});
      rows.push_back({"omega", "all", "omega_base", out_.omega->omega_base});
      rows.push_back({"omega", "all", "omega_new", out_.omega->omega_new});
      rows.push_back({"omega", "all", "omega_all", out_.omega->omega_all});
    }
    auto path = file("sessions.csv");
    write_long_csv(path, "session", "checkpoint", rows);
    emitted(path);

    for (const auto& metric : plotted) {
      LineChart chart;
      chart.title = "Incremental learning: " + metric;
      chart.x_label = "checkpoint (test set)";
      chart.y_label = metric;
      chart.x_ticks = {"base", "new", "all"};
      for (const auto& s : report.sessions) {
        Series series{s.index == 0 ? "s0 (base model)" : "s" + std::to_string(s.index), {}};
        for (const auto& c : s.checkpoints) series.y.push_back(value(c, metric));
        chart.series.push_back(std::move(series));
      }
      path = file("incremental_" + metric + ".svg");
      write_file_atomic(path, render_svg(chart));
      emitted(path);
    }
  }

  void report_stage() {
    if (out_.search) {
      auto path = file("results.csv");
      write_results_csv(path, out_.search->rows(cfg_.task));
      emitted(path);

      LineChart chart;
      chart.title = "Grid search: " + out_.search->criterion.name;
      chart.x_label = "candidate";
      chart.y_label = out_.search->criterion.name;
      Series val{"validation", {}}, test{"test", {}};
      for (const auto& r : out_.search->results) {
        chart.x_ticks.push_back(std::to_string(r.candidate.id));
        val.y.push_back(r.validation_score);
        test.y.push_back(r.test_score);
      }
      chart.series = {val, test};
      path = file("search_scores.svg");
      write_file_atomic(path, render_svg(chart));
      emitted(path);
    }
    if (out_.model && cfg_.task == Task::classification && split_.test.size() > 0) {
      const auto& m = *out_.model;
      const auto metrics = classification_metrics(m.targets(split_.test), m.predict(split_.test), m.model.n_classes());
      const auto path = file("classification_report.csv");
      write_classification_report(path, metrics, m.labels.tokens());
      emitted(path);
      test_metrics_ = metrics;
    }
    const auto path = file("summary.txt");
    emitted(path);
    write_file_atomic(path, summary());
  }

  std::string summary() const {
    std::ostringstream s;
    s << "AdaptoML run summary\n\n";
    s << "task: " << to_string(cfg_.task) << "\n";
    s << "dataset: " << data_.size() << " rows, " << data_.column_count() << " columns\n";
    s << "label column: " << cfg_.label_column << "\n";
    s << "personalization column: " << cfg_.personalization_column << "\n";
    s << "split: train " << split_.train.size() << ", validation " << split_.validation.size() << ", test "
      << split_.test.size() << " (seed " << cfg_.seed << ")\n";
    s << "imputation: " << imputer_.policy.to_string() << "\n";
    s << "features: " << feature_stage_label(stage_) << ", " << prep_.feature_names.size() << " column(s)\n";
    s << "stages: " << join(out_.stages, " -> ") << "\n\n";

    if (out_.search) {
      const auto& best = out_.search->best();
      std::size_t failed = 0;
      for (const auto& r : out_.search->results) failed += r.failed ? 1 : 0;
      s << "grid search: " << out_.search->results.size() << " candidates (" << failed << " failed), criterion "
        << out_.search->criterion.name << (out_.search->criterion.maximize ? " (maximize)" : " (minimize)") << "\n";
      s << "best model: candidate " << best.candidate.id << ", " << to_string(best.candidate.spec.family) << " ["
        << best.candidate.hyperparams_text() << "]\n";
      s << "  validation " << out_.search->criterion.name << " = " << format_double(best.validation_score) << "\n";
      s << "  test " << out_.search->criterion.name << " = " << format_double(best.test_score) << "\n";
      s << "  refit on train+validation and saved to best_model.json\n";
    }
    for (const auto& e : out_.loaded_eval) {
      s << "loaded model: " << std::filesystem::path(e.path).filename().string();
      for (const auto& [k, v] : e.test) s << " " << k << "=" << format_double(v);
      s << "\n";
    }
    if (test_metrics_)
      s << "test accuracy of the selected model: " << format_double(test_metrics_->accuracy) << ", macro f1 "
        << format_double(test_metrics_->macro_f1) << "\n";
    if (out_.adaptation) {
      std::size_t adapted = 0;
      for (const auto& u : out_.adaptation->users) adapted += u.adapted ? 1 : 0;
      s << "\nadaptation: " << adapted << " of " << out_.adaptation->users.size() << " user(s) adapted (user_train_frac "
        << format_double(cfg_.user_train_frac) << ")\n";
    }
    if (out_.sessions) {
      s << "\nincremental sessions: " << out_.sessions->session_count() << "\n";
      if (out_.omega)
        s << "  omega_base " << format_double(out_.omega->omega_base) << ", omega_new "
          << format_double(out_.omega->omega_new) << ", omega_all " << format_double(out_.omega->omega_all)
          << " (alpha_ideal " << format_double(out_.omega->alpha_ideal) << ")\n";
    }
    if (cfg_.predict_enabled()) s << "\npredictions: " << out_.predicted_rows << " row(s) in predictions.csv\n";
    if (!out_.warnings.empty()) {
      s << "\nwarnings:\n";
      for (const auto& w : out_.warnings) s << "  " << w << "\n";
    }
    s << "\nfiles:\n";
    for (const auto& f : out_.files) s << "  " << f.filename().string() << "\n";
    return s.str();
  }

  const PipelineConfig& cfg_;
  const RunOptions& opt_;
  RunOutputs out_;
  std::string current_;

  Dataset data_;
  Imputer imputer_;
  SplitDataset split_;
  FeatureEncoder encoder_;
  LabelEncoding labels_;
  FeatureStage stage_;
  PreparedData prep_;
  std::optional<ModelBundle> incremental_;
  std::vector<std::pair<std::string, ModelBundle>> adapted_;
  std::optional<ClassMetrics> test_metrics_;
};

}  // namespace

RunOutputs run_pipeline(const PipelineConfig& cfg, const RunOptions& options) {
  validate(cfg);
  return Runner(cfg, options).run();
}

std::size_t predict_file(const RoutedModels& models, const std::filesystem::path& x_pred_path,
                         const std::filesystem::path& out_path) {
  if (!models.base) throw Error("no model to predict with");
  const std::string text = read_file(x_pred_path);
  const auto records = parse_csv(text);
  if (records.size() < 2) throw DataError(x_pred_path.string() + ": no rows to predict");
  const Dataset d = parse_dataset(text);

  // Route rows: a known user gets their adapted model, everyone else the base.
  const bool routing = models.personalization_column && d.schema().find(*models.personalization_column);
  std::vector<const ModelBundle*> chosen(d.size(), models.base);
  std::vector<std::string> used(d.size(), "base");
  if (routing) {
    const auto col = d.schema().index_of(*models.personalization_column);
    for (std::size_t i = 0; i < d.size(); ++i) {
      const std::string user = cell_text(d.at(i, col));
      for (const auto& [id, bundle] : models.users)
        if (id == user) {
          chosen[i] = bundle;
          used[i] = user;
          break;
        }
    }
  }
  // Signature check up front for every model involved.
  std::map<const ModelBundle*, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < d.size(); ++i) groups[chosen[i]].push_back(i);
  std::vector<std::string> predictions(d.size());
  for (const auto& [bundle, rows] : groups) {
    for (const auto& c : bundle->preprocessing.encoder.columns())
      if (!d.schema().find(c.name))
        throw SignatureError(x_pred_path.string() + ": missing feature column '" + c.name + "'");
  }
  for (const auto& [bundle, rows] : groups) {
    const auto out = bundle->predict_text(d.select_rows(rows));
    for (std::size_t k = 0; k < rows.size(); ++k) predictions[rows[k]] = out[k];
  }

  std::ostringstream o;
  auto header = records[0].fields;
  header.push_back("prediction");
  if (routing) header.push_back("model_used");
  write_csv_row(o, header);
  for (std::size_t i = 0; i < d.size(); ++i) {
    auto fields = records[i + 1].fields;
    fields.push_back(predictions[i]);
    if (routing) fields.push_back(used[i]);
    write_csv_row(o, fields);
  }
  write_file_atomic(out_path, o.str());
  return d.size();
}

}  // namespace adaptoml
