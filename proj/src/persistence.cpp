#include "adaptoml/persistence.hpp"

#include <json.hpp>

#include <cmath>

namespace adaptoml {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Applying a bundle
// ---------------------------------------------------------------------------

Matrix ModelBundle::features(const Dataset& raw) const {
  // Column-set check first: nothing is imputed or encoded on a mismatch.
  for (const auto& c : preprocessing.encoder.columns())
    if (!raw.schema().find(c.name))
      throw SignatureError("input is missing feature column '" + c.name + "' expected by the model");
  Dataset d = raw;
  for (const auto& col : raw.schema().columns) {
    const bool used = std::any_of(preprocessing.encoder.columns().begin(), preprocessing.encoder.columns().end(),
                                  [&](const EncodedColumn& e) { return e.name == col.name; });
    if (!used) d = d.drop_column(col.name);
  }
  d = preprocessing.imputer.apply(d);
  return apply_feature_stage(preprocessing.feature_stage, preprocessing.encoder.transform(d));
}

Matrix ModelBundle::transform(const Dataset& raw) const {
  Matrix x = features(raw);
  return preprocessing.normalizer ? preprocessing.normalizer->transform(x) : x;
}

std::vector<double> ModelBundle::predict(const Dataset& raw) const { return adaptoml::predict(model, transform(raw)); }

std::string ModelBundle::decode(double prediction) const {
  if (task == Task::regression) return format_double(prediction);
  return labels.decode(static_cast<std::size_t>(prediction));
}

std::vector<std::string> ModelBundle::predict_text(const Dataset& raw) const {
  std::vector<std::string> out;
  for (double p : predict(raw)) out.push_back(decode(p));
  return out;
}

std::vector<double> ModelBundle::targets(const Dataset& raw) const {
  const auto& label = preprocessing.label_column;
  if (!raw.schema().find(label)) throw DataError("label column '" + label + "' not found");
  if (task == Task::regression) return raw.numeric_values(label);
  std::vector<double> y;
  for (const auto& tok : raw.tokens(label)) y.push_back(static_cast<double>(labels.encode(tok)));
  return y;
}

void ModelBundle::validate() const {
  auto fail = [](const std::string& what) { throw FormatError("inconsistent bundle: " + what); };
  if (model.task() != task) fail("model task differs from bundle task");
  if (task == Task::classification && labels.size() != model.n_classes())
    fail("label encoding has " + std::to_string(labels.size()) + " classes, model has " +
         std::to_string(model.n_classes()));
  const std::size_t width = preprocessing.encoder.width();
  std::size_t dim = width;
  if (const auto* mask = std::get_if<FeatureMask>(&preprocessing.feature_stage)) {
    if (mask->keep.size() != width) fail("feature mask width differs from encoder width");
    dim = mask->kept_indices().size();
  } else if (const auto* pca = std::get_if<PcaModel>(&preprocessing.feature_stage)) {
    if (pca->input_dim() != width || pca->components.cols() != width) fail("PCA input width differs from encoder width");
    if (pca->explained_variance.size() != pca->output_dim()) fail("PCA variance count differs from component count");
    dim = pca->output_dim();
  }
  if (preprocessing.normalizer &&
      (preprocessing.normalizer->mean.size() != dim || preprocessing.normalizer->stddev.size() != dim))
    fail("normalizer width differs from feature width");
  const auto names = feature_stage_names(preprocessing.feature_stage, preprocessing.encoder.feature_names());
  if (names != model.feature_names()) fail("model feature names differ from the preprocessing output");
}

// ---------------------------------------------------------------------------
// JSON encoding
// ---------------------------------------------------------------------------

namespace {

json matrix_json(const Matrix& m) { return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.values()}}; }

Matrix matrix_from(const json& j) {
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != rows * cols)
    throw FormatError("matrix declares " + std::to_string(rows) + "x" + std::to_string(cols) + " but holds " +
                      std::to_string(data.size()) + " values");
  Matrix m(rows, cols);
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

json cell_json(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return *d;
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  return nullptr;
}

Cell cell_from(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  return std::monostate{};
}

json params_json(const ModelParams& params) {
  return std::visit(
      [](const auto& p) -> json {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, NaiveBayesParams>) {
          return {{"class_count", p.class_count}, {"mean", matrix_json(p.mean)},   {"m2", matrix_json(p.m2)},
                  {"total_count", p.total_count}, {"feature_mean", p.feature_mean}, {"feature_m2", p.feature_m2}};
        } else if constexpr (std::is_same_v<P, LinearParams>) {
          return {{"weights", matrix_json(p.weights)}, {"bias", p.bias}};
        } else if constexpr (std::is_same_v<P, KnnParams>) {
          return {{"rows", matrix_json(p.rows)}, {"targets", p.targets}};
        } else {
          json nodes = json::array();
          for (const auto& n : p.nodes)
            nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left},
                             {"right", n.right}, {"value", n.value}});
          return {{"nodes", nodes}};
        }
      },
      params);
}

ModelParams params_from(Family family, const json& j) {
  switch (family) {
    case Family::gaussian_nb: {
      NaiveBayesParams p;
      p.class_count = j.at("class_count").get<std::vector<double>>();
      p.mean = matrix_from(j.at("mean"));
      p.m2 = matrix_from(j.at("m2"));
      p.total_count = j.at("total_count").get<double>();
      p.feature_mean = j.at("feature_mean").get<std::vector<double>>();
      p.feature_m2 = j.at("feature_m2").get<std::vector<double>>();
      return p;
    }
    case Family::sgd_classifier:
    case Family::sgd_regressor:
      return LinearParams{matrix_from(j.at("weights")), j.at("bias").get<std::vector<double>>()};
    case Family::knn_classifier:
    case Family::knn_regressor:
      return KnnParams{matrix_from(j.at("rows")), j.at("targets").get<std::vector<double>>()};
    case Family::decision_tree: {
      TreeParams p;
      for (const auto& n : j.at("nodes"))
        p.nodes.push_back({n.at("feature").get<int>(), n.at("threshold").get<double>(), n.at("left").get<int>(),
                           n.at("right").get<int>(), n.at("value").get<double>()});
      return p;
    }
  }
  throw FormatError("unknown family");
}

json stage_json(const FeatureStage& stage) {
  if (const auto* mask = std::get_if<FeatureMask>(&stage)) {
    std::vector<bool> keep(mask->keep.begin(), mask->keep.end());
    return {{"kind", "select"}, {"policy", mask->policy}, {"keep", keep}, {"scores", mask->scores}};
  }
  if (const auto* pca = std::get_if<PcaModel>(&stage))
    return {{"kind", "pca"},
            {"components", matrix_json(pca->components)},
            {"explained_variance", pca->explained_variance},
            {"means", pca->means}};
  return {{"kind", "none"}};
}

FeatureStage stage_from(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "none") return std::monostate{};
  if (kind == "select") {
    FeatureMask m;
    m.policy = j.at("policy").get<std::string>();
    m.keep = j.at("keep").get<std::vector<bool>>();
    m.scores = j.at("scores").get<std::vector<double>>();
    if (m.scores.size() != m.keep.size()) throw FormatError("feature mask scores and keep flags differ in length");
    return m;
  }
  if (kind == "pca") {
    PcaModel p;
    p.components = matrix_from(j.at("components"));
    p.explained_variance = j.at("explained_variance").get<std::vector<double>>();
    p.means = j.at("means").get<std::vector<double>>();
    return p;
  }
  throw FormatError("unknown feature stage kind '" + kind + "'");
}

}  // namespace

std::string bundle_to_json(const ModelBundle& b) {
  const auto& pre = b.preprocessing;
  json fills = json::array();
  for (const auto& [name, cell] : pre.imputer.fills) fills.push_back({{"column", name}, {"value", cell_json(cell)}});
  json columns = json::array();
  for (const auto& c : pre.encoder.columns())
    columns.push_back({{"name", c.name}, {"kind", std::string(to_string(c.kind))}, {"categories", c.categories}});
  json normalizer = nullptr;
  if (pre.normalizer) normalizer = {{"mean", pre.normalizer->mean}, {"stddev", pre.normalizer->stddev}};

  json hyper = json::object();
  for (const auto& [k, v] : b.model.spec().hyperparameters) hyper[k] = v;

  json doc;
  doc["format_version"] = b.format_version;
  doc["created_utc"] = b.created_utc;
  doc["task"] = std::string(to_string(b.task));
  doc["label_encoding"] = b.task == Task::classification ? json(b.labels.tokens()) : json(nullptr);
  doc["preprocessing"] = {{"label_column", pre.label_column},
                          {"personalization_column", pre.personalization_column ? json(*pre.personalization_column)
                                                                                : json(nullptr)},
                          {"imputer", {{"policy", pre.imputer.policy.to_string()}, {"fills", fills}}},
                          {"encoder", columns},
                          {"feature_stage", stage_json(pre.feature_stage)},
                          {"normalizer", normalizer}};
  doc["model"] = {{"family", std::string(to_string(b.model.family()))},
                  {"hyperparameters", hyper},
                  {"seed", b.model.spec().seed},
                  {"n_classes", b.model.n_classes()},
                  {"parameters", params_json(b.model.params())}};
  doc["feature_signature"] = {{"names", b.model.feature_names()}, {"hash", to_hex(b.model.signature())}};
  return doc.dump(2) + "\n";
}

ModelBundle bundle_from_json(std::string_view text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(source + ": malformed model bundle (" + e.what() + ")");
  }
  try {
    if (!doc.is_object()) throw FormatError("top level is not an object");
    if (!doc.contains("format_version")) throw FormatError("missing format_version");
    const auto& version = doc.at("format_version");
    if (!version.is_number_integer() || version.get<long long>() != kBundleFormatVersion)
      throw FormatError("unknown format_version " + version.dump() + " (supported: " +
                        std::to_string(kBundleFormatVersion) + ")");

    ModelBundle b;
    b.created_utc = doc.at("created_utc").get<std::string>();
    b.task = parse_task(doc.at("task").get<std::string>());
    if (b.task == Task::classification) {
      auto tokens = doc.at("label_encoding").get<std::vector<std::string>>();
      if (!std::is_sorted(tokens.begin(), tokens.end()) ||
          std::adjacent_find(tokens.begin(), tokens.end()) != tokens.end())
        throw FormatError("label_encoding must be sorted and distinct");
      b.labels = LabelEncoding(std::move(tokens));
    }

    const auto& pre = doc.at("preprocessing");
    b.preprocessing.label_column = pre.at("label_column").get<std::string>();
    if (!pre.at("personalization_column").is_null())
      b.preprocessing.personalization_column = pre.at("personalization_column").get<std::string>();
    b.preprocessing.imputer.policy = ImputePolicy::parse(pre.at("imputer").at("policy").get<std::string>());
    for (const auto& f : pre.at("imputer").at("fills"))
      b.preprocessing.imputer.fills.emplace_back(f.at("column").get<std::string>(), cell_from(f.at("value")));
    std::vector<EncodedColumn> columns;
    for (const auto& c : pre.at("encoder")) {
      const auto kind = c.at("kind").get<std::string>();
      if (kind != "numeric" && kind != "categorical") throw FormatError("unknown column kind '" + kind + "'");
      columns.push_back({c.at("name").get<std::string>(),
                         kind == "numeric" ? ColumnKind::numeric : ColumnKind::categorical,
                         c.at("categories").get<std::vector<std::string>>()});
    }
    b.preprocessing.encoder = FeatureEncoder(std::move(columns));
    b.preprocessing.feature_stage = stage_from(pre.at("feature_stage"));
    if (const auto& n = pre.at("normalizer"); !n.is_null())
      b.preprocessing.normalizer =
          Normalizer{n.at("mean").get<std::vector<double>>(), n.at("stddev").get<std::vector<double>>()};

    const auto& m = doc.at("model");
    const Family family = parse_family(m.at("family").get<std::string>());
    Hyperparams hyper;
    for (const auto& [k, v] : m.at("hyperparameters").items()) hyper[k] = v.get<double>();
    ModelSpec spec{family, hyper, m.at("seed").get<std::uint64_t>()};
    const auto& sig = doc.at("feature_signature");
    auto names = sig.at("names").get<std::vector<std::string>>();
    if (to_hex(feature_signature(names)) != sig.at("hash").get<std::string>())
      throw FormatError("feature_signature hash does not match its names");
    b.model = TrainedModel::restore(spec, std::move(names), m.at("n_classes").get<std::size_t>(),
                                    params_from(family, m.at("parameters")));
    b.validate();
    return b;
  } catch (const json::exception& e) {
    throw FormatError(source + ": malformed model bundle (" + e.what() + ")");
  } catch (const FormatError& e) {
    throw FormatError(source + ": " + e.what());
  } catch (const Error& e) {
    throw FormatError(source + ": invalid model bundle (" + e.what() + ")");
  }
}

void save_model(const ModelBundle& bundle, const std::filesystem::path& path) {
  bundle.validate();
  try {
    write_file_atomic(path, bundle_to_json(bundle));
  } catch (const FormatError&) {
    throw;
  } catch (const std::exception& e) {
    throw FormatError(path.string() + ": cannot write model bundle (" + e.what() + ")");
  }
}

ModelBundle load_model(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw FormatError(path.string() + ": cannot read model bundle (" + e.what() + ")");
  }
  return bundle_from_json(text, path.string());
}

std::vector<ModelBundle> load_models(const std::vector<std::filesystem::path>& paths) {
  std::vector<ModelBundle> out;
  for (const auto& p : paths) out.push_back(load_model(p));
  return out;
}

}  // namespace adaptoml
