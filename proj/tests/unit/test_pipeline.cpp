#include <doctest.h>

#include <cstdlib>
#include <json.hpp>
#include <sys/wait.h>

#include "adaptoml/pipeline.hpp"
#include "support/testing.hpp"

using namespace adaptoml;
namespace fs = std::filesystem;

namespace {

CliParse cli(std::vector<std::string> args) {
  args.insert(args.begin(), "adaptoml");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return parse_cli(static_cast<int>(argv.size()), argv.data());
}

std::vector<std::string> mandatory() {
  return {"--data", "d.csv", "--label-col", "label", "--person-col", "user", "--task", "classification"};
}

std::vector<std::string> with(std::vector<std::string> extra) {
  auto args = mandatory();
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

bool has_field(const ConfigValidationError& e, const std::string& field) {
  for (const auto& f : e.errors())
    if (f.field == field) return true;
  return false;
}

struct Workspace {
  testing::TempDir dir;
  PipelineConfig cfg;

  explicit Workspace(std::size_t rows = 80, bool regression = false) {
    testing::write_text(dir / "data.csv", testing::synthetic_csv(rows, 1, true, regression));
    cfg.data_path = (dir / "data.csv").string();
    cfg.label_column = "label";
    cfg.personalization_column = "user";
    cfg.task = regression ? Task::regression : Task::classification;
    cfg.out_dir = (dir / "out").string();
  }
  fs::path out(const std::string& name) const { return dir / "out" / name; }
};

int run_cli(const std::string& args) {
  const std::string cmd = std::string(ADAPTOML_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("cli: mandatory flags") {
  CHECK_THROWS_WITH_AS(cli({"--data", "d.csv", "--person-col", "u", "--task", "classification"}),
                       doctest::Contains("label-col required"), ConfigError);
  CHECK_THROWS_WITH_AS(cli({"--label-col", "l", "--person-col", "u", "--task", "regression"}),
                       doctest::Contains("data required"), ConfigError);
  CHECK_THROWS_WITH_AS(cli({"--data", "d", "--label-col", "l", "--person-col", "u", "--task", "clustering"}),
                       doctest::Contains("regression"), ConfigError);
  CHECK_THROWS_AS(cli(with({"--bogus"})), ConfigError);
}

TEST_CASE("cli: defaults and flags map onto the config") {
  const auto d = cli(mandatory()).config;
  CHECK(d.impute == "mean");
  CHECK(d.fit);
  CHECK(d.normalization == "grid");
  CHECK(d.sessions == 4);
  CHECK_FALSE(d.feature_selection);

  const auto c = cli(with({"--impute", "none", "--feature-selection", "--feature-extraction", "3", "--models",
                           "knn_classifier, gaussian_nb", "--load-model", "a.json", "--load-model", "b.json",
                           "--partial-fit", "inc.csv", "--sessions", "2", "--adapt", "--seed", "9", "--stratify"}))
                     .config;
  CHECK_FALSE(c.imputation_enabled());
  CHECK(c.feature_selection);
  CHECK(c.selection == "variance:0");
  CHECK(c.feature_extraction);
  CHECK(c.pca_components == 3);
  CHECK(c.families == std::vector<std::string>{"knn_classifier", "gaussian_nb"});
  CHECK(c.model_paths == std::vector<std::string>{"a.json", "b.json"});
  CHECK(c.sessions == 2);
  CHECK(c.adapt);
  CHECK(c.seed == 9);
  CHECK(c.stratify);

  CHECK(cli(with({"--feature-selection", "top_k:2"})).config.selection == "top_k:2");
  CHECK_THROWS_AS(cli(with({"--feature-extraction", "zero"})), ConfigError);
}

TEST_CASE("cli: help and print-config exit early") {
  const auto h = cli({"--help"});
  CHECK(h.exit_now);
  for (const char* group : {"Mandatory", "Data Preprocessing", "Feature Engineering", "Classifiers and Regressors"})
    CHECK(h.output.find(group) != std::string::npos);
  const auto p = cli(with({"--print-config"}));
  CHECK(p.exit_now);
  CHECK(config_from_json(p.output) == p.config);
}

TEST_CASE("invalid combination: predict without fit or models") {
  try {
    cli(with({"--no-fit", "--predict", "x.csv"}));
    FAIL("expected a validation error");
  } catch (const ConfigValidationError& e) {
    CHECK(has_field(e, "predict_path"));
  }
  CHECK_NOTHROW(cli(with({"--no-fit", "--predict", "x.csv", "--load-model", "m.json"})));
}

TEST_CASE("config json round trip and field errors") {
  PipelineConfig c;
  c.data_path = "x.csv";
  c.label_column = "y";
  c.personalization_column = "u";
  c.task = Task::regression;
  c.families = {"knn_regressor"};
  c.seed = 123;
  c.user_train_frac = 0.25;
  CHECK(config_from_json(config_to_json(c)) == c);

  try {
    config_from_json(R"({"label_column": 3, "task": "cluster", "sessions": -1, "colour": "red"})");
    FAIL("expected a validation error");
  } catch (const ConfigValidationError& e) {
    CHECK(has_field(e, "data_path"));
    CHECK(has_field(e, "label_column"));
    CHECK(has_field(e, "task"));
    CHECK(has_field(e, "sessions"));
    CHECK(has_field(e, "colour"));
  }
  CHECK_THROWS_AS(config_from_json("[1,2]"), ConfigValidationError);
  CHECK_THROWS_AS(config_from_json("{"), ConfigValidationError);
}

TEST_CASE("semantic validation") {
  PipelineConfig c;
  c.data_path = "x";
  c.label_column = "y";
  c.personalization_column = "y";
  c.normalization = "maybe";
  c.families = {"knn_regressor"};
  c.test_frac = 1.0;
  std::set<std::string> fields;
  for (const auto& e : validation_errors(c)) fields.insert(e.field);
  for (const char* f : {"personalization_column", "normalization", "families", "test_frac"}) CHECK(fields.count(f));
  CHECK_THROWS_AS(parse_selection("top_k:0"), ConfigError);
  CHECK(parse_selection("variance:0.5").threshold == 0.5);
}

TEST_CASE("full run emits the expected files") {
  Workspace w;
  testing::write_text(w.dir / "pred.csv", testing::synthetic_csv(10, 7));
  testing::write_text(w.dir / "inc.csv", testing::synthetic_csv(40, 8));
  w.cfg.predict_path = (w.dir / "pred.csv").string();
  w.cfg.partial_fit_path = (w.dir / "inc.csv").string();
  w.cfg.adapt = true;
  w.cfg.families = {"gaussian_nb", "knn_classifier"};
  std::vector<std::string> stages_seen;
  RunOptions opt;
  opt.progress = [&](const Progress& p) {
    if (stages_seen.empty() || stages_seen.back() != p.stage) stages_seen.push_back(p.stage);
  };
  const auto out = run_pipeline(w.cfg, opt);
  CHECK(out.stages == std::vector<std::string>{"load", "impute", "split", "fit", "adapt", "predict", "partial_fit",
                                               "report"});
  CHECK(stages_seen == out.stages);
  for (const char* f : {"results.csv", "search_scores.svg", "best_model.json", "classification_report.csv",
                        "adaptation.csv", "predictions.csv", "sessions.csv", "partial_fit_model.json", "summary.txt"})
    CHECK(fs::exists(w.out(f)));
  for (const char* m : {"precision", "recall", "f1", "support", "accuracy", "kemker_loss"})
    CHECK(fs::exists(w.out(std::string("incremental_") + m + ".svg")));
  CHECK(fs::exists(w.out("adapted_0_u1.json")));
  CHECK(out.predicted_rows == 10);

  // Rows of known users go to their adapted model.
  const auto pred = parse_csv(testing::read_text(w.out("predictions.csv")));
  CHECK(pred[0].fields == std::vector<std::string>{"f1", "f2", "colour", "user", "label", "prediction", "model_used"});
  CHECK(pred[1].fields[6] == pred[1].fields[3]);

  // results.csv: 10 candidates x 2 splits x 4 metrics
  CHECK(read_results_csv(w.out("results.csv")).size() == 80);
  const auto summary = testing::read_text(w.out("summary.txt"));
  CHECK(summary.find("omega_base") != std::string::npos);
  CHECK(summary.find("fit -> adapt") != std::string::npos);
}

TEST_CASE("non-incremental winner falls back with a warning") {
  Workspace w;
  testing::write_text(w.dir / "inc.csv", testing::synthetic_csv(40, 8));
  w.cfg.partial_fit_path = (w.dir / "inc.csv").string();
  // A tree-only grid has no incremental candidate to fall back on.
  w.cfg.families = {"decision_tree"};
  CHECK_THROWS_AS(run_pipeline(w.cfg), StageError);

  Workspace nb;
  nb.cfg.families = {"gaussian_nb"};
  run_pipeline(nb.cfg);
  w.cfg.model_paths = {nb.out("best_model.json").string()};
  const auto out = run_pipeline(w.cfg);
  CHECK(out.model->model.family() == Family::decision_tree);
  REQUIRE_FALSE(out.warnings.empty());
  CHECK(out.warnings.front().rfind("WARNING", 0) == 0);
  CHECK(out.sessions->final_model->family() == Family::gaussian_nb);
}

TEST_CASE("regression runs write regression session charts") {
  Workspace w(80, true);
  testing::write_text(w.dir / "inc.csv", testing::synthetic_csv(40, 8, false, true));
  w.cfg.partial_fit_path = (w.dir / "inc.csv").string();
  w.cfg.families = {"knn_regressor"};
  const auto out = run_pipeline(w.cfg);
  CHECK_FALSE(out.omega.has_value());
  for (const char* m : {"rmse", "mae", "r2", "support"})
    CHECK(fs::exists(w.out(std::string("incremental_") + m + ".svg")));
  CHECK_FALSE(fs::exists(w.out("classification_report.csv")));
  CHECK_FALSE(fs::exists(w.out("incremental_kemker_loss.svg")));
}

TEST_CASE("feature stages and export") {
  Workspace w;
  w.cfg.families = {"gaussian_nb"};
  w.cfg.feature_extraction = true;
  w.cfg.pca_components = 2;
  w.cfg.feature_selection = true;  // extraction wins
  w.cfg.export_features = "bundle";
  const auto out = run_pipeline(w.cfg);
  CHECK(std::find(out.stages.begin(), out.stages.end(), "feature_extract") != out.stages.end());
  CHECK(std::find(out.stages.begin(), out.stages.end(), "feature_select") == out.stages.end());
  const auto t = load_feature_bundle(w.out("features.amxf"));
  CHECK(t.headers == std::vector<std::string>{"pc1", "pc2", "label"});
  CHECK(t.values.rows() == 80);
}

TEST_CASE("stage failures name the stage and keep earlier files") {
  Workspace w;
  w.cfg.data_path = (w.dir / "missing.csv").string();
  try {
    run_pipeline(w.cfg);
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "load");
    CHECK(std::string(e.what()).rfind("load: ", 0) == 0);
  }

  Workspace p;
  p.cfg.families = {"gaussian_nb"};
  testing::write_text(p.dir / "pred.csv", "f1,colour\n1,red\n");
  p.cfg.predict_path = (p.dir / "pred.csv").string();
  try {
    run_pipeline(p.cfg);
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "predict");
    CHECK(std::string(e.what()).find("'f2'") != std::string::npos);
    CHECK(std::find(e.written().begin(), e.written().end(), p.out("best_model.json")) != e.written().end());
    CHECK_FALSE(fs::exists(p.out("predictions.csv")));
  }
}

TEST_CASE("missing labels are an error") {
  testing::TempDir dir;
  testing::write_text(dir / "d.csv", "x,user,label\n1,u1,a\n2,u1,\n3,u2,b\n");
  PipelineConfig c;
  c.data_path = (dir / "d.csv").string();
  c.label_column = "label";
  c.personalization_column = "user";
  c.out_dir = (dir / "out").string();
  CHECK_THROWS_WITH_AS(run_pipeline(c), doctest::Contains("missing value"), StageError);
}

TEST_CASE("predict-only run with a loaded model") {
  Workspace train;
  train.cfg.families = {"knn_classifier"};
  run_pipeline(train.cfg);

  Workspace w;
  testing::write_text(w.dir / "pred.csv", testing::synthetic_csv(5, 3));
  w.cfg.fit = false;
  w.cfg.model_paths = {train.out("best_model.json").string()};
  w.cfg.predict_path = (w.dir / "pred.csv").string();
  const auto out = run_pipeline(w.cfg);
  CHECK(out.stages == std::vector<std::string>{"load", "impute", "split", "load_models", "predict", "report"});
  CHECK(fs::exists(w.out("predictions.csv")));
  CHECK_FALSE(fs::exists(w.out("results.csv")));
  CHECK(out.loaded_eval.size() == 1);
}

TEST_CASE("cli exit codes") {
  Workspace w;
  const std::string base = "--data " + w.cfg.data_path + " --label-col label --person-col user --task classification";
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("--task classification") == 1);
  CHECK(run_cli(base + " --no-fit --predict x.csv") == 1);
  CHECK(run_cli(base + " --models gaussian_nb --threads 1 --out " + (w.dir / "cli").string()) == 0);
  CHECK(fs::exists(w.dir / "cli" / "results.csv"));
  CHECK(run_cli("--data " + (w.dir / "nope.csv").string() +
                " --label-col label --person-col user --task classification --out " + (w.dir / "x").string()) == 2);
}

}  // TEST_SUITE
