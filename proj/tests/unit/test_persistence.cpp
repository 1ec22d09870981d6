#include <doctest.h>

#include <json.hpp>

#include "adaptoml/persistence.hpp"
#include "support/bundles.hpp"

using namespace adaptoml;
using json = nlohmann::json;

TEST_SUITE("persistence") {

TEST_CASE("every family survives save and load") {
  testing::TempDir dir;
  Rng rng(31);
  for (auto family : all_families()) {
    CAPTURE(to_string(family));
    const auto fx = testing::make_bundle(family, 5);
    const auto path = dir / (std::string(to_string(family)) + ".json");
    save_model(fx.bundle, path);
    const auto back = load_model(path);
    CHECK(back.model == fx.bundle.model);
    CHECK(back.labels == fx.bundle.labels);
    const bool regression = task_of(family) == Task::regression;
    for (int probe = 0; probe < 10; ++probe) {
      const auto rows = testing::probe_rows(rng, 12, regression);
      CHECK(back.predict(rows) == fx.bundle.predict(rows));
      const auto x = testing::random_matrix(rng, 9, fx.bundle.model.feature_names().size());
      CHECK(predict(back.model, x) == predict(fx.bundle.model, x));
    }
    // Saving the loaded bundle reproduces the file.
    CHECK(bundle_to_json(back) == testing::read_text(path));
  }
}

TEST_CASE("bundles carry feature stages") {
  const auto plain = testing::make_bundle(Family::gaussian_nb, 3, false);
  const auto x = plain.bundle.preprocessing.encoder.transform(
      plain.bundle.preprocessing.imputer.apply(plain.raw));
  const auto pca = testing::make_bundle(Family::gaussian_nb, 3, false, pca_fit(x, 2));
  const auto back = bundle_from_json(bundle_to_json(pca.bundle));
  CHECK(back.model.feature_names() == std::vector<std::string>{"pc1", "pc2"});
  CHECK(back.predict(pca.raw) == pca.bundle.predict(pca.raw));

  FeatureMask mask;
  mask.keep = std::vector<bool>(x.cols(), false);
  mask.keep[0] = true;
  mask.scores.assign(x.cols(), 1.0);
  mask.policy = "top_k:1";
  const auto sel = testing::make_bundle(Family::knn_classifier, 3, true, mask);
  const auto back2 = bundle_from_json(bundle_to_json(sel.bundle));
  CHECK(back2.model.feature_names() == std::vector<std::string>{"f1"});
  CHECK(back2.predict(sel.raw) == sel.bundle.predict(sel.raw));
}

TEST_CASE("document layout") {
  const auto fx = testing::make_bundle(Family::decision_tree, 1);
  const auto doc = json::parse(bundle_to_json(fx.bundle));
  for (const char* key : {"format_version", "created_utc", "task", "label_encoding", "preprocessing", "model",
                          "feature_signature"})
    CHECK(doc.contains(key));
  CHECK(doc["format_version"] == 1);
  CHECK(doc["label_encoding"] == json({"a", "b", "c"}));
  CHECK(doc["model"]["family"] == "decision_tree");
}

TEST_CASE("load errors") {
  testing::TempDir dir;
  const auto fx = testing::make_bundle(Family::gaussian_nb, 2);
  auto doc = json::parse(bundle_to_json(fx.bundle));

  CHECK_THROWS_WITH_AS(load_model(dir / "absent.json"), doctest::Contains("absent.json"), FormatError);

  testing::write_text(dir / "garbage.json", "{not json");
  CHECK_THROWS_WITH_AS(load_model(dir / "garbage.json"), doctest::Contains("malformed"), FormatError);

  auto v = doc;
  v["format_version"] = 999;
  testing::write_text(dir / "v999.json", v.dump());
  CHECK_THROWS_WITH_AS(load_model(dir / "v999.json"), doctest::Contains("unknown format_version 999"), FormatError);

  auto missing = doc;
  missing.erase("model");
  testing::write_text(dir / "missing.json", missing.dump());
  CHECK_THROWS_WITH_AS(load_model(dir / "missing.json"), doctest::Contains("missing.json"), FormatError);

  auto shape = doc;
  shape["model"]["parameters"]["class_count"] = json::array({1.0});
  testing::write_text(dir / "shape.json", shape.dump());
  CHECK_THROWS_AS(load_model(dir / "shape.json"), FormatError);

  auto hash = doc;
  hash["feature_signature"]["hash"] = "0000000000000000";
  testing::write_text(dir / "hash.json", hash.dump());
  CHECK_THROWS_WITH_AS(load_model(dir / "hash.json"), doctest::Contains("feature_signature"), FormatError);

  CHECK_THROWS_AS(save_model(fx.bundle, dir / "no/such/dir/m.json"), FormatError);
}

TEST_CASE("signature check runs before prediction") {
  const auto fx = testing::make_bundle(Family::gaussian_nb, 4);
  const auto wrong = parse_dataset("f1,colour\n1,red\n");
  CHECK_THROWS_WITH_AS(fx.bundle.predict(wrong), doctest::Contains("'f2'"), SignatureError);
  // Extra columns are ignored, order is free.
  const auto shuffled = parse_dataset("colour,extra,f2,f1\nred,9,0.5,1\n");
  CHECK(fx.bundle.predict(shuffled).size() == 1);
  CHECK(fx.bundle.predict_text(shuffled)[0].size() == 1);
}

TEST_CASE("imputation travels with the bundle") {
  const auto fx = testing::make_bundle(Family::knn_classifier, 6);
  const auto with_gap = parse_dataset("f1,f2,colour\n1,NA,red\n");
  CHECK_NOTHROW(fx.bundle.predict(with_gap));
}

}  // TEST_SUITE
