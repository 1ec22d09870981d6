#pragma once

// Builds small fitted bundles straight from the library pieces, without the
// pipeline, so persistence can be checked in isolation.

#include "adaptoml/persistence.hpp"
#include "support/testing.hpp"

namespace testing {

struct BundleFixture {
  adaptoml::ModelBundle bundle;
  adaptoml::Dataset raw;  // the training table (with label and user)
};

inline BundleFixture make_bundle(adaptoml::Family family, std::uint64_t seed, bool normalize = true,
                                 adaptoml::FeatureStage stage = {}) {
  using namespace adaptoml;
  const bool regression = task_of(family) == Task::regression;
  auto raw = parse_dataset(synthetic_csv(60, seed, true, regression));
  raw = raw.with_schema(raw.schema().with_roles("label", std::string("user")));

  ModelBundle b;
  b.created_utc = "2024-01-01T00:00:00Z";
  b.task = task_of(family);
  b.preprocessing.label_column = "label";
  b.preprocessing.personalization_column = "user";
  b.preprocessing.imputer = fit_imputer(raw.drop_column("label"), ImputePolicy::parse("mean"));
  const auto filled = b.preprocessing.imputer.apply(raw);
  b.preprocessing.encoder = fit_encoder(filled, {"label", "user"});
  b.preprocessing.feature_stage = std::move(stage);

  Matrix x = apply_feature_stage(b.preprocessing.feature_stage, b.preprocessing.encoder.transform(filled));
  if (normalize) {
    b.preprocessing.normalizer = fit_normalizer(x);
    x = b.preprocessing.normalizer->transform(x);
  }
  std::vector<double> y;
  std::optional<std::size_t> k;
  if (regression) {
    y = filled.numeric_values("label");
  } else {
    auto [enc, idx] = encode_labels(filled.tokens("label"));
    b.labels = enc;
    for (auto i : idx) y.push_back(static_cast<double>(i));
    k = enc.size();
  }
  const auto names = feature_stage_names(b.preprocessing.feature_stage, b.preprocessing.encoder.feature_names());
  b.model = fit(ModelSpec::make(family, {}, seed), x, y, names, k);
  return {std::move(b), std::move(raw)};
}

/// Random raw rows with the training columns (label and user included).
inline adaptoml::Dataset probe_rows(adaptoml::Rng& rng, std::size_t n, bool regression) {
  return adaptoml::parse_dataset(synthetic_csv(n, rng.next(), false, regression));
}

}  // namespace testing
