#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "adaptoml/features.hpp"
#include "support/testing.hpp"

using namespace adaptoml;

TEST_SUITE("features") {

TEST_CASE("variance selection keeps columns above the threshold") {
  const auto x = Matrix::from_rows({{1, 5, 0}, {3, 5, 1}, {5, 5, 0}});
  const std::vector<double> y{0, 1, 0};
  const auto m = select_features(x, y, SelectionPolicy::variance(0.0), Task::classification);
  CHECK(m.keep == std::vector<bool>{true, false, true});
  CHECK(m.kept_indices() == std::vector<std::size_t>{0, 2});
  CHECK(m.apply(x) == Matrix::from_rows({{1, 0}, {3, 1}, {5, 0}}));
  CHECK(m.apply_names({"a", "b", "c"}) == std::vector<std::string>{"a", "c"});
  CHECK_THROWS_AS(select_features(x, y, SelectionPolicy::variance(100.0), Task::classification), DataError);
  CHECK_THROWS_AS(m.apply(Matrix(1, 2)), SignatureError);
}

TEST_CASE("ANOVA F matches a hand computation") {
  // Groups {1,2,3} and {5,6,7}: ssb = 24, ssw = 4, F = (24/1)/(4/4) = 24.
  const auto x = Matrix::from_rows({{1}, {2}, {3}, {5}, {6}, {7}});
  const std::vector<double> y{0, 0, 0, 1, 1, 1};
  CHECK(relevance_scores(x, y, Task::classification)[0] == doctest::Approx(24.0));
}

TEST_CASE("degenerate relevance scores") {
  const auto sep = Matrix::from_rows({{0, 3}, {0, 3}, {1, 3}, {1, 3}});
  const std::vector<double> y{0, 0, 1, 1};
  const auto s = relevance_scores(sep, y, Task::classification);
  CHECK(s[0] == std::numeric_limits<double>::max());
  CHECK(s[1] == 0.0);
  const std::vector<double> t{1, 2, 3, 4};
  const auto r = relevance_scores(Matrix::from_rows({{1, 0}, {2, 0}, {3, 0}, {4, 0}}), t, Task::regression);
  CHECK(r[0] == doctest::Approx(1.0));
  CHECK(r[1] == 0.0);
}

TEST_CASE("top_k keeps the k highest scores, earlier column on ties") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    auto b = testing::blobs(rng, 30, 6, 3);
    const std::size_t k = 1 + rng.uniform_index(6);
    const auto m = select_features(b.x, b.y, SelectionPolicy::top_k(k), Task::classification);
    CHECK(m.kept_indices().size() == k);
    double min_kept = std::numeric_limits<double>::infinity(), max_dropped = -1;
    for (std::size_t j = 0; j < 6; ++j) {
      if (m.keep[j]) min_kept = std::min(min_kept, m.scores[j]);
      else max_dropped = std::max(max_dropped, m.scores[j]);
    }
    CHECK(min_kept >= max_dropped);
  }
  const auto tied = Matrix::from_rows({{1, 1}, {2, 2}, {3, 3}, {4, 4}});
  const std::vector<double> y{0, 0, 1, 1};
  CHECK(select_features(tied, y, SelectionPolicy::top_k(1), Task::classification).keep ==
        std::vector<bool>{true, false});
  CHECK_THROWS_AS(select_features(tied, y, SelectionPolicy::top_k(3), Task::classification), ConfigError);
}

TEST_CASE("PCA on a line recovers its direction") {
  const auto x = Matrix::from_rows({{0, 0}, {1, 2}, {2, 4}, {3, 6}});
  const auto p = pca_fit(x, 1);
  CHECK(p.components(0, 0) == doctest::Approx(1 / std::sqrt(5.0)));
  CHECK(p.components(0, 1) == doctest::Approx(2 / std::sqrt(5.0)));
  // Population variance along the line: 5 * var({0,1,2,3}) = 5 * 1.25.
  CHECK(p.explained_variance[0] == doctest::Approx(6.25));
  CHECK(p.output_names() == std::vector<std::string>{"pc1"});
}

TEST_CASE("PCA properties on random data") {
  Rng rng(8);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 3 + rng.uniform_index(30), d = 1 + rng.uniform_index(6);
    const auto x = testing::random_matrix(rng, n, d);
    const std::size_t k = std::min(n, d);
    const auto p = pca_fit(x, k);
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < k; ++b) {
        double dot = 0;
        for (std::size_t j = 0; j < d; ++j) dot += p.components(a, j) * p.components(b, j);
        CHECK(dot == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-9));
      }
      if (a > 0) CHECK(p.explained_variance[a] <= p.explained_variance[a - 1] + 1e-12);
    }
    if (k == d) {
      const auto back = p.inverse_transform(pca_transform(p, x));
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) CHECK(back(i, j) == doctest::Approx(x(i, j)).epsilon(1e-9));
      const auto var = column_variances(x);
      CHECK(std::accumulate(p.explained_variance.begin(), p.explained_variance.end(), 0.0) ==
            doctest::Approx(std::accumulate(var.begin(), var.end(), 0.0)).epsilon(1e-9));
    }
  }
  CHECK_THROWS_AS(pca_fit(Matrix(1, 3), 1), DataError);
  CHECK_THROWS_AS(pca_fit(Matrix(4, 3), 4), ConfigError);
}

TEST_CASE("feature stage helpers") {
  FeatureStage none;
  const auto x = Matrix::from_rows({{1, 2}});
  CHECK(apply_feature_stage(none, x) == x);
  CHECK(feature_stage_names(none, {"a", "b"}) == std::vector<std::string>{"a", "b"});
  CHECK(feature_stage_label(none) == "none");
}

TEST_CASE("feature export round trips") {
  testing::TempDir dir;
  Rng rng(2);
  auto x = testing::random_matrix(rng, 7, 3);
  x(0, 0) = 1.0 / 3.0;
  const std::vector<std::string> names{"a", "b,c", "d"};

  export_features(x, names, dir / "f.amxf", FeatureFormat::bundle);
  const auto t = load_feature_bundle(dir / "f.amxf");
  CHECK(t.headers == names);
  CHECK(t.values == x);

  export_features(x, names, dir / "f.csv", FeatureFormat::csv);
  const auto recs = parse_csv(testing::read_text(dir / "f.csv"));
  REQUIRE(recs.size() == 8);
  CHECK(recs[0].fields == names);
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(parse_metric_value(recs[i + 1].fields[j]) == x(i, j));

  CHECK(parse_feature_format("csv") == FeatureFormat::csv);
  CHECK_THROWS_AS(parse_feature_format("parquet"), ConfigError);
  testing::write_text(dir / "bad.amxf", "NOPE");
  CHECK_THROWS_WITH_AS(load_feature_bundle(dir / "bad.amxf"), doctest::Contains("bad magic"), FormatError);
  auto bytes = testing::read_text(dir / "f.amxf");
  testing::write_text(dir / "short.amxf", bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_WITH_AS(load_feature_bundle(dir / "short.amxf"), doctest::Contains("truncated"), FormatError);
}

}  // TEST_SUITE
