#include <doctest.h>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <cmath>
#include <limits>
#include <sstream>

#include "adaptoml/reporting.hpp"
#include "support/testing.hpp"

using namespace adaptoml;

namespace {

// Independent oracle: per-class counts straight from the pairs.
struct Oracle {
  std::vector<double> precision, recall, f1;
  double accuracy = 0;
};

Oracle oracle(const std::vector<double>& t, const std::vector<double>& p, std::size_t k) {
  Oracle o;
  std::size_t correct = 0;
  for (std::size_t c = 0; c < k; ++c) {
    double tp = 0, pred = 0, act = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      tp += t[i] == c && p[i] == c;
      pred += p[i] == c;
      act += t[i] == c;
    }
    const double prec = pred == 0 ? 0 : tp / pred;
    const double rec = act == 0 ? 0 : tp / act;
    o.precision.push_back(prec);
    o.recall.push_back(rec);
    o.f1.push_back(prec + rec == 0 ? 0 : 2 * prec * rec / (prec + rec));
  }
  for (std::size_t i = 0; i < t.size(); ++i) correct += t[i] == p[i];
  o.accuracy = static_cast<double>(correct) / static_cast<double>(t.size());
  return o;
}

std::size_t count_of(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_SUITE("reporting") {

TEST_CASE("classification metrics on a worked example") {
  const std::vector<double> t{0, 0, 1, 1, 2};
  const std::vector<double> p{0, 1, 1, 1, 0};
  const auto m = classification_metrics(t, p, 3);
  CHECK(m.accuracy == doctest::Approx(0.6));
  CHECK(m.precision == std::vector<double>{0.5, 2.0 / 3.0, 0.0});
  CHECK(m.recall == std::vector<double>{0.5, 1.0, 0.0});
  CHECK(m.support == std::vector<std::size_t>{2, 2, 1});
  CHECK(m.confusion[2][0] == 1);
  CHECK(m.macro_recall == doctest::Approx(0.5));
  CHECK(m.weighted_recall == doctest::Approx(m.accuracy));
  CHECK(m.zero_divisions >= 1);
}

TEST_CASE("classification metrics agree with the brute-force oracle") {
  Rng rng(1234);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t k = 1 + rng.uniform_index(5), n = 1 + rng.uniform_index(50);
    std::vector<double> t(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = static_cast<double>(rng.uniform_index(k));
      p[i] = static_cast<double>(rng.uniform_index(k));
    }
    const auto m = classification_metrics(t, p, k);
    const auto o = oracle(t, p, k);
    CHECK(m.accuracy == doctest::Approx(o.accuracy));
    for (std::size_t c = 0; c < k; ++c) {
      CHECK(m.precision[c] == doctest::Approx(o.precision[c]));
      CHECK(m.recall[c] == doctest::Approx(o.recall[c]));
      CHECK(m.f1[c] == doctest::Approx(o.f1[c]));
    }
    CHECK(m.weighted_recall == doctest::Approx(m.accuracy).epsilon(1e-12));
    CHECK(m.total() == n);
  }
}

TEST_CASE("metric input errors") {
  const std::vector<double> a{0, 1}, b{0};
  CHECK_THROWS_AS(classification_metrics(a, b, 2), DataError);
  CHECK_THROWS_AS(classification_metrics({}, {}, 2), DataError);
  const std::vector<double> out_of_range{0, 3};
  CHECK_THROWS_AS(classification_metrics(a, out_of_range, 2), DataError);
}

TEST_CASE("regression metrics") {
  const std::vector<double> t{1, 2, 3, 4}, p{1, 2, 3, 6};
  const auto r = regression_metrics(t, p);
  CHECK(r.rmse == doctest::Approx(1.0));
  CHECK(r.mae == doctest::Approx(0.5));
  CHECK(r.r2 == doctest::Approx(1.0 - 4.0 / 5.0));
  const std::vector<double> flat{2, 2};
  CHECK(std::isnan(regression_metrics(flat, flat).r2));
}

TEST_CASE("criteria") {
  CHECK(Criterion::default_for(Task::classification).name == "macro_f1");
  CHECK(Criterion::default_for(Task::regression).name == "rmse");
  CHECK_FALSE(Criterion::parse(Task::regression, "mae").maximize);
  CHECK(Criterion::parse(Task::regression, "r2").maximize);
  CHECK(Criterion::parse(Task::classification, "weighted_recall").maximize);
  CHECK_THROWS_AS(Criterion::parse(Task::classification, "rmse"), ConfigError);
  const auto c = Criterion::parse(Task::classification, "accuracy");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK(c.better(0.5, 0.4));
  CHECK_FALSE(c.better(0.5, 0.5));
  CHECK_FALSE(c.better(nan, 0.1));
  CHECK(c.better(0.1, nan));
  CHECK(Criterion::parse(Task::regression, "rmse").better(1.0, 2.0));
}

TEST_CASE("score_predictions names follow metric_names") {
  const std::vector<double> t{0, 1, 1}, p{0, 1, 0};
  const auto s = score_predictions(Task::classification, t, p, 2);
  for (const auto& name : metric_names(Task::classification)) {
    bool found = false;
    for (const auto& [n, v] : s) found = found || n == name;
    CHECK(found);
  }
  const auto r = score_predictions(Task::regression, t, p, 0);
  CHECK(r[0].first == "rmse");
}

TEST_CASE("results csv round trips, nan included") {
  testing::TempDir dir;
  std::vector<ResultRow> rows{{"0", "knn_classifier", "normalize=on;k=3", "validation", "accuracy", 0.75},
                              {"1", "decision_tree", "a=1,b", "test", "macro_f1",
                               std::numeric_limits<double>::quiet_NaN()}};
  write_results_csv(dir / "r.csv", rows);
  const auto back = read_results_csv(dir / "r.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[0].value == 0.75);
  CHECK(back[1].hyperparams == "a=1,b");
  CHECK(std::isnan(back[1].value));
  testing::write_text(dir / "bad.csv", "x,y\n");
  CHECK_THROWS_AS(read_results_csv(dir / "bad.csv"), FormatError);
}

TEST_CASE("classification report layout") {
  testing::TempDir dir;
  const std::vector<double> t{0, 1, 1}, p{0, 1, 0};
  write_classification_report(dir / "c.csv", classification_metrics(t, p, 2), {"no", "yes"});
  const auto recs = parse_csv(testing::read_text(dir / "c.csv"));
  REQUIRE(recs.size() == 6);
  CHECK(recs[0].fields == std::vector<std::string>{"label", "precision", "recall", "f1", "support"});
  CHECK(recs[1].fields[0] == "no");
  CHECK(recs[2].fields[4] == "2");
  CHECK(recs[3].fields[0] == "macro");
  CHECK(recs[3].fields[4].empty());
  CHECK(recs[5].fields[0] == "accuracy");
}

TEST_CASE("svg output is well-formed with one polyline per series") {
  Rng rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    LineChart chart{"t<&>\"'", "x", "y", {}, {}};
    const std::size_t nx = rng.uniform_index(6), ns = rng.uniform_index(7);
    for (std::size_t i = 0; i < nx; ++i) chart.x_ticks.push_back("c" + std::to_string(i));
    for (std::size_t s = 0; s < ns; ++s) {
      Series series{"s&" + std::to_string(s), {}};
      for (std::size_t i = 0; i < nx; ++i)
        series.y.push_back(rng.uniform01() < 0.2 ? std::numeric_limits<double>::quiet_NaN() : rng.normal());
      chart.series.push_back(series);
    }
    const auto svg = render_svg(chart);
    CHECK(count_of(svg, "<polyline") == ns);
    CHECK(svg.find("nan") == std::string::npos);
    std::istringstream in(svg);
    boost::property_tree::ptree tree;
    CHECK_NOTHROW(boost::property_tree::read_xml(in, tree));
    CHECK(render_svg(chart) == svg);
  }
  CHECK(xml_escape("<a&b>") == "&lt;a&amp;b&gt;");
}

TEST_CASE("long csv header") {
  testing::TempDir dir;
  write_long_csv(dir / "l.csv", "user_id", "stage", {{"u1", "before", "accuracy", 0.5}});
  CHECK(testing::read_text(dir / "l.csv") == "user_id,stage,metric,value\nu1,before,accuracy,0.5\n");
}

}  // TEST_SUITE
