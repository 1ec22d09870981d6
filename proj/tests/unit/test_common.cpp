#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "adaptoml/common.hpp"
#include "support/testing.hpp"

using namespace adaptoml;

TEST_SUITE("common") {

TEST_CASE("task parsing") {
  CHECK(parse_task("classification") == Task::classification);
  CHECK(parse_task("regression") == Task::regression);
  try {
    parse_task("clustering");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("classification") != std::string::npos);
    CHECK(std::string(e.what()).find("regression") != std::string::npos);
  }
}

TEST_CASE("matrix basics") {
  auto m = Matrix::from_rows({{1, 2}, {3, 4}, {5, 6}});
  CHECK(m.rows() == 3);
  CHECK(m.cols() == 2);
  CHECK(m(2, 1) == 6);
  CHECK(m.column(0) == std::vector<double>{1, 3, 5});

  const std::vector<std::size_t> rows{2, 0};
  auto s = m.select_rows(rows);
  CHECK(s == Matrix::from_rows({{5, 6}, {1, 2}}));
  const std::vector<std::size_t> cols{1};
  CHECK(m.select_cols(cols) == Matrix::from_rows({{2}, {4}, {6}}));

  auto v = m.vstack(s);
  CHECK(v.rows() == 5);
  CHECK(v(4, 0) == 1);

  CHECK_THROWS_AS(Matrix::from_rows({{1, 2}, {3}}), DataError);
  const std::vector<double> bad{1, 2, 3};
  CHECK_THROWS_AS(m.append_row(bad), DataError);
  CHECK(m.all_finite());
  m(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(m.all_finite());
}

TEST_CASE("rng is reproducible and in range") {
  Rng a(7), b(7);
  for (int i = 0; i < 1000; ++i) {
    const auto x = a.uniform_index(13);
    CHECK(x == b.uniform_index(13));
    CHECK(x < 13);
    const double u = a.uniform01();
    CHECK(u == b.uniform01());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  CHECK_THROWS(a.uniform_index(0));
}

TEST_CASE("shuffle is a permutation") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = rng.uniform_index(40);
    std::vector<std::size_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = i;
    rng.shuffle(std::span<std::size_t>(v));
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < n; ++i) CHECK(sorted[i] == i);
  }
}

TEST_CASE("format_double round trips") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(3.0) == "3");
  CHECK(format_double(std::nan("")) == "nan");
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");

  Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    const double x = rng.normal() * std::pow(10.0, static_cast<double>(rng.uniform_index(30)) - 15.0);
    double back = 0;
    REQUIRE(parse_double(format_double(x), back));
    CHECK(back == x);
  }
}

TEST_CASE("parse_double is strict") {
  double v = 0;
  CHECK(parse_double("1.5", v));
  CHECK(v == 1.5);
  CHECK(parse_double("-2e3", v));
  CHECK(v == -2000);
  CHECK_FALSE(parse_double("", v));
  CHECK_FALSE(parse_double("1.5x", v));
  CHECK_FALSE(parse_double("abc", v));
  CHECK_FALSE(parse_double("nan", v));
  CHECK(std::isnan(parse_metric_value("nan")));
  CHECK(parse_metric_value("-inf") < 0);
  CHECK_THROWS_AS(parse_metric_value("zz"), FormatError);
}

TEST_CASE("string helpers") {
  CHECK(trim("  a b \t\n") == "a b");
  CHECK(split_string("a,,b", ',') == std::vector<std::string>{"a", "", "b"});
  CHECK(join({"x", "y", "z"}, "-") == "x-y-z");
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(to_hex(255).size() == 16);
  const auto ts = utc_timestamp();
  CHECK(ts.size() == 20);
  CHECK(ts.back() == 'Z');
}

TEST_CASE("csv parsing handles quoting") {
  const auto recs = parse_csv("a,b\r\n\"x,1\",\"he said \"\"hi\"\"\"\n\n\"multi\nline\",2\n");
  REQUIRE(recs.size() == 3);
  CHECK(recs[0].fields == std::vector<std::string>{"a", "b"});
  CHECK(recs[1].fields == std::vector<std::string>{"x,1", "he said \"hi\""});
  CHECK(recs[2].fields[0] == "multi\nline");
  CHECK(recs[2].line == 4);
  CHECK_THROWS_AS(parse_csv("a,\"open\n"), FormatError);
}

TEST_CASE("csv escape round trips through the parser") {
  Rng rng(5);
  const std::string alphabet = "ab,\"\n x";
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::string> fields(1 + rng.uniform_index(4));
    for (auto& f : fields) {
      const std::size_t len = 1 + rng.uniform_index(6);
      for (std::size_t i = 0; i < len; ++i) f += alphabet[rng.uniform_index(alphabet.size())];
    }
    std::ostringstream o;
    write_csv_row(o, fields);
    const auto recs = parse_csv(o.str());
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].fields == fields);
  }
}

TEST_CASE("atomic file writes") {
  testing::TempDir dir;
  const auto p = dir / "x.txt";
  write_file_atomic(p, "one");
  write_file_atomic(p, "two");
  CHECK(read_file(p) == "two");
  CHECK_THROWS_AS(read_file(dir / "missing.txt"), FormatError);
  CHECK_THROWS_AS(write_file_atomic(dir / "no/such/dir/x", "a"), FormatError);
}

}  // TEST_SUITE
