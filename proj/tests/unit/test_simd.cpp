#include <doctest.h>

#include <cmath>
#include <vector>

#include "adaptoml/common.hpp"
#include "adaptoml/simd/kernels.hpp"

using namespace adaptoml;
namespace sd = adaptoml::simd;

namespace {

std::vector<sd::Isa> vector_isas() {
  std::vector<sd::Isa> out;
  for (auto isa : {sd::Isa::avx2, sd::Isa::neon})
    if (sd::supported(isa)) out.push_back(isa);
  return out;
}

std::vector<double> draw(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal() * 10.0;
  return v;
}

// Relative tolerance for reassociated sums.
bool close(double a, double b, double scale) { return std::abs(a - b) <= 1e-12 * (1.0 + scale); }

}  // namespace

TEST_SUITE("simd") {

TEST_CASE("scalar kernels on small inputs") {
  const auto& t = sd::table(sd::Isa::scalar);
  const double a[] = {1, 2, 3};
  const double b[] = {4, 5, 6};
  CHECK(t.dot(a, b, 3) == 32);
  CHECK(t.squared_distance(a, b, 3) == 27);
  const double inv[] = {1, 0.5, 2};
  CHECK(t.weighted_squared_distance(a, b, inv, 3) == 9 + 4.5 + 18);
  double y[] = {1, 1, 1};
  t.axpby(2.0, a, 3.0, y, 3);
  CHECK(y[0] == 5);
  CHECK(y[2] == 9);
  CHECK(t.dot(a, b, 0) == 0);
}

TEST_CASE("scalar is always supported and unknown tables throw") {
  CHECK(sd::supported(sd::Isa::scalar));
  for (auto isa : {sd::Isa::avx2, sd::Isa::neon})
    if (!sd::supported(isa)) CHECK_THROWS_AS(sd::table(isa), std::invalid_argument);
  CHECK(sd::isa_name(sd::Isa::avx2) == "avx2");
}

TEST_CASE("vector variants agree with the scalar reference") {
  const auto& ref = sd::table(sd::Isa::scalar);
  Rng rng(99);
  for (auto isa : vector_isas()) {
    CAPTURE(sd::isa_name(isa));
    const auto& t = sd::table(isa);
    // Lengths cover empty, sub-register and tail cases.
    for (std::size_t n = 0; n < 70; ++n) {
      for (int rep = 0; rep < 5; ++rep) {
        const auto a = draw(rng, n), b = draw(rng, n);
        std::vector<double> inv(n);
        for (auto& v : inv) v = 0.1 + rng.uniform01();
        double mag = 0;
        for (std::size_t i = 0; i < n; ++i) mag += std::abs(a[i] * b[i]) + (a[i] - b[i]) * (a[i] - b[i]);
        CHECK(close(t.dot(a.data(), b.data(), n), ref.dot(a.data(), b.data(), n), mag));
        CHECK(close(t.squared_distance(a.data(), b.data(), n), ref.squared_distance(a.data(), b.data(), n), mag));
        CHECK(close(t.weighted_squared_distance(a.data(), b.data(), inv.data(), n),
                    ref.weighted_squared_distance(a.data(), b.data(), inv.data(), n), 2 * mag));
        auto y1 = draw(rng, n);
        auto y2 = y1;
        const double alpha = rng.normal(), beta = rng.normal();
        t.axpby(alpha, a.data(), beta, y1.data(), n);
        ref.axpby(alpha, a.data(), beta, y2.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(close(y1[i], y2[i], std::abs(y2[i])));
      }
    }
  }
}

TEST_CASE("set_active switches the dispatch table") {
  const auto before = sd::active_isa();
  sd::set_active(sd::Isa::scalar);
  CHECK(sd::active_isa() == sd::Isa::scalar);
  const std::vector<double> a{1, 2}, b{3, 4};
  CHECK(sd::dot(a, b) == 11);
  sd::set_active(before);
  CHECK(sd::active_isa() == before);
}

}  // TEST_SUITE
