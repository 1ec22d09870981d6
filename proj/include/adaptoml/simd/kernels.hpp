#pragma once

// Inner-loop arithmetic used by the model zoo. Every kernel has a scalar
// reference implementation; vector variants are selected at runtime from
// what the CPU supports and must agree with the reference to rounding.

#include <cstddef>
#include <span>
#include <string_view>

namespace adaptoml::simd {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa) noexcept;

struct KernelTable {
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // sum_i (a[i] - b[i])^2
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  // sum_i (x[i] - mean[i])^2 * inv_var[i]
  double (*weighted_squared_distance)(const double* x, const double* mean, const double* inv_var,
                                      std::size_t n);
  // y[i] = alpha * x[i] + beta * y[i]
  void (*axpby)(double alpha, const double* x, double beta, double* y, std::size_t n);
};

/// True if this binary carries the variant and the running CPU can execute it.
bool supported(Isa isa) noexcept;

/// Table for a specific ISA; throws std::invalid_argument if unsupported.
const KernelTable& table(Isa isa);

/// The table used by the library. Chosen once from the CPU, or from the
/// ADAPTOML_SIMD environment variable ("scalar", "avx2", "neon").
const KernelTable& active() noexcept;
Isa active_isa() noexcept;

/// Override the active table (tests, benchmarking). Not thread-safe with
/// respect to concurrent kernel calls.
void set_active(Isa isa);

// Span conveniences over the active table.
inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  return active().squared_distance(a.data(), b.data(), a.size());
}
inline double weighted_squared_distance(std::span<const double> x, std::span<const double> mean,
                                        std::span<const double> inv_var) {
  return active().weighted_squared_distance(x.data(), mean.data(), inv_var.data(), x.size());
}
inline void axpby(double alpha, std::span<const double> x, double beta, std::span<double> y) {
  active().axpby(alpha, x.data(), beta, y.data(), x.size());
}

namespace detail {
const KernelTable& scalar_table() noexcept;
#if defined(ADAPTOML_BUILD_AVX2)
const KernelTable& avx2_table() noexcept;
#endif
#if defined(ADAPTOML_BUILD_NEON)
const KernelTable& neon_table() noexcept;
#endif
}  // namespace detail

}  // namespace adaptoml::simd
