#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "adaptoml/simd/kernels.hpp"

namespace adaptoml::simd {
namespace {

Isa best_supported() noexcept {
  if (supported(Isa::avx2)) return Isa::avx2;
  if (supported(Isa::neon)) return Isa::neon;
  return Isa::scalar;
}

Isa initial_isa() noexcept {
  if (const char* env = std::getenv("ADAPTOML_SIMD")) {
    const std::string value = env;
    if (value == "scalar") return Isa::scalar;
    if (value == "avx2" && supported(Isa::avx2)) return Isa::avx2;
    if (value == "neon" && supported(Isa::neon)) return Isa::neon;
  }
  return best_supported();
}

std::atomic<Isa>& current() noexcept {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

bool supported(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2:
#if defined(ADAPTOML_BUILD_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#if defined(ADAPTOML_BUILD_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Isa isa) {
  if (!supported(isa)) throw std::invalid_argument("SIMD variant not available: " + std::string(isa_name(isa)));
  switch (isa) {
#if defined(ADAPTOML_BUILD_AVX2)
    case Isa::avx2: return detail::avx2_table();
#endif
#if defined(ADAPTOML_BUILD_NEON)
    case Isa::neon: return detail::neon_table();
#endif
    default: return detail::scalar_table();
  }
}

const KernelTable& active() noexcept { return table(current().load(std::memory_order_relaxed)); }

Isa active_isa() noexcept { return current().load(std::memory_order_relaxed); }

void set_active(Isa isa) {
  if (!supported(isa)) throw std::invalid_argument("SIMD variant not available: " + std::string(isa_name(isa)));
  current().store(isa, std::memory_order_relaxed);
}

}  // namespace adaptoml::simd
