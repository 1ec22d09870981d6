#include <arm_neon.h>

#include "adaptoml/simd/kernels.hpp"

namespace adaptoml::simd::detail {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vfmaq_f64(acc, vld1q_f64(a + i), vld1q_f64(b + i));
  double out = vaddvq_f64(acc);
  for (; i < n; ++i) out += a[i] * b[i];
  return out;
}

double squared_distance_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    acc = vfmaq_f64(acc, d, d);
  }
  double out = vaddvq_f64(acc);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    out += d * d;
  }
  return out;
}

double weighted_squared_distance_neon(const double* x, const double* mean, const double* inv_var,
                                      std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(x + i), vld1q_f64(mean + i));
    acc = vfmaq_f64(acc, vmulq_f64(d, d), vld1q_f64(inv_var + i));
  }
  double out = vaddvq_f64(acc);
  for (; i < n; ++i) {
    const double d = x[i] - mean[i];
    out += d * d * inv_var[i];
  }
  return out;
}

void axpby_neon(double alpha, const double* x, double beta, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  const float64x2_t vb = vdupq_n_f64(beta);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(y + i, vaddq_f64(vmulq_f64(va, vld1q_f64(x + i)), vmulq_f64(vb, vld1q_f64(y + i))));
  for (; i < n; ++i) y[i] = alpha * x[i] + beta * y[i];
}

constexpr KernelTable kNeon{dot_neon, squared_distance_neon, weighted_squared_distance_neon,
                            axpby_neon};

}  // namespace

const KernelTable& neon_table() noexcept { return kNeon; }

}  // namespace adaptoml::simd::detail
