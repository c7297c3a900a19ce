#include "gridsettle/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#define GRIDSETTLE_HAVE_AVX2_PATH 1
#define AVX2_FN __attribute__((target("avx2")))
#endif

namespace gridsettle::kernels {

#ifdef GRIDSETTLE_HAVE_AVX2_PATH
namespace {

// Lane sum in the same order as the scalar reference: (l0 + l1) + (l2 + l3).
AVX2_FN inline double lane_sum(__m256d acc) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

AVX2_FN void axpy(double* y, const double* x, double alpha, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    __m256d vx = _mm256_loadu_pd(x + i);
    _mm256_storeu_pd(y + i, _mm256_add_pd(vy, _mm256_mul_pd(va, vx)));
  }
  for (; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

AVX2_FN double axpy_norm2(double* y, const double* x, double alpha, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    _mm256_storeu_pd(y + i, v);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(v, v));
  }
  double sum = lane_sum(acc);
  for (; i < n; ++i) {
    const double v = y[i] + alpha * x[i];
    y[i] = v;
    sum = sum + v * v;
  }
  return sum;
}

AVX2_FN double dot(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  double sum = lane_sum(acc);
  for (; i < n; ++i) sum = sum + x[i] * y[i];
  return sum;
}

AVX2_FN void divide(double* y, double divisor, std::size_t n) {
  const __m256d vd = _mm256_set1_pd(divisor);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(y + i, _mm256_div_pd(_mm256_loadu_pd(y + i), vd));
  for (; i < n; ++i) y[i] = y[i] / divisor;
}

AVX2_FN void offer_profits(const double* da, const double* rt, const double* wind, std::size_t n,
                           double a, double b, double q_max, double* dispatched, double* profit) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d vb = _mm256_set1_pd(b);
  const __m256d vq = _mm256_set1_pd(q_max);
  const __m256d two_a = _mm256_set1_pd(2.0 * a);
  const bool sloped = a > 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d p = _mm256_loadu_pd(da + i);
    __m256d d;
    if (sloped) {
      d = _mm256_div_pd(_mm256_sub_pd(p, vb), two_a);
      // max(d, 0) returns the second operand unless d > 0; min(d, q) returns d only if d < q.
      d = _mm256_max_pd(d, zero);
      d = _mm256_min_pd(d, vq);
    } else {
      d = _mm256_and_pd(_mm256_cmp_pd(p, vb, _CMP_GE_OQ), vq);
    }
    __m256d shortfall = _mm256_max_pd(_mm256_sub_pd(d, _mm256_loadu_pd(wind + i)), zero);
    _mm256_storeu_pd(dispatched + i, d);
    _mm256_storeu_pd(profit + i, _mm256_sub_pd(_mm256_mul_pd(p, d),
                                               _mm256_mul_pd(_mm256_loadu_pd(rt + i), shortfall)));
  }
  if (i < n) {
    scalar_table().offer_profits(da + i, rt + i, wind + i, n - i, a, b, q_max, dispatched + i,
                                 profit + i);
  }
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable table{Isa::avx2, axpy, axpy_norm2, dot, divide, offer_profits};
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &table : nullptr;
}

#else

const KernelTable* avx2_table() { return nullptr; }

#endif

}  // namespace gridsettle::kernels
