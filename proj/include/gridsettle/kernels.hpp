#pragma once

#include <cstddef>
#include <string_view>

// Data-parallel inner loops. Each kernel has a scalar reference and an AVX2
// variant; the variant is chosen once at runtime. Reductions use the same
// four-lane blocked order in both paths, so every kernel returns bit-identical
// results regardless of the instruction set.

namespace gridsettle::kernels {

enum class Isa { scalar, avx2 };

struct KernelTable {
  Isa isa;

  /// y[i] += alpha * x[i]
  void (*axpy)(double* y, const double* x, double alpha, std::size_t n);

  /// y[i] += alpha * x[i]; returns sum of the updated y[i]^2.
  double (*axpy_norm2)(double* y, const double* x, double alpha, std::size_t n);

  double (*dot)(const double* x, const double* y, std::size_t n);

  /// y[i] /= divisor
  void (*divide)(double* y, double divisor, std::size_t n);

  /// Merit-order dispatch of a quadratic offer (a, b, q_max) against
  /// day-ahead prices, and the two-settlement profit when only `wind` MW can
  /// be delivered:
  ///   dispatched = clip((da - b) / 2a, 0, q_max)   (a > 0)
  ///              = q_max if da >= b else 0          (a == 0)
  ///   profit     = da * dispatched - rt * max(0, dispatched - wind)
  void (*offer_profits)(const double* da, const double* rt, const double* wind, std::size_t n,
                        double a, double b, double q_max, double* dispatched, double* profit);
};

const KernelTable& scalar_table();
/// Null when the build or the CPU lacks AVX2.
const KernelTable* avx2_table();

/// The table used by the library: AVX2 when available unless the
/// GRIDSETTLE_SIMD environment variable is set to "scalar".
const KernelTable& active();

std::string_view isa_name(Isa isa);

}  // namespace gridsettle::kernels
