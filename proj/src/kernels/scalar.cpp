#include "gridsettle/kernels.hpp"

namespace gridsettle::kernels {
namespace {

void axpy(double* y, const double* x, double alpha, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

double axpy_norm2(double* y, const double* x, double alpha, std::size_t n) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    for (std::size_t l = 0; l < 4; ++l) {
      const double v = y[i + l] + alpha * x[i + l];
      y[i + l] = v;
      acc[l] = acc[l] + v * v;
    }
  }
  double sum = (acc[0] + acc[1]) + (acc[2] + acc[3]);
  for (std::size_t i = n4; i < n; ++i) {
    const double v = y[i] + alpha * x[i];
    y[i] = v;
    sum = sum + v * v;
  }
  return sum;
}

double dot(const double* x, const double* y, std::size_t n) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t n4 = n - n % 4;
  for (std::size_t i = 0; i < n4; i += 4) {
    for (std::size_t l = 0; l < 4; ++l) acc[l] = acc[l] + x[i + l] * y[i + l];
  }
  double sum = (acc[0] + acc[1]) + (acc[2] + acc[3]);
  for (std::size_t i = n4; i < n; ++i) sum = sum + x[i] * y[i];
  return sum;
}

void divide(double* y, double divisor, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] / divisor;
}

void offer_profits(const double* da, const double* rt, const double* wind, std::size_t n, double a,
                   double b, double q_max, double* dispatched, double* profit) {
  const double two_a = 2.0 * a;
  for (std::size_t i = 0; i < n; ++i) {
    double d;
    if (a > 0.0) {
      d = (da[i] - b) / two_a;
      d = d > 0.0 ? d : 0.0;
      d = d < q_max ? d : q_max;
    } else {
      d = da[i] >= b ? q_max : 0.0;
    }
    double shortfall = d - wind[i];
    shortfall = shortfall > 0.0 ? shortfall : 0.0;
    dispatched[i] = d;
    profit[i] = da[i] * d - rt[i] * shortfall;
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::scalar, axpy, axpy_norm2, dot, divide, offer_profits};
  return table;
}

}  // namespace gridsettle::kernels
