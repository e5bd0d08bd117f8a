#include "hhpnet/kernels.hpp"

#include <cmath>

namespace hhpnet::kernels::scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemm_acc(std::size_t rows, std::size_t depth, std::size_t n, const double* a,
              std::size_t a_row_stride, std::size_t a_col_stride, const double* b, double* c) {
  for (std::size_t p = 0; p < rows; ++p) {
    double* cp = c + p * n;
    for (std::size_t q = 0; q < depth; ++q) {
      const double apq = a[p * a_row_stride + q * a_col_stride];
      const double* bq = b + q * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += apq * bq[j];
    }
  }
}

void adam_update(double* param, const double* grad, double* m, double* v,
                 std::size_t n, const AdamCoefficients& k) {
  const double one_minus_b1 = 1.0 - k.beta1;
  const double one_minus_b2 = 1.0 - k.beta2;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    m[i] = k.beta1 * m[i] + one_minus_b1 * g;
    v[i] = k.beta2 * v[i] + one_minus_b2 * g * g;
    const double m_hat = m[i] / k.bias_correction1;
    const double v_hat = v[i] / k.bias_correction2;
    param[i] -= k.learning_rate * m_hat / (std::sqrt(v_hat) + k.epsilon);
  }
}

}  // namespace hhpnet::kernels::scalar
