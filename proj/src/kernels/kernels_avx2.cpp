// Compiled with -mavx2 -mfma. Only reached through dispatch after a CPUID check.

#include "hhpnet/kernels.hpp"

#include <immintrin.h>

#include <cmath>

namespace hhpnet::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  const __m128d swapped = _mm_unpackhi_pd(pair, pair);
  return _mm_cvtsd_f64(_mm_add_sd(pair, swapped));
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  if (i + 4 <= n) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    i += 4;
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

namespace {

// R rows of c against 8 columns, accumulators held in registers over the whole depth.
template <std::size_t R>
inline void block8(std::size_t depth, std::size_t n, const double* a, std::size_t a_row_stride,
                   std::size_t a_col_stride, const double* b, double* c) {
  __m256d lo[R], hi[R];
  for (std::size_t r = 0; r < R; ++r) {
    lo[r] = _mm256_loadu_pd(c + r * n);
    hi[r] = _mm256_loadu_pd(c + r * n + 4);
  }
  for (std::size_t q = 0; q < depth; ++q) {
    const __m256d b0 = _mm256_loadu_pd(b + q * n);
    const __m256d b1 = _mm256_loadu_pd(b + q * n + 4);
    for (std::size_t r = 0; r < R; ++r) {
      const __m256d av = _mm256_broadcast_sd(a + r * a_row_stride + q * a_col_stride);
      lo[r] = _mm256_fmadd_pd(av, b0, lo[r]);
      hi[r] = _mm256_fmadd_pd(av, b1, hi[r]);
    }
  }
  for (std::size_t r = 0; r < R; ++r) {
    _mm256_storeu_pd(c + r * n, lo[r]);
    _mm256_storeu_pd(c + r * n + 4, hi[r]);
  }
}

template <std::size_t R>
inline void block4(std::size_t depth, std::size_t n, const double* a, std::size_t a_row_stride,
                   std::size_t a_col_stride, const double* b, double* c) {
  __m256d acc[R];
  for (std::size_t r = 0; r < R; ++r) acc[r] = _mm256_loadu_pd(c + r * n);
  for (std::size_t q = 0; q < depth; ++q) {
    const __m256d b0 = _mm256_loadu_pd(b + q * n);
    for (std::size_t r = 0; r < R; ++r) {
      acc[r] = _mm256_fmadd_pd(_mm256_broadcast_sd(a + r * a_row_stride + q * a_col_stride), b0, acc[r]);
    }
  }
  for (std::size_t r = 0; r < R; ++r) _mm256_storeu_pd(c + r * n, acc[r]);
}

template <std::size_t R>
void row_block(std::size_t depth, std::size_t n, const double* a, std::size_t a_row_stride,
               std::size_t a_col_stride, const double* b, double* c) {
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) block8<R>(depth, n, a, a_row_stride, a_col_stride, b + j, c + j);
  for (; j + 4 <= n; j += 4) block4<R>(depth, n, a, a_row_stride, a_col_stride, b + j, c + j);
  for (; j < n; ++j) {
    for (std::size_t r = 0; r < R; ++r) {
      double acc = c[r * n + j];
      for (std::size_t q = 0; q < depth; ++q) acc = std::fma(a[r * a_row_stride + q * a_col_stride], b[q * n + j], acc);
      c[r * n + j] = acc;
    }
  }
}

}  // namespace

void gemm_acc(std::size_t rows, std::size_t depth, std::size_t n, const double* a,
              std::size_t a_row_stride, std::size_t a_col_stride, const double* b, double* c) {
  std::size_t p = 0;
  for (; p + 4 <= rows; p += 4) row_block<4>(depth, n, a + p * a_row_stride, a_row_stride, a_col_stride, b, c + p * n);
  for (; p < rows; ++p) row_block<1>(depth, n, a + p * a_row_stride, a_row_stride, a_col_stride, b, c + p * n);
}

void adam_update(double* param, const double* grad, double* m, double* v,
                 std::size_t n, const AdamCoefficients& k) {
  const __m256d b1 = _mm256_set1_pd(k.beta1);
  const __m256d b2 = _mm256_set1_pd(k.beta2);
  const __m256d c1 = _mm256_set1_pd(1.0 - k.beta1);
  const __m256d c2 = _mm256_set1_pd(1.0 - k.beta2);
  const __m256d bc1 = _mm256_set1_pd(k.bias_correction1);
  const __m256d bc2 = _mm256_set1_pd(k.bias_correction2);
  const __m256d lr = _mm256_set1_pd(k.learning_rate);
  const __m256d eps = _mm256_set1_pd(k.epsilon);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d g = _mm256_loadu_pd(grad + i);
    // Same operation order as the scalar path; no FMA contraction here so
    // the two backends stay bit-identical for the optimizer.
    const __m256d vm = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(c1, g));
    const __m256d vv = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)),
                                     _mm256_mul_pd(_mm256_mul_pd(c2, g), g));
    _mm256_storeu_pd(m + i, vm);
    _mm256_storeu_pd(v + i, vv);
    const __m256d m_hat = _mm256_div_pd(vm, bc1);
    const __m256d v_hat = _mm256_div_pd(vv, bc2);
    const __m256d step = _mm256_div_pd(_mm256_mul_pd(lr, m_hat), _mm256_add_pd(_mm256_sqrt_pd(v_hat), eps));
    _mm256_storeu_pd(param + i, _mm256_sub_pd(_mm256_loadu_pd(param + i), step));
  }
  if (i < n) scalar::adam_update(param + i, grad + i, m + i, v + i, n - i, k);
}

}  // namespace hhpnet::kernels::avx2
