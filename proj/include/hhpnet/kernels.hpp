#pragma once

// Inner-loop arithmetic kernels behind the dense layers and the optimizer.
//
// Every kernel has a portable scalar reference implementation. An AVX2+FMA
// variant is compiled in on x86-64 and selected at runtime when the CPU
// supports it. The two paths agree to rounding (see tests/unit/kernels_test).

#include <cstddef>
#include <span>
#include <string_view>

namespace hhpnet::kernels {

enum class Backend { Scalar, Avx2 };

std::string_view backend_name(Backend backend);

/// True when the running CPU can execute `backend`.
bool backend_supported(Backend backend);

/// Backend used by the free functions below. Chosen once from CPU features;
/// the HHPNET_FORCE_SCALAR environment variable pins it to Scalar.
Backend active_backend();

/// Overrides the dispatch choice. Throws std::invalid_argument when the CPU
/// cannot run `backend`. Not thread-safe with concurrent kernel calls.
void set_backend(Backend backend);

double dot(std::span<const double> a, std::span<const double> b);

/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

/// c[p, j] += sum over q of a(p, q) * b[q, j], for p < rows, j < n, with q
/// running 0..depth-1 in order for every output element. a(p, q) is read as
/// a[p * a_row_stride + q * a_col_stride], so a transposed operand needs no
/// copy. b is row-major [depth, n], c row-major [rows, n].
void gemm_acc(std::size_t rows, std::size_t depth, std::size_t n,
              std::span<const double> a, std::size_t a_row_stride, std::size_t a_col_stride,
              std::span<const double> b, std::span<double> c);

struct AdamCoefficients {
  double learning_rate;
  double beta1;
  double beta2;
  double epsilon;
  // 1 - beta^t, precomputed by the caller for step t.
  double bias_correction1;
  double bias_correction2;
};

/// One Adam update over a flat parameter block. m and v are updated in place.
void adam_update(std::span<double> param, std::span<const double> grad,
                 std::span<double> m, std::span<double> v,
                 const AdamCoefficients& k);

// Direct entry points, used by the equivalence tests and the benchmark.
namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void gemm_acc(std::size_t rows, std::size_t depth, std::size_t n, const double* a,
              std::size_t a_row_stride, std::size_t a_col_stride, const double* b, double* c);
void adam_update(double* param, const double* grad, double* m, double* v,
                 std::size_t n, const AdamCoefficients& k);
}  // namespace scalar

#if defined(HHPNET_HAVE_AVX2)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void gemm_acc(std::size_t rows, std::size_t depth, std::size_t n, const double* a,
              std::size_t a_row_stride, std::size_t a_col_stride, const double* b, double* c);
void adam_update(double* param, const double* grad, double* m, double* v,
                 std::size_t n, const AdamCoefficients& k);
}  // namespace avx2
#endif

}  // namespace hhpnet::kernels
