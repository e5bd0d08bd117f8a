#include "hhpnet/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace hhpnet::kernels {

namespace {

Backend detect() {
  if (const char* force = std::getenv("HHPNET_FORCE_SCALAR"); force != nullptr && std::string(force) != "0") {
    return Backend::Scalar;
  }
  return backend_supported(Backend::Avx2) ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> backend{detect()};
  return backend;
}

void check_sizes(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw std::invalid_argument(std::string(what) + ": length mismatch");
}

}  // namespace

std::string_view backend_name(Backend backend) {
  switch (backend) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
  }
  return "unknown";
}

bool backend_supported(Backend backend) {
  switch (backend) {
    case Backend::Scalar: return true;
    case Backend::Avx2:
#if defined(HHPNET_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

Backend active_backend() { return current().load(std::memory_order_relaxed); }

void set_backend(Backend backend) {
  if (!backend_supported(backend)) {
    throw std::invalid_argument("kernel backend not supported on this CPU: " + std::string(backend_name(backend)));
  }
  current().store(backend, std::memory_order_relaxed);
}

double dot(std::span<const double> a, std::span<const double> b) {
  check_sizes(a.size(), b.size(), "dot");
#if defined(HHPNET_HAVE_AVX2)
  if (active_backend() == Backend::Avx2) return avx2::dot(a.data(), b.data(), a.size());
#endif
  return scalar::dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  check_sizes(x.size(), y.size(), "axpy");
#if defined(HHPNET_HAVE_AVX2)
  if (active_backend() == Backend::Avx2) return avx2::axpy(alpha, x.data(), y.data(), x.size());
#endif
  scalar::axpy(alpha, x.data(), y.data(), x.size());
}

void gemm_acc(std::size_t rows, std::size_t depth, std::size_t n,
              std::span<const double> a, std::size_t a_row_stride, std::size_t a_col_stride,
              std::span<const double> b, std::span<double> c) {
  check_sizes(b.size(), depth * n, "gemm_acc b");
  check_sizes(c.size(), rows * n, "gemm_acc c");
  if (rows == 0 || n == 0 || depth == 0) return;
  const std::size_t last = (rows - 1) * a_row_stride + (depth - 1) * a_col_stride;
  if (last >= a.size()) throw std::invalid_argument("gemm_acc a: strides reach past the operand");
#if defined(HHPNET_HAVE_AVX2)
  if (active_backend() == Backend::Avx2) {
    return avx2::gemm_acc(rows, depth, n, a.data(), a_row_stride, a_col_stride, b.data(), c.data());
  }
#endif
  scalar::gemm_acc(rows, depth, n, a.data(), a_row_stride, a_col_stride, b.data(), c.data());
}

void adam_update(std::span<double> param, std::span<const double> grad,
                 std::span<double> m, std::span<double> v,
                 const AdamCoefficients& k) {
  check_sizes(param.size(), grad.size(), "adam_update");
  check_sizes(param.size(), m.size(), "adam_update");
  check_sizes(param.size(), v.size(), "adam_update");
#if defined(HHPNET_HAVE_AVX2)
  if (active_backend() == Backend::Avx2) {
    return avx2::adam_update(param.data(), grad.data(), m.data(), v.data(), param.size(), k);
  }
#endif
  scalar::adam_update(param.data(), grad.data(), m.data(), v.data(), param.size(), k);
}

}  // namespace hhpnet::kernels
