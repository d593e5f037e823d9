#include "vcpcfg/kernels.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <string_view>

namespace vcpcfg::kernels {

namespace {

double s_dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void s_add(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void s_sub(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void s_mul(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void s_axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void s_scale(const double* a, double alpha, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * alpha;
}

double s_sum(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i];
  return acc;
}

double s_max(const double* a, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, a[i]);
  return m;
}

const Ops kScalar = {"scalar", s_dot,  s_add, s_sub,
                     s_mul,    s_axpy, s_scale, s_sum, s_max};

}  // namespace

const Ops& scalar_ops() { return kScalar; }

bool avx2_available() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Ops& active() {
  static const Ops& picked = []() -> const Ops& {
    const char* force = std::getenv("VCPCFG_KERNELS");
    if (force && std::string_view(force) == "scalar") return kScalar;
    if (avx2_available()) return avx2_ops();
    return kScalar;
  }();
  return picked;
}

void matvec(const Ops& k, const double* m, const double* x, double* out,
            std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) out[r] = k.dot(m + r * cols, x, cols);
}

}  // namespace vcpcfg::kernels
