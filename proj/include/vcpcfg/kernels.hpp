#pragma once

#include <cstddef>

// Dense double-precision inner loops behind the tape. A scalar reference
// backend always exists; an AVX2 backend is selected at runtime when the
// CPU supports it. The env var VCPCFG_KERNELS=scalar forces the reference
// backend (used by the equivalence tests).
namespace vcpcfg::kernels {

struct Ops {
  const char* name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  void (*add)(const double* a, const double* b, double* out, std::size_t n);
  void (*sub)(const double* a, const double* b, double* out, std::size_t n);
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  void (*scale)(const double* a, double alpha, double* out, std::size_t n);
  double (*sum)(const double* a, std::size_t n);
  double (*max)(const double* a, std::size_t n);
};

const Ops& scalar_ops();
bool avx2_available();
// Valid only when avx2_available(); returns scalar_ops() otherwise.
const Ops& avx2_ops();
// Runtime-selected backend, honoring VCPCFG_KERNELS.
const Ops& active();

// out[r] = sum_c M[r*cols+c] * x[c]
void matvec(const Ops& k, const double* m, const double* x, double* out,
            std::size_t rows, std::size_t cols);

}  // namespace vcpcfg::kernels
