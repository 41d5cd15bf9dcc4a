#pragma once

#include <cstddef>

namespace mia::kernels {

#define MIA_DECLARE_KERNELS(ns)                                                        \
  namespace ns {                                                                       \
  double sum(const double* x, std::size_t n);                                          \
  double dot(const double* x, const double* y, std::size_t n);                         \
  void axpy(double a, const double* x, double* y, std::size_t n);                      \
  double weighted_sq_dev(const double* w, const double* x, double center, std::size_t n); \
  }

#if defined(MIA_HAVE_AVX2)
MIA_DECLARE_KERNELS(avx2)
#endif
#if defined(__aarch64__)
MIA_DECLARE_KERNELS(neon)
#endif

#undef MIA_DECLARE_KERNELS

}  // namespace mia::kernels
