#pragma once

// Vocabulary-wide arithmetic inner loops.
//
// Every kernel has a scalar reference implementation plus SIMD variants (AVX2+FMA
// on x86-64, NEON on AArch64). The active variant is chosen once per process from
// the CPU features and the MIA_SIMD environment variable (scalar|avx2|neon|auto).
// SIMD variants reassociate sums, so results match the scalar reference to
// rounding, not bit-for-bit; within one process every caller sees the same
// variant.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace mia::kernels {

enum class Isa { kScalar, kAvx2, kNeon };

std::string_view to_string(Isa isa);

struct KernelTable {
  double (*sum)(const double* x, std::size_t n);
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // sum_i w[i] * (x[i] - center)^2
  double (*weighted_sq_dev)(const double* w, const double* x, double center, std::size_t n);
};

/// Kernel table for `isa`, or nullptr when the variant is not compiled in or
/// the CPU lacks the instructions.
const KernelTable* table_for(Isa isa);

/// Variants usable on this machine, scalar first.
std::vector<Isa> available_isas();

Isa active_isa();
const KernelTable& active();

/// Overrides the active variant (tests and benchmarks). Throws if unavailable.
void set_active_isa(Isa isa);

// Convenience wrappers over the active table.

double sum(std::span<const double> x);
double mean(std::span<const double> x);
double dot(std::span<const double> x, std::span<const double> y);
void axpy(double a, std::span<const double> x, std::span<double> y);

struct LogMoments {
  double mean;
  double stddev;
};

/// Mean and standard deviation of log p under p: mean = sum p*logp,
/// var = sum p*(logp - mean)^2.
LogMoments log_moments(std::span<const double> p, std::span<const double> logp);

namespace scalar {
double sum(const double* x, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
double weighted_sq_dev(const double* w, const double* x, double center, std::size_t n);
}  // namespace scalar

}  // namespace mia::kernels
