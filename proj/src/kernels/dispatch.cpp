#include <atomic>
#include <cmath>
#include <cstdlib>
#include <string>

#include "kernels_internal.hpp"
#include "mia/error.hpp"
#include "mia/kernels.hpp"

namespace mia::kernels {

namespace {

constexpr KernelTable kScalarTable{&scalar::sum, &scalar::dot, &scalar::axpy, &scalar::weighted_sq_dev};

#if defined(MIA_HAVE_AVX2)
constexpr KernelTable kAvx2Table{&avx2::sum, &avx2::dot, &avx2::axpy, &avx2::weighted_sq_dev};
#endif
#if defined(__aarch64__)
constexpr KernelTable kNeonTable{&neon::sum, &neon::dot, &neon::axpy, &neon::weighted_sq_dev};
#endif

bool cpu_has_avx2() {
#if defined(MIA_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa pick_default() {
  const char* env = std::getenv("MIA_SIMD");
  const std::string want = env ? env : "auto";
  if (want == "scalar") return Isa::kScalar;
  if (want == "avx2" && table_for(Isa::kAvx2)) return Isa::kAvx2;
  if (want == "neon" && table_for(Isa::kNeon)) return Isa::kNeon;
  if (table_for(Isa::kAvx2)) return Isa::kAvx2;
  if (table_for(Isa::kNeon)) return Isa::kNeon;
  return Isa::kScalar;
}

std::atomic<Isa>& active_slot() {
  static std::atomic<Isa> slot{pick_default()};
  return slot;
}

}  // namespace

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
    case Isa::kNeon: return "neon";
  }
  return "?";
}

const KernelTable* table_for(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return &kScalarTable;
    case Isa::kAvx2:
#if defined(MIA_HAVE_AVX2)
      if (cpu_has_avx2()) return &kAvx2Table;
#endif
      return nullptr;
    case Isa::kNeon:
#if defined(__aarch64__)
      return &kNeonTable;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

std::vector<Isa> available_isas() {
  std::vector<Isa> out{Isa::kScalar};
  if (table_for(Isa::kAvx2)) out.push_back(Isa::kAvx2);
  if (table_for(Isa::kNeon)) out.push_back(Isa::kNeon);
  return out;
}

Isa active_isa() { return active_slot().load(std::memory_order_relaxed); }

const KernelTable& active() { return *table_for(active_isa()); }

void set_active_isa(Isa isa) {
  if (!table_for(isa)) {
    throw Error(ErrorCode::kValidation, "SIMD variant '" + std::string(to_string(isa)) + "' unavailable");
  }
  active_slot().store(isa, std::memory_order_relaxed);
}

double sum(std::span<const double> x) { return active().sum(x.data(), x.size()); }

double mean(std::span<const double> x) {
  return sum(x) / static_cast<double>(x.size());
}

double dot(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::kValidation, "dot: length mismatch");
  return active().dot(x.data(), y.data(), x.size());
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::kValidation, "axpy: length mismatch");
  active().axpy(a, x.data(), y.data(), x.size());
}

LogMoments log_moments(std::span<const double> p, std::span<const double> logp) {
  if (p.size() != logp.size()) throw Error(ErrorCode::kValidation, "log_moments: length mismatch");
  const auto& k = active();
  const double mu = k.dot(p.data(), logp.data(), p.size());
  const double var = k.weighted_sq_dev(p.data(), logp.data(), mu, p.size());
  return {mu, std::sqrt(var > 0.0 ? var : 0.0)};
}

}  // namespace mia::kernels
