#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mia/core.hpp"
#include "mia/providers.hpp"

namespace mia {

inline constexpr std::size_t kDefaultBins = 100;

/// Histogram approximation of the empirical W1 distance: a shared grid of
/// `bins` equal cells over the pooled [min, max], summing |F_P - F_Q| * width.
double wasserstein(std::span<const double> p_samples, std::span<const double> q_samples, std::size_t bins);

/// sign(mean(q) - mean(p)) * wasserstein(p, q); 0 when the means are equal.
double signed_wasserstein(std::span<const double> p_samples, std::span<const double> q_samples, std::size_t bins);

/// (x - min) / (max - min); a constant list maps to 0.5 everywhere.
std::vector<double> min_max_normalize(std::span<const double> scores);

enum class Pairing { kMemberGivenM, kMemberGivenNM, kNonmemberGivenM, kNonmemberGivenNM };

std::string_view to_string(Pairing pairing);

/// Per-sample statistic compared across conditions.
enum class ShiftMeasure { kMeanLL, kSumLL };

std::string_view to_string(ShiftMeasure measure);
ShiftMeasure parse_shift_measure(std::string_view name);

struct ShiftRow {
  std::size_t shots;
  Pairing pairing;
  double signed_w;
};

struct ShiftProfile {
  std::vector<ShiftRow> rows;
  std::size_t bins = kDefaultBins;

  std::string to_csv() const;
};

/// For each shot count and pairing, compares the class's unconditioned mean-LL
/// distribution (P) with the distribution under the prefix (Q). Zero shots
/// means no prefix, so Q = P.
ShiftProfile shift_profile(const Dataset& dataset, const PrefixPool& pool, const Provider& provider,
                           const std::vector<std::size_t>& shots_list, std::size_t bins = kDefaultBins,
                           ShiftMeasure measure = ShiftMeasure::kMeanLL);

}  // namespace mia
