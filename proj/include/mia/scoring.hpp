#pragma once

// Membership scores over TokenScores. Every score is oriented so that a higher
// value means "more likely a member"; LL is the per-token mean log-probability.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "mia/core.hpp"

namespace mia {

inline constexpr double kSigmaFloor = 1e-6;
inline constexpr int kZlibLevel = 6;

struct ScoreParams {
  double k_percent = 20.0;
  double gamma = 0.5;
  std::size_t n_neighbors = 5;
  std::size_t shots = 7;

  void validate() const;
};

double mean_ll(const TokenScores& ts);

/// Number of tokens Min-K% style selections average over: max(1, floor(k/100 * n)).
std::size_t min_k_count(double k_percent, std::size_t n_tokens);

/// Mean of the `min_k_count` smallest values (ties: earlier position first),
/// summed in positional order so that k = 100 reproduces the plain mean.
double mean_of_lowest(std::span<const double> values, double k_percent);

/// Compressed byte length of `text` (zlib format, level 6).
std::size_t zlib_entropy(std::string_view text);

MethodScore loss_score(const TokenScores& ts);
MethodScore ref_score(const TokenScores& target, const TokenScores& reference);
MethodScore zlib_score(const TokenScores& ts, std::string_view text);
MethodScore neighbor_score(const TokenScores& target, const std::vector<TokenScores>& neighbors);
MethodScore mink_score(const TokenScores& ts, double k_percent);
MethodScore minkpp_score(const TokenScores& ts, double k_percent);
MethodScore recall_score(const TokenScores& conditional_nonmember, const TokenScores& unconditional);
MethodScore conrecall_score(const TokenScores& conditional_nonmember, const TokenScores& conditional_member,
                            const TokenScores& unconditional, double gamma);

/// Per-token Min-K%++ statistic (logprob - mean) / max(std, kSigmaFloor).
std::vector<double> minkpp_token_scores(const TokenScores& ts);

// Value-level forms shared by the TokenScores overloads and sweeps over cached LLs.
double recall_value(double ll_nonmember, double ll_unconditional);
double conrecall_value(double ll_nonmember, double ll_member, double ll_unconditional, double gamma);

}  // namespace mia
