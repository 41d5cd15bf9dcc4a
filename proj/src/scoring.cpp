#include "mia/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <zlib.h>

#include "mia/error.hpp"
#include "mia/kernels.hpp"
#include "mia/rng.hpp"

namespace mia {

void ScoreParams::validate() const {
  if (!(k_percent > 0.0 && k_percent <= 100.0)) throw Error(ErrorCode::kValidation, "k_percent must be in (0, 100]");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw Error(ErrorCode::kValidation, "gamma must be >= 0");
  if (n_neighbors < 1) throw Error(ErrorCode::kValidation, "n_neighbors must be >= 1");
  if (shots < 1) throw Error(ErrorCode::kValidation, "shots must be >= 1");
}

namespace {

void require_finite(std::span<const double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFiniteInput, "non-finite log-probability");
  }
}

MethodScore make(Method method, double value, std::map<std::string, double> params = {}) {
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::kNonFiniteInput, std::string(to_string(method)) + " produced a non-finite score");
  }
  MethodScore s;
  s.method = method;
  s.value = value;
  s.params = std::move(params);
  return s;
}

void require_same_text(const TokenScores& a, const TokenScores& b) {
  if (a.text_hash != 0 && b.text_hash != 0 && a.text_hash != b.text_hash) {
    throw Error(ErrorCode::kTextMismatch, "token scores were computed on different texts");
  }
}

double nonzero_ll(const TokenScores& ts) {
  const double ll = mean_ll(ts);
  if (ll == 0.0) throw Error(ErrorCode::kDegenerateLL, "unconditional LL is zero");
  return ll;
}

}  // namespace

double mean_ll(const TokenScores& ts) {
  if (ts.logprobs.empty()) throw Error(ErrorCode::kEmptyTokenScores, "no tokens");
  require_finite(ts.logprobs);
  return kernels::mean(ts.logprobs);
}

std::size_t min_k_count(double k_percent, std::size_t n_tokens) {
  if (!(k_percent > 0.0 && k_percent <= 100.0)) throw Error(ErrorCode::kValidation, "k_percent must be in (0, 100]");
  // k * n / 100 is exact for the integer grid used in sweeps; the epsilon keeps
  // e.g. 70% of 10 from landing just below 7.
  const double raw = k_percent * static_cast<double>(n_tokens) / 100.0;
  const auto m = static_cast<std::size_t>(std::floor(raw + 1e-9));
  return std::clamp<std::size_t>(m, 1, std::max<std::size_t>(n_tokens, 1));
}

double mean_of_lowest(std::span<const double> values, double k_percent) {
  if (values.empty()) throw Error(ErrorCode::kEmptyTokenScores, "no tokens");
  const std::size_t m = min_k_count(k_percent, values.size());
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  order.resize(m);
  std::sort(order.begin(), order.end());
  std::vector<double> picked;
  picked.reserve(m);
  for (std::size_t i : order) picked.push_back(values[i]);
  return kernels::mean(picked);
}

std::size_t zlib_entropy(std::string_view text) {
  if (text.empty()) throw Error(ErrorCode::kValidation, "zlib_entropy: empty text");
  uLongf dest_len = compressBound(static_cast<uLong>(text.size()));
  std::vector<Bytef> dest(dest_len);
  const int rc = compress2(dest.data(), &dest_len, reinterpret_cast<const Bytef*>(text.data()),
                           static_cast<uLong>(text.size()), kZlibLevel);
  if (rc != Z_OK) throw Error(ErrorCode::kValidation, "zlib compress2 failed");
  return static_cast<std::size_t>(dest_len);
}

MethodScore loss_score(const TokenScores& ts) { return make(Method::kLoss, mean_ll(ts)); }

MethodScore ref_score(const TokenScores& target, const TokenScores& reference) {
  require_same_text(target, reference);
  return make(Method::kRef, mean_ll(target) - mean_ll(reference));
}

MethodScore zlib_score(const TokenScores& ts, std::string_view text) {
  if (ts.text_hash != 0 && ts.text_hash != fnv1a64(text)) {
    throw Error(ErrorCode::kTextMismatch, "zlib_score: text differs from the scored text");
  }
  return make(Method::kZlib, mean_ll(ts) / static_cast<double>(zlib_entropy(text)));
}

MethodScore neighbor_score(const TokenScores& target, const std::vector<TokenScores>& neighbors) {
  if (neighbors.empty()) throw Error(ErrorCode::kValidation, "neighbor_score: no neighbors");
  double acc = 0.0;
  for (const auto& n : neighbors) acc += mean_ll(n);
  const double n = static_cast<double>(neighbors.size());
  return make(Method::kNeighbor, mean_ll(target) - acc / n, {{"n_neighbors", n}});
}

MethodScore mink_score(const TokenScores& ts, double k_percent) {
  if (ts.logprobs.empty()) throw Error(ErrorCode::kEmptyTokenScores, "no tokens");
  require_finite(ts.logprobs);
  return make(Method::kMinK, mean_of_lowest(ts.logprobs, k_percent), {{"k", k_percent}});
}

std::vector<double> minkpp_token_scores(const TokenScores& ts) {
  if (!ts.has_distribution_stats()) throw Error(ErrorCode::kCapability, "distribution_stats");
  if (ts.logprobs.empty()) throw Error(ErrorCode::kEmptyTokenScores, "no tokens");
  require_finite(ts.logprobs);
  const auto& mu = *ts.dist_mean;
  const auto& sigma = *ts.dist_std;
  if (mu.size() != ts.size() || sigma.size() != ts.size()) {
    throw Error(ErrorCode::kValidation, "distribution stats length mismatch");
  }
  std::vector<double> z(ts.size());
  for (std::size_t t = 0; t < z.size(); ++t) {
    z[t] = (ts.logprobs[t] - mu[t]) / std::max(sigma[t], kSigmaFloor);
  }
  return z;
}

MethodScore minkpp_score(const TokenScores& ts, double k_percent) {
  const auto z = minkpp_token_scores(ts);
  MethodScore s = make(Method::kMinKPP, mean_of_lowest(z, k_percent), {{"k", k_percent}});
  const auto& sigma = *ts.dist_std;
  if (std::all_of(sigma.begin(), sigma.end(), [](double v) { return v < kSigmaFloor; })) {
    s.warnings.emplace_back("all positions have std below the floor; scores use the floor");
  }
  if (ts.stats_approximate) s.warnings.emplace_back("distribution stats are approximate (truncated top-k)");
  return s;
}

double recall_value(double ll_nonmember, double ll_unconditional) {
  if (ll_unconditional == 0.0) throw Error(ErrorCode::kDegenerateLL, "unconditional LL is zero");
  return ll_nonmember / ll_unconditional;
}

double conrecall_value(double ll_nonmember, double ll_member, double ll_unconditional, double gamma) {
  if (!(gamma >= 0.0)) throw Error(ErrorCode::kValidation, "gamma must be >= 0");
  if (ll_unconditional == 0.0) throw Error(ErrorCode::kDegenerateLL, "unconditional LL is zero");
  return (ll_nonmember - gamma * ll_member) / ll_unconditional;
}

MethodScore recall_score(const TokenScores& conditional_nonmember, const TokenScores& unconditional) {
  require_same_text(conditional_nonmember, unconditional);
  return make(Method::kReCall, recall_value(mean_ll(conditional_nonmember), nonzero_ll(unconditional)));
}

MethodScore conrecall_score(const TokenScores& conditional_nonmember, const TokenScores& conditional_member,
                            const TokenScores& unconditional, double gamma) {
  require_same_text(conditional_nonmember, unconditional);
  require_same_text(conditional_member, unconditional);
  return make(Method::kConReCall,
              conrecall_value(mean_ll(conditional_nonmember), mean_ll(conditional_member), nonzero_ll(unconditional),
                              gamma),
              {{"gamma", gamma}});
}

}  // namespace mia
