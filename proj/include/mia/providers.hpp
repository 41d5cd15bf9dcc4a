#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mia/core.hpp"

namespace mia {

struct ProviderCapabilities {
  bool token_logprobs = true;
  bool distribution_stats = false;
  bool generation = false;
};

struct ScoreRequest {
  std::string sample_id;  // used by trace lookups and the cache; may be empty
  std::string text;
  std::optional<std::string> context;
  bool need_distribution_stats = false;
};

enum class DecodeStrategy { kGreedy, kSample };

struct GenerationRequest {
  std::string prompt;
  std::size_t max_new_tokens = 1;
  std::optional<std::uint64_t> seed;
  DecodeStrategy strategy = DecodeStrategy::kGreedy;
};

/// Gray-box language model: per-token log-probabilities of a text, optionally
/// after consuming a context, plus optional distribution statistics and
/// generation.
class Provider {
 public:
  virtual ~Provider() = default;

  virtual ProviderCapabilities capabilities() const = 0;
  virtual std::string uri() const = 0;

  /// 0 means unbounded.
  virtual std::size_t max_concurrency() const { return 0; }

  /// Id under which `context` text is known to this provider ("" for none).
  virtual std::string context_id(const std::optional<std::string>& context) const;

  virtual TokenScores score(const ScoreRequest& request) const = 0;

  virtual std::string generate(const GenerationRequest& request) const;

  /// Joins a context and the scored text.
  std::string separator = "\n";
};

/// Default context id: "" for no context, otherwise a content hash.
std::string hashed_context_id(const std::optional<std::string>& context);

TokenScores score_text(const Provider& provider, std::string_view text,
                       const std::optional<std::string>& context = std::nullopt);

std::pair<std::vector<double>, std::vector<double>> distribution_stats(
    const Provider& provider, std::string_view text, const std::optional<std::string>& context = std::nullopt);

std::string generate(const Provider& provider, const GenerationRequest& request);

// --- token attribution ------------------------------------------------------

struct JointToken {
  std::string token;
  std::size_t start;
  std::size_t end;
};

/// Indices of joint tokens that belong to the target: those whose span starts at
/// or after `target_start`. Throws kDegenerateTokenization when none do.
std::vector<std::size_t> attribute_target_tokens(const std::vector<JointToken>& joint, std::size_t target_start);

// --- trace-format JSON ------------------------------------------------------

std::string token_scores_to_json(const TokenScores& ts, const std::string& sample_id, bool with_ids = true);
TokenScores token_scores_from_json(std::string_view json_text);

/// Mean/std of log p over a truncated distribution (top-K log-probs at one
/// position) plus a single lumped tail outcome carrying the missing mass.
std::pair<double, double> approximate_moments_from_topk(const std::vector<double>& top_logprobs);

/// Builds a provider from a URI: `synth:<seed>[?key=value&...]`,
/// `trace:<path>[?contexts=<path>]`, `http:<url>`.
std::unique_ptr<Provider> make_provider(const std::string& uri);

}  // namespace mia
