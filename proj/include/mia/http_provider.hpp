#pragma once

#include <string>

#include "mia/providers.hpp"

namespace mia {

/// Remote provider speaking JSON over HTTP:
///   POST /score    {"text", "context"?, "need_distribution_stats"} -> trace record (no ids)
///   POST /generate {"prompt", "max_new_tokens", "seed"?, "strategy"} -> {"text"}
/// Non-2xx responses and connection failures raise kTransport. Timeout comes
/// from MIA_HTTP_TIMEOUT_MS (default 30000). Calls are serialized.
class HttpProvider final : public Provider {
 public:
  explicit HttpProvider(std::string uri);

  ProviderCapabilities capabilities() const override { return {true, true, true}; }
  std::string uri() const override { return uri_; }
  std::size_t max_concurrency() const override { return 1; }
  TokenScores score(const ScoreRequest& request) const override;
  std::string generate(const GenerationRequest& request) const override;

  const std::string& base_url() const { return base_url_; }
  int timeout_ms() const { return timeout_ms_; }

 private:
  std::string post(const std::string& path, const std::string& body) const;

  std::string uri_;
  std::string base_url_;
  int timeout_ms_ = 30000;
};

}  // namespace mia
