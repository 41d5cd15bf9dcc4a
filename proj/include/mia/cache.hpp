#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <tuple>

#include "mia/providers.hpp"

namespace mia {

/// Disk-backed memo of another provider's score() results. Entries are stored
/// as trace-format JSONL (plus "text_hash" and "stats") in
/// `<dir>/<hash of provider URI>.jsonl` and reloaded on construction. Reads are
/// concurrent; appends are serialized.
class CachingProvider final : public Provider {
 public:
  CachingProvider(const Provider& inner, std::filesystem::path dir);

  ProviderCapabilities capabilities() const override { return inner_.capabilities(); }
  std::string uri() const override { return inner_.uri(); }
  std::size_t max_concurrency() const override { return inner_.max_concurrency(); }
  std::string context_id(const std::optional<std::string>& context) const override {
    return inner_.context_id(context);
  }
  TokenScores score(const ScoreRequest& request) const override;
  std::string generate(const GenerationRequest& request) const override { return inner_.generate(request); }

  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }
  const std::filesystem::path& file() const { return file_; }

 private:
  // (context_id, sample_id, text hash, with stats)
  using Key = std::tuple<std::string, std::string, std::string, bool>;

  const Provider& inner_;
  std::filesystem::path file_;
  mutable std::shared_mutex map_mutex_;
  mutable std::mutex write_mutex_;
  mutable std::map<Key, TokenScores> entries_;
  mutable std::atomic<std::size_t> hits_{0};
  mutable std::atomic<std::size_t> misses_{0};
};

}  // namespace mia
