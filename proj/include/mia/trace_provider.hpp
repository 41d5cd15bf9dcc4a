#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>

#include "mia/providers.hpp"

namespace mia {

/// Read-only provider backed by pre-computed trace JSONL records keyed by
/// (context_id, sample_id). Context texts are resolved to ids through the
/// contexts sidecar.
class TraceProvider final : public Provider {
 public:
  /// `contexts_path` may be empty; then `<trace stem>.contexts.jsonl` or
  /// `contexts.jsonl` next to the trace file is used when present.
  static TraceProvider load(const std::filesystem::path& trace_path, const std::filesystem::path& contexts_path = {},
                            std::string uri = {});

  static TraceProvider parse(std::string_view traces_jsonl, std::string_view contexts_jsonl, std::string uri);

  ProviderCapabilities capabilities() const override { return {true, has_stats_, false}; }
  std::string uri() const override { return uri_; }
  std::string context_id(const std::optional<std::string>& context) const override;
  TokenScores score(const ScoreRequest& request) const override;

  std::size_t size() const { return records_.size(); }

 private:
  std::string uri_;
  bool has_stats_ = false;
  std::map<std::pair<std::string, std::string>, TokenScores> records_;
  std::map<std::string, std::string> context_ids_by_text_;
};

}  // namespace mia
