#include "mia/trace_provider.hpp"

#include <json.hpp>

#include "mia/error.hpp"
#include "mia/rng.hpp"

namespace mia {

using nlohmann::json;

namespace {

template <typename Fn>
void for_each_line(std::string_view content, Fn&& fn) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < content.size()) {
    std::size_t eol = content.find('\n', pos);
    if (eol == std::string_view::npos) eol = content.size();
    std::string_view line = content.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    fn(line, line_no);
  }
}

}  // namespace

TraceProvider TraceProvider::parse(std::string_view traces_jsonl, std::string_view contexts_jsonl, std::string uri) {
  TraceProvider tp;
  tp.uri_ = std::move(uri);
  for_each_line(contexts_jsonl, [&](std::string_view line, std::size_t line_no) {
    try {
      const auto obj = json::parse(line);
      tp.context_ids_by_text_[obj.at("text").get<std::string>()] = obj.at("context_id").get<std::string>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse, "contexts line " + std::to_string(line_no) + ": " + e.what());
    }
  });
  for_each_line(traces_jsonl, [&](std::string_view line, std::size_t line_no) {
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse, "trace line " + std::to_string(line_no) + ": " + e.what());
    }
    if (obj.value("header", false)) return;
    if (!obj.contains("sample_id") || !obj.contains("context_id")) {
      throw Error(ErrorCode::kParse, "trace line " + std::to_string(line_no) + ": missing sample_id/context_id");
    }
    TokenScores ts;
    try {
      ts = token_scores_from_json(line);
    } catch (const Error& e) {
      throw Error(e.code(), "trace line " + std::to_string(line_no) + ": " + e.what());
    }
    if (ts.has_distribution_stats()) tp.has_stats_ = true;
    const auto key = std::make_pair(obj["context_id"].get<std::string>(), obj["sample_id"].get<std::string>());
    if (!tp.records_.emplace(key, std::move(ts)).second) {
      throw Error(ErrorCode::kDuplicateId, "trace record (" + key.first + ", " + key.second + ") appears twice");
    }
  });
  return tp;
}

TraceProvider TraceProvider::load(const std::filesystem::path& trace_path, const std::filesystem::path& contexts_path,
                                  std::string uri) {
  std::filesystem::path ctx = contexts_path;
  if (ctx.empty()) {
    const auto dir = trace_path.parent_path();
    const auto sidecar = dir / (trace_path.stem().string() + ".contexts.jsonl");
    if (std::filesystem::exists(sidecar)) {
      ctx = sidecar;
    } else if (std::filesystem::exists(dir / "contexts.jsonl")) {
      ctx = dir / "contexts.jsonl";
    }
  }
  if (uri.empty()) uri = "trace:" + trace_path.string();
  return parse(read_file(trace_path), ctx.empty() ? std::string() : read_file(ctx), std::move(uri));
}

std::string TraceProvider::context_id(const std::optional<std::string>& context) const {
  if (!context) return "";
  auto it = context_ids_by_text_.find(*context);
  if (it == context_ids_by_text_.end()) return "<unregistered:" + hashed_context_id(context) + ">";
  return it->second;
}

TokenScores TraceProvider::score(const ScoreRequest& request) const {
  const std::string ctx = context_id(request.context);
  auto it = records_.find({ctx, request.sample_id});
  if (it == records_.end()) {
    throw Error(ErrorCode::kMissingTrace, "context_id='" + ctx + "' sample='" + request.sample_id + "'");
  }
  TokenScores ts = it->second;
  ts.text_hash = fnv1a64(request.text);
  if (ts.size() == 0) throw Error(ErrorCode::kDegenerateTokenization, "trace record has no target tokens");
  if (ts.char_offsets.back().second > request.text.size()) {
    throw Error(ErrorCode::kTextMismatch, "trace offsets exceed text length for sample '" + request.sample_id + "'");
  }
  if (request.need_distribution_stats && !ts.has_distribution_stats()) {
    throw Error(ErrorCode::kCapability, "distribution_stats");
  }
  return ts;
}

}  // namespace mia
