#include "mia/cache.hpp"

#include <fstream>

#include <json.hpp>

#include "mia/error.hpp"
#include "mia/rng.hpp"

namespace mia {

using nlohmann::json;

CachingProvider::CachingProvider(const Provider& inner, std::filesystem::path dir) : inner_(inner) {
  separator = inner.separator;
  std::filesystem::create_directories(dir);
  file_ = dir / (hex64(fnv1a64(inner.uri())) + ".jsonl");
  if (!std::filesystem::exists(file_)) return;
  const std::string content = read_file(file_);
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t eol = content.find('\n', pos);
    if (eol == std::string::npos) break;  // torn final line from an aborted run
    const std::string_view line(content.data() + pos, eol - pos);
    pos = eol + 1;
    try {
      const auto obj = json::parse(line);
      if (obj.value("uri", std::string()) != inner.uri()) continue;
      TokenScores ts = token_scores_from_json(line);
      Key key{obj.at("context_id").get<std::string>(), obj.at("sample_id").get<std::string>(),
              obj.at("text_hash").get<std::string>(), obj.value("stats", false)};
      entries_[std::move(key)] = std::move(ts);
    } catch (const std::exception&) {
      continue;  // skip corrupt entries; they are recomputed
    }
  }
}

TokenScores CachingProvider::score(const ScoreRequest& request) const {
  const std::string ctx = inner_.context_id(request.context);
  Key key{ctx, request.sample_id, hex64(fnv1a64(request.text)), request.need_distribution_stats};
  {
    std::shared_lock lock(map_mutex_);
    if (auto it = entries_.find(key); it != entries_.end()) {
      ++hits_;
      TokenScores hit = it->second;
      hit.text_hash = fnv1a64(request.text);
      return hit;
    }
  }
  TokenScores ts = inner_.score(request);
  {
    std::unique_lock lock(map_mutex_);
    ++misses_;
    entries_[key] = ts;
  }
  json obj = json::parse(token_scores_to_json(ts, request.sample_id));
  obj["context_id"] = ctx;
  obj["text_hash"] = std::get<2>(key);
  obj["stats"] = request.need_distribution_stats;
  obj["uri"] = inner_.uri();
  std::lock_guard guard(write_mutex_);
  std::ofstream out(file_, std::ios::app | std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot append to cache " + file_.string());
  out << obj.dump() << '\n';
  return ts;
}

}  // namespace mia
