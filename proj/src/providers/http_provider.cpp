#include "mia/http_provider.hpp"

#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

#include "mia/error.hpp"
#include "mia/rng.hpp"

namespace mia {

using nlohmann::json;

HttpProvider::HttpProvider(std::string uri) : uri_(std::move(uri)) {
  // Accept `http:<url>` as well as a bare http(s) URL.
  std::string rest = uri_;
  if (rest.rfind("http:http", 0) == 0) rest = rest.substr(5);
  if (rest.rfind("http://", 0) != 0 && rest.rfind("https://", 0) != 0) {
    throw Error(ErrorCode::kValidation, "malformed http provider URI '" + uri_ + "'");
  }
  while (!rest.empty() && rest.back() == '/') rest.pop_back();
  base_url_ = rest;
  if (const char* env = std::getenv("MIA_HTTP_TIMEOUT_MS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v <= 0) {
      throw Error(ErrorCode::kValidation, "MIA_HTTP_TIMEOUT_MS must be a positive integer");
    }
    timeout_ms_ = static_cast<int>(v);
  }
}

std::string HttpProvider::post(const std::string& path, const std::string& body) const {
  httplib::Client client(base_url_);
  const auto timeout = std::chrono::milliseconds(timeout_ms_);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  auto res = client.Post(path, body, "application/json");
  if (!res) {
    throw Error(ErrorCode::kTransport, "POST " + base_url_ + path + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorCode::kTransport, "POST " + base_url_ + path + " returned " + std::to_string(res->status) + ": " +
                                           res->body);
  }
  return res->body;
}

TokenScores HttpProvider::score(const ScoreRequest& request) const {
  json body = {{"text", request.text}, {"need_distribution_stats", request.need_distribution_stats}};
  if (request.context) body["context"] = *request.context;
  const std::string response = post("/score", body.dump());
  TokenScores ts;
  try {
    ts = token_scores_from_json(response);
  } catch (const Error& e) {
    throw Error(ErrorCode::kTransport, std::string("malformed /score response: ") + e.what());
  }
  ts.context_id = context_id(request.context);
  ts.text_hash = fnv1a64(request.text);
  if (ts.size() == 0) throw Error(ErrorCode::kDegenerateTokenization, "server returned no target tokens");
  if (request.need_distribution_stats && !ts.has_distribution_stats()) {
    throw Error(ErrorCode::kCapability, "distribution_stats");
  }
  return ts;
}

std::string HttpProvider::generate(const GenerationRequest& request) const {
  json body = {{"prompt", request.prompt},
               {"max_new_tokens", request.max_new_tokens},
               {"strategy", request.strategy == DecodeStrategy::kGreedy ? "greedy" : "sample"}};
  if (request.seed) body["seed"] = *request.seed;
  const std::string response = post("/generate", body.dump());
  try {
    return json::parse(response).at("text").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kTransport, std::string("malformed /generate response: ") + e.what());
  }
}

}  // namespace mia
