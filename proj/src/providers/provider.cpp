#include <cmath>
#include <cstdlib>

#include <json.hpp>

#include "mia/error.hpp"
#include "mia/http_provider.hpp"
#include "mia/providers.hpp"
#include "mia/rng.hpp"
#include "mia/synthetic.hpp"
#include "mia/trace_provider.hpp"

namespace mia {

using nlohmann::json;

std::string hashed_context_id(const std::optional<std::string>& context) {
  if (!context) return "";
  return "ctx-" + hex64(fnv1a64(*context));
}

std::string Provider::context_id(const std::optional<std::string>& context) const {
  return hashed_context_id(context);
}

std::string Provider::generate(const GenerationRequest&) const {
  throw Error(ErrorCode::kCapability, "generation");
}

TokenScores score_text(const Provider& provider, std::string_view text, const std::optional<std::string>& context) {
  if (text.empty()) throw Error(ErrorCode::kValidation, "score_text: empty text");
  ScoreRequest req;
  req.text = std::string(text);
  req.context = context;
  return provider.score(req);
}

std::pair<std::vector<double>, std::vector<double>> distribution_stats(const Provider& provider, std::string_view text,
                                                                       const std::optional<std::string>& context) {
  if (!provider.capabilities().distribution_stats) throw Error(ErrorCode::kCapability, "distribution_stats");
  ScoreRequest req;
  req.text = std::string(text);
  req.context = context;
  req.need_distribution_stats = true;
  TokenScores ts = provider.score(req);
  if (!ts.has_distribution_stats()) throw Error(ErrorCode::kCapability, "distribution_stats");
  return {std::move(*ts.dist_mean), std::move(*ts.dist_std)};
}

std::string generate(const Provider& provider, const GenerationRequest& request) {
  if (!provider.capabilities().generation) throw Error(ErrorCode::kCapability, "generation");
  if (request.max_new_tokens < 1) throw Error(ErrorCode::kValidation, "max_new_tokens must be >= 1");
  return provider.generate(request);
}

std::vector<std::size_t> attribute_target_tokens(const std::vector<JointToken>& joint, std::size_t target_start) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < joint.size(); ++i) {
    if (joint[i].start >= target_start) out.push_back(i);
  }
  if (out.empty()) throw Error(ErrorCode::kDegenerateTokenization, "no tokens attributed to the target text");
  return out;
}

std::string token_scores_to_json(const TokenScores& ts, const std::string& sample_id, bool with_ids) {
  json obj = json::object();
  if (with_ids) {
    obj["context_id"] = ts.context_id;
    obj["sample_id"] = sample_id;
  }
  obj["tokens"] = ts.tokens;
  obj["logprobs"] = ts.logprobs;
  json offsets = json::array();
  for (const auto& [s, e] : ts.char_offsets) offsets.push_back({s, e});
  obj["char_offsets"] = std::move(offsets);
  if (ts.dist_mean) obj["dist_mean"] = *ts.dist_mean;
  if (ts.dist_std) obj["dist_std"] = *ts.dist_std;
  if (ts.stats_approximate) obj["stats_approximate"] = true;
  return obj.dump();
}

namespace {

TokenScores token_scores_from_object(const json& obj) {
  TokenScores ts;
  if (obj.contains("context_id")) ts.context_id = obj.at("context_id").get<std::string>();
  ts.tokens = obj.at("tokens").get<std::vector<std::string>>();
  ts.logprobs = obj.at("logprobs").get<std::vector<double>>();
  for (const auto& pair : obj.at("char_offsets")) {
    if (!pair.is_array() || pair.size() != 2) throw Error(ErrorCode::kParse, "char_offsets entries must be [start, end]");
    ts.char_offsets.emplace_back(pair[0].get<std::size_t>(), pair[1].get<std::size_t>());
  }
  if (obj.contains("dist_mean") && obj.contains("dist_std")) {
    ts.dist_mean = obj.at("dist_mean").get<std::vector<double>>();
    ts.dist_std = obj.at("dist_std").get<std::vector<double>>();
  } else if (obj.contains("top_logprobs")) {
    // Truncated distributions: summarize with a lumped tail outcome.
    std::vector<double> mean, stddev;
    for (const auto& row : obj.at("top_logprobs")) {
      const auto [m, s] = approximate_moments_from_topk(row.get<std::vector<double>>());
      mean.push_back(m);
      stddev.push_back(s);
    }
    ts.dist_mean = std::move(mean);
    ts.dist_std = std::move(stddev);
    ts.stats_approximate = true;
  }
  if (obj.value("stats_approximate", false)) ts.stats_approximate = true;
  ts.validate();
  return ts;
}

}  // namespace

TokenScores token_scores_from_json(std::string_view json_text) {
  try {
    return token_scores_from_object(json::parse(json_text));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("token scores record: ") + e.what());
  }
}

std::pair<double, double> approximate_moments_from_topk(const std::vector<double>& top_logprobs) {
  if (top_logprobs.empty()) throw Error(ErrorCode::kValidation, "empty top-k distribution");
  std::vector<double> p, lp;
  double mass = 0.0;
  for (double v : top_logprobs) {
    if (!std::isfinite(v) || v > 0.0) throw Error(ErrorCode::kValidation, "invalid top-k log-probability");
    p.push_back(std::exp(v));
    lp.push_back(v);
    mass += p.back();
  }
  const double tail = 1.0 - mass;
  if (tail > 1e-12) {
    p.push_back(tail);
    lp.push_back(std::log(tail));
  } else {
    // Renormalize when the reported head already carries all the mass.
    for (double& x : p) x /= mass;
  }
  double mu = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) mu += p[i] * lp[i];
  double var = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) var += p[i] * (lp[i] - mu) * (lp[i] - mu);
  return {mu, std::sqrt(var)};
}

std::unique_ptr<Provider> make_provider(const std::string& uri) {
  if (uri.rfind("synth:", 0) == 0) {
    bool uniform = false;
    const auto config = parse_synth_uri(uri, uniform);
    return std::make_unique<SyntheticProvider>(synthetic_model_spec(config, uniform), uri);
  }
  if (uri.rfind("trace:", 0) == 0) {
    std::string rest = uri.substr(6);
    std::string contexts;
    if (auto q = rest.find("?contexts="); q != std::string::npos) {
      contexts = rest.substr(q + 10);
      rest = rest.substr(0, q);
    }
    return std::make_unique<TraceProvider>(TraceProvider::load(rest, contexts, uri));
  }
  if (uri.rfind("http:", 0) == 0 || uri.rfind("https:", 0) == 0) {
    return std::make_unique<HttpProvider>(uri);
  }
  throw Error(ErrorCode::kValidation, "unsupported provider URI '" + uri + "' (expected synth:, trace: or http:)");
}

}  // namespace mia
