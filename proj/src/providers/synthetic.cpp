#include "mia/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mia/error.hpp"
#include "mia/kernels.hpp"
#include "mia/rng.hpp"

namespace mia {

void LatentTopicModelSpec::validate() const {
  const std::size_t w = vocab.size();
  if (w < 2) throw Error(ErrorCode::kValidation, "vocabulary needs at least 2 words");
  if (num_topics < 2) throw Error(ErrorCode::kValidation, "need at least 2 topics");
  if (topic_word_dists.size() != num_topics || topic_prior.size() != num_topics) {
    throw Error(ErrorCode::kValidation, "topic count mismatch");
  }
  if (!(smoothing >= 0.0) || !std::isfinite(smoothing)) throw Error(ErrorCode::kValidation, "smoothing must be >= 0");
  auto check_dist = [&](const std::vector<double>& d, const char* what, bool require_positive) {
    double total = 0.0;
    for (double v : d) {
      if (!std::isfinite(v) || v < 0.0 || (require_positive && v <= 0.0)) {
        throw Error(ErrorCode::kValidation, std::string(what) + " has an invalid entry");
      }
      total += v;
    }
    if (std::fabs(total - 1.0) > 1e-12) {
      throw Error(ErrorCode::kValidation, std::string(what) + " does not sum to 1");
    }
  };
  // Without smoothing every word needs positive mass under some topic; keep it
  // simple and require it under all of them.
  for (const auto& d : topic_word_dists) {
    if (d.size() != w) throw Error(ErrorCode::kValidation, "topic-word distribution size != vocabulary size");
    check_dist(d, "topic-word distribution", smoothing == 0.0);
  }
  check_dist(topic_prior, "topic prior", true);
}

// Topic posterior in log space.
class SyntheticProvider::State {
 public:
  explicit State(const SyntheticProvider& model) : model_(model), log_weight_(model.spec_.num_topics) {
    for (std::size_t t = 0; t < log_weight_.size(); ++t) log_weight_[t] = std::log(model.spec_.topic_prior[t]);
  }

  std::vector<double> posterior() const {
    const double top = *std::max_element(log_weight_.begin(), log_weight_.end());
    std::vector<double> pi(log_weight_.size());
    double z = 0.0;
    for (std::size_t t = 0; t < pi.size(); ++t) {
      pi[t] = std::exp(log_weight_[t] - top);
      z += pi[t];
    }
    for (double& p : pi) p /= z;
    return pi;
  }

  double probability(std::size_t word) const {
    const auto pi = posterior();
    double p = 0.0;
    for (std::size_t t = 0; t < pi.size(); ++t) p += pi[t] * model_.spec_.topic_word_dists[t][word];
    return smooth(p);
  }

  std::vector<double> distribution() const {
    const auto pi = posterior();
    const std::size_t w = model_.spec_.vocab.size();
    std::vector<double> out(w, 0.0);
    for (std::size_t t = 0; t < pi.size(); ++t) kernels::axpy(pi[t], model_.spec_.topic_word_dists[t], out);
    if (model_.spec_.smoothing > 0.0) {
      for (double& p : out) p = smooth(p);
    }
    return out;
  }

  void observe(std::size_t word) {
    for (std::size_t t = 0; t < log_weight_.size(); ++t) log_weight_[t] += model_.log_theta_[t][word];
  }

 private:
  double smooth(double p) const {
    const double eps = model_.spec_.smoothing;
    if (eps == 0.0) return p;
    return (p + eps) / (1.0 + static_cast<double>(model_.spec_.vocab.size()) * eps);
  }

  const SyntheticProvider& model_;
  std::vector<double> log_weight_;
};

SyntheticProvider::SyntheticProvider(LatentTopicModelSpec spec, std::string uri)
    : spec_(std::move(spec)), uri_(std::move(uri)) {
  spec_.validate();
  log_theta_.resize(spec_.num_topics);
  for (std::size_t t = 0; t < spec_.num_topics; ++t) {
    log_theta_[t].resize(spec_.vocab.size());
    for (std::size_t z = 0; z < spec_.vocab.size(); ++z) {
      const double p = spec_.topic_word_dists[t][z];
      log_theta_[t][z] = p > 0.0 ? std::log(p) : -INFINITY;
    }
  }
  for (std::size_t z = 0; z < spec_.vocab.size(); ++z) index_.emplace(spec_.vocab[z], z);
}

std::size_t SyntheticProvider::word_index(std::string_view word) const {
  if (auto it = index_.find(std::string(word)); it != index_.end()) return it->second;
  return static_cast<std::size_t>(fnv1a64(word) % spec_.vocab.size());
}

std::vector<double> SyntheticProvider::predictive(const std::vector<std::size_t>& history) const {
  State state(*this);
  for (std::size_t w : history) state.observe(w);
  return state.distribution();
}

TokenScores SyntheticProvider::score(const ScoreRequest& request) const {
  if (request.text.empty()) throw Error(ErrorCode::kValidation, "empty text");
  std::string joint;
  std::size_t target_start = 0;
  if (request.context) {
    joint = *request.context + separator;
    target_start = joint.size();
  }
  joint += request.text;

  std::vector<JointToken> tokens;
  for (const auto& span : word_spans(joint)) {
    tokens.push_back({joint.substr(span.start, span.end - span.start), span.start, span.end});
  }
  const auto target = attribute_target_tokens(tokens, target_start);
  const std::size_t first_target = target.front();

  TokenScores ts;
  ts.context_id = context_id(request.context);
  ts.text_hash = fnv1a64(request.text);
  if (request.need_distribution_stats) {
    ts.dist_mean.emplace();
    ts.dist_std.emplace();
  }
  State state(*this);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::size_t word = word_index(tokens[i].token);
    if (i >= first_target) {
      ts.tokens.push_back(tokens[i].token);
      ts.char_offsets.emplace_back(tokens[i].start - target_start, tokens[i].end - target_start);
      if (request.need_distribution_stats) {
        const auto dist = state.distribution();
        std::vector<double> logs(dist.size());
        std::transform(dist.begin(), dist.end(), logs.begin(), [](double p) { return std::log(p); });
        const auto m = kernels::log_moments(dist, logs);
        ts.dist_mean->push_back(m.mean);
        ts.dist_std->push_back(m.stddev);
      }
      // Same arithmetic with or without stats, so loss values never depend on the flag.
      ts.logprobs.push_back(std::log(state.probability(word)));
    }
    state.observe(word);
  }
  return ts;
}

std::string SyntheticProvider::generate(const GenerationRequest& request) const {
  if (request.max_new_tokens < 1) throw Error(ErrorCode::kValidation, "max_new_tokens must be >= 1");
  State state(*this);
  for (const auto& w : split_words(request.prompt)) state.observe(word_index(w));
  Rng rng(request.seed.value_or(0));
  std::vector<std::string> out;
  for (std::size_t n = 0; n < request.max_new_tokens; ++n) {
    const auto dist = state.distribution();
    std::size_t pick = 0;
    if (request.strategy == DecodeStrategy::kGreedy) {
      pick = static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
    } else {
      const double total = kernels::sum(dist);
      double u = rng.uniform01() * total;
      pick = dist.size() - 1;
      for (std::size_t z = 0; z < dist.size(); ++z) {
        if (u < dist[z]) {
          pick = z;
          break;
        }
        u -= dist[z];
      }
    }
    out.push_back(spec_.vocab[pick]);
    state.observe(pick);
  }
  return join(out, " ");
}

// --- benchmark construction --------------------------------------------------

namespace {

std::vector<std::string> make_vocab(std::size_t w) {
  const int width = static_cast<int>(std::to_string(w - 1).size());
  std::vector<std::string> vocab;
  vocab.reserve(w);
  for (std::size_t i = 0; i < w; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "w%0*zu", width, i);
    vocab.emplace_back(buf);
  }
  return vocab;
}

std::size_t draw_word(Rng& rng, const std::vector<double>& dist) {
  double u = rng.uniform01();
  for (std::size_t z = 0; z < dist.size(); ++z) {
    if (u < dist[z]) return z;
    u -= dist[z];
  }
  return dist.size() - 1;
}

std::string draw_document(Rng& rng, const LatentTopicModelSpec& spec, std::size_t topic, std::size_t len) {
  std::vector<std::string> words;
  words.reserve(len);
  for (std::size_t i = 0; i < len; ++i) words.push_back(spec.vocab[draw_word(rng, spec.topic_word_dists[topic])]);
  return join(words, " ");
}

void validate_config(const SyntheticBenchmarkConfig& c) {
  if (c.vocab_size < 10) throw Error(ErrorCode::kValidation, "synthetic benchmark needs W >= 10");
  if (c.doc_len < 4) throw Error(ErrorCode::kValidation, "synthetic benchmark needs doc_len >= 4");
  if (c.num_topics < 2) throw Error(ErrorCode::kValidation, "synthetic benchmark needs T >= 2");
  if (!(c.member_prior > 0.0 && c.member_prior < 1.0)) {
    throw Error(ErrorCode::kValidation, "member prior must be in (0, 1)");
  }
  if (!(c.topic_contrast >= 0.0)) throw Error(ErrorCode::kValidation, "topic contrast must be >= 0");
}

}  // namespace

LatentTopicModelSpec synthetic_model_spec(const SyntheticBenchmarkConfig& config, bool uniform_prior) {
  validate_config(config);
  const std::size_t w = config.vocab_size;
  LatentTopicModelSpec spec;
  spec.vocab = make_vocab(w);
  spec.num_topics = config.num_topics;
  spec.smoothing = config.smoothing;

  // Shared Exp(1) base weights, tilted per topic by exp(contrast * g), g ~ U[-1, 1].
  Rng rng(derive_seed(config.seed, "model"));
  std::vector<double> base(w);
  for (double& b : base) b = -std::log(rng.uniform_open_low());
  for (std::size_t t = 0; t < config.num_topics; ++t) {
    std::vector<double> d(w);
    double total = 0.0;
    for (std::size_t z = 0; z < w; ++z) {
      const double g = 2.0 * rng.uniform01() - 1.0;
      d[z] = base[z] * std::exp(config.topic_contrast * g) + 1e-12;
      total += d[z];
    }
    for (double& v : d) v /= total;
    spec.topic_word_dists.push_back(std::move(d));
  }

  spec.topic_prior.assign(config.num_topics, 0.0);
  if (uniform_prior) {
    std::fill(spec.topic_prior.begin(), spec.topic_prior.end(), 1.0 / static_cast<double>(config.num_topics));
  } else {
    spec.topic_prior[0] = config.member_prior;
    const double rest = (1.0 - config.member_prior) / static_cast<double>(config.num_topics - 1);
    for (std::size_t t = 1; t < config.num_topics; ++t) spec.topic_prior[t] = rest;
  }
  return spec;
}

namespace {

std::string synth_uri(const SyntheticBenchmarkConfig& c, bool uniform_prior) {
  const SyntheticBenchmarkConfig defaults;
  std::vector<std::string> query;
  if (c.vocab_size != defaults.vocab_size) query.push_back("vocab=" + std::to_string(c.vocab_size));
  if (c.num_topics != defaults.num_topics) query.push_back("topics=" + std::to_string(c.num_topics));
  if (c.topic_contrast != defaults.topic_contrast) query.push_back("contrast=" + format_number(c.topic_contrast));
  if (c.smoothing != defaults.smoothing) query.push_back("smoothing=" + format_number(c.smoothing));
  if (uniform_prior) {
    query.push_back("prior=uniform");
  } else if (c.member_prior != defaults.member_prior) {
    query.push_back("prior=" + format_number(c.member_prior));
  }
  std::string uri = "synth:" + std::to_string(c.seed);
  if (!query.empty()) uri += "?" + join(query, "&");
  return uri;
}

}  // namespace

SyntheticBenchmark synthetic_benchmark(const SyntheticBenchmarkConfig& config) {
  validate_config(config);
  SyntheticBenchmark bench;
  bench.provider_uri = synth_uri(config, false);
  bench.reference_uri = synth_uri(config, true);
  bench.provider = std::make_unique<SyntheticProvider>(synthetic_model_spec(config, false), bench.provider_uri);
  bench.reference_provider =
      std::make_unique<SyntheticProvider>(synthetic_model_spec(config, true), bench.reference_uri);

  const auto& spec = bench.provider->spec();
  bench.dataset.name = "synthetic-" + std::to_string(config.seed);
  bench.dataset.metadata["source"] = "synthetic";
  bench.dataset.metadata["provider"] = bench.provider_uri;
  bench.dataset.metadata["reference_provider"] = bench.reference_uri;

  Rng member_rng(derive_seed(config.seed, "docs/member"));
  Rng nonmember_rng(derive_seed(config.seed, "docs/nonmember"));
  const std::size_t n = std::max(config.n_member, config.n_nonmember);
  char id[32];
  // Interleave the classes so that file order carries no label signal.
  for (std::size_t i = 0; i < n; ++i) {
    if (i < config.n_member) {
      std::snprintf(id, sizeof id, "m%04zu", i);
      bench.dataset.samples.push_back({id, draw_document(member_rng, spec, 0, config.doc_len), Label::kMember});
    }
    if (i < config.n_nonmember) {
      std::snprintf(id, sizeof id, "n%04zu", i);
      bench.dataset.samples.push_back(
          {id, draw_document(nonmember_rng, spec, 1, config.doc_len), Label::kNonmember});
    }
  }
  return bench;
}

std::vector<std::string> synthetic_events(const SyntheticBenchmarkConfig& config, std::size_t count) {
  const auto spec = synthetic_model_spec(config, false);
  Rng rng(derive_seed(config.seed, "events"));
  std::vector<std::string> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(draw_document(rng, spec, 0, config.doc_len));
  return out;
}

std::string synthetic_lexicon_tsv(const LatentTopicModelSpec& spec) {
  std::string out;
  for (std::size_t i = 0; i + 1 < spec.vocab.size(); i += 2) {
    out += spec.vocab[i] + "\t" + spec.vocab[i + 1] + "\n";
    out += spec.vocab[i + 1] + "\t" + spec.vocab[i] + "\n";
  }
  return out;
}

SyntheticBenchmarkConfig parse_synth_uri(const std::string& uri, bool& uniform_prior) {
  if (uri.rfind("synth:", 0) != 0) throw Error(ErrorCode::kValidation, "not a synth: URI: " + uri);
  std::string rest = uri.substr(6);
  std::string query;
  if (auto q = rest.find('?'); q != std::string::npos) {
    query = rest.substr(q + 1);
    rest = rest.substr(0, q);
  }
  SyntheticBenchmarkConfig c;
  uniform_prior = false;
  try {
    std::size_t used = 0;
    c.seed = std::stoull(rest, &used);
    if (used != rest.size()) throw std::invalid_argument("seed");
    std::size_t pos = 0;
    while (pos < query.size()) {
      std::size_t amp = query.find('&', pos);
      if (amp == std::string::npos) amp = query.size();
      const std::string kv = query.substr(pos, amp - pos);
      pos = amp + 1;
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw std::invalid_argument(kv);
      const std::string key = kv.substr(0, eq);
      const std::string value = kv.substr(eq + 1);
      if (key == "vocab") {
        c.vocab_size = std::stoul(value);
      } else if (key == "topics") {
        c.num_topics = std::stoul(value);
      } else if (key == "contrast") {
        c.topic_contrast = std::stod(value);
      } else if (key == "smoothing") {
        c.smoothing = std::stod(value);
      } else if (key == "prior") {
        if (value == "uniform") {
          uniform_prior = true;
        } else {
          c.member_prior = std::stod(value);
        }
      } else {
        throw std::invalid_argument(key);
      }
    }
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::kValidation, "malformed synth URI: " + uri);
  }
  validate_config(c);
  return c;
}

}  // namespace mia
