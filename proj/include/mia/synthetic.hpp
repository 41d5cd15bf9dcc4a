#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "mia/core.hpp"
#include "mia/providers.hpp"

namespace mia {

struct LatentTopicModelSpec {
  std::vector<std::string> vocab;
  std::size_t num_topics = 2;
  std::vector<std::vector<double>> topic_word_dists;  // [topic][word]
  std::vector<double> topic_prior;
  double smoothing = 0.0;

  /// Throws kValidation unless every distribution sums to 1 within 1e-12 and
  /// all smoothed predictive entries are strictly positive.
  void validate() const;
};

/// Exchangeable topic mixture: the topic posterior is updated by every visible
/// word (context and preceding target words), and the next-word predictive is
/// the posterior-weighted mixture of topic-word distributions, smoothed by
/// (p + eps) / (1 + W * eps). Words are whitespace tokens; out-of-vocabulary
/// words map onto the vocabulary by a stable hash.
class SyntheticProvider final : public Provider {
 public:
  explicit SyntheticProvider(LatentTopicModelSpec spec, std::string uri = "synth:custom");

  ProviderCapabilities capabilities() const override { return {true, true, true}; }
  std::string uri() const override { return uri_; }
  TokenScores score(const ScoreRequest& request) const override;
  std::string generate(const GenerationRequest& request) const override;

  const LatentTopicModelSpec& spec() const { return spec_; }
  std::size_t word_index(std::string_view word) const;

  /// Smoothed next-word distribution after observing `history` word indices.
  std::vector<double> predictive(const std::vector<std::size_t>& history) const;

 private:
  class State;

  LatentTopicModelSpec spec_;
  std::string uri_;
  std::vector<std::vector<double>> log_theta_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct SyntheticBenchmarkConfig {
  std::uint64_t seed = 1;
  std::size_t vocab_size = 200;
  std::size_t num_topics = 2;
  std::size_t n_member = 300;
  std::size_t n_nonmember = 300;
  std::size_t doc_len = 32;
  double member_prior = 0.8;
  // Strength of the topic-specific tilt on the shared word distribution.
  double topic_contrast = 0.5;
  double smoothing = 0.0;
};

/// Model spec derived from (seed, vocab size, topics, contrast) with the target
/// prior skewed toward topic 0; `member_prior` is topic 0's prior mass.
LatentTopicModelSpec synthetic_model_spec(const SyntheticBenchmarkConfig& config, bool uniform_prior);

struct SyntheticBenchmark {
  Dataset dataset;
  std::unique_ptr<SyntheticProvider> provider;            // skewed prior
  std::unique_ptr<SyntheticProvider> reference_provider;  // uniform prior
  std::string provider_uri;
  std::string reference_uri;
};

/// Members are documents drawn from topic 0, non-members from topic 1.
SyntheticBenchmark synthetic_benchmark(const SyntheticBenchmarkConfig& config);

/// Extra topic-0 documents, disjoint from the benchmark draws, for the
/// member-approximation pipeline.
std::vector<std::string> synthetic_events(const SyntheticBenchmarkConfig& config, std::size_t count);

/// Lexicon TSV pairing vocabulary words 2i <-> 2i+1.
std::string synthetic_lexicon_tsv(const LatentTopicModelSpec& spec);

/// Parses the query part of a `synth:` URI into a config and the prior flag.
SyntheticBenchmarkConfig parse_synth_uri(const std::string& uri, bool& uniform_prior);

}  // namespace mia
