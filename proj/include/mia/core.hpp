#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mia {

enum class Label { kMember, kNonmember, kUnknown };

std::string_view to_string(Label label);

struct Sample {
  std::string id;
  std::string text;
  Label label = Label::kUnknown;
};

struct Dataset {
  std::string name;
  std::vector<Sample> samples;
  std::map<std::string, std::string> metadata;

  std::size_t count(Label label) const;
  const Sample* find(std::string_view id) const;
};

/// Ordered member / non-member shot texts used to build conditioning prefixes.
struct PrefixPool {
  std::vector<std::string> member_shots;
  std::vector<std::string> nonmember_shots;
  std::string separator = "\n";
  // Ids of the dataset samples the shots came from (empty for external shots).
  std::vector<std::string> member_ids;
  std::vector<std::string> nonmember_ids;
};

enum class PrefixKind { kMember, kNonmember };

/// Per-token log-probabilities of one text, optionally conditioned on a context.
struct TokenScores {
  std::vector<std::string> tokens;
  std::vector<double> logprobs;
  std::vector<std::pair<std::size_t, std::size_t>> char_offsets;
  std::optional<std::vector<double>> dist_mean;
  std::optional<std::vector<double>> dist_std;
  std::string context_id;
  bool stats_approximate = false;
  // FNV-1a of the scored text; 0 when unknown.
  std::uint64_t text_hash = 0;

  std::size_t size() const { return logprobs.size(); }
  bool has_distribution_stats() const { return dist_mean.has_value() && dist_std.has_value(); }

  /// Throws kValidation when a structural invariant is broken.
  void validate() const;
};

enum class Method { kLoss, kRef, kZlib, kNeighbor, kMinK, kMinKPP, kReCall, kConReCall };

std::string_view to_string(Method method);
Method parse_method(std::string_view name);
std::vector<Method> all_methods();

/// One method's membership score for one sample; higher means more likely member.
struct MethodScore {
  std::string sample_id;
  Method method = Method::kLoss;
  std::map<std::string, double> params;
  double value = 0.0;
  std::vector<std::string> warnings;
};

// --- text helpers -----------------------------------------------------------

bool is_valid_utf8(std::string_view text);

struct WordSpan {
  std::size_t start;
  std::size_t end;
};

/// Whitespace-delimited words as byte spans into `text`.
std::vector<WordSpan> word_spans(std::string_view text);
std::vector<std::string> split_words(std::string_view text);
std::string join(const std::vector<std::string>& parts, std::string_view separator);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_number(double v);

// --- dataset ingestion ------------------------------------------------------

Dataset load_dataset(const std::filesystem::path& path);
Dataset parse_dataset_jsonl(std::string_view content, std::string name);
void write_dataset(const Dataset& dataset, const std::filesystem::path& path);
std::string dataset_to_jsonl(const Dataset& dataset);

// --- prefixes ---------------------------------------------------------------

std::string build_prefix(const PrefixPool& pool, PrefixKind kind, std::size_t n_shots);

struct PoolSplit {
  PrefixPool pool;
  Dataset eval;
};

/// Seeded draw of prefix shots from each label class; the drawn samples are
/// removed from the returned evaluation dataset.
PoolSplit split_prefix_pool(const Dataset& dataset, std::size_t n_member, std::size_t n_nonmember,
                            std::uint64_t seed);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace mia
