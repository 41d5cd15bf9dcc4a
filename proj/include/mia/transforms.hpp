#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mia/core.hpp"

namespace mia {

/// Word -> synonyms. Lookups are ASCII case-folded unless `case_sensitive`.
struct SynonymLexicon {
  std::map<std::string, std::vector<std::string>> entries;
  bool case_sensitive = false;

  /// Throws kValidation for empty synonym lists or a synonym equal to its headword.
  void validate() const;
  const std::vector<std::string>* lookup(std::string_view word) const;
};

/// `word<TAB>syn1,syn2,...` per line.
SynonymLexicon parse_lexicon_tsv(std::string_view content, bool case_sensitive = false);
SynonymLexicon load_lexicon(const std::filesystem::path& path, bool case_sensitive = false);

struct TransformResult {
  std::string text;
  std::size_t requested = 0;
  std::size_t applied = 0;
};

/// round half away from zero of rate * n.
std::size_t rounded_count(double rate, std::size_t n);

/// Removes round(rate * n) words (capped at n - 1), chosen uniformly without
/// replacement; survivors are re-joined with single spaces.
TransformResult random_deletion(std::string_view text, double rate, std::uint64_t seed);

/// Replaces up to round(rate * n) lexicon-covered words with a uniformly chosen
/// synonym, keeping a leading capital. `applied < requested` records a shortfall.
TransformResult synonym_substitution(std::string_view text, double rate, const SynonymLexicon& lexicon,
                                     std::uint64_t seed);

/// id -> paraphrased text from JSONL `{"id", "text"}` lines.
std::map<std::string, std::string> load_paraphrase_pairs(const std::filesystem::path& path);
std::map<std::string, std::string> parse_paraphrase_pairs(std::string_view content);

/// Replaces the text of every sample named in `pairs`; ids and labels are kept.
/// Throws kUnknownSampleId when a pair names an id absent from `base`.
Dataset apply_paraphrases(const Dataset& base, const std::map<std::string, std::string>& pairs);

struct TransformSpec {
  enum class Op { kNone, kDeletion, kSynonym, kParaphrase } op = Op::kNone;
  double rate = 0.0;
  std::uint64_t seed = 0;
  std::filesystem::path lexicon_path;
  std::filesystem::path paraphrase_path;
};

std::string_view to_string(TransformSpec::Op op);
TransformSpec::Op parse_transform_op(std::string_view name);

struct TransformReportEntry {
  std::string sample_id;
  std::string op;
  double rate;
  std::uint64_t seed;
  std::size_t requested;
  std::size_t applied;
};

/// Applies `spec` to every sample. Per-sample seeds derive from (seed, sample id),
/// so results do not depend on sample order.
Dataset transform_dataset(const Dataset& dataset, const TransformSpec& spec, std::vector<TransformReportEntry>* report);

std::string transform_report_jsonl(const std::vector<TransformReportEntry>& report);

}  // namespace mia
