#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mia/core.hpp"
#include "mia/metrics.hpp"
#include "mia/providers.hpp"
#include "mia/transforms.hpp"

namespace mia {

std::vector<double> default_gamma_grid();  // 0.1, 0.2, ..., 1.0
std::vector<double> default_k_grid();      // 10, 20, ..., 100

struct RunConfig {
  std::filesystem::path dataset_path;
  std::string provider_uri;
  std::optional<std::string> ref_provider_uri;
  std::vector<Method> methods;
  std::size_t shots = 7;
  // Pool sizes drawn from the dataset; default to `shots` per class, or 0 for a
  // class whose shots come from a file.
  std::optional<std::size_t> member_pool_size;
  std::optional<std::size_t> nonmember_pool_size;
  std::vector<double> gamma_grid = default_gamma_grid();
  std::vector<double> k_grid = default_k_grid();
  std::vector<double> fpr_levels{0.05};
  std::uint64_t seed = 0;
  std::size_t n_neighbors = 5;
  double neighbor_rate = 0.1;
  std::filesystem::path lexicon_path;
  // JSONL {"text"} lines used as shots instead of drawing them from the dataset.
  std::filesystem::path member_shots_path;
  std::filesystem::path nonmember_shots_path;
  std::optional<TransformSpec> transform;
  std::string separator = "\n";
  std::filesystem::path out_dir;
  bool use_cache = true;

  std::size_t member_pool() const;
  std::size_t nonmember_pool() const;
  bool wants(Method m) const;

  /// Checks everything that can be checked without touching data or providers.
  void validate() const;

  /// Stable JSON rendering; its FNV-1a hash identifies the run.
  std::string to_json() const;
  std::string hash() const;
};

struct EvalContext {
  const Provider* provider = nullptr;
  const Provider* reference = nullptr;
  const SynonymLexicon* lexicon = nullptr;
  // Replace the dataset-drawn shots when non-empty.
  std::vector<std::string> external_member_shots;
  std::vector<std::string> external_nonmember_shots;
};

struct PreparedRun {
  PrefixPool pool;
  Dataset eval;
  std::vector<TransformReportEntry> transform_report;
};

/// Seeded pool split, external member shots, then the optional transform on the
/// evaluation texts only (prefix shots stay unperturbed).
PreparedRun prepare_run(const RunConfig& config, const Dataset& dataset, const EvalContext& ctx);

/// Provider outputs for every evaluation sample. The unconditioned scores are
/// shared by every method so overlapping formulas see identical numbers.
struct LLTable {
  std::vector<TokenScores> uncond;
  std::vector<TokenScores> reference;
  std::vector<std::vector<TokenScores>> neighbors;
  std::vector<TokenScores> cond_nonmember;
  std::vector<TokenScores> cond_member;
  std::size_t shots = 0;
  std::map<std::string, std::string> skipped;  // method -> reason
};

/// Unconditioned, reference and neighbor scores.
LLTable compute_base_lls(const RunConfig& config, const PreparedRun& run, const EvalContext& ctx);

/// Fills the prefix-conditioned scores for `shots` shots per kind.
void compute_conditional_lls(const RunConfig& config, const PreparedRun& run, const EvalContext& ctx,
                             std::size_t shots, LLTable& table);

struct GridPoint {
  double value;
  double auc;
  std::map<double, double> tpr_at_fpr;
};

struct MethodResult {
  Method method;
  std::string param_name;  // "k", "gamma" or empty
  std::vector<GridPoint> grid;
  EvalReport report;  // at the best grid value
  std::vector<std::string> warnings;
};

struct ParamPin {
  std::string name;
  double value;
};

/// Scores and evaluates every requested, non-skipped method. Grids are searched
/// for the best AUC (ties go to the smaller value) unless `pin` fixes the value.
std::vector<MethodResult> score_methods(const RunConfig& config, const PreparedRun& run, const LLTable& table,
                                        const std::optional<ParamPin>& pin = std::nullopt);

struct EvalOutcome {
  PrefixPool pool;
  Dataset eval;
  std::vector<MethodResult> results;
  std::map<std::string, std::string> skipped;
  std::vector<TransformReportEntry> transform_report;
  bool isolation_ok = true;

  const MethodResult* find(Method m) const;
};

/// Scores every sample (labels may be unknown) at the first value of each grid.
std::vector<MethodScore> score_dataset(const RunConfig& config, const Dataset& dataset, const EvalContext& ctx);

/// In-memory evaluation: no files are read or written.
EvalOutcome evaluate_methods(const RunConfig& config, const Dataset& dataset, const EvalContext& ctx);

/// True when no prefix-shot sample id appears among the scored samples.
bool check_isolation(const PrefixPool& pool, const std::vector<MethodResult>& results);

std::string scores_jsonl(const EvalOutcome& outcome);
std::string report_json(const RunConfig& config, const EvalOutcome& outcome);

/// `sample_id,label,method,normalized_score` with per-method min-max scaling.
std::string distributions_csv(const EvalOutcome& outcome);

/// File-level run: validates, builds providers (cached under out_dir/cache),
/// writes config.json, scores.jsonl and report.json. On a transport failure the
/// cache keeps every completed call and checkpoint.json records the error.
EvalOutcome run_eval(const RunConfig& config);

enum class SweepParam { kGamma, kK, kShots };

std::string_view to_string(SweepParam p);
SweepParam parse_sweep_param(std::string_view name);

struct SweepResult {
  SweepParam param;
  std::vector<double> values;
  std::vector<std::vector<MethodResult>> per_value;

  /// Columns param_value,method,auc,tpr_at_5fpr.
  std::string grid_csv() const;
  std::string report_json() const;
};

/// Gamma sweeps always include 0. Shot sweeps draw the pool once at the largest
/// shot count and use its first n shots per value, so the evaluation set is the
/// same for every value.
SweepResult sweep(const RunConfig& config, const Dataset& dataset, const EvalContext& ctx, SweepParam param,
                  std::vector<double> values);

SweepResult run_sweep(const RunConfig& config, SweepParam param, std::vector<double> values);

struct ApproxConfig {
  std::vector<double> cut_fractions{0.5};  // one per event, or a single shared value
  std::size_t target_len_tokens = 32;
  DecodeStrategy strategy = DecodeStrategy::kSample;
  std::uint64_t seed = 0;
};

/// Truncates each event at round(cut * words) words (clamped so that at least
/// one word is kept and, for multi-word events, at least one is dropped), then
/// appends the provider's completion of up to `target_len_tokens` tokens.
std::vector<std::string> approximate_members(const std::vector<std::string>& events, const ApproxConfig& config,
                                             const Provider& provider);

/// JSONL `{"text": ...}` lines.
std::vector<std::string> load_texts_jsonl(const std::filesystem::path& path);
std::string texts_to_jsonl(const std::vector<std::string>& texts);

/// Builds the reference provider and lexicon a config needs; the synthetic
/// backend supplies its own lexicon when none is given.
struct RunResources {
  std::unique_ptr<Provider> provider;
  std::unique_ptr<Provider> reference;
  std::unique_ptr<Provider> cached_provider;
  std::unique_ptr<Provider> cached_reference;
  std::optional<SynonymLexicon> lexicon;
  std::vector<std::string> member_shots;
  std::vector<std::string> nonmember_shots;
  EvalContext context() const;
};

/// Opens providers and loads the shot files named in `config`.
RunResources open_resources(const RunConfig& config);

}  // namespace mia
