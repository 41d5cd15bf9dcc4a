#include "mia/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "mia/cache.hpp"
#include "mia/error.hpp"
#include "mia/parallel.hpp"
#include "mia/rng.hpp"
#include "mia/scoring.hpp"
#include "mia/shift.hpp"
#include "mia/synthetic.hpp"

namespace mia {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::vector<double> step_grid(double step, int count) {
  std::vector<double> out;
  // Multiply rather than accumulate so 0.3 is 3 * 0.1 rounded once.
  for (int i = 1; i <= count; ++i) out.push_back(std::round(step * i * 1e9) / 1e9);
  return out;
}

std::string fmt(double v) { return format_number(v); }

ordered_json params_json(const std::map<std::string, double>& params) {
  ordered_json out = ordered_json::object();
  for (const auto& [k, v] : params) out[k] = v;
  return out;
}

ordered_json tpr_json(const std::map<double, double>& tpr) {
  ordered_json out = ordered_json::object();
  for (const auto& [level, v] : tpr) out[fpr_key(level)] = v;
  return out;
}

std::vector<Label> labels_of(const Dataset& d) {
  std::vector<Label> out;
  out.reserve(d.samples.size());
  for (const auto& s : d.samples) out.push_back(s.label);
  return out;
}

// Runs `fn(i)` for every sample under the provider's concurrency limit.
template <typename Fn>
void for_samples(const Provider& provider, std::size_t n, Fn&& fn) {
  parallel_for(n, provider.max_concurrency(), std::forward<Fn>(fn));
}

std::vector<TokenScores> score_all(const Provider& provider, const Dataset& eval,
                                   const std::optional<std::string>& context, bool stats) {
  std::vector<TokenScores> out(eval.samples.size());
  for_samples(provider, out.size(), [&](std::size_t i) {
    ScoreRequest req;
    req.sample_id = eval.samples[i].id;
    req.text = eval.samples[i].text;
    req.context = context;
    req.need_distribution_stats = stats;
    out[i] = provider.score(req);
  });
  return out;
}

}  // namespace

std::vector<double> default_gamma_grid() { return step_grid(0.1, 10); }
std::vector<double> default_k_grid() { return step_grid(10.0, 10); }

std::size_t RunConfig::member_pool() const {
  if (member_pool_size) return *member_pool_size;
  return member_shots_path.empty() ? shots : 0;
}

std::size_t RunConfig::nonmember_pool() const {
  if (nonmember_pool_size) return *nonmember_pool_size;
  return nonmember_shots_path.empty() ? shots : 0;
}

bool RunConfig::wants(Method m) const { return std::find(methods.begin(), methods.end(), m) != methods.end(); }

void RunConfig::validate() const {
  if (methods.empty()) throw Error(ErrorCode::kValidation, "no methods requested");
  std::set<Method> seen;
  for (Method m : methods) {
    if (!seen.insert(m).second) throw Error(ErrorCode::kValidation, "method listed twice: " + std::string(to_string(m)));
  }
  if (provider_uri.empty()) throw Error(ErrorCode::kValidation, "missing --provider");
  if (wants(Method::kRef) && (!ref_provider_uri || ref_provider_uri->empty())) {
    throw Error(ErrorCode::kValidation, "method ref requires --ref-provider");
  }
  const bool prefixed = wants(Method::kReCall) || wants(Method::kConReCall);
  if (prefixed && shots == 0) throw Error(ErrorCode::kValidation, "recall/conrecall require --shots >= 1");
  if (prefixed && nonmember_shots_path.empty() && nonmember_pool() < shots) {
    throw Error(ErrorCode::kInsufficientShots,
                "have " + std::to_string(nonmember_pool()) + " non-member shots, want " + std::to_string(shots));
  }
  if (wants(Method::kConReCall)) {
    if (member_shots_path.empty() && member_pool() == 0) {
      throw Error(ErrorCode::kMissingMemberShots, "conrecall needs member shots but the member pool is empty");
    }
    if (member_shots_path.empty() && member_pool() < shots) {
      throw Error(ErrorCode::kInsufficientShots,
                  "have " + std::to_string(member_pool()) + " member shots, want " + std::to_string(shots));
    }
  }
  for (double g : gamma_grid) {
    if (!(g >= 0.0) || !std::isfinite(g)) throw Error(ErrorCode::kValidation, "gamma must be >= 0");
  }
  for (double k : k_grid) {
    if (!(k > 0.0 && k <= 100.0)) throw Error(ErrorCode::kValidation, "k must be in (0, 100]");
  }
  if (wants(Method::kConReCall) && gamma_grid.empty()) throw Error(ErrorCode::kValidation, "empty gamma grid");
  if ((wants(Method::kMinK) || wants(Method::kMinKPP)) && k_grid.empty()) {
    throw Error(ErrorCode::kValidation, "empty k grid");
  }
  if (fpr_levels.empty()) throw Error(ErrorCode::kValidation, "no FPR levels");
  for (double f : fpr_levels) {
    if (!(f > 0.0 && f < 1.0)) throw Error(ErrorCode::kValidation, "FPR levels must be in (0, 1)");
  }
  if (wants(Method::kNeighbor)) {
    if (n_neighbors < 1) throw Error(ErrorCode::kValidation, "n_neighbors must be >= 1");
    if (!(neighbor_rate > 0.0 && neighbor_rate < 1.0)) throw Error(ErrorCode::kValidation, "neighbor rate in (0, 1)");
    if (lexicon_path.empty() && provider_uri.rfind("synth:", 0) != 0) {
      throw Error(ErrorCode::kValidation, "method neighbor requires --lexicon");
    }
  }
  if (transform && transform->op != TransformSpec::Op::kNone) {
    const auto op = transform->op;
    if (op != TransformSpec::Op::kParaphrase && !(transform->rate > 0.0 && transform->rate < 1.0)) {
      throw Error(ErrorCode::kValidation, "transform rate must be in (0, 1)");
    }
    if (op == TransformSpec::Op::kSynonym && transform->lexicon_path.empty()) {
      throw Error(ErrorCode::kValidation, "synonym transform requires --lexicon");
    }
    if (op == TransformSpec::Op::kParaphrase && transform->paraphrase_path.empty()) {
      throw Error(ErrorCode::kValidation, "paraphrase transform requires --paraphrases");
    }
  }
}

std::string RunConfig::to_json() const {
  ordered_json j;
  j["dataset"] = dataset_path.generic_string();
  j["provider"] = provider_uri;
  j["ref_provider"] = ref_provider_uri ? json(*ref_provider_uri) : json(nullptr);
  std::vector<std::string> names;
  for (Method m : methods) names.emplace_back(to_string(m));
  j["methods"] = names;
  j["shots"] = shots;
  j["member_pool"] = member_pool();
  j["nonmember_pool"] = nonmember_pool();
  j["gamma_grid"] = gamma_grid;
  j["k_grid"] = k_grid;
  j["fpr_levels"] = fpr_levels;
  j["seed"] = seed;
  j["n_neighbors"] = n_neighbors;
  j["neighbor_rate"] = neighbor_rate;
  j["lexicon"] = lexicon_path.generic_string();
  j["member_shots"] = member_shots_path.generic_string();
  j["nonmember_shots"] = nonmember_shots_path.generic_string();
  if (transform && transform->op != TransformSpec::Op::kNone) {
    j["transform"] = {{"op", std::string(mia::to_string(transform->op))},
                      {"rate", transform->rate},
                      {"seed", transform->seed},
                      {"lexicon", transform->lexicon_path.generic_string()},
                      {"paraphrases", transform->paraphrase_path.generic_string()}};
  } else {
    j["transform"] = nullptr;
  }
  j["separator"] = separator;
  j["cache"] = use_cache;
  return j.dump(2) + "\n";
}

std::string RunConfig::hash() const {
  // Output location does not change results, so it is left out of to_json().
  return hex64(fnv1a64(to_json()));
}

PreparedRun prepare_run(const RunConfig& config, const Dataset& dataset, const EvalContext& ctx) {
  PreparedRun run;
  const bool ext_m = !ctx.external_member_shots.empty();
  const bool ext_nm = !ctx.external_nonmember_shots.empty();
  const std::size_t n_member = config.member_pool_size.value_or(ext_m ? 0 : config.shots);
  const std::size_t n_nonmember = config.nonmember_pool_size.value_or(ext_nm ? 0 : config.shots);
  auto split = split_prefix_pool(dataset, n_member, n_nonmember, config.seed);
  run.pool = std::move(split.pool);
  run.pool.separator = config.separator;
  run.eval = std::move(split.eval);
  if (ext_m) {
    run.pool.member_shots = ctx.external_member_shots;
    run.pool.member_ids.clear();
  }
  if (ext_nm) {
    run.pool.nonmember_shots = ctx.external_nonmember_shots;
    run.pool.nonmember_ids.clear();
  }
  if (config.wants(Method::kConReCall) && run.pool.member_shots.empty()) {
    throw Error(ErrorCode::kMissingMemberShots, "conrecall needs member shots but the member pool is empty");
  }
  if (run.eval.samples.empty()) throw Error(ErrorCode::kInsufficientSamples, "no samples left to score");
  if (config.transform && config.transform->op != TransformSpec::Op::kNone) {
    run.eval = transform_dataset(run.eval, *config.transform, &run.transform_report);
  }
  return run;
}

namespace {

void require_both_labels(const Dataset& eval) {
  if (eval.count(Label::kMember) == 0 || eval.count(Label::kNonmember) == 0) {
    throw Error(ErrorCode::kInsufficientSamples, "evaluation set needs at least one member and one non-member");
  }
}

}  // namespace

LLTable compute_base_lls(const RunConfig& config, const PreparedRun& run, const EvalContext& ctx) {
  if (!ctx.provider) throw Error(ErrorCode::kValidation, "no provider");
  const Provider& provider = *ctx.provider;
  LLTable table;

  bool stats = config.wants(Method::kMinKPP);
  if (stats && !provider.capabilities().distribution_stats) {
    table.skipped["minkpp"] = "provider lacks distribution_stats";
    stats = false;
  }
  try {
    table.uncond = score_all(provider, run.eval, std::nullopt, stats);
  } catch (const Error& e) {
    if (!stats || e.code() != ErrorCode::kCapability) throw;
    table.skipped["minkpp"] = e.what();
    table.uncond = score_all(provider, run.eval, std::nullopt, false);
  }

  if (config.wants(Method::kRef)) {
    if (!ctx.reference) throw Error(ErrorCode::kValidation, "method ref requires a reference provider");
    try {
      table.reference = score_all(*ctx.reference, run.eval, std::nullopt, false);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kCapability) throw;
      table.skipped["ref"] = e.what();
    }
  }

  if (config.wants(Method::kNeighbor)) {
    if (!ctx.lexicon) throw Error(ErrorCode::kValidation, "method neighbor requires a lexicon");
    const std::size_t n = run.eval.samples.size();
    const std::size_t nn = config.n_neighbors;
    table.neighbors.assign(n, std::vector<TokenScores>(nn));
    try {
      for_samples(provider, n * nn, [&](std::size_t flat) {
        const std::size_t i = flat / nn;
        const std::size_t j = flat % nn;
        const Sample& s = run.eval.samples[i];
        const std::string tag = s.id + "#nb" + std::to_string(j);
        ScoreRequest req;
        req.sample_id = tag;
        req.text = synonym_substitution(s.text, config.neighbor_rate, *ctx.lexicon,
                                        derive_seed(config.seed, "neighbor/" + tag))
                       .text;
        table.neighbors[i][j] = provider.score(req);
      });
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kCapability) throw;
      table.neighbors.clear();
      table.skipped["neighbor"] = e.what();
    }
  }
  return table;
}

void compute_conditional_lls(const RunConfig& config, const PreparedRun& run, const EvalContext& ctx,
                             std::size_t shots, LLTable& table) {
  table.shots = shots;
  table.cond_nonmember.clear();
  table.cond_member.clear();
  const bool recall = config.wants(Method::kReCall);
  const bool conrecall = config.wants(Method::kConReCall);
  if (!recall && !conrecall) return;
  const Provider& provider = *ctx.provider;
  try {
    table.cond_nonmember =
        score_all(provider, run.eval, build_prefix(run.pool, PrefixKind::kNonmember, shots), false);
    if (conrecall) {
      table.cond_member = score_all(provider, run.eval, build_prefix(run.pool, PrefixKind::kMember, shots), false);
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kCapability) throw;
    table.cond_nonmember.clear();
    table.cond_member.clear();
    if (recall) table.skipped["recall"] = e.what();
    if (conrecall) table.skipped["conrecall"] = e.what();
  }
}

namespace {

MethodScore score_sample(Method method, const RunConfig& config, const PreparedRun& run, const LLTable& table,
                         std::size_t i, double p) {
  const TokenScores& u = table.uncond[i];
  switch (method) {
    case Method::kLoss: return loss_score(u);
    case Method::kRef: return ref_score(u, table.reference[i]);
    case Method::kZlib: return zlib_score(u, run.eval.samples[i].text);
    case Method::kNeighbor: {
      MethodScore s = neighbor_score(u, table.neighbors[i]);
      s.params["rate"] = config.neighbor_rate;
      return s;
    }
    case Method::kMinK: return mink_score(u, p);
    case Method::kMinKPP: return minkpp_score(u, p);
    case Method::kReCall: {
      MethodScore s = recall_score(table.cond_nonmember[i], u);
      s.params["shots"] = static_cast<double>(table.shots);
      return s;
    }
    case Method::kConReCall: {
      MethodScore s = conrecall_score(table.cond_nonmember[i], table.cond_member[i], u, p);
      s.params["shots"] = static_cast<double>(table.shots);
      return s;
    }
  }
  throw Error(ErrorCode::kValidation, "unknown method");
}

std::vector<double> grid_for(const RunConfig& config, Method method, std::string& param_name) {
  if (method == Method::kMinK || method == Method::kMinKPP) {
    param_name = "k";
    return config.k_grid;
  }
  if (method == Method::kConReCall) {
    param_name = "gamma";
    return config.gamma_grid;
  }
  param_name.clear();
  return {0.0};
}

}  // namespace

std::vector<MethodResult> score_methods(const RunConfig& config, const PreparedRun& run, const LLTable& table,
                                        const std::optional<ParamPin>& pin) {
  const auto labels = labels_of(run.eval);
  const std::size_t n = run.eval.samples.size();
  std::vector<MethodResult> results;

  for (Method method : config.methods) {
    const std::string name(to_string(method));
    if (table.skipped.count(name)) continue;

    std::string param_name;
    std::vector<double> grid = grid_for(config, method, param_name);
    if (pin && pin->name == param_name) grid = {pin->value};
    std::sort(grid.begin(), grid.end());

    auto score_one = [&](std::size_t i, double p) { return score_sample(method, config, run, table, i, p); };

    MethodResult result;
    result.method = method;
    result.param_name = param_name;
    std::set<std::string> warnings;
    bool have_best = false;
    for (double p : grid) {
      std::vector<MethodScore> scores(n);
      for (std::size_t i = 0; i < n; ++i) {
        scores[i] = score_one(i, p);
        scores[i].sample_id = run.eval.samples[i].id;
        warnings.insert(scores[i].warnings.begin(), scores[i].warnings.end());
      }
      std::map<std::string, double> params = scores.empty() ? std::map<std::string, double>{} : scores.front().params;
      EvalReport report = evaluate(name, params, std::move(scores), labels, config.fpr_levels);
      result.grid.push_back({p, report.auc, report.tpr_at_fpr});
      // Strict improvement only, so ties keep the smaller parameter value.
      if (!have_best || report.auc > result.report.auc) {
        result.report = std::move(report);
        have_best = true;
      }
    }
    if (param_name.empty()) result.grid.clear();
    result.warnings.assign(warnings.begin(), warnings.end());
    results.push_back(std::move(result));
  }
  return results;
}

const MethodResult* EvalOutcome::find(Method m) const {
  for (const auto& r : results) {
    if (r.method == m) return &r;
  }
  return nullptr;
}

bool check_isolation(const PrefixPool& pool, const std::vector<MethodResult>& results) {
  std::set<std::string> shot_ids(pool.member_ids.begin(), pool.member_ids.end());
  shot_ids.insert(pool.nonmember_ids.begin(), pool.nonmember_ids.end());
  for (const auto& r : results) {
    for (const auto& s : r.report.score_records) {
      if (shot_ids.count(s.sample_id)) return false;
    }
  }
  return true;
}

std::vector<MethodScore> score_dataset(const RunConfig& config, const Dataset& dataset, const EvalContext& ctx) {
  config.validate();
  PreparedRun run = prepare_run(config, dataset, ctx);
  LLTable table = compute_base_lls(config, run, ctx);
  compute_conditional_lls(config, run, ctx, config.shots, table);
  std::vector<MethodScore> out;
  for (Method method : config.methods) {
    if (table.skipped.count(std::string(to_string(method)))) continue;
    std::string param_name;
    const double p = grid_for(config, method, param_name).front();
    for (std::size_t i = 0; i < run.eval.samples.size(); ++i) {
      MethodScore s = score_sample(method, config, run, table, i, p);
      s.sample_id = run.eval.samples[i].id;
      out.push_back(std::move(s));
    }
  }
  return out;
}

EvalOutcome evaluate_methods(const RunConfig& config, const Dataset& dataset, const EvalContext& ctx) {
  config.validate();
  PreparedRun run = prepare_run(config, dataset, ctx);
  require_both_labels(run.eval);
  LLTable table = compute_base_lls(config, run, ctx);
  compute_conditional_lls(config, run, ctx, config.shots, table);
  EvalOutcome out;
  out.results = score_methods(config, run, table);
  out.skipped = table.skipped;
  out.isolation_ok = check_isolation(run.pool, out.results);
  if (!out.isolation_ok) throw Error(ErrorCode::kValidation, "prefix shot found among scored samples");
  out.pool = std::move(run.pool);
  out.eval = std::move(run.eval);
  out.transform_report = std::move(run.transform_report);
  return out;
}

std::string scores_jsonl(const EvalOutcome& outcome) {
  std::string out;
  for (const auto& r : outcome.results) {
    for (const auto& s : r.report.score_records) {
      ordered_json j;
      j["sample_id"] = s.sample_id;
      j["method"] = std::string(to_string(s.method));
      j["params"] = params_json(s.params);
      j["value"] = s.value;
      out += j.dump();
      out += '\n';
    }
  }
  return out;
}

std::string report_json(const RunConfig& config, const EvalOutcome& outcome) {
  ordered_json j;
  j["config_hash"] = config.hash();
  j["n_eval"] = outcome.eval.samples.size();
  j["pool"] = {{"member_shots", outcome.pool.member_shots.size()},
               {"nonmember_shots", outcome.pool.nonmember_shots.size()},
               {"member_ids", outcome.pool.member_ids},
               {"nonmember_ids", outcome.pool.nonmember_ids}};
  j["isolation_check"] = outcome.isolation_ok ? "pass" : "fail";
  ordered_json methods = ordered_json::array();
  for (const auto& r : outcome.results) {
    ordered_json m;
    m["method"] = r.report.method;
    m["params"] = params_json(r.report.params);
    m["auc"] = r.report.auc;
    m["tpr_at_fpr"] = tpr_json(r.report.tpr_at_fpr);
    m["n_members"] = r.report.n_members;
    m["n_nonmembers"] = r.report.n_nonmembers;
    if (!r.param_name.empty()) {
      ordered_json grid = ordered_json::array();
      for (const auto& g : r.grid) {
        grid.push_back({{r.param_name, g.value}, {"auc", g.auc}, {"tpr_at_fpr", tpr_json(g.tpr_at_fpr)}});
      }
      m["grid"] = grid;
    }
    if (r.method == Method::kNeighbor) {
      m["note"] = "neighbors are seeded synonym substitutions, not masked-LM rewrites";
    }
    if (!r.warnings.empty()) m["warnings"] = r.warnings;
    methods.push_back(m);
  }
  j["methods"] = methods;
  ordered_json skipped = ordered_json::object();
  for (const auto& [k, v] : outcome.skipped) skipped[k] = v;
  j["skipped"] = skipped;
  if (!outcome.transform_report.empty()) {
    std::size_t requested = 0, applied = 0;
    for (const auto& e : outcome.transform_report) {
      requested += e.requested;
      applied += e.applied;
    }
    j["transform"] = {{"op", outcome.transform_report.front().op},
                      {"requested", requested},
                      {"applied", applied},
                      {"shortfall", requested - applied}};
  }
  return j.dump(2) + "\n";
}

std::string distributions_csv(const EvalOutcome& outcome) {
  std::string out = "sample_id,label,method,normalized_score\n";
  for (const auto& r : outcome.results) {
    std::vector<double> values;
    for (const auto& s : r.report.score_records) values.push_back(s.value);
    if (values.empty()) continue;
    const auto norm = min_max_normalize(values);
    for (std::size_t i = 0; i < norm.size(); ++i) {
      const auto& s = r.report.score_records[i];
      const Sample* sample = outcome.eval.find(s.sample_id);
      out += s.sample_id + "," + std::string(to_string(sample ? sample->label : Label::kUnknown)) + "," +
             r.report.method + "," + fmt(norm[i]) + "\n";
    }
  }
  return out;
}

EvalContext RunResources::context() const {
  EvalContext ctx;
  ctx.provider = cached_provider ? cached_provider.get() : provider.get();
  ctx.reference = cached_reference ? cached_reference.get() : reference.get();
  ctx.lexicon = lexicon ? &*lexicon : nullptr;
  ctx.external_member_shots = member_shots;
  ctx.external_nonmember_shots = nonmember_shots;
  return ctx;
}

RunResources open_resources(const RunConfig& config) {
  RunResources res;
  res.provider = make_provider(config.provider_uri);
  res.provider->separator = config.separator;
  if (config.wants(Method::kRef)) {
    res.reference = make_provider(*config.ref_provider_uri);
    res.reference->separator = config.separator;
  }
  if (config.use_cache && !config.out_dir.empty()) {
    const auto dir = config.out_dir / "cache";
    res.cached_provider = std::make_unique<CachingProvider>(*res.provider, dir);
    if (res.reference) res.cached_reference = std::make_unique<CachingProvider>(*res.reference, dir);
  }
  if (!config.member_shots_path.empty()) res.member_shots = load_texts_jsonl(config.member_shots_path);
  if (!config.nonmember_shots_path.empty()) res.nonmember_shots = load_texts_jsonl(config.nonmember_shots_path);
  if (config.wants(Method::kNeighbor)) {
    if (!config.lexicon_path.empty()) {
      res.lexicon = load_lexicon(config.lexicon_path);
    } else if (auto* synth = dynamic_cast<const SyntheticProvider*>(res.provider.get())) {
      res.lexicon = parse_lexicon_tsv(synthetic_lexicon_tsv(synth->spec()));
    } else {
      throw Error(ErrorCode::kValidation, "method neighbor requires --lexicon");
    }
  }
  return res;
}

namespace {

void write_checkpoint(const RunConfig& config, const Error& e) {
  if (config.out_dir.empty()) return;
  ordered_json j;
  j["status"] = "aborted";
  j["error"] = e.what();
  j["cache"] = (config.out_dir / "cache").generic_string();
  write_file(config.out_dir / "checkpoint.json", j.dump(2) + "\n");
}

template <typename Fn>
auto with_checkpoint(const RunConfig& config, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kTransport) write_checkpoint(config, e);
    throw;
  }
}

}  // namespace

EvalOutcome run_eval(const RunConfig& config) {
  config.validate();
  const Dataset dataset = load_dataset(config.dataset_path);
  RunResources res = open_resources(config);
  EvalContext ctx = res.context();
  if (!config.out_dir.empty()) std::filesystem::create_directories(config.out_dir);

  EvalOutcome outcome = with_checkpoint(config, [&] { return evaluate_methods(config, dataset, ctx); });
  if (!config.out_dir.empty()) {
    std::filesystem::remove(config.out_dir / "checkpoint.json");
    write_file(config.out_dir / "config.json", config.to_json());
    write_file(config.out_dir / "scores.jsonl", scores_jsonl(outcome));
    write_file(config.out_dir / "report.json", report_json(config, outcome));
    if (!outcome.transform_report.empty()) {
      write_file(config.out_dir / "transform_report.jsonl", transform_report_jsonl(outcome.transform_report));
    }
  }
  return outcome;
}

std::string_view to_string(SweepParam p) {
  switch (p) {
    case SweepParam::kGamma: return "gamma";
    case SweepParam::kK: return "k";
    case SweepParam::kShots: return "shots";
  }
  return "?";
}

SweepParam parse_sweep_param(std::string_view name) {
  for (auto p : {SweepParam::kGamma, SweepParam::kK, SweepParam::kShots}) {
    if (to_string(p) == name) return p;
  }
  throw Error(ErrorCode::kValidation, "unknown sweep parameter '" + std::string(name) + "'");
}

std::string SweepResult::grid_csv() const {
  std::string out = "param_value,method,auc,tpr_at_5fpr\n";
  for (std::size_t v = 0; v < values.size(); ++v) {
    for (const auto& r : per_value[v]) {
      const auto it = r.report.tpr_at_fpr.find(0.05);
      const std::string tpr = it == r.report.tpr_at_fpr.end() ? "" : fmt(it->second);
      out += fmt(values[v]) + "," + r.report.method + "," + fmt(r.report.auc) + "," + tpr + "\n";
    }
  }
  return out;
}

std::string SweepResult::report_json() const {
  ordered_json j;
  j["param"] = std::string(to_string(param));
  ordered_json rows = ordered_json::array();
  for (std::size_t v = 0; v < values.size(); ++v) {
    ordered_json reports = ordered_json::array();
    for (const auto& r : per_value[v]) {
      reports.push_back({{"method", r.report.method},
                         {"params", params_json(r.report.params)},
                         {"auc", r.report.auc},
                         {"tpr_at_fpr", tpr_json(r.report.tpr_at_fpr)},
                         {"n_members", r.report.n_members},
                         {"n_nonmembers", r.report.n_nonmembers}});
    }
    rows.push_back({{"value", values[v]}, {"reports", reports}});
  }
  j["values"] = rows;
  return j.dump(2) + "\n";
}

SweepResult sweep(const RunConfig& base_config, const Dataset& dataset, const EvalContext& ctx, SweepParam param,
                  std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::kValidation, "sweep needs at least one value");
  RunConfig config = base_config;
  if (param == SweepParam::kGamma) {
    values.push_back(0.0);
    for (double v : values) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorCode::kValidation, "gamma values must be >= 0");
    }
    // The ReCall-equality anchor needs ReCall scored alongside.
    if (!config.wants(Method::kReCall)) config.methods.push_back(Method::kReCall);
  } else if (param == SweepParam::kK) {
    for (double v : values) {
      if (!(v > 0.0 && v <= 100.0)) throw Error(ErrorCode::kValidation, "k values must be in (0, 100]");
    }
  } else {
    for (double v : values) {
      if (!(v >= 1.0) || v != std::floor(v)) throw Error(ErrorCode::kValidation, "shot values must be integers >= 1");
    }
  }
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end(), [](double a, double b) { return std::fabs(a - b) < 1e-9; }),
               values.end());

  if (param == SweepParam::kShots) config.shots = static_cast<std::size_t>(values.back());
  if (std::find(config.fpr_levels.begin(), config.fpr_levels.end(), 0.05) == config.fpr_levels.end()) {
    config.fpr_levels.push_back(0.05);
  }
  config.validate();
  PreparedRun run = prepare_run(config, dataset, ctx);
  require_both_labels(run.eval);
  LLTable table = compute_base_lls(config, run, ctx);

  SweepResult result;
  result.param = param;
  result.values = values;
  if (param == SweepParam::kShots) {
    for (double v : values) {
      compute_conditional_lls(config, run, ctx, static_cast<std::size_t>(v), table);
      result.per_value.push_back(score_methods(config, run, table));
    }
  } else {
    compute_conditional_lls(config, run, ctx, config.shots, table);
    for (double v : values) {
      result.per_value.push_back(score_methods(config, run, table, ParamPin{std::string(to_string(param)), v}));
    }
  }
  for (const auto& per : result.per_value) {
    if (!check_isolation(run.pool, per)) throw Error(ErrorCode::kValidation, "prefix shot found among scored samples");
  }
  return result;
}

SweepResult run_sweep(const RunConfig& config, SweepParam param, std::vector<double> values) {
  config.validate();
  const Dataset dataset = load_dataset(config.dataset_path);
  RunResources res = open_resources(config);
  EvalContext ctx = res.context();
  if (!config.out_dir.empty()) std::filesystem::create_directories(config.out_dir);

  SweepResult result = with_checkpoint(config, [&] { return sweep(config, dataset, ctx, param, values); });
  if (!config.out_dir.empty()) {
    std::filesystem::remove(config.out_dir / "checkpoint.json");
    write_file(config.out_dir / "config.json", config.to_json());
    write_file(config.out_dir / "grid.csv", result.grid_csv());
    write_file(config.out_dir / "report.json", result.report_json());
  }
  return result;
}

std::vector<std::string> approximate_members(const std::vector<std::string>& events, const ApproxConfig& config,
                                             const Provider& provider) {
  if (events.empty()) throw Error(ErrorCode::kValidation, "no events given");
  if (config.cut_fractions.size() != 1 && config.cut_fractions.size() != events.size()) {
    throw Error(ErrorCode::kValidation, "need one cut fraction, or one per event");
  }
  for (double c : config.cut_fractions) {
    if (!(c > 0.0 && c < 1.0)) throw Error(ErrorCode::kValidation, "cut fractions must be in (0, 1)");
  }
  if (config.target_len_tokens < 1) throw Error(ErrorCode::kValidation, "target length must be >= 1");
  if (!provider.capabilities().generation) throw Error(ErrorCode::kCapability, "generation");

  std::vector<std::string> out(events.size());
  parallel_for(events.size(), provider.max_concurrency(), [&](std::size_t i) {
    const auto words = split_words(events[i]);
    if (words.empty()) throw Error(ErrorCode::kValidation, "event " + std::to_string(i) + " has no words");
    const double cut = config.cut_fractions.size() == 1 ? config.cut_fractions[0] : config.cut_fractions[i];
    const std::size_t upper = std::max<std::size_t>(1, words.size() - 1);
    const std::size_t keep = std::clamp<std::size_t>(rounded_count(cut, words.size()), 1, upper);
    const std::vector<std::string> kept(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(keep));
    GenerationRequest req;
    req.prompt = join(kept, " ");
    req.max_new_tokens = config.target_len_tokens;
    req.strategy = config.strategy;
    req.seed = derive_seed(config.seed, "approx/" + std::to_string(i));
    const std::string completion = provider.generate(req);
    out[i] = completion.empty() ? req.prompt : req.prompt + " " + completion;
  });
  return out;
}

std::vector<std::string> load_texts_jsonl(const std::filesystem::path& path) {
  const std::string content = read_file(path);
  std::vector<std::string> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < content.size()) {
    std::size_t eol = content.find('\n', pos);
    if (eol == std::string::npos) eol = content.size();
    const std::string line = content.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      std::string text = json::parse(line).at("text").get<std::string>();
      if (text.empty()) throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": empty text");
      out.push_back(std::move(text));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse, path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (out.empty()) throw Error(ErrorCode::kParse, path.string() + ": no texts");
  return out;
}

std::string texts_to_jsonl(const std::vector<std::string>& texts) {
  std::string out;
  for (const auto& t : texts) out += json{{"text", t}}.dump() + "\n";
  return out;
}

}  // namespace mia
