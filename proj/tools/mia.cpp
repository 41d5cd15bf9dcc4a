// Command-line front end. Exit codes: 0 success, 1 validation or data error,
// 2 provider transport failure. Diagnostics go to stderr.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mia/cli_args.hpp"
#include "mia/error.hpp"
#include "mia/experiments.hpp"
#include "mia/scoring.hpp"
#include "mia/shift.hpp"
#include "mia/synthetic.hpp"
#include "mia/transforms.hpp"

namespace {

using namespace mia;

struct RunFlags {
  std::string dataset;
  std::string provider;
  std::string ref_provider;
  std::string methods = "loss,recall,conrecall";
  std::size_t shots = 7;
  std::string member_pool = "auto";
  std::string nonmember_pool = "auto";
  std::string gamma = "0.1:1.0:0.1";
  std::string k = "10:100:10";
  std::string fpr = "0.05";
  std::uint64_t seed = 0;
  std::string lexicon;
  std::size_t n_neighbors = 5;
  double neighbor_rate = 0.1;
  std::string member_shots;
  std::string nonmember_shots;
  std::string transform = "none";
  double rate = 0.1;
  std::uint64_t transform_seed = 0;
  std::string paraphrases;
  std::string separator = "\\n";
  bool no_cache = false;
  std::string out;
};

std::string unescape(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      const char c = s[++i];
      out += c == 'n' ? '\n' : c == 't' ? '\t' : c;
    } else {
      out += s[i];
    }
  }
  return out;
}

std::optional<std::size_t> pool_size(const std::string& flag, const std::string& value) {
  if (value == "auto") return std::nullopt;
  const auto counts = parse_counts(value);
  if (counts.size() != 1) throw Error(ErrorCode::kValidation, flag + " takes one integer or 'auto'");
  return counts.front();
}

void add_run_flags(CLI::App* sub, RunFlags& f, const std::string& out_help) {
  sub->add_option("--dataset", f.dataset, "Dataset JSONL (id?, text, label)")->required();
  sub->add_option("--provider", f.provider, "Target model URI: synth:<seed>[?...], trace:<path>, http:<url>")
      ->required();
  sub->add_option("--ref-provider", f.ref_provider, "Reference model URI (required by ref)");
  sub->add_option("--methods", f.methods, "Comma list of loss,ref,zlib,neighbor,mink,minkpp,recall,conrecall or all");
  sub->add_option("--shots", f.shots, "Shots per prefix for recall/conrecall");
  sub->add_option("--member-pool", f.member_pool, "Member shots drawn from the dataset (auto = --shots)");
  sub->add_option("--nonmember-pool", f.nonmember_pool, "Non-member shots drawn from the dataset (auto = --shots)");
  sub->add_option("--gamma", f.gamma, "Con-ReCall gamma values: list and/or start:stop:step");
  sub->add_option("--k", f.k, "Min-K% / Min-K%++ k values (percent)");
  sub->add_option("--fpr", f.fpr, "FPR levels for TPR@FPR");
  sub->add_option("--seed", f.seed, "Seed for the prefix-pool draw and neighbors");
  sub->add_option("--lexicon", f.lexicon, "Synonym lexicon TSV (neighbor method, synonym transform)");
  sub->add_option("--n-neighbors", f.n_neighbors, "Neighbors per sample");
  sub->add_option("--neighbor-rate", f.neighbor_rate, "Synonym substitution rate for neighbors");
  sub->add_option("--member-shots", f.member_shots, "JSONL {\"text\"} member shots replacing dataset draws");
  sub->add_option("--nonmember-shots", f.nonmember_shots, "JSONL {\"text\"} non-member shots replacing dataset draws");
  sub->add_option("--transform", f.transform, "Perturb evaluation texts: none|deletion|synonym|paraphrase");
  sub->add_option("--rate", f.rate, "Transform rate");
  sub->add_option("--transform-seed", f.transform_seed, "Transform seed");
  sub->add_option("--paraphrases", f.paraphrases, "Paraphrase JSONL {\"id\", \"text\"}");
  sub->add_option("--separator", f.separator, "Joins shots and the scored text (\\n and \\t escapes)");
  sub->add_flag("--no-cache", f.no_cache, "Do not cache provider calls under <out>/cache");
  sub->add_option("--out", f.out, out_help)->required();
}

RunConfig to_config(const RunFlags& f) {
  RunConfig c;
  c.dataset_path = f.dataset;
  c.provider_uri = f.provider;
  if (!f.ref_provider.empty()) c.ref_provider_uri = f.ref_provider;
  c.methods = parse_methods(f.methods);
  c.shots = f.shots;
  c.member_pool_size = pool_size("--member-pool", f.member_pool);
  c.nonmember_pool_size = pool_size("--nonmember-pool", f.nonmember_pool);
  c.gamma_grid = parse_values(f.gamma);
  c.k_grid = parse_values(f.k);
  c.fpr_levels = parse_values(f.fpr);
  c.seed = f.seed;
  c.lexicon_path = f.lexicon;
  c.n_neighbors = f.n_neighbors;
  c.neighbor_rate = f.neighbor_rate;
  c.member_shots_path = f.member_shots;
  c.nonmember_shots_path = f.nonmember_shots;
  const auto op = parse_transform_op(f.transform);
  if (op != TransformSpec::Op::kNone) {
    c.transform = TransformSpec{op, f.rate, f.transform_seed, f.lexicon, f.paraphrases};
  }
  c.separator = unescape(f.separator);
  c.use_cache = !f.no_cache;
  return c;
}

void emit(const std::string& path, const std::string& content) {
  if (path == "-") {
    std::cout << content;
  } else {
    write_file(path, content);
  }
}

void print_summary(const EvalOutcome& outcome) {
  for (const auto& r : outcome.results) {
    std::fprintf(stderr, "%-10s auc=%.4f", r.report.method.c_str(), r.report.auc);
    for (const auto& [level, tpr] : r.report.tpr_at_fpr) std::fprintf(stderr, " tpr@%s=%.4f", fpr_key(level).c_str(), tpr);
    for (const auto& [k, v] : r.report.params) std::fprintf(stderr, " %s=%g", k.c_str(), v);
    std::fprintf(stderr, "\n");
  }
  for (const auto& [m, why] : outcome.skipped) std::fprintf(stderr, "skipped %s: %s\n", m.c_str(), why.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Membership-inference toolkit: contrastive prefix scoring, baselines, shift analysis."};
  app.name("mia");
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  RunFlags score_f;
  score_f.gamma = "0.5";
  score_f.k = "20";
  auto* score = app.add_subcommand("score", "Score every sample; the first --gamma/--k value is used");
  add_run_flags(score, score_f, "Scores JSONL path, - for stdout");

  RunFlags eval_f;
  auto* eval = app.add_subcommand("eval", "Score and evaluate methods; writes config.json, scores.jsonl, report.json");
  add_run_flags(eval, eval_f, "Run directory");

  RunFlags sweep_f;
  std::string sweep_param;
  std::string sweep_values;
  auto* sweep_cmd = app.add_subcommand("sweep", "Evaluate over a parameter grid; writes grid.csv and report.json");
  add_run_flags(sweep_cmd, sweep_f, "Run directory");
  sweep_cmd->add_option("--param", sweep_param, "gamma|k|shots")->required();
  sweep_cmd->add_option("--values", sweep_values, "Values: list and/or start:stop:step (gamma always adds 0)")
      ->required();

  RunFlags dist_f;
  auto* dist = app.add_subcommand("export-distributions",
                                  "Per-method min-max normalized scores as sample_id,label,method,normalized_score");
  add_run_flags(dist, dist_f, "CSV path, - for stdout");

  std::string shift_dataset, shift_provider, shift_shots = "1:7:1", shift_measure = "mean", shift_out = "-";
  std::string shift_separator = "\\n";
  std::size_t shift_bins = kDefaultBins;
  std::uint64_t shift_seed = 0;
  auto* shift = app.add_subcommand("shift", "Signed Wasserstein shift profile as shots,pairing,signed_wasserstein");
  shift->add_option("--dataset", shift_dataset, "Dataset JSONL")->required();
  shift->add_option("--provider", shift_provider, "Model URI")->required();
  shift->add_option("--shots", shift_shots, "Shot counts: list and/or start:stop:step");
  shift->add_option("--bins", shift_bins, "Histogram cells");
  shift->add_option("--seed", shift_seed, "Seed for the prefix-pool draw");
  shift->add_option("--measure", shift_measure, "Per-sample statistic: mean|sum log-likelihood");
  shift->add_option("--separator", shift_separator, "Joins shots and the scored text");
  shift->add_option("--out", shift_out, "CSV path, - for stdout");

  std::string tf_dataset, tf_op, tf_lexicon, tf_paraphrases, tf_out, tf_report;
  double tf_rate = 0.1;
  std::uint64_t tf_seed = 0;
  auto* transform = app.add_subcommand("transform", "Perturb dataset texts; ids and labels are kept");
  transform->add_option("--dataset", tf_dataset, "Dataset JSONL")->required();
  transform->add_option("--op", tf_op, "deletion|synonym|paraphrase")->required();
  transform->add_option("--rate", tf_rate, "Fraction of words to delete or substitute");
  transform->add_option("--seed", tf_seed, "Transform seed");
  transform->add_option("--lexicon", tf_lexicon, "Synonym lexicon TSV");
  transform->add_option("--paraphrases", tf_paraphrases, "Paraphrase JSONL {\"id\", \"text\"}");
  transform->add_option("--out", tf_out, "Output dataset JSONL")->required();
  transform->add_option("--report", tf_report, "Per-sample report JSONL {op, rate, seed, requested, applied}");

  std::string ap_events, ap_provider, ap_cut = "0.5", ap_strategy = "sample", ap_out = "-";
  std::size_t ap_len = 32;
  std::uint64_t ap_seed = 0;
  auto* approx = app.add_subcommand("approx-members", "Truncate events and let the model complete them");
  approx->add_option("--events", ap_events, "Events JSONL {\"text\"}")->required();
  approx->add_option("--provider", ap_provider, "Model URI with generation")->required();
  approx->add_option("--cut", ap_cut, "Cut fraction(s), one shared or one per event");
  approx->add_option("--target-len", ap_len, "Tokens to generate after the cut");
  approx->add_option("--strategy", ap_strategy, "greedy|sample");
  approx->add_option("--seed", ap_seed, "Sampling seed");
  approx->add_option("--out", ap_out, "Shots JSONL {\"text\"}, - for stdout");

  SyntheticBenchmarkConfig sb;
  std::size_t sb_events = 7;
  std::string sb_out;
  auto* synth = app.add_subcommand("synth-bench", "Write a synthetic topic-mixture benchmark");
  synth->add_option("--seed", sb.seed, "Benchmark seed");
  synth->add_option("--vocab", sb.vocab_size, "Vocabulary size");
  synth->add_option("--topics", sb.num_topics, "Number of topics");
  synth->add_option("--members", sb.n_member, "Member documents (topic 0)");
  synth->add_option("--nonmembers", sb.n_nonmember, "Non-member documents (topic 1)");
  synth->add_option("--doc-len", sb.doc_len, "Words per document");
  synth->add_option("--prior", sb.member_prior, "Target model prior mass on topic 0");
  synth->add_option("--contrast", sb.topic_contrast, "Topic tilt strength");
  synth->add_option("--smoothing", sb.smoothing, "Predictive smoothing epsilon");
  synth->add_option("--events", sb_events, "Extra topic-0 event documents");
  synth->add_option("--out", sb_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (score->parsed()) {
      RunConfig c = to_config(score_f);
      c.use_cache = false;
      c.validate();
      const Dataset dataset = load_dataset(c.dataset_path);
      RunResources res = open_resources(c);
      std::string out;
      for (const auto& s : score_dataset(c, dataset, res.context())) {
        nlohmann::ordered_json j;
        j["sample_id"] = s.sample_id;
        j["method"] = std::string(to_string(s.method));
        j["params"] = s.params;
        j["value"] = s.value;
        out += j.dump() + "\n";
      }
      emit(score_f.out, out);
    } else if (eval->parsed()) {
      RunConfig c = to_config(eval_f);
      c.out_dir = eval_f.out;
      print_summary(run_eval(c));
    } else if (sweep_cmd->parsed()) {
      RunConfig c = to_config(sweep_f);
      c.out_dir = sweep_f.out;
      const auto param = parse_sweep_param(sweep_param);
      const auto result = run_sweep(c, param, parse_values(sweep_values));
      std::fprintf(stderr, "%zu values written to %s\n", result.values.size(), (c.out_dir / "grid.csv").c_str());
    } else if (dist->parsed()) {
      RunConfig c = to_config(dist_f);
      c.use_cache = false;
      c.validate();
      const Dataset dataset = load_dataset(c.dataset_path);
      RunResources res = open_resources(c);
      const EvalOutcome outcome = evaluate_methods(c, dataset, res.context());
      emit(dist_f.out, distributions_csv(outcome));
      print_summary(outcome);
    } else if (shift->parsed()) {
      const auto shots = parse_counts(shift_shots);
      const auto measure = parse_shift_measure(shift_measure);
      std::size_t max_shots = 0;
      for (auto s : shots) max_shots = std::max(max_shots, s);
      const Dataset dataset = load_dataset(shift_dataset);
      auto provider = make_provider(shift_provider);
      provider->separator = unescape(shift_separator);
      auto split = split_prefix_pool(dataset, max_shots, max_shots, shift_seed);
      split.pool.separator = provider->separator;
      const auto profile = shift_profile(split.eval, split.pool, *provider, shots, shift_bins, measure);
      emit(shift_out, profile.to_csv());
    } else if (transform->parsed()) {
      TransformSpec spec{parse_transform_op(tf_op), tf_rate, tf_seed, tf_lexicon, tf_paraphrases};
      if (spec.op == TransformSpec::Op::kNone) throw Error(ErrorCode::kValidation, "--op must not be none");
      if (spec.op == TransformSpec::Op::kSynonym && tf_lexicon.empty()) {
        throw Error(ErrorCode::kValidation, "synonym transform requires --lexicon");
      }
      if (spec.op == TransformSpec::Op::kParaphrase && tf_paraphrases.empty()) {
        throw Error(ErrorCode::kValidation, "paraphrase transform requires --paraphrases");
      }
      std::vector<TransformReportEntry> report;
      const Dataset out = transform_dataset(load_dataset(tf_dataset), spec, &report);
      write_dataset(out, tf_out);
      if (!tf_report.empty()) write_file(tf_report, transform_report_jsonl(report));
    } else if (approx->parsed()) {
      ApproxConfig ac;
      ac.cut_fractions = parse_values(ap_cut);
      ac.target_len_tokens = ap_len;
      ac.seed = ap_seed;
      if (ap_strategy == "greedy") {
        ac.strategy = DecodeStrategy::kGreedy;
      } else if (ap_strategy == "sample") {
        ac.strategy = DecodeStrategy::kSample;
      } else {
        throw Error(ErrorCode::kValidation, "--strategy must be greedy or sample");
      }
      const auto events = load_texts_jsonl(ap_events);
      auto provider = make_provider(ap_provider);
      emit(ap_out, texts_to_jsonl(approximate_members(events, ac, *provider)));
    } else if (synth->parsed()) {
      const auto bench = synthetic_benchmark(sb);
      std::filesystem::create_directories(sb_out);
      const std::filesystem::path dir = sb_out;
      write_dataset(bench.dataset, dir / "dataset.jsonl");
      write_file(dir / "events.jsonl", texts_to_jsonl(synthetic_events(sb, sb_events)));
      write_file(dir / "lexicon.tsv", synthetic_lexicon_tsv(bench.provider->spec()));
      nlohmann::ordered_json uris;
      uris["provider"] = bench.provider_uri;
      uris["reference_provider"] = bench.reference_uri;
      write_file(dir / "providers.json", uris.dump(2) + "\n");
      std::cout << bench.provider_uri << "\n" << bench.reference_uri << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::kTransport ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
