#include <doctest.h>

#include <json.hpp>

#include "helpers.hpp"
#include "mia/error.hpp"
#include "mia/experiments.hpp"
#include "mia/synthetic.hpp"
#include "mia/trace_provider.hpp"

using namespace mia;

namespace {

struct TraceFixture {
  Dataset dataset = load_dataset(testing::data_dir() / "dataset.jsonl");
  TraceProvider traces = TraceProvider::load(testing::data_dir() / "traces.jsonl");
  EvalContext ctx;
  RunConfig config;

  TraceFixture() {
    ctx.provider = &traces;
    ctx.external_member_shots = load_texts_jsonl(testing::data_dir() / "member_shots.jsonl");
    ctx.external_nonmember_shots = load_texts_jsonl(testing::data_dir() / "nonmember_shots.jsonl");
    config.provider_uri = traces.uri();
    config.methods = {Method::kLoss, Method::kMinKPP, Method::kReCall, Method::kConReCall};
    config.shots = 1;
    config.gamma_grid = {0.5};
    config.k_grid = {100};
    config.member_shots_path = testing::data_dir() / "member_shots.jsonl";
    config.nonmember_shots_path = testing::data_dir() / "nonmember_shots.jsonl";
  }
};

double value_of(const MethodResult& r, const std::string& id) {
  for (const auto& s : r.report.score_records) {
    if (s.sample_id == id) return s.value;
  }
  FAIL("no score for " << id);
  return 0.0;
}

SyntheticBenchmark small_bench(std::size_t per_class = 40) {
  SyntheticBenchmarkConfig cfg;
  cfg.vocab_size = 60;
  cfg.n_member = cfg.n_nonmember = per_class;
  cfg.doc_len = 16;
  return synthetic_benchmark(cfg);
}

RunConfig synth_config(const SyntheticBenchmark& bench) {
  RunConfig config;
  config.provider_uri = bench.provider_uri;
  config.methods = {Method::kLoss, Method::kMinK, Method::kReCall, Method::kConReCall};
  config.shots = 3;
  config.seed = 1;
  return config;
}

}  // namespace

TEST_SUITE("experiments") {
  TEST_CASE("hand-computed scores on the trace fixture") {
    TraceFixture f;
    const auto out = evaluate_methods(f.config, f.dataset, f.ctx);
    CHECK(out.eval.samples.size() == 4);
    CHECK(out.isolation_ok);

    const auto* loss = out.find(Method::kLoss);
    const auto* recall = out.find(Method::kReCall);
    const auto* con = out.find(Method::kConReCall);
    const auto* minkpp = out.find(Method::kMinKPP);
    REQUIRE(loss);
    REQUIRE(recall);
    REQUIRE(con);
    REQUIRE(minkpp);

    CHECK(value_of(*loss, "a1") == -2.0);
    CHECK(value_of(*loss, "a2") == -1.0);
    CHECK(value_of(*loss, "b1") == -2.0);
    CHECK(value_of(*loss, "b2") == -2.5);
    CHECK(value_of(*recall, "a1") == doctest::Approx(1.25).epsilon(1e-15));
    CHECK(value_of(*recall, "a2") == doctest::Approx(1.25).epsilon(1e-15));
    CHECK(value_of(*recall, "b1") == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(value_of(*recall, "b2") == doctest::Approx(0.85).epsilon(1e-15));
    CHECK(value_of(*con, "a1") == doctest::Approx(0.875).epsilon(1e-15));
    CHECK(value_of(*con, "a2") == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(value_of(*con, "b1") == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(value_of(*con, "b2") == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(value_of(*minkpp, "a1") == doctest::Approx(1.0).epsilon(1e-15));

    CHECK(loss->report.auc == 0.875);
    CHECK(recall->report.auc == 1.0);
    CHECK(con->report.auc == 1.0);
    CHECK(minkpp->report.auc == 0.5);
  }

  TEST_CASE("missing member shots fail fast") {
    TraceFixture f;
    f.config.member_shots_path.clear();
    f.ctx.external_member_shots.clear();
    f.config.member_pool_size = 0;
    try {
      f.config.validate();
      FAIL("expected MissingMemberShots");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kMissingMemberShots);
    }
    try {
      evaluate_methods(f.config, f.dataset, f.ctx);
      FAIL("expected MissingMemberShots");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kMissingMemberShots);
    }
  }

  TEST_CASE("config validation") {
    RunConfig c;
    c.provider_uri = "synth:1";
    c.methods = {Method::kRef};
    CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("--ref-provider"), Error);
    c.methods = {Method::kLoss, Method::kLoss};
    CHECK_THROWS_AS(c.validate(), Error);
    c.methods = {Method::kConReCall};
    c.gamma_grid = {-0.1};
    CHECK_THROWS_AS(c.validate(), Error);
    c.gamma_grid = {0.5};
    c.fpr_levels = {1.5};
    CHECK_THROWS_AS(c.validate(), Error);
    c.fpr_levels = {0.05};
    CHECK_NOTHROW(c.validate());
    CHECK(c.hash().size() == 16);
    RunConfig d = c;
    d.seed = 2;
    CHECK(c.hash() != d.hash());
  }

  TEST_CASE("score identities survive evaluation") {
    auto bench = small_bench();
    EvalContext ctx;
    ctx.provider = bench.provider.get();
    auto config = synth_config(bench);
    config.gamma_grid = {0.0, 0.5};
    config.k_grid = {100};
    const auto out = evaluate_methods(config, bench.dataset, ctx);
    CHECK(out.isolation_ok);
    const auto* con = out.find(Method::kConReCall);
    const auto* recall = out.find(Method::kReCall);
    CHECK(con->grid[0].value == 0.0);
    CHECK(con->grid[0].auc == recall->report.auc);
    CHECK(out.find(Method::kMinK)->report.auc == out.find(Method::kLoss)->report.auc);

    for (const auto& r : out.results) {
      for (const auto& s : r.report.score_records) {
        CHECK(std::find(out.pool.member_ids.begin(), out.pool.member_ids.end(), s.sample_id) == out.pool.member_ids.end());
        CHECK(std::find(out.pool.nonmember_ids.begin(), out.pool.nonmember_ids.end(), s.sample_id) ==
              out.pool.nonmember_ids.end());
      }
    }
  }

  TEST_CASE("reports are deterministic") {
    auto bench = small_bench();
    EvalContext ctx;
    ctx.provider = bench.provider.get();
    auto config = synth_config(bench);
    const auto a = evaluate_methods(config, bench.dataset, ctx);
    const auto b = evaluate_methods(config, bench.dataset, ctx);
    CHECK(report_json(config, a) == report_json(config, b));
    CHECK(scores_jsonl(a) == scores_jsonl(b));
    const auto report = nlohmann::json::parse(report_json(config, a));
    CHECK(report.at("config_hash") == config.hash());
    CHECK(report.at("isolation_check") == "pass");
    CHECK(distributions_csv(a).rfind("sample_id,label,method,normalized_score\n", 0) == 0);
  }

  TEST_CASE("sweeps") {
    auto bench = small_bench();
    EvalContext ctx;
    ctx.provider = bench.provider.get();
    auto config = synth_config(bench);
    config.methods = {Method::kLoss, Method::kMinK, Method::kConReCall};

    const auto g = sweep(config, bench.dataset, ctx, SweepParam::kGamma, {0.2, 0.4});
    CHECK(g.values == std::vector<double>{0.0, 0.2, 0.4});
    const auto csv = g.grid_csv();
    CHECK(csv.rfind("param_value,method,auc,tpr_at_5fpr\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3 * 4);
    for (const auto& per : g.per_value) {
      if (&per != &g.per_value.front()) continue;
      double recall_auc = -1, con_auc = -2;
      for (const auto& r : per) {
        if (r.method == Method::kReCall) recall_auc = r.report.auc;
        if (r.method == Method::kConReCall) con_auc = r.report.auc;
      }
      CHECK(recall_auc == con_auc);
    }

    const auto k = sweep(config, bench.dataset, ctx, SweepParam::kK, {50, 100});
    for (const auto& r : k.per_value.back()) {
      if (r.method == Method::kMinK) {
        for (const auto& other : k.per_value.back()) {
          if (other.method == Method::kLoss) CHECK(r.report.auc == other.report.auc);
        }
      }
    }

    const auto s = sweep(config, bench.dataset, ctx, SweepParam::kShots, {1, 2, 3});
    CHECK(s.per_value.size() == 3);
    CHECK_THROWS_AS(sweep(config, bench.dataset, ctx, SweepParam::kShots, {1.5}), Error);
    CHECK(parse_sweep_param("gamma") == SweepParam::kGamma);
  }

  TEST_CASE("approximate members") {
    auto bench = small_bench(4);
    const std::vector<std::string> events{
        "e1 e2 e3 e4 e5 e6 e7 e8 e9 e10", "x", "a b c d", "p q r s t", "m n o", "u v", "y z w k"};
    ApproxConfig cfg;
    cfg.cut_fractions = {0.99};
    cfg.target_len_tokens = 5;
    cfg.seed = 3;
    const auto out = approximate_members(events, cfg, *bench.provider);
    REQUIRE(out.size() == 7);
    CHECK(out[0].rfind("e1 e2 e3 e4 e5 e6 e7 e8 e9 ", 0) == 0);
    CHECK(split_words(out[0]).size() == 9 + 5);
    CHECK(split_words(out[1]).size() == 1 + 5);
    CHECK(out == approximate_members(events, cfg, *bench.provider));

    cfg.cut_fractions = {0.01};
    CHECK(split_words(approximate_members(events, cfg, *bench.provider)[0]).front() == "e1");
    cfg.cut_fractions = {1.0};
    CHECK_THROWS_AS(approximate_members(events, cfg, *bench.provider), Error);
    cfg.cut_fractions = {0.5, 0.5};
    CHECK_THROWS_AS(approximate_members(events, cfg, *bench.provider), Error);

    TraceProvider traces = TraceProvider::load(testing::data_dir() / "traces.jsonl");
    cfg.cut_fractions = {0.5};
    try {
      approximate_members(events, cfg, traces);
      FAIL("expected CapabilityError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kCapability);
    }
  }

  TEST_CASE("file-level run writes its outputs") {
    const auto dir = testing::scratch_dir("run");
    auto bench = small_bench(10);
    write_dataset(bench.dataset, dir / "data.jsonl");
    RunConfig config = synth_config(bench);
    config.dataset_path = dir / "data.jsonl";
    config.methods = {Method::kLoss, Method::kReCall};
    config.out_dir = dir / "out";
    run_eval(config);
    const auto first = read_file(dir / "out" / "report.json");
    CHECK(std::filesystem::exists(dir / "out" / "scores.jsonl"));
    CHECK(std::filesystem::exists(dir / "out" / "config.json"));
    run_eval(config);
    CHECK(read_file(dir / "out" / "report.json") == first);
    CHECK(texts_to_jsonl({"a", "b"}) == "{\"text\":\"a\"}\n{\"text\":\"b\"}\n");
  }
}
