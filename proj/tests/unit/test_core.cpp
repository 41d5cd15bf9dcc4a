#include <doctest.h>

#include <set>

#include "helpers.hpp"
#include "mia/core.hpp"
#include "mia/error.hpp"

using namespace mia;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kValidation;
}

Dataset labeled(std::size_t members, std::size_t nonmembers) {
  Dataset d;
  for (std::size_t i = 0; i < members; ++i) d.samples.push_back({"m" + std::to_string(i), "member text " + std::to_string(i), Label::kMember});
  for (std::size_t i = 0; i < nonmembers; ++i) {
    d.samples.push_back({"n" + std::to_string(i), "other text " + std::to_string(i), Label::kNonmember});
  }
  return d;
}

}  // namespace

TEST_SUITE("core") {
  TEST_CASE("numeric label and missing id map to member with line-number id") {
    const auto d = parse_dataset_jsonl(R"({"text":"abc","label":1})", "t");
    REQUIRE(d.samples.size() == 1);
    CHECK(d.samples[0].id == "0");
    CHECK(d.samples[0].label == Label::kMember);
    CHECK(d.samples[0].text == "abc");
  }

  TEST_CASE("label aliases") {
    const auto d = parse_dataset_jsonl(
        "{\"text\":\"a\",\"label\":\"nonmember\"}\n{\"text\":\"b\",\"label\":0}\n{\"text\":\"c\",\"label\":\"unknown\"}\n"
        "{\"text\":\"d\",\"label\":\"member\"}\n",
        "t");
    CHECK(d.samples[0].label == Label::kNonmember);
    CHECK(d.samples[1].label == Label::kNonmember);
    CHECK(d.samples[2].label == Label::kUnknown);
    CHECK(d.samples[3].label == Label::kMember);
    CHECK(d.samples[3].id == "3");
  }

  TEST_CASE("duplicate ids, empty files and malformed lines are rejected") {
    CHECK(code_of([] { parse_dataset_jsonl("{\"id\":\"a\",\"text\":\"x\",\"label\":1}\n{\"id\":\"a\",\"text\":\"y\",\"label\":0}\n", "t"); }) ==
          ErrorCode::kDuplicateId);
    CHECK(code_of([] { parse_dataset_jsonl("", "t"); }) == ErrorCode::kParse);
    try {
      parse_dataset_jsonl("{\"text\":\"x\",\"label\":1}\n{oops\n", "t");
      FAIL("expected parse error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kParse);
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    CHECK(code_of([] { parse_dataset_jsonl("{\"text\":\"\",\"label\":1}", "t"); }) == ErrorCode::kParse);
    CHECK(code_of([] { parse_dataset_jsonl("{\"text\":\"x\",\"label\":7}", "t"); }) == ErrorCode::kParse);
  }

  TEST_CASE("serialize then load keeps ids, texts and labels") {
    const auto path = testing::scratch_dir("core-roundtrip") / "d.jsonl";
    const auto original = load_dataset(testing::data_dir() / "dataset.jsonl");
    write_dataset(original, path);
    const auto again = load_dataset(path);
    REQUIRE(again.samples.size() == original.samples.size());
    for (std::size_t i = 0; i < again.samples.size(); ++i) {
      CHECK(again.samples[i].id == original.samples[i].id);
      CHECK(again.samples[i].text == original.samples[i].text);
      CHECK(again.samples[i].label == original.samples[i].label);
    }
  }

  TEST_CASE("build_prefix joins the first n shots") {
    PrefixPool pool;
    pool.member_shots = {"a", "b", "c"};
    CHECK(build_prefix(pool, PrefixKind::kMember, 2) == "a\nb");
    CHECK(code_of([&] { build_prefix(pool, PrefixKind::kMember, 0); }) == ErrorCode::kValidation);
    pool.nonmember_shots = {"x"};
    try {
      build_prefix(pool, PrefixKind::kNonmember, 3);
      FAIL("expected InsufficientShots");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kInsufficientShots);
      CHECK(std::string(e.what()).find("have 1, want 3") != std::string::npos);
    }
  }

  TEST_CASE("prefix length is the shot lengths plus separators") {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
      PrefixPool pool;
      pool.separator = trial % 2 ? "\n" : " || ";
      const std::size_t n = 1 + rng.uniform_index(6);
      std::size_t total = 0;
      for (std::size_t i = 0; i < n; ++i) {
        pool.member_shots.push_back(std::string(1 + rng.uniform_index(20), 'q'));
        total += pool.member_shots.back().size();
      }
      const std::size_t use = 1 + rng.uniform_index(n);
      std::size_t want = (use - 1) * pool.separator.size();
      for (std::size_t i = 0; i < use; ++i) want += pool.member_shots[i].size();
      CHECK(build_prefix(pool, PrefixKind::kMember, use).size() == want);
      (void)total;
    }
  }

  TEST_CASE("split_prefix_pool sizes, determinism and isolation") {
    const Dataset d = labeled(10, 10);
    const auto a = split_prefix_pool(d, 7, 7, 11);
    CHECK(a.pool.member_shots.size() == 7);
    CHECK(a.pool.nonmember_shots.size() == 7);
    CHECK(a.eval.count(Label::kMember) == 3);
    CHECK(a.eval.count(Label::kNonmember) == 3);
    const auto b = split_prefix_pool(d, 7, 7, 11);
    CHECK(a.pool.member_ids == b.pool.member_ids);
    CHECK(a.pool.nonmember_shots == b.pool.nonmember_shots);

    std::set<std::string> shot_ids(a.pool.member_ids.begin(), a.pool.member_ids.end());
    shot_ids.insert(a.pool.nonmember_ids.begin(), a.pool.nonmember_ids.end());
    for (const auto& s : a.eval.samples) CHECK(shot_ids.count(s.id) == 0);

    const auto c = split_prefix_pool(d, 0, 7, 11);
    CHECK(c.pool.member_shots.empty());
    CHECK(c.eval.count(Label::kMember) == 10);
    CHECK(code_of([&] { split_prefix_pool(d, 11, 1, 1); }) == ErrorCode::kInsufficientSamples);
  }

  TEST_CASE("different seeds draw different pools") {
    const Dataset d = labeled(50, 50);
    CHECK(split_prefix_pool(d, 7, 7, 1).pool.member_ids != split_prefix_pool(d, 7, 7, 2).pool.member_ids);
  }

  TEST_CASE("token score invariants") {
    TokenScores ts;
    ts.tokens = {"a", "b"};
    ts.logprobs = {-1.0, -0.5};
    ts.char_offsets = {{0, 1}, {2, 3}};
    CHECK_NOTHROW(ts.validate());
    ts.logprobs[1] = 0.1;
    CHECK_THROWS_AS(ts.validate(), Error);
    ts.logprobs[1] = -0.1;
    ts.char_offsets[1] = {0, 1};
    CHECK_THROWS_AS(ts.validate(), Error);
    ts.char_offsets[1] = {2, 3};
    ts.dist_mean = std::vector<double>{-1.0, -1.0};
    ts.dist_std = std::vector<double>{0.5, -0.1};
    CHECK_THROWS_AS(ts.validate(), Error);
  }

  TEST_CASE("words and UTF-8") {
    CHECK(split_words("  a\tbb  c\n") == std::vector<std::string>{"a", "bb", "c"});
    const auto spans = word_spans("ab  cd");
    REQUIRE(spans.size() == 2);
    CHECK(spans[1].start == 4);
    CHECK(is_valid_utf8("caf\xc3\xa9"));
    CHECK_FALSE(is_valid_utf8("\xc3"));
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(3.0) == "3");
  }

  TEST_CASE("method names round-trip") {
    for (Method m : all_methods()) CHECK(parse_method(to_string(m)) == m);
    CHECK(all_methods().size() == 8);
    CHECK_THROWS_AS(parse_method("bogus"), Error);
  }
}
