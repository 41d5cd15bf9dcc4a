#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "mia/error.hpp"
#include "mia/scoring.hpp"

using namespace mia;

namespace {

TokenScores ts_of(std::vector<double> lps) {
  TokenScores ts;
  for (std::size_t i = 0; i < lps.size(); ++i) {
    ts.tokens.push_back("w");
    ts.char_offsets.emplace_back(2 * i, 2 * i + 1);
  }
  ts.logprobs = std::move(lps);
  return ts;
}

// Independent oracle: sort a copy, average the first m.
double sort_oracle(std::vector<double> v, double k) {
  const std::size_t m = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(k / 100.0 * v.size() + 1e-9)));
  std::sort(v.begin(), v.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < m; ++i) acc += v[i];
  return acc / static_cast<double>(m);
}

std::string random_alnum(Rng& rng, std::size_t n) {
  static const std::string chars = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
  std::string out(n, ' ');
  for (char& c : out) c = chars[rng.uniform_index(chars.size())];
  return out;
}

}  // namespace

TEST_SUITE("scoring") {
  TEST_CASE("mean and loss") {
    CHECK(mean_ll(ts_of({-1, -2, -3})) == -2.0);
    CHECK(mean_ll(ts_of({-0.5})) == -0.5);
    CHECK_THROWS_AS(mean_ll(ts_of({})), Error);
    CHECK(loss_score(ts_of({-1, -2, -3})).value == -2.0);
    CHECK_THROWS_AS(loss_score(ts_of({-1, std::nan("")})), Error);
    CHECK_THROWS_AS(loss_score(ts_of({-1, -std::numeric_limits<double>::infinity()})), Error);
  }

  TEST_CASE("ref") {
    auto a = ts_of({-2, -2});
    auto b = ts_of({-2, -2, -2});
    CHECK(ref_score(a, b).value == 0.0);
    CHECK(ref_score(ts_of({-1.5}), ts_of({-2.5})).value == 1.0);
    a.text_hash = 1;
    b.text_hash = 2;
    CHECK_THROWS_AS(ref_score(a, b), Error);
  }

  TEST_CASE("zlib") {
    CHECK(zlib_entropy(std::string(1000, 'a')) == 17);
    CHECK(zlib_entropy("the quick brown fox jumps over the lazy dog") == 50);
    Rng rng(1);
    const auto noise = random_alnum(rng, 1000);
    CHECK(zlib_entropy(std::string(1000, 'a')) < zlib_entropy(noise));
    CHECK(zlib_entropy(noise) == zlib_entropy(noise));
    CHECK_THROWS_AS(zlib_entropy(""), Error);

    const std::string text(1000, 'a');
    const auto ts = ts_of({-2.0});
    CHECK(zlib_score(ts, text).value == doctest::Approx(-2.0 / 17.0));
  }

  TEST_CASE("zlib can reorder loss") {
    // A repetitive text with better LL loses to an incompressible one.
    const std::string rep = "go go go go go go go go go go go go go go go go go go go go";
    Rng rng(2);
    const std::string noisy = random_alnum(rng, rep.size());
    const auto ts_rep = ts_of({-1.8});
    const auto ts_noisy = ts_of({-2.0});
    CHECK(loss_score(ts_rep).value > loss_score(ts_noisy).value);
    CHECK(zlib_score(ts_rep, rep).value < zlib_score(ts_noisy, noisy).value);
  }

  TEST_CASE("neighbor") {
    CHECK(neighbor_score(ts_of({-2}), {ts_of({-2}), ts_of({-2})}).value == 0.0);
    CHECK(neighbor_score(ts_of({-1}), {ts_of({-2}), ts_of({-3})}).value == 1.5);
    CHECK_THROWS_AS(neighbor_score(ts_of({-1}), {}), Error);
  }

  TEST_CASE("min-k selection") {
    CHECK(mink_score(ts_of({-1, -4, -2, -3}), 50).value == -3.5);
    CHECK(min_k_count(20, 3) == 1);
    CHECK(min_k_count(50, 4) == 2);
    CHECK(min_k_count(100, 7) == 7);
    CHECK(min_k_count(30, 10) == 3);  // 0.3 * 10 must not floor to 2
    CHECK_THROWS_AS(mink_score(ts_of({-1}), 0), Error);
    CHECK_THROWS_AS(mink_score(ts_of({-1}), 101), Error);
  }

  TEST_CASE("min-k matches the sort oracle") {
    Rng rng(21);
    for (int trial = 0; trial < 200; ++trial) {
      const auto ts = testing::random_scores(rng, 50);
      for (double k : {10.0, 20.0, 33.0, 50.0, 100.0}) {
        CHECK(mink_score(ts, k).value == doctest::Approx(sort_oracle(ts.logprobs, k)).epsilon(1e-12));
      }
      CHECK(mink_score(ts, 100).value == loss_score(ts).value);
    }
  }

  TEST_CASE("min-k++") {
    TokenScores ts = ts_of({std::log(0.8)});
    ts.dist_mean = std::vector<double>{-0.50040242353818787};
    ts.dist_std = std::vector<double>{0.55451774444795621};
    CHECK(minkpp_score(ts, 100).value == doctest::Approx(0.5).epsilon(1e-12));

    TokenScores flat = ts_of({-std::log(4.0), -std::log(4.0)});
    flat.dist_mean = std::vector<double>{-std::log(4.0), -std::log(4.0)};
    flat.dist_std = std::vector<double>{0.0, 0.0};
    const auto s = minkpp_score(flat, 100);
    CHECK(s.value == 0.0);
    CHECK_FALSE(s.warnings.empty());

    CHECK_THROWS_AS(minkpp_score(ts_of({-1}), 50), Error);

    Rng rng(8);
    for (int trial = 0; trial < 200; ++trial) {
      const auto r = testing::random_scores(rng, 40, true);
      std::vector<double> z;
      for (std::size_t i = 0; i < r.size(); ++i) {
        z.push_back((r.logprobs[i] - (*r.dist_mean)[i]) / std::max((*r.dist_std)[i], kSigmaFloor));
      }
      for (double k : {10.0, 25.0, 100.0}) {
        CHECK(minkpp_score(r, k).value == doctest::Approx(sort_oracle(z, k)).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("recall and con-recall") {
    CHECK(recall_value(-3, -2) == 1.5);
    CHECK(recall_score(ts_of({-2, -2}), ts_of({-2, -2})).value == 1.0);
    CHECK(conrecall_value(-3, -2, -2, 0.5) == 1.0);
    CHECK_THROWS_AS(recall_value(-1, 0), Error);
    CHECK_THROWS_AS(conrecall_value(-1, -1, -1, -0.1), Error);

    Rng rng(4);
    for (int trial = 0; trial < 300; ++trial) {
      const std::size_t n = 1 + rng.uniform_index(30);
      const auto nm = testing::random_scores(rng, n);
      const auto m = testing::random_scores(rng, n);
      const auto u = testing::random_scores(rng, n);
      CHECK(conrecall_score(nm, m, u, 0.0).value == recall_score(nm, u).value);
      CHECK(std::isfinite(conrecall_score(nm, m, u, 0.7).value));
    }
  }

  TEST_CASE("scores never decrease when every token gets likelier") {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 2 + rng.uniform_index(20);
      auto base = testing::random_scores(rng, n, true);
      auto better = base;
      for (double& v : better.logprobs) v = std::min(v + 0.5 * rng.uniform01(), -1e-4);
      const auto ref = testing::random_scores(rng, n);
      const auto nb = testing::random_scores(rng, n);
      CHECK(loss_score(better).value >= loss_score(base).value);
      CHECK(ref_score(better, ref).value >= ref_score(base, ref).value);
      CHECK(neighbor_score(better, {nb}).value >= neighbor_score(base, {nb}).value);
      CHECK(mink_score(better, 30).value >= mink_score(base, 30).value);
      CHECK(minkpp_score(better, 30).value >= minkpp_score(base, 30).value);
      CHECK(zlib_score(better, "abc def").value >= zlib_score(base, "abc def").value);
      // Ratio methods: the unconditional LL rises toward zero with prefixed LLs fixed.
      const auto nm = testing::random_scores(rng, n);
      const auto m = testing::random_scores(rng, n);
      CHECK(recall_score(nm, better).value >= recall_score(nm, base).value);
      const double cb = conrecall_score(nm, m, base, 0.5).value;
      const double cg = conrecall_score(nm, m, better, 0.5).value;
      if (mean_ll(nm) - 0.5 * mean_ll(m) < 0) CHECK(cg >= cb);
    }
  }

  TEST_CASE("params validation") {
    ScoreParams p;
    CHECK_NOTHROW(p.validate());
    p.gamma = -1;
    CHECK_THROWS_AS(p.validate(), Error);
    p = {};
    p.k_percent = 0;
    CHECK_THROWS_AS(p.validate(), Error);
  }
}
