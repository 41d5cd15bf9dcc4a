#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "mia/error.hpp"
#include "mia/shift.hpp"
#include "mia/synthetic.hpp"

using namespace mia;

namespace {

// Exact empirical W1 for equal-size samples: mean gap between sorted values.
double quantile_w1(std::vector<double> p, std::vector<double> q) {
  std::sort(p.begin(), p.end());
  std::sort(q.begin(), q.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
  return acc / static_cast<double>(p.size());
}

double cell_width(const std::vector<double>& p, const std::vector<double>& q, std::size_t bins) {
  const auto [plo, phi] = std::minmax_element(p.begin(), p.end());
  const auto [qlo, qhi] = std::minmax_element(q.begin(), q.end());
  return (std::max(*phi, *qhi) - std::min(*plo, *qlo)) / static_cast<double>(bins);
}

}  // namespace

TEST_SUITE("shift") {
  TEST_CASE("wasserstein examples") {
    const std::vector<double> a{1, 2, 3, 4};
    CHECK(wasserstein(a, a, 100) == 0.0);
    const std::vector<double> p{0, 0, 0}, q{1, 1, 1};
    CHECK(wasserstein(p, q, 100) == doctest::Approx(1.0).epsilon(0.011));
    CHECK_THROWS_AS(wasserstein(std::vector<double>{}, q, 10), Error);
    CHECK_THROWS_AS(wasserstein(p, q, 0), Error);
  }

  TEST_CASE("wasserstein matches the quantile oracle") {
    Rng rng(200);
    for (int trial = 0; trial < 50; ++trial) {
      const auto p = testing::random_values(rng, 60, -1, 1);
      const auto q = testing::random_values(rng, 60, -0.5, 2);
      const double w = wasserstein(p, q, 100);
      CHECK(std::abs(w - quantile_w1(p, q)) <= 2 * cell_width(p, q, 100));
      CHECK(w == doctest::Approx(wasserstein(q, p, 100)).epsilon(1e-12));
    }
  }

  TEST_CASE("signed variant") {
    std::vector<double> p{0, 1, 2}, up{1, 2, 3}, down{-1, 0, 1};
    CHECK(signed_wasserstein(p, up, 100) > 0);
    CHECK(signed_wasserstein(p, down, 100) < 0);
    CHECK(signed_wasserstein(std::vector<double>{-1, 1}, std::vector<double>{-2, 0, 0, 2}, 100) == 0.0);
    CHECK(signed_wasserstein(up, p, 100) == doctest::Approx(-signed_wasserstein(p, up, 100)).epsilon(1e-12));
  }

  TEST_CASE("translation tracks the quantile oracle") {
    Rng rng(201);
    for (int trial = 0; trial < 20; ++trial) {
      const auto p = testing::random_values(rng, 80, 0, 1);
      const double c = 0.25 + rng.uniform01();
      auto q = p;
      for (double& x : q) x += c;
      CHECK(std::abs(signed_wasserstein(p, q, 200) - c) <= 2 * cell_width(p, q, 200));
      CHECK(std::abs(signed_wasserstein(q, p, 200) + c) <= 2 * cell_width(p, q, 200));
    }
  }

  TEST_CASE("min-max normalize") {
    CHECK(min_max_normalize(std::vector<double>{0, 5, 10}) == std::vector<double>{0, 0.5, 1});
    CHECK(min_max_normalize(std::vector<double>{3, 3}) == std::vector<double>{0.5, 0.5});
    Rng rng(202);
    for (int trial = 0; trial < 20; ++trial) {
      const auto v = testing::random_values(rng, 30, -100, 100);
      const auto n = min_max_normalize(v);
      for (std::size_t i = 0; i < v.size(); ++i) {
        CHECK(n[i] >= 0.0);
        CHECK(n[i] <= 1.0);
        for (std::size_t j = 0; j < v.size(); ++j) CHECK((v[i] < v[j]) == (n[i] < n[j]));
      }
    }
  }

  TEST_CASE("profile rows, zero shots and determinism") {
    SyntheticBenchmarkConfig cfg;
    cfg.n_member = cfg.n_nonmember = 30;
    auto bench = synthetic_benchmark(cfg);
    auto split = split_prefix_pool(bench.dataset, 3, 3, 1);
    const auto a = shift_profile(split.eval, split.pool, *bench.provider, {0, 1, 3}, 50);
    CHECK(a.rows.size() == 12);
    for (const auto& row : a.rows) {
      if (row.shots == 0) CHECK(row.signed_w == 0.0);
    }
    const auto b = shift_profile(split.eval, split.pool, *bench.provider, {0, 1, 3}, 50);
    CHECK(a.to_csv() == b.to_csv());
    CHECK(a.to_csv().rfind("shots,pairing,signed_wasserstein\n", 0) == 0);
    CHECK(parse_shift_measure("sum") == ShiftMeasure::kSumLL);
    CHECK_THROWS_AS(parse_shift_measure("median"), Error);
    CHECK_THROWS_AS(shift_profile(split.eval, split.pool, *bench.provider, {4}, 50), Error);
  }
}
