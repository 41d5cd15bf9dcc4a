#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "helpers.hpp"
#include "mia/error.hpp"
#include "mia/metrics.hpp"

using namespace mia;

namespace {

double pairwise_auc(const std::vector<double>& m, const std::vector<double>& n) {
  double wins = 0.0;
  for (double a : m) {
    for (double b : n) wins += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
  }
  return wins / (static_cast<double>(m.size()) * static_cast<double>(n.size()));
}

double threshold_oracle(const std::vector<double>& m, const std::vector<double>& n, double level) {
  std::set<double> taus(m.begin(), m.end());
  taus.insert(n.begin(), n.end());
  taus.insert(std::numeric_limits<double>::infinity());
  double best = 0.0;
  for (double tau : taus) {
    const double fpr = std::count_if(n.begin(), n.end(), [&](double v) { return v >= tau; }) / double(n.size());
    const double tpr = std::count_if(m.begin(), m.end(), [&](double v) { return v >= tau; }) / double(m.size());
    if (fpr <= level) best = std::max(best, tpr);
  }
  return best;
}

std::vector<double> rounded(Rng& rng, std::size_t n) {
  // Coarse values so that ties actually occur.
  auto v = testing::random_values(rng, n, -3, 3);
  for (double& x : v) x = std::round(x * 10) / 10;
  return v;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("auc examples") {
    CHECK(roc_auc(std::vector<double>{2, 3}, std::vector<double>{0, 1}) == 1.0);
    CHECK(roc_auc(std::vector<double>{1, 1}, std::vector<double>{1, 1}) == 0.5);
    CHECK(roc_auc(std::vector<double>{0}, std::vector<double>{1}) == 0.0);
    CHECK_THROWS_AS(roc_auc(std::vector<double>{}, std::vector<double>{1}), Error);
    CHECK_THROWS_AS(roc_auc(std::vector<double>{std::nan("")}, std::vector<double>{1}), Error);
  }

  TEST_CASE("auc matches pairwise counting") {
    Rng rng(100);
    for (int trial = 0; trial < 50; ++trial) {
      const auto m = trial % 2 ? rounded(rng, 200) : testing::random_values(rng, 200, -1, 2);
      const auto n = trial % 2 ? rounded(rng, 200) : testing::random_values(rng, 200, -2, 1);
      CHECK(std::abs(roc_auc(m, n) - pairwise_auc(m, n)) <= 1e-12);
    }
  }

  TEST_CASE("auc symmetry and rank invariance") {
    Rng rng(101);
    for (int trial = 0; trial < 30; ++trial) {
      auto m = testing::random_values(rng, 50, -1, 1);
      auto n = testing::random_values(rng, 60, -1, 1);
      CHECK(roc_auc(m, n) + roc_auc(n, m) == doctest::Approx(1.0).epsilon(1e-12));
      const double before = roc_auc(m, n);
      for (double& x : m) x = std::exp(3 * x) + 1;
      for (double& x : n) x = std::exp(3 * x) + 1;
      CHECK(roc_auc(m, n) == doctest::Approx(before).epsilon(1e-12));
    }
  }

  TEST_CASE("tpr at fpr examples") {
    CHECK(tpr_at_fpr(std::vector<double>{2, 3}, std::vector<double>{0, 1}, 0.05) == 1.0);
    CHECK(tpr_at_fpr(std::vector<double>{1}, std::vector<double>{2}, 0.05) == 0.0);
    CHECK_THROWS_AS(tpr_at_fpr(std::vector<double>{1}, std::vector<double>{2}, 0.0), Error);
    CHECK_THROWS_AS(tpr_at_fpr(std::vector<double>{1}, std::vector<double>{2}, 1.0), Error);
  }

  TEST_CASE("tpr at fpr matches threshold enumeration") {
    Rng rng(102);
    for (int trial = 0; trial < 50; ++trial) {
      const auto m = trial % 2 ? rounded(rng, 200) : testing::random_values(rng, 200, -1, 2);
      const auto n = trial % 2 ? rounded(rng, 200) : testing::random_values(rng, 200, -2, 1);
      double prev = 0.0;
      for (double level : {0.01, 0.05, 0.1, 0.3, 0.9}) {
        const double got = tpr_at_fpr(m, n, level);
        CHECK(got == threshold_oracle(m, n, level));
        CHECK(got >= prev);
        prev = got;
      }
    }
  }

  TEST_CASE("classify") {
    CHECK(classify(1.0, 1.0) == Label::kMember);
    CHECK(classify(0.999, 1.0) == Label::kNonmember);
    CHECK(classify(-5, -10) == Label::kMember);
  }

  TEST_CASE("evaluate splits by label") {
    std::vector<MethodScore> scores(4);
    const double values[] = {3, 2, 1, 0};
    for (int i = 0; i < 4; ++i) {
      scores[i].sample_id = std::to_string(i);
      scores[i].value = values[i];
    }
    const std::vector<Label> labels{Label::kMember, Label::kMember, Label::kNonmember, Label::kNonmember};
    const auto r = evaluate("loss", {}, scores, labels, {0.05, 0.5});
    CHECK(r.auc == 1.0);
    CHECK(r.n_members == 2);
    CHECK(r.n_nonmembers == 2);
    CHECK(r.tpr_at_fpr.at(0.05) == 1.0);
    CHECK(fpr_key(0.05) == "0.05");
    CHECK_THROWS_AS(evaluate("loss", {}, scores, {Label::kMember, Label::kMember, Label::kMember, Label::kMember}, {0.05}),
                    Error);
  }
}
