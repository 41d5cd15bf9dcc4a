#include "mia/shift.hpp"

#include <algorithm>
#include <cmath>

#include "mia/error.hpp"
#include "mia/parallel.hpp"
#include "mia/scoring.hpp"

namespace mia {

namespace {

void check_samples(std::span<const double> p, std::span<const double> q, std::size_t bins) {
  if (p.empty() || q.empty()) throw Error(ErrorCode::kValidation, "wasserstein: empty sample list");
  if (bins < 2) throw Error(ErrorCode::kValidation, "wasserstein: bins must be >= 2");
  for (double v : p) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFiniteInput, "wasserstein: non-finite sample");
  }
  for (double v : q) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFiniteInput, "wasserstein: non-finite sample");
  }
}

double plain_mean(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v;
  return acc / static_cast<double>(x.size());
}

}  // namespace

double wasserstein(std::span<const double> p_samples, std::span<const double> q_samples, std::size_t bins) {
  check_samples(p_samples, q_samples, bins);
  const auto [pmin, pmax] = std::minmax_element(p_samples.begin(), p_samples.end());
  const auto [qmin, qmax] = std::minmax_element(q_samples.begin(), q_samples.end());
  const double lo = std::min(*pmin, *qmin);
  const double hi = std::max(*pmax, *qmax);
  if (lo == hi) return 0.0;
  const double width = (hi - lo) / static_cast<double>(bins);

  auto histogram = [&](std::span<const double> xs) {
    std::vector<double> counts(bins, 0.0);
    for (double x : xs) {
      auto cell = static_cast<std::size_t>((x - lo) / width);
      counts[std::min(cell, bins - 1)] += 1.0;
    }
    return counts;
  };
  const auto hp = histogram(p_samples);
  const auto hq = histogram(q_samples);
  const double np = static_cast<double>(p_samples.size());
  const double nq = static_cast<double>(q_samples.size());
  double cp = 0.0, cq = 0.0, total = 0.0;
  for (std::size_t c = 0; c < bins; ++c) {
    cp += hp[c];
    cq += hq[c];
    total += std::fabs(cp / np - cq / nq) * width;
  }
  return total;
}

double signed_wasserstein(std::span<const double> p_samples, std::span<const double> q_samples, std::size_t bins) {
  const double w = wasserstein(p_samples, q_samples, bins);
  const double diff = plain_mean(q_samples) - plain_mean(p_samples);
  if (diff > 0.0) return w;
  if (diff < 0.0) return -w;
  return 0.0;
}

std::vector<double> min_max_normalize(std::span<const double> scores) {
  if (scores.empty()) throw Error(ErrorCode::kValidation, "min_max_normalize: empty list");
  const auto [lo_it, hi_it] = std::minmax_element(scores.begin(), scores.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  std::vector<double> out(scores.size(), 0.5);
  if (hi == lo) return out;
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = (scores[i] - lo) / (hi - lo);
  return out;
}

std::string_view to_string(Pairing pairing) {
  switch (pairing) {
    case Pairing::kMemberGivenM: return "member_given_M";
    case Pairing::kMemberGivenNM: return "member_given_NM";
    case Pairing::kNonmemberGivenM: return "nonmember_given_M";
    case Pairing::kNonmemberGivenNM: return "nonmember_given_NM";
  }
  return "?";
}

std::string_view to_string(ShiftMeasure measure) {
  return measure == ShiftMeasure::kMeanLL ? "mean" : "sum";
}

ShiftMeasure parse_shift_measure(std::string_view name) {
  if (name == "mean") return ShiftMeasure::kMeanLL;
  if (name == "sum") return ShiftMeasure::kSumLL;
  throw Error(ErrorCode::kValidation, "unknown shift measure '" + std::string(name) + "' (mean|sum)");
}

std::string ShiftProfile::to_csv() const {
  std::string out = "shots,pairing,signed_wasserstein\n";
  for (const auto& r : rows) {
    out += std::to_string(r.shots) + "," + std::string(to_string(r.pairing)) + "," + format_number(r.signed_w) + "\n";
  }
  return out;
}

ShiftProfile shift_profile(const Dataset& dataset, const PrefixPool& pool, const Provider& provider,
                           const std::vector<std::size_t>& shots_list, std::size_t bins, ShiftMeasure measure) {
  if (dataset.count(Label::kMember) == 0 || dataset.count(Label::kNonmember) == 0) {
    throw Error(ErrorCode::kValidation, "shift_profile needs both members and non-members");
  }
  std::size_t max_shots = 0;
  for (std::size_t s : shots_list) max_shots = std::max(max_shots, s);
  if (max_shots > pool.member_shots.size() || max_shots > pool.nonmember_shots.size()) {
    throw Error(ErrorCode::kInsufficientShots, "pool cannot supply " + std::to_string(max_shots) + " shots of each kind");
  }

  std::vector<const Sample*> members, nonmembers;
  for (const auto& s : dataset.samples) {
    if (s.label == Label::kMember) members.push_back(&s);
    if (s.label == Label::kNonmember) nonmembers.push_back(&s);
  }
  auto mean_lls = [&](const std::vector<const Sample*>& group, const std::optional<std::string>& context) {
    std::vector<double> out(group.size());
    parallel_for(group.size(), provider.max_concurrency(), [&](std::size_t i) {
      ScoreRequest req;
      req.sample_id = group[i]->id;
      req.text = group[i]->text;
      req.context = context;
      const TokenScores ts = provider.score(req);
      const double ll = mean_ll(ts);
      out[i] = measure == ShiftMeasure::kMeanLL ? ll : ll * static_cast<double>(ts.size());
    });
    return out;
  };
  const auto base_m = mean_lls(members, std::nullopt);
  const auto base_n = mean_lls(nonmembers, std::nullopt);

  ShiftProfile profile;
  profile.bins = bins;
  for (std::size_t shots : shots_list) {
    if (shots == 0) {
      for (Pairing p : {Pairing::kMemberGivenM, Pairing::kMemberGivenNM, Pairing::kNonmemberGivenM,
                        Pairing::kNonmemberGivenNM}) {
        const auto& base = (p == Pairing::kMemberGivenM || p == Pairing::kMemberGivenNM) ? base_m : base_n;
        profile.rows.push_back({0, p, signed_wasserstein(base, base, bins)});
      }
      continue;
    }
    const std::string member_prefix = build_prefix(pool, PrefixKind::kMember, shots);
    const std::string nonmember_prefix = build_prefix(pool, PrefixKind::kNonmember, shots);
    profile.rows.push_back({shots, Pairing::kMemberGivenM, signed_wasserstein(base_m, mean_lls(members, member_prefix), bins)});
    profile.rows.push_back(
        {shots, Pairing::kMemberGivenNM, signed_wasserstein(base_m, mean_lls(members, nonmember_prefix), bins)});
    profile.rows.push_back(
        {shots, Pairing::kNonmemberGivenM, signed_wasserstein(base_n, mean_lls(nonmembers, member_prefix), bins)});
    profile.rows.push_back(
        {shots, Pairing::kNonmemberGivenNM, signed_wasserstein(base_n, mean_lls(nonmembers, nonmember_prefix), bins)});
  }
  return profile;
}

}  // namespace mia
