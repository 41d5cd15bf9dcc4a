#include "mia/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "mia/error.hpp"

namespace mia {

namespace {

void check_inputs(std::span<const double> members, std::span<const double> nonmembers) {
  if (members.empty() || nonmembers.empty()) throw Error(ErrorCode::kValidation, "both classes need at least one score");
  for (double v : members) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFiniteInput, "non-finite member score");
  }
  for (double v : nonmembers) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFiniteInput, "non-finite non-member score");
  }
}

}  // namespace

double roc_auc(std::span<const double> member_scores, std::span<const double> nonmember_scores) {
  check_inputs(member_scores, nonmember_scores);
  std::vector<double> m(member_scores.begin(), member_scores.end());
  std::vector<double> n(nonmember_scores.begin(), nonmember_scores.end());
  std::sort(m.begin(), m.end());
  std::sort(n.begin(), n.end());

  // Walk both sorted lists; for each distinct member value count non-members
  // strictly below and equal to it.
  std::uint64_t wins = 0;
  std::uint64_t ties = 0;
  std::size_t below = 0;
  std::size_t i = 0;
  while (i < m.size()) {
    const double v = m[i];
    std::size_t j = i;
    while (j < m.size() && m[j] == v) ++j;
    const std::uint64_t group = j - i;
    while (below < n.size() && n[below] < v) ++below;
    std::size_t equal_end = below;
    while (equal_end < n.size() && n[equal_end] == v) ++equal_end;
    wins += group * below;
    ties += group * (equal_end - below);
    i = j;
  }
  const double pairs = static_cast<double>(m.size()) * static_cast<double>(n.size());
  return (2.0 * static_cast<double>(wins) + static_cast<double>(ties)) / (2.0 * pairs);
}

double tpr_at_fpr(std::span<const double> member_scores, std::span<const double> nonmember_scores, double fpr_level) {
  check_inputs(member_scores, nonmember_scores);
  if (!(fpr_level > 0.0 && fpr_level < 1.0)) throw Error(ErrorCode::kValidation, "fpr_level must be in (0, 1)");
  std::vector<double> m(member_scores.begin(), member_scores.end());
  std::vector<double> n(nonmember_scores.begin(), nonmember_scores.end());
  std::sort(m.begin(), m.end(), std::greater<>());
  std::sort(n.begin(), n.end(), std::greater<>());
  std::vector<double> thresholds(m);
  thresholds.insert(thresholds.end(), n.begin(), n.end());
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  const double n_m = static_cast<double>(m.size());
  const double n_n = static_cast<double>(n.size());
  // tau = +inf admits nothing: TPR = FPR = 0.
  double best = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (double tau : thresholds) {
    while (tp < m.size() && m[tp] >= tau) ++tp;
    while (fp < n.size() && n[fp] >= tau) ++fp;
    if (static_cast<double>(fp) / n_n <= fpr_level) {
      best = std::max(best, static_cast<double>(tp) / n_m);
    } else {
      break;  // FPR only grows as tau decreases
    }
  }
  return best;
}

Label classify(double score, double tau) {
  if (!std::isfinite(score) || !std::isfinite(tau)) throw Error(ErrorCode::kNonFiniteInput, "classify: non-finite input");
  return score >= tau ? Label::kMember : Label::kNonmember;
}

std::string fpr_key(double level) { return format_number(level); }

EvalReport evaluate(const std::string& method, std::map<std::string, double> params, std::vector<MethodScore> scores,
                    const std::vector<Label>& labels, const std::vector<double>& fpr_levels) {
  if (scores.size() != labels.size()) throw Error(ErrorCode::kValidation, "scores and labels differ in length");
  std::vector<double> members, nonmembers;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] == Label::kMember) members.push_back(scores[i].value);
    if (labels[i] == Label::kNonmember) nonmembers.push_back(scores[i].value);
  }
  EvalReport r;
  r.method = method;
  r.params = std::move(params);
  r.auc = roc_auc(members, nonmembers);
  for (double level : fpr_levels) r.tpr_at_fpr[level] = tpr_at_fpr(members, nonmembers, level);
  r.n_members = members.size();
  r.n_nonmembers = nonmembers.size();
  r.score_records = std::move(scores);
  return r;
}

}  // namespace mia
