#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "mia/core.hpp"

namespace mia {

/// Area under the ROC curve as the Mann-Whitney statistic:
/// (#member > nonmember pairs + 0.5 * #ties) / (n_m * n_nm).
double roc_auc(std::span<const double> member_scores, std::span<const double> nonmember_scores);

/// Largest TPR over thresholds tau (score >= tau => member) whose FPR does not
/// exceed `fpr_level`. Step ROC, no interpolation.
double tpr_at_fpr(std::span<const double> member_scores, std::span<const double> nonmember_scores, double fpr_level);

/// Decision rule: member iff score >= tau.
Label classify(double score, double tau);

struct EvalReport {
  std::string method;
  std::map<std::string, double> params;
  double auc = 0.5;
  std::map<double, double> tpr_at_fpr;
  std::size_t n_members = 0;
  std::size_t n_nonmembers = 0;
  std::vector<MethodScore> score_records;
};

/// Builds a report from scores aligned with `labels` (unknown labels skipped).
EvalReport evaluate(const std::string& method, std::map<std::string, double> params,
                    std::vector<MethodScore> scores, const std::vector<Label>& labels,
                    const std::vector<double>& fpr_levels);

/// FPR level keys print as "0.05" etc.
std::string fpr_key(double level);

}  // namespace mia
