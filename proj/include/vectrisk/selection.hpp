#pragma once

#include "vectrisk/cv.hpp"

#include <optional>
#include <string>
#include <vector>

namespace vectrisk {

struct QualityCriteria {
  double mean = 0.0;
  double quadratic_risk = 0.0;  // mean squared error
  double absolute_risk = 0.0;   // mean absolute error
  double deviance = 0.0;        // summed unit deviance
};

QualityCriteria quality_criteria(const Vector& y, const Vector& y_hat);

using PresenceMatrix = std::vector<std::vector<std::uint8_t>>;

/// Percentage of folds (rows) in which each group (column) is present.
std::vector<double> presence_percentages(const PresenceMatrix& presence);

/// Groups present in at least w percent of the folds, ascending. w in [1, 100].
std::vector<int> frequent_variables(const PresenceMatrix& presence, double w);

enum class Strategy { ldlm, ldls, fvm, fvs, bglm };

const char* strategy_name(Strategy s);
Strategy parse_strategy(const std::string& name);  // "ldlm", "LDLM", "b-glm", ...

struct SelectionConfig {
  double w = 100.0;
  double alpha = 0.05;
  GlmOptions glm;
};

struct VillageScore {
  std::string village;
  std::size_t n = 0;
  QualityCriteria criteria;
};

struct SelectionResult {
  Strategy strategy = Strategy::ldlm;
  std::vector<std::string> variables;
  Vector predictions;
  QualityCriteria criteria;
  bool intercept_only = false;
  std::vector<std::string> notes;  // flagged conditions, one line each
  std::vector<double> presence;    // percentages, FV strategies only
  std::vector<VillageScore> villages;
};

/// LDLM/LDLS reuse the report's held-out predictions and list the union of the
/// per-fold active groups. FVM/FVS refit the frequent-variable subset on each
/// outer training set of the report's plan and predict its test rows.
SelectionResult run_strategy(Strategy strategy, const CvReport& report, const DesignMatrix& design,
                             const Vector& y, const SelectionConfig& config = {});

struct BackwardStep {
  std::string group;
  double p_value = 0.0;
  bool dropped = false;  // false: the refit without it failed, group kept
};

struct BackwardResult {
  SelectionResult selection;
  std::vector<BackwardStep> steps;
  FitResult final_fit;  // on all rows, surviving groups
};

/// Backward elimination on an unpenalized GLM over `design` (base covariables
/// plus any explicitly chosen pairs). The group p-value is the smallest Wald
/// p-value among its columns; the group with the largest p-value above alpha
/// is dropped until none is left. Survivors are refitted on each outer
/// training set of `plan` to get held-out predictions.
BackwardResult backward_glm(const DesignMatrix& design, const Vector& y, const FoldPlan& plan,
                            const SelectionConfig& config = {});

/// Criteria per village level for held-out predictions.
std::vector<VillageScore> village_breakdown(const Vector& y, const Vector& y_hat, const Variable& village);

}  // namespace vectrisk
