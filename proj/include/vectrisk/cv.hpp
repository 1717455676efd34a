#pragma once

#include "vectrisk/common.hpp"
#include "vectrisk/data_model.hpp"
#include "vectrisk/design.hpp"
#include "vectrisk/lasso.hpp"
#include "vectrisk/poisson.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace vectrisk {

// ---------------------------------------------------------------------------
// Folds

struct FoldPlan {
  int n_folds = 0;
  std::vector<int> assignment;  // fold of each observation, 0-based
  std::uint64_t seed = 0;
  std::vector<int> strata;

  IndexList training_rows(int fold) const;
  IndexList test_rows(int fold) const;
  std::size_t size() const noexcept { return assignment.size(); }
};

/// Stratum of each value: its quartile bin (edges at the 25/50/75th
/// percentiles, a value on an edge goes to the lower bin).
std::vector<int> quartile_strata(const Vector& y);

/// Within each stratum (ascending label), members are shuffled and dealt to
/// folds round-robin. The dealing counter carries over from one stratum to the
/// next, so fold sizes differ by at most one.
FoldPlan make_folds_from_strata(const std::vector<int>& strata, int n_folds, std::uint64_t seed);

/// Folds stratified by target quartile bins. Requires 2 <= n_folds and
/// 2 * n_folds <= y.size().
FoldPlan make_stratified_folds(const Vector& y, int n_folds, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Inner cross-validation

/// Held-out deviance along the grid. `mean` and `sd` are taken over the
/// per-fold mean unit deviance; sd is the sample standard deviation.
struct CvCurve {
  std::vector<double> lambdas;
  std::vector<double> mean;
  std::vector<double> sd;
  int folds_used = 0;
  std::vector<int> skipped_folds;  // degenerate (all-zero) training targets
  int nonconverged_fits = 0;
};

/// Cross-validation restricted to `rows` of (x, y). Each inner training set is
/// standardized on its own rows. `strata` (full length, optional) replaces the
/// target quartile bins when dealing the inner folds.
CvCurve inner_cv(const Matrix& x, const Vector& y, const IndexList& rows, const LambdaGrid& grid,
                 int n_inner, std::uint64_t seed, const LassoOptions& options = {},
                 const std::vector<int>* strata = nullptr);

enum class OneSeRule {
  paper,       // argmin of mean + sd
  within_1se,  // largest lambda with mean <= min mean + sd / sqrt(folds)
};

struct LambdaChoice {
  int min_index = 0;
  int se_index = 0;
  double lambda_min = 0.0;
  double lambda_1se = 0.0;
};

/// Ties go to the larger lambda (earlier grid index).
LambdaChoice select_lambdas(const CvCurve& curve, OneSeRule rule = OneSeRule::paper);

// ---------------------------------------------------------------------------
// Debiasing and presence

struct DebiasResult {
  FitResult fit;          // beta over the full design width
  IndexList columns;      // design columns entering the refit
  bool fallback = false;  // refit failed: penalized coefficients kept
};

/// Unpenalized refit on the columns of `active` groups, on `rows`. Columns
/// constant on the rows are left out, indicator partitions lose their first
/// remaining column, and columns linearly dependent on the intercept and the
/// columns before them are pruned.
struct Fallback {
  double intercept = 0.0;
  Vector beta;  // full width
};

/// `fallback` is used when the refit fails; without it the fallback is the
/// intercept-only model.
DebiasResult debias(const Matrix& x, const Vector& y, const IndexList& rows, const GroupIndex& groups,
                    const std::vector<int>& active, const GlmOptions& options = {},
                    const Fallback* fallback = nullptr);

/// 1 for each group with a coefficient above 1e-12 in magnitude.
std::vector<std::uint8_t> presence(const Vector& beta, const GroupIndex& groups);

// ---------------------------------------------------------------------------
// LOLO-DCV

enum class StratifyBy { target, village };

struct DcvConfig {
  int n_outer = 10;
  int n_inner = 10;
  std::uint64_t seed = 0;
  int grid_size = 100;
  double grid_ratio = 1e-3;
  OneSeRule one_se_rule = OneSeRule::paper;
  StratifyBy stratify_by = StratifyBy::target;
  int threads = 0;  // 0: VECTRISK_THREADS, else hardware concurrency
  LassoOptions lasso;
  GlmOptions glm;
};

enum LambdaRule { rule_min = 0, rule_1se = 1 };
inline constexpr std::array<LambdaRule, 2> kLambdaRules = {rule_min, rule_1se};
const char* rule_name(LambdaRule r);

struct RuleOutcome {
  int index = 0;
  double lambda = 0.0;
  double penalized_intercept = 0.0;
  Vector penalized_beta;  // original scale, full width
  bool penalized_converged = false;
  std::vector<int> active;
  DebiasResult refit;
  Vector predictions;  // on the fold's test rows, in test_rows order
  std::vector<std::uint8_t> presence;
};

struct FoldRecord {
  int fold = 0;
  IndexList train;
  IndexList test;
  LambdaGrid grid;
  CvCurve curve;
  LambdaChoice choice;
  std::array<RuleOutcome, 2> rules;
};

struct CvReport {
  DcvConfig config;
  FoldPlan plan;
  std::vector<std::string> groups;
  std::vector<FoldRecord> folds;
  std::array<Vector, 2> predictions;  // every observation, per rule

  /// N_f x N_cov presence rows for one rule.
  std::vector<std::vector<std::uint8_t>> presence_matrix(LambdaRule r) const;
};

/// Worker count: `requested` if positive, else VECTRISK_THREADS, else the
/// hardware concurrency; at least 1.
int worker_count(int requested);

/// One outer fold: inner CV on the training rows, lambda choice, penalized
/// fits, debiased refits, held-out predictions and presence. Nothing from the
/// test rows is read except their covariables for prediction.
FoldRecord run_outer_fold(const DesignMatrix& design, const Vector& y, const FoldPlan& plan, int fold,
                          const DcvConfig& config, const std::vector<int>* strata = nullptr);

CvReport run_lolo_dcv(const DesignMatrix& design, const Vector& y, const FoldPlan& plan,
                      const DcvConfig& config, const std::vector<int>* strata = nullptr);

/// Expands the group's base covariables with all pairwise interactions and
/// runs the outer plan implied by `config` (target or village strata).
CvReport run_lolo_dcv(const Dataset& data, const GroupSpec& group, const DcvConfig& config);

/// Outer plan for a dataset under the configured stratification.
FoldPlan outer_plan(const Dataset& data, const DcvConfig& config);

}  // namespace vectrisk
