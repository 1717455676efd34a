#pragma once

#include "vectrisk/common.hpp"
#include "vectrisk/design.hpp"

#include <span>
#include <vector>

namespace vectrisk {

/// sign(z) * max(|z| - gamma, 0).
double soft_threshold(double z, double gamma);

/// Per-observation penalized Poisson log-likelihood
///   (1/n) sum log P(y_i | exp(intercept + x_i beta)) - lambda * |beta|_1.
/// The intercept is not penalized. Throws NumericalError on overflow.
double penalized_objective(const Vector& beta, double intercept, const Matrix& x, const Vector& y,
                           double lambda);

/// Training-row view of a design, centred and scaled to unit (population)
/// variance. Columns constant on the training rows, or excluded by the
/// caller, are left out and keep a zero coefficient.
class StandardizedDesign {
 public:
  /// `rows` empty means every row. `excluded` (optional) marks columns to drop.
  StandardizedDesign(const Matrix& x, std::span<const Index> rows = {},
                     const std::vector<bool>* excluded = nullptr);

  const Matrix& matrix() const noexcept { return xs_; }
  const Vector& center() const noexcept { return center_; }
  const Vector& scale() const noexcept { return scale_; }
  /// Original column of each standardized column.
  const IndexList& columns() const noexcept { return columns_; }
  Index rows() const noexcept { return xs_.rows(); }
  Index usable() const noexcept { return xs_.cols(); }
  Index original_width() const noexcept { return width_; }

  /// Maps standardized coefficients back to the original column layout.
  Vector to_original(const Vector& std_beta, double std_intercept, double& intercept) const;

 private:
  Matrix xs_;
  Vector center_;
  Vector scale_;
  IndexList columns_;
  Index width_ = 0;
};

/// Strictly decreasing, log-spaced penalty values.
struct LambdaGrid {
  std::vector<double> values;

  static LambdaGrid log_spaced(double lambda_max, int count, double ratio);

  double lambda_max() const { return values.front(); }
  double ratio() const { return values.back() / values.front(); }
  std::size_t size() const noexcept { return values.size(); }
};

/// lambda_max = max_j |<x_j, y - ybar>| / n over standardized columns, then
/// `count` values down to ratio * lambda_max.
LambdaGrid lambda_grid(const StandardizedDesign& design, const Vector& y, int count, double ratio);

struct LassoOptions {
  double cd_tol = 1e-7;     // max standardized coefficient change per sweep
  double kkt_tol = 1e-5;    // or: largest optimality residual of the sweep's surrogate
  long max_updates = 30000;   // coordinate updates per lambda
  int max_irls = 100;
  int max_halvings = 10;
};

struct PenalizedFit {
  double lambda = 0.0;
  double std_intercept = 0.0;
  Vector std_beta;  // standardized scale, one per usable column
  double intercept = 0.0;
  Vector beta;  // original scale, full design width
  double deviance = 0.0;
  bool converged = false;
  int irls_iterations = 0;
  long coordinate_updates = 0;
};

/// Optional instrumentation: the penalized quadratic surrogate after every
/// coordinate sweep, one inner vector per reweighting step.
struct LassoTrace {
  std::vector<std::vector<double>> surrogate;
};

/// Maximizes the per-observation penalized log-likelihood by coordinate
/// descent on the reweighted quadratic approximation. The intercept is
/// updated in closed form every sweep.
PenalizedFit fit_penalized(const StandardizedDesign& design, const Vector& y, double lambda,
                           const PenalizedFit* warm_start = nullptr, const LassoOptions& options = {},
                           LassoTrace* trace = nullptr);

struct KktReport {
  double max_violation = 0.0;
  bool ok = false;
};

/// Optimality certificate on the standardized scale. With g_j the gradient of
/// the per-observation log-likelihood: zero coefficients need |g_j| <=
/// lambda (1 + eps); nonzero ones need |g_j - lambda sign(b_j)| <= eps *
/// max(lambda, 1); the intercept needs |g_0| <= eps.
KktReport kkt_check(const StandardizedDesign& design, const Vector& y, double std_intercept,
                    const Vector& std_beta, double lambda, double eps = 1e-4);

struct PathFit {
  LambdaGrid grid;
  std::vector<PenalizedFit> fits;  // one per fitted lambda, grid order
  std::vector<double> deviance;
  std::vector<int> active_groups;
  bool all_converged = true;
};

/// Fits the grid in decreasing order with warm starts. `count` limits the
/// number of leading grid values fitted (all when negative). Active counts
/// use `groups` when given, else one group per column.
PathFit fit_path(const StandardizedDesign& design, const Vector& y, const LambdaGrid& grid,
                 const GroupIndex* groups = nullptr, const LassoOptions& options = {},
                 int count = -1);

/// Groups with a coefficient of magnitude above 1e-12.
std::vector<int> active_groups(const Vector& beta, const GroupIndex& groups);

}  // namespace vectrisk
