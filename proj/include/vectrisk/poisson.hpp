#pragma once

#include "vectrisk/common.hpp"

namespace vectrisk {

/// Unit Poisson deviance d(y|mu) = 2 (y log(y/mu) - (y - mu)), with y log y = 0
/// at y = 0. Throws NumericalError when mu <= 0.
double deviance_unit(double y, double mu);

/// log P(y|mu) from the Poisson mass e^{-mu} mu^y / y!.
double log_density(double y, double mu);

/// log P(y|mu) through the deviance: log(y^y e^{-y} / y!) - d(y|mu) / 2.
double log_density_via_deviance(double y, double mu);

/// Sum of log P(y_i|mu_i), including the -log(y_i!) terms.
double log_likelihood(const Vector& y, const Vector& mu);

/// Sum of unit deviances.
double total_deviance(const Vector& y, const Vector& mu);

/// Deviance of the intercept-only model (mu_i = mean(y)). Throws
/// NumericalError for an all-zero target.
double null_deviance(const Vector& y);

struct GlmOptions {
  double tol = 1e-8;  // relative deviance change
  int max_iter = 100;
  int max_halvings = 10;
};

/// Unpenalized Poisson log-link fit. `beta` has one entry per design column;
/// the intercept is kept apart.
struct FitResult {
  double intercept = 0.0;
  Vector beta;
  double intercept_se = 0.0;
  Vector std_errors;  // NaN when the information matrix is singular
  Vector mu;
  double deviance = 0.0;
  double null_deviance = 0.0;
  double resid_dev = 0.0;  // 2 (L(beta) - L(null))
  double log_likelihood = 0.0;
  bool converged = false;
  bool rank_deficient = false;
  int iterations = 0;
};

/// Iteratively reweighted least squares (Fisher scoring, log link) with step
/// halving. Rank-deficient working systems get the least-norm solution and
/// `rank_deficient` is set. Non-convergence is reported through `converged`.
FitResult fit_glm(const Matrix& x, const Vector& y, const GlmOptions& options = {});

/// exp(intercept + x * beta).
Vector predict(const FitResult& fit, const Matrix& x_new);
Vector predict(double intercept, const Vector& beta, const Matrix& x_new);

struct DevianceRatio {
  double model = 0.0;     // R = deviance / null deviance
  double residual = 0.0;  // r = resid_dev / null deviance
};

DevianceRatio deviance_ratio(const FitResult& fit);

}  // namespace vectrisk
