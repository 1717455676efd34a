#include "vectrisk/poisson.hpp"

#include <cmath>
#include <limits>

namespace vectrisk {

namespace {

const char* kModule = "poisson-core";

double xlogy(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(y); }

void check_mu(double mu) {
  if (!(mu > 0.0) || !std::isfinite(mu)) {
    throw NumericalError(kModule, "mean must be positive and finite");
  }
}

Vector exp_checked(const Vector& eta) {
  Vector mu = eta.array().exp().matrix();
  if (!mu.allFinite()) throw NumericalError(kModule, "diverged linear predictor");
  return mu;
}

}  // namespace

double deviance_unit(double y, double mu) {
  check_mu(mu);
  const double d = 2.0 * (xlogy(y, y) - xlogy(y, mu) - (y - mu));
  return d < 0.0 ? 0.0 : d;
}

double log_density(double y, double mu) {
  check_mu(mu);
  return xlogy(y, mu) - mu - std::lgamma(y + 1.0);
}

double log_density_via_deviance(double y, double mu) {
  return xlogy(y, y) - y - std::lgamma(y + 1.0) - 0.5 * deviance_unit(y, mu);
}

double log_likelihood(const Vector& y, const Vector& mu) {
  double sum = 0.0;
  for (Index i = 0; i < y.size(); ++i) sum += log_density(y[i], mu[i]);
  return sum;
}

double total_deviance(const Vector& y, const Vector& mu) {
  double sum = 0.0;
  for (Index i = 0; i < y.size(); ++i) sum += deviance_unit(y[i], mu[i]);
  return sum;
}

double null_deviance(const Vector& y) {
  if (y.size() == 0) throw ValidationError(kModule, "empty target");
  const double ybar = y.mean();
  if (!(ybar > 0.0)) throw NumericalError(kModule, "degenerate null model: all-zero target");
  return total_deviance(y, Vector::Constant(y.size(), ybar));
}

FitResult fit_glm(const Matrix& x, const Vector& y, const GlmOptions& options) {
  if (x.rows() != y.size()) {
    throw ValidationError(kModule, "design has " + std::to_string(x.rows()) + " rows but target has " +
                                       std::to_string(y.size()));
  }
  const Index n = x.rows();
  const Index p = x.cols() + 1;
  FitResult out;
  out.null_deviance = null_deviance(y);
  const double ybar = y.mean();

  Matrix a(n, p);
  a.col(0).setOnes();
  a.rightCols(x.cols()) = x;

  Vector coef = Vector::Zero(p);
  coef[0] = std::log(ybar);
  Vector eta = a * coef;
  Vector mu = exp_checked(eta);
  double dev = total_deviance(y, mu);

  Eigen::CompleteOrthogonalDecomposition<Matrix> cod;
  for (int iter = 1; iter <= options.max_iter; ++iter) {
    out.iterations = iter;
    const Vector sqrt_w = mu.array().sqrt().matrix();
    const Vector z = eta + ((y - mu).array() / mu.array()).matrix();
    cod.compute(sqrt_w.asDiagonal() * a);
    out.rank_deficient = cod.rank() < p;
    Vector next = cod.solve((sqrt_w.array() * z.array()).matrix());

    double next_dev = std::numeric_limits<double>::infinity();
    Vector next_eta;
    Vector next_mu;
    for (int halving = 0; halving <= options.max_halvings; ++halving) {
      next_eta = a * next;
      next_mu = next_eta.array().exp().matrix();
      if (next_mu.allFinite() && (next_mu.array() > 0.0).all()) {
        next_dev = total_deviance(y, next_mu);
        if (next_dev <= dev * (1.0 + 1e-12) + 1e-12) break;
      }
      next = 0.5 * (next + coef);
    }
    if (!std::isfinite(next_dev)) throw NumericalError(kModule, "diverged linear predictor");

    const double change = std::abs(next_dev - dev) / (std::abs(next_dev) + 0.1);
    coef = std::move(next);
    eta = std::move(next_eta);
    mu = std::move(next_mu);
    dev = next_dev;
    if (change < options.tol) {
      out.converged = true;
      break;
    }
  }

  out.intercept = coef[0];
  out.beta = coef.tail(x.cols());
  out.mu = mu;
  out.deviance = dev;
  out.log_likelihood = log_likelihood(y, mu);
  out.resid_dev = 2.0 * (out.log_likelihood - log_likelihood(y, Vector::Constant(n, ybar)));

  out.std_errors = Vector::Constant(x.cols(), std::numeric_limits<double>::quiet_NaN());
  out.intercept_se = std::numeric_limits<double>::quiet_NaN();
  if (!out.rank_deficient) {
    const Matrix info = a.transpose() * mu.asDiagonal() * a;
    Eigen::LLT<Matrix> llt(info);
    if (llt.info() == Eigen::Success) {
      const Matrix cov = llt.solve(Matrix::Identity(p, p));
      out.intercept_se = std::sqrt(cov(0, 0));
      for (Index j = 0; j < x.cols(); ++j) out.std_errors[j] = std::sqrt(cov(j + 1, j + 1));
    }
  }
  return out;
}

Vector predict(double intercept, const Vector& beta, const Matrix& x_new) {
  if (x_new.cols() != beta.size()) {
    throw ValidationError(kModule, "layout mismatch: fit has " + std::to_string(beta.size()) +
                                       " columns, new design has " + std::to_string(x_new.cols()));
  }
  const Vector eta = (x_new * beta).array() + intercept;
  return exp_checked(eta);
}

Vector predict(const FitResult& fit, const Matrix& x_new) {
  return predict(fit.intercept, fit.beta, x_new);
}

DevianceRatio deviance_ratio(const FitResult& fit) {
  if (!(fit.null_deviance > 0.0)) {
    throw NumericalError(kModule, "deviance ratio undefined: null deviance is zero");
  }
  return {fit.deviance / fit.null_deviance, fit.resid_dev / fit.null_deviance};
}

}  // namespace vectrisk
