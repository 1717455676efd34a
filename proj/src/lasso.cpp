#include "vectrisk/lasso.hpp"

#include "vectrisk/poisson.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vectrisk {

namespace {

const char* kModule = "lasso-path";

double l1_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.lpNorm<1>(); }

// Per-observation log-likelihood, dropping the -log(y!) constant.
double scaled_loglik_kernel(const Vector& y, const Vector& eta, const Vector& mu) {
  return (y.dot(eta) - mu.sum()) / static_cast<double>(y.size());
}

}  // namespace

double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

double penalized_objective(const Vector& beta, double intercept, const Matrix& x, const Vector& y,
                           double lambda) {
  if (x.rows() != y.size() || x.cols() != beta.size()) {
    throw ValidationError(kModule, "objective: dimension mismatch");
  }
  const Vector eta = (x * beta).array() + intercept;
  const Vector mu = eta.array().exp().matrix();
  if (!mu.allFinite()) throw NumericalError(kModule, "diverged linear predictor");
  double ll = 0.0;
  for (Index i = 0; i < y.size(); ++i) ll += y[i] * eta[i] - mu[i] - std::lgamma(y[i] + 1.0);
  return ll / static_cast<double>(y.size()) - lambda * l1_norm(beta);
}

// ---------------------------------------------------------------------------
// StandardizedDesign

StandardizedDesign::StandardizedDesign(const Matrix& x, std::span<const Index> rows,
                                       const std::vector<bool>* excluded)
    : width_(x.cols()) {
  const Index n = rows.empty() ? x.rows() : static_cast<Index>(rows.size());
  if (n < 1) throw ValidationError(kModule, "standardization needs at least one row");
  const auto constant = constant_columns(x, rows);
  for (Index j = 0; j < x.cols(); ++j) {
    const auto jj = static_cast<std::size_t>(j);
    if (constant[jj]) continue;
    if (excluded && jj < excluded->size() && (*excluded)[jj]) continue;
    columns_.push_back(j);
  }
  const auto p = static_cast<Index>(columns_.size());
  xs_.resize(n, p);
  center_.resize(p);
  scale_.resize(p);
  for (Index c = 0; c < p; ++c) {
    const Index j = columns_[static_cast<std::size_t>(c)];
    if (rows.empty()) {
      xs_.col(c) = x.col(j);
    } else {
      for (Index r = 0; r < n; ++r) xs_(r, c) = x(rows[static_cast<std::size_t>(r)], j);
    }
    const double m = xs_.col(c).mean();
    xs_.col(c).array() -= m;
    const double s = std::sqrt(xs_.col(c).squaredNorm() / static_cast<double>(n));
    xs_.col(c) /= s;
    center_[c] = m;
    scale_[c] = s;
  }
}

Vector StandardizedDesign::to_original(const Vector& std_beta, double std_intercept,
                                       double& intercept) const {
  Vector beta = Vector::Zero(width_);
  intercept = std_intercept;
  for (Index c = 0; c < usable(); ++c) {
    const double b = std_beta[c];
    if (b == 0.0) continue;
    const double raw = b / scale_[c];
    beta[columns_[static_cast<std::size_t>(c)]] = raw;
    intercept -= raw * center_[c];
  }
  return beta;
}

// ---------------------------------------------------------------------------
// Grid

LambdaGrid LambdaGrid::log_spaced(double lambda_max, int count, double ratio) {
  if (count < 2) throw ValidationError(kModule, "lambda grid needs at least 2 values");
  if (!(ratio > 0.0 && ratio < 1.0)) throw ValidationError(kModule, "lambda grid ratio must be in (0, 1)");
  if (!(lambda_max > 0.0) || !std::isfinite(lambda_max)) {
    throw NumericalError(kModule, "no signal: lambda_max is zero");
  }
  LambdaGrid grid;
  grid.values.resize(static_cast<std::size_t>(count));
  const double top = std::log(lambda_max);
  const double step = std::log(ratio) / static_cast<double>(count - 1);
  for (int k = 0; k < count; ++k) grid.values[static_cast<std::size_t>(k)] = std::exp(top + step * k);
  grid.values.front() = lambda_max;
  return grid;
}

LambdaGrid lambda_grid(const StandardizedDesign& design, const Vector& y, int count, double ratio) {
  if (design.rows() != y.size()) throw ValidationError(kModule, "grid: dimension mismatch");
  const Vector centred = y.array() - y.mean();
  double lambda_max = 0.0;
  if (design.usable() > 0) {
    lambda_max = (design.matrix().transpose() * centred).cwiseAbs().maxCoeff() /
                 static_cast<double>(y.size());
  }
  if (!(lambda_max > 1e-300)) throw NumericalError(kModule, "no signal: lambda_max is zero");
  return LambdaGrid::log_spaced(lambda_max, count, ratio);
}

// ---------------------------------------------------------------------------
// Solver

namespace {

// Quadratic surrogate of one reweighting step on the active columns, with the
// intercept profiled out: `gram` is (1/n) x' W x - cross cross' / mean(w),
// `cross` is (1/n) x' w and `grad` is (1/n) x' r for a working residual r that
// sums to zero (the intercept is at its optimum for the current coefficients).
struct ActiveBlock {
  IndexList cols;
  Matrix x;
  Matrix gram;
  Vector cross;
  Vector grad;
  Vector coef;

  Index size() const noexcept { return static_cast<Index>(cols.size()); }
};

}  // namespace

PenalizedFit fit_penalized(const StandardizedDesign& design, const Vector& y, double lambda,
                           const PenalizedFit* warm_start, const LassoOptions& options,
                           LassoTrace* trace) {
  const Matrix& x = design.matrix();
  const Index n = x.rows();
  const Index p = x.cols();
  if (y.size() != n) throw ValidationError(kModule, "fit: dimension mismatch");
  if (lambda < 0.0) throw ValidationError(kModule, "lambda must be non-negative");
  const double ybar = y.mean();
  if (!(ybar > 0.0)) throw NumericalError(kModule, "degenerate null model: all-zero target");
  const double inv_n = 1.0 / static_cast<double>(n);

  PenalizedFit out;
  out.lambda = lambda;
  double b0 = std::log(ybar);
  Vector b = Vector::Zero(p);
  if (warm_start && warm_start->std_beta.size() == p) {
    b0 = warm_start->std_intercept;
    b = warm_start->std_beta;
  }

  ActiveBlock act;
  std::vector<Index> slot(static_cast<std::size_t>(p), -1);
  Vector w = Vector::Ones(n);
  double w_mean = 1.0;

  auto gather = [&](const IndexList& add) {
    const Index old = act.size();
    const auto m = static_cast<Index>(add.size());
    act.x.conservativeResize(n, old + m);
    act.coef.conservativeResize(old + m);
    for (Index k = 0; k < m; ++k) {
      const Index j = add[static_cast<std::size_t>(k)];
      slot[static_cast<std::size_t>(j)] = old + k;
      act.cols.push_back(j);
      act.x.col(old + k) = x.col(j);
      act.coef[old + k] = b[j];
    }
  };

  // Surrogate blocks for active columns `first` onwards.
  auto build = [&](Index first, const Vector& resid) {
    const Index m = act.size();
    const Index k = m - first;
    const Matrix xw = act.x.rightCols(k).array().colwise() * w.array();
    act.cross.conservativeResize(m);
    act.cross.tail(k) = xw.colwise().sum().transpose() * inv_n;
    act.gram.conservativeResize(m, m);
    if (first == 0) {
      const Matrix xs = act.x.array().colwise() * (w.array() * inv_n).sqrt();
      act.gram.setZero();
      act.gram.selfadjointView<Eigen::Lower>().rankUpdate(xs.transpose());
      act.gram.triangularView<Eigen::StrictlyUpper>() = act.gram.transpose();
    } else {
      act.gram.rightCols(k).noalias() = act.x.transpose() * xw * inv_n;
      act.gram.bottomLeftCorner(k, first) = act.gram.topRightCorner(first, k).transpose();
    }
    act.gram.rightCols(k).noalias() -= act.cross * act.cross.tail(k).transpose() / w_mean;
    act.gram.bottomLeftCorner(k, first).noalias() -=
        act.cross.tail(k) * act.cross.head(first).transpose() / w_mean;
    act.grad.conservativeResize(m);
    act.grad.tail(k).noalias() = act.x.rightCols(k).transpose() * resid * inv_n;
  };

  {
    IndexList warm;
    for (Index j = 0; j < p; ++j) {
      if (b[j] != 0.0) warm.push_back(j);
    }
    gather(warm);
  }

  auto linear_predictor = [&](double intercept, const Vector& coef) {
    Vector eta = Vector::Constant(n, intercept);
    if (act.size() > 0) eta.noalias() += act.x * coef;
    return eta;
  };
  auto objective_at = [&](const Vector& eta, const Vector& mu, const Vector& coef) {
    return scaled_loglik_kernel(y, eta, mu) - lambda * l1_norm(coef);
  };

  Vector eta = linear_predictor(b0, act.coef);
  Vector mu = eta.array().exp().matrix();
  if (!mu.allFinite()) throw NumericalError(kModule, "diverged linear predictor");
  double dev = total_deviance(y, mu);
  double objective = objective_at(eta, mu, act.coef);

  auto violation = [&](double g, double coef) {
    if (coef == 0.0) return std::max(std::abs(g) - lambda, 0.0);
    return std::abs(g - (coef > 0 ? lambda : -lambda));
  };
  auto surrogate_violation = [&] {
    double worst = 0.0;
    for (Index k = 0; k < act.size(); ++k) worst = std::max(worst, violation(act.grad[k], act.coef[k]));
    return worst;
  };
  // kkt_check on the exact gradient, with half its tolerance as margin.
  auto certified = [&] {
    constexpr double eps = 0.5e-4;
    const Vector r = y - mu;
    if (std::abs(r.mean()) > eps) return false;
    const Vector g = (x.transpose() * r) * inv_n;
    for (Index j = 0; j < p; ++j) {
      const Index k = slot[static_cast<std::size_t>(j)];
      const double c = k >= 0 ? act.coef[k] : 0.0;
      if (violation(g[j], c) > eps * (c == 0.0 ? lambda : std::max(lambda, 1.0))) return false;
    }
    return true;
  };

  long updates = 0;
  bool budget_exhausted = false;

  for (int iter = 1; iter <= options.max_irls; ++iter) {
    out.irls_iterations = iter;
    w = mu;
    w_mean = w.mean();
    const double b0_start = b0;
    const Vector coef_start = act.coef;
    const Vector r0 = y - mu;

    // Working residual after moving the coefficients from the start of this
    // step (columns added since started at zero).
    auto residual_now = [&] {
      Vector delta = act.coef;
      delta.head(coef_start.size()) -= coef_start;
      Vector shift = Vector::Constant(n, b0 - b0_start);
      if (act.size() > 0) shift.noalias() += act.x * delta;
      return Vector(r0.array() - w.array() * shift.array());
    };
    auto record = [&] {
      if (!trace) return;
      const Vector r = residual_now();
      const double q = (r.array().square() / w.array()).sum() * 0.5 * inv_n;
      trace->surrogate.back().push_back(-q - lambda * l1_norm(act.coef));
    };
    // Adds inactive columns whose gradient exceeds lambda.
    auto screen = [&](const Vector& r) {
      const Vector g = (x.transpose() * r) * inv_n;
      IndexList add;
      for (Index j = 0; j < p; ++j) {
        if (slot[static_cast<std::size_t>(j)] < 0 && std::abs(g[j]) > lambda) add.push_back(j);
      }
      if (add.empty()) return false;
      const Index first = act.size();
      gather(add);
      build(first, r);
      return true;
    };

    b0 += r0.sum() * inv_n / w_mean;
    {
      const Vector r = residual_now();
      build(0, r);
      if (trace) trace->surrogate.emplace_back();
      record();
      screen(r);
    }

    while (!budget_exhausted) {
      while (true) {
        double max_change = 0.0;
        double intercept_change = 0.0;
        for (Index k = 0; k < act.size(); ++k) {
          const double v = act.gram(k, k);
          if (!(v > 0.0)) continue;
          const double old = act.coef[k];
          const double next = soft_threshold(act.grad[k] + v * old, lambda) / v;
          ++updates;
          if (next == old) continue;
          const double d = next - old;
          act.coef[k] = next;
          act.grad.noalias() -= d * act.gram.col(k);
          intercept_change -= d * act.cross[k] / w_mean;
          max_change = std::max(max_change, std::abs(d));
        }
        b0 += intercept_change;
        max_change = std::max(max_change, std::abs(intercept_change));
        record();
        if (max_change < options.cd_tol || surrogate_violation() < options.kkt_tol) break;
        if (updates >= options.max_updates) {
          budget_exhausted = true;
          break;
        }
      }
      if (budget_exhausted || !screen(residual_now())) break;
    }

    // Move to the surrogate optimum, halving while the true objective drops.
    Vector coef = act.coef;
    Vector base = Vector::Zero(act.size());
    base.head(coef_start.size()) = coef_start;
    auto evaluate = [&](double intercept, const Vector& c, Vector& e, Vector& m) {
      e = linear_predictor(intercept, c);
      m = e.array().exp().matrix();
      return m.allFinite() ? objective_at(e, m, c) : -std::numeric_limits<double>::infinity();
    };
    Vector next_eta;
    Vector next_mu;
    double next_objective = evaluate(b0, coef, next_eta, next_mu);
    for (int h = 0;
         h < options.max_halvings && !(next_objective >= objective - 1e-15 * std::abs(objective)); ++h) {
      b0 = 0.5 * (b0 + b0_start);
      coef = 0.5 * (coef + base);
      next_objective = evaluate(b0, coef, next_eta, next_mu);
    }
    if (!next_mu.allFinite()) throw NumericalError(kModule, "diverged linear predictor");
    act.coef = coef;
    eta = std::move(next_eta);
    mu = std::move(next_mu);
    objective = next_objective;
    const double next_dev = total_deviance(y, mu);
    dev = next_dev;
    if (budget_exhausted) break;
    // Deviance can keep creeping along flat directions of the penalized
    // objective, so the certificate alone ends the loop once it passes.
    if (certified()) {
      out.converged = true;
      break;
    }
  }

  b.setZero();
  for (Index k = 0; k < act.size(); ++k) b[act.cols[static_cast<std::size_t>(k)]] = act.coef[k];
  out.std_intercept = b0;
  out.std_beta = std::move(b);
  out.beta = design.to_original(out.std_beta, b0, out.intercept);
  out.deviance = dev;
  out.coordinate_updates = updates;
  return out;
}

KktReport kkt_check(const StandardizedDesign& design, const Vector& y, double std_intercept,
                    const Vector& std_beta, double lambda, double eps) {
  const Matrix& x = design.matrix();
  if (std_beta.size() != x.cols() || y.size() != x.rows()) {
    throw ValidationError(kModule, "kkt: dimension mismatch");
  }
  const double inv_n = 1.0 / static_cast<double>(y.size());
  const Vector eta = (x * std_beta).array() + std_intercept;
  const Vector resid = y - eta.array().exp().matrix();
  KktReport report;
  report.ok = true;
  const double g0 = resid.sum() * inv_n;
  report.max_violation = std::abs(g0);
  if (std::abs(g0) > eps) report.ok = false;
  const Vector g = (x.transpose() * resid) * inv_n;
  for (Index j = 0; j < x.cols(); ++j) {
    if (std_beta[j] == 0.0) {
      const double excess = std::abs(g[j]) - lambda;
      report.max_violation = std::max(report.max_violation, excess);
      if (std::abs(g[j]) > lambda * (1.0 + eps)) report.ok = false;
    } else {
      const double gap = std::abs(g[j] - lambda * (std_beta[j] > 0 ? 1.0 : -1.0));
      report.max_violation = std::max(report.max_violation, gap);
      if (gap > eps * std::max(lambda, 1.0)) report.ok = false;
    }
  }
  return report;
}

std::vector<int> active_groups(const Vector& beta, const GroupIndex& groups) {
  std::vector<int> out;
  for (std::size_t s = 0; s < groups.size(); ++s) {
    const auto& g = groups[s];
    for (Index c = g.offset; c < g.end(); ++c) {
      if (std::abs(beta[c]) > 1e-12) {
        out.push_back(static_cast<int>(s));
        break;
      }
    }
  }
  return out;
}

PathFit fit_path(const StandardizedDesign& design, const Vector& y, const LambdaGrid& grid,
                 const GroupIndex* groups, const LassoOptions& options, int count) {
  if (grid.values.empty()) throw ValidationError(kModule, "empty lambda grid");
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (!(grid.values[k] < grid.values[k - 1])) {
      throw ValidationError(kModule, "lambda grid must be strictly decreasing");
    }
  }
  const std::size_t total =
      count < 0 ? grid.size() : std::min(grid.size(), static_cast<std::size_t>(count));
  PathFit path;
  path.grid = grid;
  path.fits.reserve(total);
  for (std::size_t k = 0; k < total; ++k) {
    const PenalizedFit* warm = path.fits.empty() ? nullptr : &path.fits.back();
    PenalizedFit fit = fit_penalized(design, y, grid.values[k], warm, options);
    path.all_converged = path.all_converged && fit.converged;
    path.deviance.push_back(fit.deviance);
    if (groups) {
      path.active_groups.push_back(static_cast<int>(active_groups(fit.beta, *groups).size()));
    } else {
      path.active_groups.push_back(static_cast<int>((fit.beta.array().abs() > 1e-12).count()));
    }
    path.fits.push_back(std::move(fit));
  }
  return path;
}

}  // namespace vectrisk
