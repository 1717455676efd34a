#include "vectrisk/cv.hpp"

#include "vectrisk/random.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <map>
#include <thread>

namespace vectrisk {

namespace {

const char* kModule = "lolo-dcv";

[[noreturn]] void fail(const std::string& msg) { throw ValidationError(kModule, msg); }

Vector gather(const Vector& v, const IndexList& rows) {
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Index>(i)] = v[rows[i]];
  return out;
}

// Mean unit deviance of exp(intercept + x beta) against y; +inf when the
// linear predictor overflows.
double mean_deviance(const Vector& y, const Matrix& x, double intercept, const Vector& beta) {
  const Vector eta = (x * beta).array() + intercept;
  double total = 0.0;
  for (Index i = 0; i < y.size(); ++i) {
    const double mu = std::exp(eta[i]);
    if (!std::isfinite(mu) || !(mu > 0.0)) return std::numeric_limits<double>::infinity();
    total += deviance_unit(y[i], mu);
  }
  return total / static_cast<double>(y.size());
}

}  // namespace

// ---------------------------------------------------------------------------
// Folds

IndexList FoldPlan::training_rows(int fold) const {
  IndexList out;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] != fold) out.push_back(static_cast<Index>(i));
  }
  return out;
}

IndexList FoldPlan::test_rows(int fold) const {
  IndexList out;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] == fold) out.push_back(static_cast<Index>(i));
  }
  return out;
}

std::vector<int> quartile_strata(const Vector& y) {
  if (y.size() == 0) fail("strata of an empty target");
  std::vector<double> sorted(y.data(), y.data() + y.size());
  std::sort(sorted.begin(), sorted.end());
  const double edges[3] = {percentile(sorted, 0.25), percentile(sorted, 0.5), percentile(sorted, 0.75)};
  std::vector<int> out(static_cast<std::size_t>(y.size()));
  for (Index i = 0; i < y.size(); ++i) {
    out[static_cast<std::size_t>(i)] = static_cast<int>(std::lower_bound(edges, edges + 3, y[i]) - edges);
  }
  return out;
}

FoldPlan make_folds_from_strata(const std::vector<int>& strata, int n_folds, std::uint64_t seed) {
  const auto n = static_cast<long>(strata.size());
  if (n_folds < 2) fail("at least 2 folds are required");
  if (n_folds > n) {
    fail("fold count " + std::to_string(n_folds) + " exceeds observation count " + std::to_string(n));
  }
  if (2L * n_folds > n) {
    fail("need at least 2 observations per fold (" + std::to_string(n) + " observations, " +
         std::to_string(n_folds) + " folds)");
  }
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < strata.size(); ++i) members[strata[i]].push_back(i);

  FoldPlan plan;
  plan.n_folds = n_folds;
  plan.seed = seed;
  plan.strata = strata;
  plan.assignment.assign(strata.size(), -1);
  Rng rng(seed);
  long counter = 0;
  for (auto& [label, rows] : members) {
    rng.shuffle(rows);
    for (std::size_t r : rows) plan.assignment[r] = static_cast<int>(counter++ % n_folds);
  }
  return plan;
}

FoldPlan make_stratified_folds(const Vector& y, int n_folds, std::uint64_t seed) {
  if (n_folds > y.size()) {
    fail("fold count " + std::to_string(n_folds) + " exceeds observation count " + std::to_string(y.size()));
  }
  return make_folds_from_strata(quartile_strata(y), n_folds, seed);
}

// ---------------------------------------------------------------------------
// Inner cross-validation

CvCurve inner_cv(const Matrix& x, const Vector& y, const IndexList& rows, const LambdaGrid& grid,
                 int n_inner, std::uint64_t seed, const LassoOptions& options,
                 const std::vector<int>* strata) {
  const Vector ya = gather(y, rows);
  std::vector<int> labels;
  if (strata) {
    for (Index r : rows) labels.push_back((*strata)[static_cast<std::size_t>(r)]);
  } else {
    labels = quartile_strata(ya);
  }
  const FoldPlan inner = make_folds_from_strata(labels, n_inner, seed);

  const std::size_t k_count = grid.size();
  std::vector<std::vector<double>> per_fold;
  CvCurve curve;
  curve.lambdas = grid.values;
  for (int f = 0; f < n_inner; ++f) {
    IndexList train;
    IndexList test;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      (inner.assignment[i] == f ? test : train).push_back(rows[i]);
    }
    const Vector yt = gather(y, train);
    if (!(yt.sum() > 0.0)) {
      curve.skipped_folds.push_back(f);
      continue;
    }
    const StandardizedDesign sd(x, train);
    const PathFit path = fit_path(sd, yt, grid, nullptr, options);
    const Matrix xh = x(test, Eigen::all);
    const Vector yh = gather(y, test);
    std::vector<double> dev(k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
      const auto& fit = path.fits[k];
      if (!fit.converged) ++curve.nonconverged_fits;
      dev[k] = mean_deviance(yh, xh, fit.intercept, fit.beta);
    }
    per_fold.push_back(std::move(dev));
  }
  if (per_fold.empty()) {
    throw NumericalError(kModule, "every inner fold has an all-zero training target");
  }
  curve.folds_used = static_cast<int>(per_fold.size());
  curve.mean.assign(k_count, 0.0);
  curve.sd.assign(k_count, 0.0);
  const double m = static_cast<double>(per_fold.size());
  for (std::size_t k = 0; k < k_count; ++k) {
    double sum = 0.0;
    for (const auto& d : per_fold) sum += d[k];
    const double mean = sum / m;
    double ss = 0.0;
    if (std::isfinite(mean)) {
      for (const auto& d : per_fold) ss += (d[k] - mean) * (d[k] - mean);
    }
    curve.mean[k] = mean;
    curve.sd[k] = per_fold.size() > 1 ? std::sqrt(ss / (m - 1.0)) : 0.0;
  }
  return curve;
}

LambdaChoice select_lambdas(const CvCurve& curve, OneSeRule rule) {
  if (curve.mean.empty() || curve.mean.size() != curve.sd.size() || curve.mean.size() != curve.lambdas.size()) {
    fail("select_lambdas needs a non-empty curve of consistent length");
  }
  auto argmin = [&](auto&& score) {
    std::size_t best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < curve.mean.size(); ++k) {
      const double s = score(k);
      if (s < best_score) {
        best_score = s;
        best = k;
      }
    }
    return best;
  };
  LambdaChoice c;
  const std::size_t kmin = argmin([&](std::size_t k) { return curve.mean[k]; });
  std::size_t kse = kmin;
  if (rule == OneSeRule::paper) {
    kse = argmin([&](std::size_t k) { return curve.mean[k] + curve.sd[k]; });
  } else {
    const double folds = std::max(curve.folds_used, 1);
    const double bound = curve.mean[kmin] + curve.sd[kmin] / std::sqrt(folds);
    for (std::size_t k = 0; k <= kmin; ++k) {
      if (curve.mean[k] <= bound) {
        kse = k;
        break;
      }
    }
  }
  c.min_index = static_cast<int>(kmin);
  c.se_index = static_cast<int>(kse);
  c.lambda_min = curve.lambdas[kmin];
  c.lambda_1se = curve.lambdas[kse];
  return c;
}

// ---------------------------------------------------------------------------
// Debiasing and presence

DebiasResult debias(const Matrix& x, const Vector& y, const IndexList& rows, const GroupIndex& groups,
                    const std::vector<int>& active, const GlmOptions& options, const Fallback* fallback) {
  if (groups.total_columns() != x.cols()) fail("debias: group layout does not match the design");
  const Vector yt = gather(y, rows);
  const Matrix xt = x(rows, Eigen::all);
  const auto constant = constant_columns(xt);

  IndexList candidates;
  std::vector<int> sorted = active;
  std::sort(sorted.begin(), sorted.end());
  for (int s : sorted) {
    const auto& g = groups[static_cast<std::size_t>(s)];
    bool reference_dropped = !g.is_indicator_partition();
    for (Index c = g.offset; c < g.end(); ++c) {
      if (constant[static_cast<std::size_t>(c)]) continue;
      if (!reference_dropped) {
        reference_dropped = true;
        continue;
      }
      candidates.push_back(c);
    }
  }

  // Gram-Schmidt against the intercept and the columns kept so far.
  DebiasResult out;
  const Index n = xt.rows();
  std::vector<Vector> basis;
  basis.push_back(Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n))));
  for (Index c : candidates) {
    Vector v = xt.col(c);
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& q : basis) v -= q.dot(v) * q;
    }
    const double scale = xt.col(c).norm();
    const double norm = v.norm();
    if (norm > 1e-9 * std::max(scale, 1.0)) {
      basis.push_back(v / norm);
      out.columns.push_back(c);
    }
  }

  const Matrix xs = xt(Eigen::all, out.columns);
  FitResult sub;
  bool ok = true;
  try {
    sub = fit_glm(xs, yt, options);
    ok = sub.converged && sub.beta.allFinite() && std::isfinite(sub.intercept);
  } catch (const NumericalError&) {
    ok = false;
  }

  FitResult& fit = out.fit;
  if (ok) {
    fit = sub;
    fit.beta = Vector::Zero(x.cols());
    fit.std_errors = Vector::Constant(x.cols(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < out.columns.size(); ++i) {
      fit.beta[out.columns[i]] = sub.beta[static_cast<Index>(i)];
      fit.std_errors[out.columns[i]] = sub.std_errors[static_cast<Index>(i)];
    }
    return out;
  }

  out.fallback = true;
  fit = FitResult{};
  if (fallback) {
    fit.intercept = fallback->intercept;
    fit.beta = fallback->beta;
  } else {
    fit.intercept = std::log(std::max(yt.mean(), std::numeric_limits<double>::min()));
    fit.beta = Vector::Zero(x.cols());
  }
  fit.std_errors = Vector::Constant(x.cols(), std::numeric_limits<double>::quiet_NaN());
  fit.iterations = sub.iterations;
  fit.converged = false;
  const Vector eta = (xt * fit.beta).array() + fit.intercept;
  fit.mu = eta.array().exp().matrix();
  if (fit.mu.allFinite() && yt.sum() > 0.0) {
    fit.deviance = total_deviance(yt, fit.mu);
    fit.null_deviance = null_deviance(yt);
    fit.log_likelihood = log_likelihood(yt, fit.mu);
    fit.resid_dev = fit.null_deviance - fit.deviance;
  }
  return out;
}

std::vector<std::uint8_t> presence(const Vector& beta, const GroupIndex& groups) {
  std::vector<std::uint8_t> out(groups.size(), 0);
  for (int s : active_groups(beta, groups)) out[static_cast<std::size_t>(s)] = 1;
  return out;
}

// ---------------------------------------------------------------------------
// LOLO-DCV

const char* rule_name(LambdaRule r) { return r == rule_min ? "lambda.min" : "lambda.1se"; }

std::vector<std::vector<std::uint8_t>> CvReport::presence_matrix(LambdaRule r) const {
  std::vector<std::vector<std::uint8_t>> out;
  out.reserve(folds.size());
  for (const auto& f : folds) out.push_back(f.rules[r].presence);
  return out;
}

int worker_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("VECTRISK_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

FoldRecord run_outer_fold(const DesignMatrix& design, const Vector& y, const FoldPlan& plan, int fold,
                          const DcvConfig& config, const std::vector<int>* strata) {
  if (plan.size() != static_cast<std::size_t>(y.size()) || design.rows() != y.size()) {
    fail("fold plan, design and target sizes differ");
  }
  FoldRecord rec;
  rec.fold = fold;
  rec.train = plan.training_rows(fold);
  rec.test = plan.test_rows(fold);
  const Vector yt = gather(y, rec.train);

  const StandardizedDesign sd(design.x, rec.train);
  rec.grid = lambda_grid(sd, yt, config.grid_size, config.grid_ratio);
  rec.curve = inner_cv(design.x, y, rec.train, rec.grid, config.n_inner,
                       derive_seed(config.seed, static_cast<std::uint64_t>(fold) + 1), config.lasso, strata);
  rec.choice = select_lambdas(rec.curve, config.one_se_rule);

  const int last = std::max(rec.choice.min_index, rec.choice.se_index);
  const PathFit path = fit_path(sd, yt, rec.grid, &design.groups, config.lasso, last + 1);
  const Matrix xh = design.x(rec.test, Eigen::all);
  for (LambdaRule r : kLambdaRules) {
    RuleOutcome& o = rec.rules[r];
    o.index = r == rule_min ? rec.choice.min_index : rec.choice.se_index;
    const PenalizedFit& fit = path.fits[static_cast<std::size_t>(o.index)];
    o.lambda = fit.lambda;
    o.penalized_intercept = fit.intercept;
    o.penalized_beta = fit.beta;
    o.penalized_converged = fit.converged;
    o.active = active_groups(fit.beta, design.groups);
    o.presence = presence(fit.beta, design.groups);
    const Fallback fb{fit.intercept, fit.beta};
    o.refit = debias(design.x, y, rec.train, design.groups, o.active, config.glm, &fb);
    o.predictions = predict(o.refit.fit.intercept, o.refit.fit.beta, xh);
  }
  return rec;
}

CvReport run_lolo_dcv(const DesignMatrix& design, const Vector& y, const FoldPlan& plan,
                      const DcvConfig& config, const std::vector<int>* strata) {
  if (plan.n_folds < 2) fail("outer plan needs at least 2 folds");
  CvReport report;
  report.config = config;
  report.plan = plan;
  report.groups = design.groups.names();
  report.folds.resize(static_cast<std::size_t>(plan.n_folds));

  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(plan.n_folds));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int k = next++; k < plan.n_folds; k = next++) {
      try {
        report.folds[static_cast<std::size_t>(k)] = run_outer_fold(design, y, plan, k, config, strata);
      } catch (...) {
        errors[static_cast<std::size_t>(k)] = std::current_exception();
      }
    }
  };
  const int workers = std::min(worker_count(config.threads), plan.n_folds);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (LambdaRule r : kLambdaRules) {
    Vector& pred = report.predictions[r];
    pred = Vector::Constant(y.size(), std::numeric_limits<double>::quiet_NaN());
    for (const auto& f : report.folds) {
      for (std::size_t i = 0; i < f.test.size(); ++i) pred[f.test[i]] = f.rules[r].predictions[static_cast<Index>(i)];
    }
  }
  return report;
}

namespace {

std::vector<int> village_strata(const Dataset& data) {
  if (!data.village()) fail("village stratification requires a village column");
  return data.village()->codes();
}

}  // namespace

FoldPlan outer_plan(const Dataset& data, const DcvConfig& config) {
  if (config.stratify_by == StratifyBy::village) {
    return make_folds_from_strata(village_strata(data), config.n_outer, config.seed);
  }
  return make_stratified_folds(data.target(), config.n_outer, config.seed);
}

CvReport run_lolo_dcv(const Dataset& data, const GroupSpec& group, const DcvConfig& config) {
  const auto base = assemble_group(data, group);
  const DesignMatrix design = expand_interactions(base);
  const FoldPlan plan = outer_plan(data, config);
  if (config.stratify_by == StratifyBy::village) {
    const auto strata = village_strata(data);
    return run_lolo_dcv(design, data.target(), plan, config, &strata);
  }
  return run_lolo_dcv(design, data.target(), plan, config);
}

}  // namespace vectrisk
