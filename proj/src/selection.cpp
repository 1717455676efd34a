#include "vectrisk/selection.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

namespace vectrisk {

namespace {

const char* kModule = "selection-strategies";

[[noreturn]] void fail(const std::string& msg) { throw ValidationError(kModule, msg); }

std::vector<std::string> names_of(const GroupIndex& groups, const std::vector<int>& idx) {
  std::vector<std::string> out;
  out.reserve(idx.size());
  for (int g : idx) out.push_back(groups[static_cast<std::size_t>(g)].name);
  return out;
}

IndexList all_rows(Index n) {
  IndexList rows(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = i;
  return rows;
}

// Held-out predictions from a fixed group subset refitted on each outer
// training set.
Vector heldout_refit(const DesignMatrix& design, const Vector& y, const FoldPlan& plan,
                     const std::vector<int>& subset, const GlmOptions& glm, std::vector<std::string>& notes) {
  if (plan.size() != static_cast<std::size_t>(y.size())) fail("fold plan and target sizes differ");
  Vector pred = Vector::Zero(y.size());
  for (int k = 0; k < plan.n_folds; ++k) {
    const IndexList train = plan.training_rows(k);
    const IndexList test = plan.test_rows(k);
    const DebiasResult refit = debias(design.x, y, train, design.groups, subset, glm);
    if (refit.fallback) {
      notes.push_back("fold " + std::to_string(k + 1) + ": refit did not converge, intercept-only predictions");
    }
    const Vector p = predict(refit.fit.intercept, refit.fit.beta, design.x(test, Eigen::all));
    for (std::size_t i = 0; i < test.size(); ++i) pred[test[i]] = p[static_cast<Index>(i)];
  }
  return pred;
}

double wald_p(double beta, double se) {
  if (!std::isfinite(se) || !(se > 0.0)) return 1.0;
  return std::erfc(std::abs(beta / se) / std::sqrt(2.0));
}

// Smallest column p-value of each group in `current`; 1 for a group with no
// column left in the fit.
std::vector<double> group_p_values(const DebiasResult& fit, const GroupIndex& groups) {
  std::vector<double> p(groups.size(), 1.0);
  for (Index c : fit.columns) {
    const auto g = static_cast<std::size_t>(groups.group_of_column(c));
    p[g] = std::min(p[g], wald_p(fit.fit.beta[c], fit.fit.std_errors[c]));
  }
  return p;
}

}  // namespace

QualityCriteria quality_criteria(const Vector& y, const Vector& y_hat) {
  if (y.size() != y_hat.size()) {
    fail("quality_criteria: " + std::to_string(y.size()) + " observations but " + std::to_string(y_hat.size()) +
         " predictions");
  }
  if (y.size() == 0) fail("quality_criteria: no observations");
  QualityCriteria q;
  const double n = static_cast<double>(y.size());
  for (Index i = 0; i < y.size(); ++i) {
    if (!(y_hat[i] > 0.0) || !std::isfinite(y_hat[i])) {
      throw NumericalError(kModule, "non-positive prediction at row " + std::to_string(i + 1));
    }
    const double e = y[i] - y_hat[i];
    q.mean += y_hat[i];
    q.quadratic_risk += e * e;
    q.absolute_risk += std::abs(e);
    q.deviance += deviance_unit(y[i], y_hat[i]);
  }
  q.mean /= n;
  q.quadratic_risk /= n;
  q.absolute_risk /= n;
  return q;
}

std::vector<double> presence_percentages(const PresenceMatrix& presence) {
  if (presence.empty()) return {};
  const std::size_t s = presence.front().size();
  std::vector<double> out(s, 0.0);
  for (const auto& row : presence) {
    if (row.size() != s) fail("presence rows differ in length");
    for (std::size_t j = 0; j < s; ++j) out[j] += row[j] ? 1.0 : 0.0;
  }
  for (double& v : out) v = 100.0 * v / static_cast<double>(presence.size());
  return out;
}

std::vector<int> frequent_variables(const PresenceMatrix& presence, double w) {
  if (!(w >= 1.0 && w <= 100.0)) fail("w must lie in [1, 100]");
  std::vector<int> out;
  if (presence.empty()) return out;
  const std::size_t s = presence.front().size();
  const double folds = static_cast<double>(presence.size());
  for (std::size_t j = 0; j < s; ++j) {
    int count = 0;
    for (const auto& row : presence) {
      if (row.size() != s) fail("presence rows differ in length");
      count += row[j] ? 1 : 0;
    }
    // count / N_f * 100 >= w, kept in integers where possible
    if (static_cast<double>(count) * 100.0 >= w * folds) out.push_back(static_cast<int>(j));
  }
  return out;
}

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::ldlm: return "LDLM";
    case Strategy::ldls: return "LDLS";
    case Strategy::fvm: return "FVM";
    case Strategy::fvs: return "FVS";
    case Strategy::bglm: return "B-GLM";
  }
  return "?";
}

Strategy parse_strategy(const std::string& name) {
  std::string key;
  for (char c : name) {
    if (c != '-' && c != '_') key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (key == "ldlm") return Strategy::ldlm;
  if (key == "ldls") return Strategy::ldls;
  if (key == "fvm") return Strategy::fvm;
  if (key == "fvs") return Strategy::fvs;
  if (key == "bglm") return Strategy::bglm;
  fail("unknown strategy '" + name + "'");
}

SelectionResult run_strategy(Strategy strategy, const CvReport& report, const DesignMatrix& design,
                             const Vector& y, const SelectionConfig& config) {
  if (report.groups != design.groups.names()) fail("report groups do not match the design");
  if (report.plan.size() != static_cast<std::size_t>(y.size())) fail("report plan and target sizes differ");
  SelectionResult out;
  out.strategy = strategy;
  switch (strategy) {
    case Strategy::ldlm:
    case Strategy::ldls: {
      const LambdaRule rule = strategy == Strategy::ldlm ? rule_min : rule_1se;
      std::set<int> active;
      for (const auto& f : report.folds) {
        active.insert(f.rules[rule].active.begin(), f.rules[rule].active.end());
        if (f.rules[rule].refit.fallback) {
          out.notes.push_back("fold " + std::to_string(f.fold + 1) + ": debiased refit fell back to penalized coefficients");
        }
      }
      out.variables = names_of(design.groups, {active.begin(), active.end()});
      out.intercept_only = active.empty();
      out.predictions = report.predictions[rule];
      break;
    }
    case Strategy::fvm:
    case Strategy::fvs: {
      const LambdaRule rule = strategy == Strategy::fvm ? rule_min : rule_1se;
      const PresenceMatrix pm = report.presence_matrix(rule);
      out.presence = presence_percentages(pm);
      const std::vector<int> fv = frequent_variables(pm, config.w);
      out.variables = names_of(design.groups, fv);
      if (fv.empty()) {
        out.intercept_only = true;
        out.notes.push_back("empty frequent-variable set, intercept-only predictions");
      }
      out.predictions = heldout_refit(design, y, report.plan, fv, config.glm, out.notes);
      break;
    }
    case Strategy::bglm:
      fail("B-GLM is run through backward_glm");
  }
  out.criteria = quality_criteria(y, out.predictions);
  return out;
}

BackwardResult backward_glm(const DesignMatrix& design, const Vector& y, const FoldPlan& plan,
                            const SelectionConfig& config) {
  if (!(config.alpha >= 0.0 && config.alpha <= 1.0)) fail("alpha must lie in [0, 1]");
  if (design.rows() != y.size()) fail("design and target sizes differ");
  const GroupIndex& groups = design.groups;
  const IndexList rows = all_rows(y.size());

  BackwardResult out;
  SelectionResult& sel = out.selection;
  sel.strategy = Strategy::bglm;

  std::vector<int> current(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) current[g] = static_cast<int>(g);
  std::vector<bool> locked(groups.size(), false);

  DebiasResult fit = debias(design.x, y, rows, groups, current, config.glm);
  if (fit.fallback) {
    sel.notes.push_back("full model did not converge, no elimination performed");
  } else {
    for (;;) {
      const std::vector<double> p = group_p_values(fit, groups);
      int worst = -1;
      for (int g : current) {
        if (locked[static_cast<std::size_t>(g)]) continue;
        if (p[static_cast<std::size_t>(g)] > config.alpha &&
            (worst < 0 || p[static_cast<std::size_t>(g)] > p[static_cast<std::size_t>(worst)])) {
          worst = g;
        }
      }
      if (worst < 0) break;
      std::vector<int> trial;
      for (int g : current) {
        if (g != worst) trial.push_back(g);
      }
      DebiasResult next = debias(design.x, y, rows, groups, trial, config.glm);
      const std::string& name = groups[static_cast<std::size_t>(worst)].name;
      if (next.fallback) {
        locked[static_cast<std::size_t>(worst)] = true;
        out.steps.push_back({name, p[static_cast<std::size_t>(worst)], false});
        sel.notes.push_back("refit without " + name + " did not converge, " + name + " kept");
        continue;
      }
      out.steps.push_back({name, p[static_cast<std::size_t>(worst)], true});
      current = std::move(trial);
      fit = std::move(next);
    }
  }

  out.final_fit = fit.fit;
  sel.variables = names_of(groups, current);
  if (current.empty()) {
    sel.intercept_only = true;
    sel.notes.push_back("no group survived, intercept-only predictions");
  }
  sel.predictions = heldout_refit(design, y, plan, current, config.glm, sel.notes);
  sel.criteria = quality_criteria(y, sel.predictions);
  return out;
}

std::vector<VillageScore> village_breakdown(const Vector& y, const Vector& y_hat, const Variable& village) {
  if (!village.is_categorical()) fail("village must be categorical");
  if (village.size() != static_cast<std::size_t>(y.size())) fail("village and target sizes differ");
  std::vector<VillageScore> out;
  const auto& codes = village.codes();
  for (std::size_t m = 0; m < village.modality_count(); ++m) {
    IndexList rows;
    for (std::size_t i = 0; i < codes.size(); ++i) {
      if (codes[i] == static_cast<int>(m)) rows.push_back(static_cast<Index>(i));
    }
    if (rows.empty()) continue;
    VillageScore v;
    v.village = village.modalities()[m];
    v.n = rows.size();
    v.criteria = quality_criteria(y(rows), y_hat(rows));
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace vectrisk
